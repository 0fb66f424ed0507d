import json
import subprocess
import sys

import numpy as np
import pytest

from motionmanifold.cli import main
from motionmanifold.mocap_io import read_bvh, write_bvh
from motionmanifold.synthetic import corpus, tempo_pair, truncated_clip, walk_run_pair


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    out = captured.out.strip().splitlines()
    run.stderr = captured.err
    return code, (json.loads(out[-1]) if out else None)


def save(path, clip):
    path.write_bytes(write_bvh(clip.skeleton, clip))
    return path


@pytest.fixture
def truncated(tmp_path):
    return save(tmp_path / "trunc.bvh", truncated_clip(0))


@pytest.fixture
def gaits(tmp_path):
    a, b = walk_run_pair(0)
    return save(tmp_path / "a.bvh", a), save(tmp_path / "b.bvh", b)


def test_cyclify_report_and_rerun(tmp_path, capsys, truncated):
    out1, out2 = tmp_path / "loop1.bvh", tmp_path / "loop2.bvh"
    code, rep = run(capsys, "cyclify", truncated, out1)
    assert code == 0
    assert rep["before"]["joint_gap"] > 0.1
    assert rep["after"]["joint_gap"] < 1e-6
    assert rep["after"]["world_gap"] < 1e-4
    code, rep = run(capsys, "cyclify", out1, out2)
    assert code == 0 and rep["before"]["joint_gap"] < 1e-6


def test_cyclify_missing_input(tmp_path, capsys):
    code, rep = run(capsys, "cyclify", tmp_path / "nope.bvh", tmp_path / "out.bvh")
    assert code == 2 and "no such file" in rep["error"]


def test_cyclify_sanity_violation(tmp_path, capsys, truncated):
    code, _ = run(capsys, "cyclify", truncated, tmp_path / "o.bvh", "--sanity-bound", "0.01")
    assert code == 4
    assert not (tmp_path / "o.bvh").exists()


def test_cyclify_reruns_byte_identical(tmp_path, capsys, truncated):
    run(capsys, "cyclify", truncated, tmp_path / "x.bvh", "--seam-smoothing", "off")
    run(capsys, "cyclify", truncated, tmp_path / "y.bvh", "--seam-smoothing", "off")
    assert (tmp_path / "x.bvh").read_bytes() == (tmp_path / "y.bvh").read_bytes()


def test_malformed_input_exit_code(tmp_path, capsys, fixtures):
    for bad in sorted((fixtures / "malformed").glob("*.bvh")):
        code, rep = run(capsys, "info", bad)
        assert code == 2, bad.name


def test_blend_endpoint_and_sweep(tmp_path, capsys, gaits):
    a, b = gaits
    code, rep = run(capsys, "blend", a, b, tmp_path / "s0.bvh", "--s", "0")
    assert code == 0
    _, out = read_bvh(tmp_path / "s0.bvh")
    np.testing.assert_allclose(out.frames, read_bvh(a)[1].frames, atol=1e-6)

    code, rep = run(capsys, "blend", a, b, tmp_path / "sweep", "--sweep", "5")
    assert code == 0 and len(rep["outputs"]) == 5
    files = sorted((tmp_path / "sweep").glob("*.bvh"))
    assert [f.name for f in files] == [f"blend_{i:03d}.bvh" for i in range(5)]
    np.testing.assert_allclose(read_bvh(files[0])[1].frames, read_bvh(a)[1].frames, atol=1e-6)
    np.testing.assert_allclose(read_bvh(files[-1])[1].frames, read_bvh(b)[1].frames, atol=1e-6)


def test_blend_envelope_from_files(tmp_path, capsys):
    slow, fast = tempo_pair(0)
    a, b = save(tmp_path / "slow.bvh", slow), save(tmp_path / "fast.bvh", fast)
    code, _ = run(capsys, "blend", a, b, tmp_path / "mid.bvh")
    assert code == 0
    fa, fb = read_bvh(a)[1].frames, read_bvh(b)[1].frames
    mid = read_bvh(tmp_path / "mid.bvh")[1].frames
    both = np.vstack([fa, fb])
    lo, hi = both.min(axis=0), both.max(axis=0)
    assert np.all(mid >= lo - 0.1 * (hi - lo)) and np.all(mid <= hi + 0.1 * (hi - lo))


def test_blend_skeleton_mismatch(tmp_path, capsys, gaits, fixtures):
    code, rep = run(capsys, "blend", gaits[0], fixtures / "three_bone.bvh", tmp_path / "o.bvh")
    assert code == 5


def test_distmat_identical_files(tmp_path, capsys, gaits):
    a, _ = gaits
    b = tmp_path / "copy.bvh"
    b.write_bytes(a.read_bytes())
    out = tmp_path / "d.csv"
    code, rep = run(capsys, "distmat", a, b, "-o", out, "--metric", "geodesic-closed", "--frames", "64")
    assert code == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "geodesic-closed,a,copy"
    assert float(rows[1].split(",")[2]) < 1e-6
    side = json.loads((tmp_path / "d.csv.json").read_text())
    assert side["config"]["frames"] == 64 and side["labels"] == ["a", "copy"]


def test_distmat_bad_file_exit(tmp_path, capsys, gaits, fixtures):
    out = tmp_path / "d.csv"
    bad = fixtures / "malformed" / "short_frames.bvh"
    code, rep = run(capsys, "distmat", *gaits, bad, "-o", out, "--metric", "linear-l2")
    assert code == 3 and "short_frames" in rep["error"]
    code, rep = run(capsys, "distmat", *gaits, bad, "-o", out, "--metric", "linear-l2", "--exclude-failures")
    assert code == 0 and rep["excluded"] == ["short_frames"]


def test_distmat_directory_and_contrast(tmp_path, capsys):
    from scipy.stats import spearmanr
    clips, labels, _ = corpus(classes=2, variants=3, frames=64)
    d = tmp_path / "corpus"
    d.mkdir()
    for clip, label in zip(clips, labels):
        save(d / f"{label}.bvh", clip)
    run(capsys, "distmat", d, "-o", tmp_path / "lin.csv", "--metric", "linear-l2", "--frames", "64")
    code, _ = run(capsys, "distmat", d, "-o", tmp_path / "geo.csv", "--frames", "64")
    assert code == 0
    from motionmanifold.applications import DistanceMatrix
    lin = DistanceMatrix.from_csv((tmp_path / "lin.csv").read_text())
    geo = DistanceMatrix.from_csv((tmp_path / "geo.csv").read_text())
    iu = np.triu_indices(lin.size, 1)
    assert spearmanr(lin.values[iu], geo.values[iu])[0] < 0.99
    assert np.array_equal(geo.values, geo.values.T)


def test_cluster_outputs(tmp_path, capsys):
    m = tmp_path / "m.csv"
    m.write_text("linear-l2,A,B,C\nA,0,1,10\nB,1,0,10\nC,10,10,0\n")
    code, rep = run(capsys, "cluster", m, tmp_path / "tree.nwk", "--k", "2")
    assert code == 0 and rep["heights"] == [1.0, 10.0]
    assert (tmp_path / "tree.nwk").read_text() == "((A:1,B:1):9,C:10);\n"
    assert (tmp_path / "tree.nwk.labels.csv").read_text() == "label,cluster\nA,0\nB,0\nC,1\n"
    code, _ = run(capsys, "cluster", m, tmp_path / "tree.json")
    assert json.loads((tmp_path / "tree.json").read_text())["merges"][0] == [0, 1, 1.0, 3]


def test_cluster_two_leaves(tmp_path, capsys):
    m = tmp_path / "m.csv"
    m.write_text("linear-l2,A,B\nA,0,2\nB,2,0\n")
    code, rep = run(capsys, "cluster", m, tmp_path / "t.json")
    assert code == 0 and rep["heights"] == [2.0]


def test_cluster_rejects_invalid_matrix(tmp_path, capsys):
    m = tmp_path / "m.csv"
    m.write_text("linear-l2,A,B\nA,0,-1\nB,-1,0\n")
    code, _ = run(capsys, "cluster", m, tmp_path / "t.json")
    assert code == 6
    m.write_text("linear-l2,A,B\nA,0,1\nB,2,0\n")
    code, _ = run(capsys, "cluster", m, tmp_path / "t.json")
    assert code == 6


def test_config_file(tmp_path, capsys, truncated):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seam_smoothing": False, "epsilon": 1e-8}))
    code, _ = run(capsys, "cyclify", truncated, tmp_path / "a.bvh", "--config", cfg)
    assert code == 0
    run(capsys, "cyclify", truncated, tmp_path / "b.bvh", "--seam-smoothing", "off", "--epsilon", "1e-8")
    assert (tmp_path / "a.bvh").read_bytes() == (tmp_path / "b.bvh").read_bytes()

    cfg.write_text(json.dumps({"seam_smoothin": False}))
    code, _ = run(capsys, "cyclify", truncated, tmp_path / "c.bvh", "--config", cfg)
    assert code == 2
    assert "unknown configuration keys: seam_smoothin" in run.stderr


def test_out_of_range_flag(tmp_path, capsys, gaits):
    code, _ = run(capsys, "distmat", *gaits, "-o", tmp_path / "d.csv", "--frames", "1")
    assert code == 2


def test_info(capsys, fixtures):
    code, rep = run(capsys, "info", fixtures / "three_bone.bvh")
    assert code == 0 and rep["frames"] == 3 and rep["bones"] == ["Hips", "Chest", "Neck"]


def test_help_lists_defaults():
    for sub, expected in [("cyclify", ["default: on", "default: 1e-06", "default: 1.5708"]),
                          ("distmat", ["default: 128", "default: geodesic-shape", "default: 16"]),
                          ("blend", ["default: closed", "default: 0.5"]),
                          ("cluster", ["default: none"])]:
        res = subprocess.run([sys.executable, "-m", "motionmanifold", sub, "--help"],
                             capture_output=True, text=True, check=True)
        text = " ".join(res.stdout.split())
        for e in expected:
            assert e in text, (sub, e)
