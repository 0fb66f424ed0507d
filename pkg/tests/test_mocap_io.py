import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from motionmanifold.mocap_io import (
    AnimationClip,
    Bone,
    BvhParseError,
    Skeleton,
    UnwrapError,
    all_positions,
    clip_to_curve,
    curve_to_clip,
    forward_kinematics,
    parse_bvh,
    read_bvh,
    resample_clip,
    unwrap_angles,
    wrap_angle,
    write_bvh,
)
from motionmanifold.curve_core import SampledCurve
from motionmanifold.synthetic import demo_skeleton

MALFORMED = ["short_frames", "channel_count", "bad_offset", "unknown_channel",
             "missing_motion", "unbalanced", "non_numeric"]

# hand transcription of three_bone.bvh rotation channels, degrees
THREE_BONE_DEG = np.array([
    [10.0, 20.0, 30.0, -45.0, 0.0, 90.0, 180.0, -90.0, 5.5],
    [12.5, -20.0, 35.0, -40.0, 1.0, 95.0, 170.0, -85.0, 6.0],
    [15.0, -22.0, 40.0, -35.0, 2.0, 100.0, -175.0, -80.0, 6.5],
])


def chain_skeleton():
    return Skeleton([
        Bone("root", None, (0.0, 0.0, 0.0), ()),
        Bone("elbow", 0, (1.0, 0.0, 0.0), ("Zrotation",)),
        Bone("hand", 1, (1.0, 0.0, 0.0), (), True),
    ])


# ---------------------------------------------------------------------------
# parsing


def test_single_bone_zero_case(fixtures):
    sk, clip = read_bvh(fixtures / "single_bone.bvh")
    assert len(sk.bones) == 1
    np.testing.assert_array_equal(clip.frames, np.zeros((2, 3)))
    assert clip.frame_time == 0.1


def test_three_bone_matches_hand_transcription(fixtures):
    sk, clip = read_bvh(fixtures / "three_bone.bvh")
    assert [b.name for b in sk.bones] == ["Hips", "Chest", "Neck", "Neck_End"]
    assert [b.parent for b in sk.bones] == [None, 0, 1, 2]
    assert sk.n == 9
    np.testing.assert_allclose(clip.frames, THREE_BONE_DEG * math.pi / 180, rtol=0, atol=1e-15)
    np.testing.assert_array_equal(clip.root_translation[:, 1], [90.0, 90.5, 91.0])
    assert clip.frame_time == 0.033333


def test_declared_frames_mismatch(fixtures):
    with pytest.raises(BvhParseError, match="declares 10 frames but supplies 9"):
        read_bvh(fixtures / "malformed" / "short_frames.bvh")


@pytest.mark.parametrize("name,lineno", [("channel_count", 11), ("bad_offset", 4), ("unknown_channel", 5),
                                         ("non_numeric", 11), ("unbalanced", 10)])
def test_malformed_reports_line(fixtures, name, lineno):
    with pytest.raises(BvhParseError) as info:
        read_bvh(fixtures / "malformed" / f"{name}.bvh")
    assert info.value.lineno == lineno


def test_missing_motion(fixtures):
    with pytest.raises(BvhParseError, match="MOTION"):
        read_bvh(fixtures / "malformed" / "missing_motion.bvh")


def test_non_root_position_channels_are_kept(fixtures):
    sk, clip = read_bvh(fixtures / "extra_position.bvh")
    assert sk.n == 6 and sk.extra_channel_count == 3
    np.testing.assert_array_equal(clip.extra_translation[0], [0.1, 0.2, 0.3])
    _, again = parse_bvh(write_bvh(sk, clip))
    np.testing.assert_array_equal(again.extra_translation, clip.extra_translation)


@pytest.mark.parametrize("name", ["three_bone", "single_bone", "extra_position"])
def test_parse_write_parse_fixpoint(fixtures, name):
    sk, first = read_bvh(fixtures / f"{name}.bvh")
    sk2, second = parse_bvh(write_bvh(sk, first))
    assert sk2.topology() == sk.topology()
    assert np.max(np.abs(second.frames - first.frames)) < 1e-9
    np.testing.assert_allclose(second.root_translation, first.root_translation, atol=1e-9)
    # a second write is byte-identical
    assert write_bvh(sk2, second) == write_bvh(sk, first)


def test_zero_motion_rows():
    sk = demo_skeleton()
    clip = AnimationClip(sk, np.zeros((2, sk.n)), np.zeros((2, 3)), 0.1)
    motion = write_bvh(sk, clip).decode().split("MOTION\n")[1].splitlines()[2:]
    assert motion == [" ".join(["0.000000"] * (sk.n + 3))] * 2


def test_clip_needs_two_frames():
    sk = demo_skeleton()
    with pytest.raises(ValueError):
        AnimationClip(sk, np.zeros((1, sk.n)), np.zeros((1, 3)), 0.1)
    with pytest.raises(ValueError):
        AnimationClip(sk, np.zeros((0, sk.n)), np.zeros((0, 3)), 0.1)


def test_skeleton_invariants():
    with pytest.raises(ValueError, match="root"):
        Skeleton([Bone("a", None, (0, 0, 0), ("Xrotation",)), Bone("b", None, (0, 0, 0), ("Xrotation",))])
    with pytest.raises(ValueError, match="precede"):
        Skeleton([Bone("a", None, (0, 0, 0), ("Xrotation",)), Bone("b", 2, (0, 0, 0)), Bone("c", 0, (0, 0, 0))])
    with pytest.raises(ValueError, match="degrees of freedom"):
        Skeleton([Bone("a", None, (0, 0, 0), ("Xposition",))])


@given(arrays(np.float64, (4, 9), elements=st.floats(-179.999, 179.999)).map(lambda a: np.round(a, 6)))
def test_fixpoint_property(deg):
    sk, clip = read_bvh_three()
    clip = clip.replace(frames=np.deg2rad(np.vstack([deg, deg[:1]])), root_translation=np.zeros((5, 3)))
    _, first = parse_bvh(write_bvh(sk, clip))
    _, second = parse_bvh(write_bvh(sk, first))
    assert np.max(np.abs(second.frames - first.frames)) < 1e-9


def read_bvh_three():
    from pathlib import Path
    return read_bvh(Path(__file__).parent / "fixtures" / "three_bone.bvh")


# ---------------------------------------------------------------------------
# forward kinematics


def test_fk_single_offset():
    sk = Skeleton([Bone("b", None, (1.0, 0.0, 0.0), ("Zrotation",))])
    np.testing.assert_allclose(forward_kinematics(sk, [0.7], 0), [1.0, 0.0, 0.0])


def test_fk_two_bone_chain_by_hand():
    sk = chain_skeleton()
    pose = [math.pi / 2]

    def T(offset, angle):
        c, s = math.cos(angle), math.sin(angle)
        M = np.array([[c, -s, 0, 0], [s, c, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1.0]])
        M[:3, 3] = offset
        return M

    hand = T((0, 0, 0), 0.0) @ T((1, 0, 0), math.pi / 2) @ np.array([1.0, 0, 0, 1])
    np.testing.assert_allclose(hand[:3], [1, 1, 0], atol=1e-15)
    np.testing.assert_allclose(forward_kinematics(sk, pose, 2), hand[:3], atol=1e-15)


def test_fk_bad_bone_index():
    with pytest.raises(IndexError):
        forward_kinematics(chain_skeleton(), [0.0], 5)


@given(arrays(np.float64, 18, elements=st.floats(-math.pi, math.pi)))
def test_fk_root_at_origin(pose):
    sk = demo_skeleton()
    np.testing.assert_array_equal(forward_kinematics(sk, pose, 0), np.zeros(3))


@given(arrays(np.float64, 18, elements=st.floats(-math.pi, math.pi)))
def test_fk_preserves_bone_lengths(pose):
    sk = demo_skeleton()
    pos = all_positions(sk, pose)
    for i, b in enumerate(sk.bones[1:], start=1):
        assert np.linalg.norm(pos[i] - pos[b.parent]) == pytest.approx(np.linalg.norm(b.offset), abs=1e-12)


# ---------------------------------------------------------------------------
# clip <-> curve


def _clip(frames, frame_time=0.1):
    sk = Skeleton([Bone("r", None, (0, 0, 0), ("Zrotation",))])
    frames = np.asarray(frames, dtype=float).reshape(-1, 1)
    return AnimationClip(sk, frames, np.zeros((len(frames), 3)), frame_time)


def test_unwrap_scalar_oracle():
    c = clip_to_curve(_clip([3.0, -3.0]))
    np.testing.assert_allclose(c.samples[:, 0], [3.0, -3.0 + 2 * math.pi])
    assert c.samples[1, 0] == pytest.approx(3.2832, abs=1e-4)


def test_unwrap_exact_pi_rejected():
    with pytest.raises(UnwrapError, match="channel 0"):
        clip_to_curve(_clip([0.0, math.pi]))


@given(arrays(np.float64, (8, 3), elements=st.floats(-4, 4)))
def test_unwrap_adds_whole_turns(frames):
    try:
        out = unwrap_angles(frames)
    except UnwrapError:
        return
    turns = (out - frames) / (2 * math.pi)
    np.testing.assert_allclose(turns, np.round(turns), atol=1e-9)
    np.testing.assert_array_equal(out[0], frames[0])


def test_verbatim_when_in_range(fixtures):
    _, clip = read_bvh(fixtures / "extra_position.bvh")
    np.testing.assert_array_equal(clip_to_curve(clip).samples, clip.frames)


def test_two_frame_curve():
    c = clip_to_curve(_clip([0.1, 0.2], frame_time=0.25))
    assert c.m == 2 and c.duration == 0.25


def test_root_translation_flag(fixtures):
    _, clip = read_bvh(fixtures / "three_bone.bvh")
    c = clip_to_curve(clip, include_root_translation=True)
    assert c.dim == clip.skeleton.n + 3
    np.testing.assert_array_equal(c.samples[:, -3:], clip.root_translation)
    back = curve_to_clip(c, clip)
    np.testing.assert_array_equal(back.root_translation, clip.root_translation)


@given(arrays(np.float64, (6, 18), elements=st.floats(-10, 10)))
def test_curve_roundtrip_mod_2pi(frames):
    sk = demo_skeleton()
    clip = AnimationClip(sk, frames, np.zeros((6, 3)), 0.1)
    try:
        curve = clip_to_curve(clip)
    except UnwrapError:
        return
    assert np.all(np.abs(np.diff(curve.samples, axis=0)) < math.pi)
    back = curve_to_clip(curve, clip)
    assert np.max(np.abs(wrap_angle(back.frames - clip.frames))) < 1e-9
    assert np.all(back.frames > -math.pi) and np.all(back.frames <= math.pi)


def test_constant_curve_gives_constant_clip():
    clip = _clip([0.5, 0.5, 0.5])
    back = curve_to_clip(SampledCurve(np.full((3, 1), 0.5), 0.2), clip)
    np.testing.assert_array_equal(back.frames, np.full((3, 1), 0.5))


def test_curve_dimension_mismatch():
    clip = _clip([0.1, 0.2, 0.3])
    with pytest.raises(ValueError, match="dimension"):
        curve_to_clip(SampledCurve(np.zeros((3, 2)), 0.2), clip)


# ---------------------------------------------------------------------------
# resampling


def test_resample_same_count(fixtures):
    _, clip = read_bvh(fixtures / "three_bone.bvh")
    np.testing.assert_allclose(resample_clip(clip, 3).frames, clip.frames, atol=1e-12)


def test_resample_linear_ramp():
    out = resample_clip(_clip([0.0, 0.5, 1.0]), 5)
    np.testing.assert_allclose(out.frames[:, 0], [0, 0.25, 0.5, 0.75, 1.0], atol=1e-15)
    assert out.duration == pytest.approx(0.2)


def test_resample_sinusoid_down_up():
    t = np.linspace(0, 1, 100)
    clip = _clip(np.sin(2 * np.pi * t))
    back = resample_clip(resample_clip(clip, 50), 100)
    # each linear interpolation pass adds at most h^2/8 max|f''|
    bound = ((1 / 99) ** 2 + (1 / 49) ** 2) / 8 * (2 * np.pi) ** 2
    assert np.max(np.abs(back.frames[:, 0] - np.sin(2 * np.pi * t))) <= bound
    assert back.duration == pytest.approx(clip.duration)


def test_resample_rejects_small_count():
    with pytest.raises(ValueError):
        resample_clip(_clip([0.0, 1.0]), 1)


@given(st.integers(2, 60), arrays(np.float64, (7, 1), elements=st.floats(-3, 3)))
def test_resample_keeps_endpoints(count, frames):
    clip = _clip(frames)
    out = resample_clip(clip, count)
    np.testing.assert_array_equal(out.frames[[0, -1]], clip.frames[[0, -1]])
    assert out.frame_count == count


def test_resample_short_way_around():
    out = resample_clip(_clip([3.0, -3.0]), 3)
    assert abs(wrap_angle(out.frames[1, 0] - math.pi)) < 1e-12 + 0.2832
