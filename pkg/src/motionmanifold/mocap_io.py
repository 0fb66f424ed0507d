"""BVH ingestion, forward kinematics and clip <-> curve conversion.

Poses are vectors of joint angles in radians (a point on the n-torus).
Curves handed to the SRV machinery live in R^n, so angle channels are
unwrapped before conversion.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import IO, Optional, Sequence, Union

import numpy as np

from .curve_core import SampledCurve

ROTATION_CHANNELS = ("Xrotation", "Yrotation", "Zrotation")
POSITION_CHANNELS = ("Xposition", "Yposition", "Zposition")
_AXIS = {"X": 0, "Y": 1, "Z": 2}


class BvhParseError(ValueError):
    """Malformed BVH input. ``lineno`` is 1-based, or None if not applicable."""

    def __init__(self, message: str, lineno: Optional[int] = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class UnwrapError(ValueError):
    pass


@dataclass(frozen=True)
class Bone:
    name: str
    parent: Optional[int]
    offset: tuple[float, float, float]
    channels: tuple[str, ...] = ()
    end_site: bool = False

    @property
    def rotation_channels(self) -> tuple[str, ...]:
        return tuple(c for c in self.channels if c in ROTATION_CHANNELS)

    @property
    def dof(self) -> int:
        return len(self.rotation_channels)


@dataclass(frozen=True)
class Skeleton:
    """Bone hierarchy in topological order (parents precede children).

    End sites are kept as channel-less bones so that forward kinematics can
    report end-effector positions.
    """

    bones: tuple[Bone, ...]

    def __post_init__(self):
        object.__setattr__(self, "bones", tuple(self.bones))
        roots = [i for i, b in enumerate(self.bones) if b.parent is None]
        if len(roots) != 1 or roots[0] != 0:
            raise ValueError("skeleton needs exactly one root bone, stored first")
        for i, b in enumerate(self.bones):
            if b.parent is not None and not 0 <= b.parent < i:
                raise ValueError(f"bone {b.name!r}: parent index {b.parent} does not precede it")
            for c in b.channels:
                if c not in ROTATION_CHANNELS + POSITION_CHANNELS:
                    raise ValueError(f"bone {b.name!r}: unknown channel {c!r}")
        if self.n == 0:
            raise ValueError("skeleton has no rotational degrees of freedom")

    @property
    def n(self) -> int:
        return sum(b.dof for b in self.bones)

    @property
    def root(self) -> Bone:
        return self.bones[0]

    @property
    def extra_channel_count(self) -> int:
        """Position channels on non-root bones (carried along, never curved)."""
        return sum(len(b.channels) - b.dof for b in self.bones[1:])

    def angle_slices(self) -> list[slice]:
        """Slice into the pose vector for each bone's rotation channels."""
        out, k = [], 0
        for b in self.bones:
            out.append(slice(k, k + b.dof))
            k += b.dof
        return out

    def topology(self) -> tuple:
        return tuple((b.name, b.parent, b.channels, b.end_site) for b in self.bones)

    def index(self, name: str) -> int:
        for i, b in enumerate(self.bones):
            if b.name == name:
                return i
        raise KeyError(name)


@dataclass(frozen=True, eq=False)
class AnimationClip:
    skeleton: Skeleton
    frames: np.ndarray
    root_translation: np.ndarray
    frame_time: float
    extra_translation: Optional[np.ndarray] = None

    def __post_init__(self):
        frames = np.array(self.frames, dtype=float, ndmin=2)
        F = frames.shape[0]
        root = (np.zeros((F, 3)) if self.root_translation is None
                else np.array(self.root_translation, dtype=float, ndmin=2))
        k = self.skeleton.extra_channel_count
        extra = (np.zeros((F, k)) if self.extra_translation is None
                 else np.array(self.extra_translation, dtype=float).reshape(F, k))
        if frames.shape[1] != self.skeleton.n:
            raise ValueError(f"frames have {frames.shape[1]} channels, skeleton has n={self.skeleton.n}")
        if F < 2:
            raise ValueError("a clip needs at least 2 frames")
        if root.shape != (F, 3):
            raise ValueError("root_translation must be (frames, 3)")
        if not self.frame_time > 0:
            raise ValueError("frame_time must be positive")
        for name, a in (("frames", frames), ("root_translation", root), ("extra_translation", extra)):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def frame_count(self) -> int:
        return self.frames.shape[0]

    @property
    def duration(self) -> float:
        return (self.frame_count - 1) * self.frame_time

    def replace(self, **kw) -> "AnimationClip":
        d = dict(skeleton=self.skeleton, frames=self.frames, root_translation=self.root_translation,
                 frame_time=self.frame_time, extra_translation=self.extra_translation)
        d.update(kw)
        return AnimationClip(**d)


# ---------------------------------------------------------------------------
# BVH reading / writing


class _Tokens:
    def __init__(self, lines: list[str]):
        self.items = [(tok, i + 1) for i, line in enumerate(lines) for tok in line.split()]
        self.pos = 0

    def peek(self) -> Optional[str]:
        return self.items[self.pos][0] if self.pos < len(self.items) else None

    @property
    def lineno(self) -> int:
        if not self.items:
            return 1
        return self.items[min(self.pos, len(self.items) - 1)][1]

    def next(self, what: str = "token") -> str:
        if self.pos >= len(self.items):
            raise BvhParseError(f"unexpected end of file, expected {what}", self.lineno)
        tok = self.items[self.pos][0]
        self.pos += 1
        return tok

    def expect(self, word: str) -> None:
        lineno = self.lineno
        tok = self.next(repr(word))
        if tok != word:
            raise BvhParseError(f"expected {word!r}, got {tok!r}", lineno)

    def number(self, what: str, kind=float):
        lineno = self.lineno
        tok = self.next(what)
        try:
            return kind(tok)
        except ValueError:
            raise BvhParseError(f"expected {what}, got {tok!r}", lineno) from None


def _parse_hierarchy(tok: _Tokens) -> list[Bone]:
    bones: list[Bone] = []

    def joint(parent: Optional[int], name: str) -> None:
        tok.expect("{")
        tok.expect("OFFSET")
        offset = tuple(tok.number("offset value") for _ in range(3))
        lineno = tok.lineno
        tok.expect("CHANNELS")
        count = tok.number("channel count", int)
        channels = tuple(tok.next("channel name") for _ in range(count))
        for c in channels:
            if c not in ROTATION_CHANNELS + POSITION_CHANNELS:
                raise BvhParseError(f"unknown channel {c!r}", lineno)
        index = len(bones)
        bones.append(Bone(name, parent, offset, channels))
        while True:
            lineno = tok.lineno
            word = tok.next("'JOINT', 'End' or '}'")
            if word == "}":
                return
            if word == "JOINT":
                joint(index, tok.next("joint name"))
            elif word == "End":
                tok.expect("Site")
                tok.expect("{")
                tok.expect("OFFSET")
                end_offset = tuple(tok.number("offset value") for _ in range(3))
                tok.expect("}")
                bones.append(Bone(f"{name}_End", index, end_offset, (), end_site=True))
            else:
                raise BvhParseError(f"unexpected {word!r} in joint {name!r}", lineno)

    tok.expect("HIERARCHY")
    tok.expect("ROOT")
    joint(None, tok.next("root name"))
    return bones


def parse_bvh(source: Union[bytes, str, IO]) -> tuple[Skeleton, AnimationClip]:
    """Parse a BVH document (bytes, text or a readable stream).

    Angles are converted from degrees to radians.  Position channels on the
    root become ``root_translation``; position channels on other bones are
    preserved in ``extra_translation`` and otherwise ignored.
    """
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    lines = source.splitlines()
    try:
        motion_at = next(i for i, line in enumerate(lines) if line.strip() == "MOTION")
    except StopIteration:
        raise BvhParseError("missing MOTION section") from None

    tok = _Tokens(lines[:motion_at])
    bones = _parse_hierarchy(tok)
    if tok.peek() is not None:
        raise BvhParseError(f"trailing content {tok.peek()!r} after hierarchy", tok.lineno)
    try:
        skeleton = Skeleton(tuple(bones))
    except ValueError as e:
        raise BvhParseError(str(e)) from None

    header = lines[motion_at + 1:motion_at + 3]
    if len(header) < 2:
        raise BvhParseError("truncated MOTION header", motion_at + 1)
    nframes = _header_value(header[0], "Frames:", motion_at + 2, int)
    frame_time = _header_value(header[1], "Frame Time:", motion_at + 3, float)
    if nframes < 2:
        raise BvhParseError(f"need at least 2 frames, file declares {nframes}", motion_at + 2)
    if not frame_time > 0:
        raise BvhParseError("Frame Time must be positive", motion_at + 3)

    width = sum(len(b.channels) for b in bones)
    rows = []
    for i, line in enumerate(lines[motion_at + 3:], start=motion_at + 4):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != width:
            raise BvhParseError(f"motion row has {len(parts)} values, hierarchy declares {width} channels", i)
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise BvhParseError("non-numeric motion value", i) from None
    if len(rows) != nframes:
        raise BvhParseError(f"file declares {nframes} frames but supplies {len(rows)}")

    data = np.array(rows, dtype=float).reshape(nframes, width)
    angles, root, extra = [], np.zeros((nframes, 3)), []
    col = 0
    for bi, b in enumerate(bones):
        for c in b.channels:
            if c in ROTATION_CHANNELS:
                angles.append(np.deg2rad(data[:, col]))
            elif bi == 0:
                root[:, _AXIS[c[0]]] = data[:, col]
            else:
                extra.append(data[:, col])
            col += 1
    clip = AnimationClip(
        skeleton=skeleton,
        frames=np.stack(angles, axis=1),
        root_translation=root,
        frame_time=frame_time,
        extra_translation=np.stack(extra, axis=1) if extra else None,
    )
    return skeleton, clip


def _header_value(line: str, label: str, lineno: int, kind):
    s = line.strip()
    if not s.startswith(label):
        raise BvhParseError(f"expected {label!r}", lineno)
    try:
        return kind(s[len(label):].strip())
    except ValueError:
        raise BvhParseError(f"bad value for {label!r}", lineno) from None


def read_bvh(path) -> tuple[Skeleton, AnimationClip]:
    with open(path, "rb") as f:
        return parse_bvh(f)


def write_bvh(skeleton: Skeleton, clip: AnimationClip, decimals: int = 6) -> bytes:
    """Serialize to BVH text.  Motion values are fixed-point with ``decimals`` places."""
    if clip.skeleton.topology() != skeleton.topology():
        raise ValueError("clip does not belong to this skeleton")
    children: dict[int, list[int]] = {i: [] for i in range(len(skeleton.bones))}
    for i, b in enumerate(skeleton.bones[1:], start=1):
        children[b.parent].append(i)

    out = io.StringIO()
    w = out.write

    def fmt(v: float) -> str:
        return f"{v:.6f}"

    def emit(i: int, depth: int) -> None:
        b = skeleton.bones[i]
        pad = "  " * depth
        if b.end_site:
            w(f"{pad}End Site\n{pad}{{\n{pad}  OFFSET {' '.join(map(fmt, b.offset))}\n{pad}}}\n")
            return
        w(f"{pad}{'ROOT' if b.parent is None else 'JOINT'} {b.name}\n{pad}{{\n")
        w(f"{pad}  OFFSET {' '.join(map(fmt, b.offset))}\n")
        w(f"{pad}  CHANNELS {len(b.channels)}{''.join(' ' + c for c in b.channels)}\n")
        for c in children[i]:
            emit(c, depth + 1)
        w(f"{pad}}}\n")

    w("HIERARCHY\n")
    emit(0, 0)

    columns = []
    slices = skeleton.angle_slices()
    extra_col = 0
    for bi, b in enumerate(skeleton.bones):
        rot = iter(range(slices[bi].start, slices[bi].stop))
        for c in b.channels:
            if c in ROTATION_CHANNELS:
                columns.append(np.rad2deg(clip.frames[:, next(rot)]))
            elif bi == 0:
                columns.append(clip.root_translation[:, _AXIS[c[0]]])
            else:
                columns.append(clip.extra_translation[:, extra_col])
                extra_col += 1
    data = np.stack(columns, axis=1)
    w(f"MOTION\nFrames: {clip.frame_count}\nFrame Time: {clip.frame_time:.8f}\n")
    for row in data:
        # "+ 0.0" turns -0.0 into 0.0
        w(" ".join(f"{v + 0.0:.{decimals}f}" for v in row) + "\n")
    return out.getvalue().encode("utf-8")


# ---------------------------------------------------------------------------
# Kinematics


def axis_rotation(axis: str, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    if axis == "X":
        return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])
    if axis == "Y":
        return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])


def bone_rotation(bone: Bone, angles: Sequence[float]) -> np.ndarray:
    """Rotation matrix for one bone: channel matrices multiplied in declared order."""
    R = np.eye(3)
    for c, a in zip(bone.rotation_channels, angles):
        R = R @ axis_rotation(c[0], a)
    return R


def global_transforms(skeleton: Skeleton, pose) -> tuple[np.ndarray, np.ndarray]:
    """Per-bone global rotations (B,3,3) and joint positions (B,3) in the root frame."""
    pose = np.asarray(pose, dtype=float)
    if pose.shape != (skeleton.n,):
        raise ValueError(f"pose must have {skeleton.n} entries")
    B = len(skeleton.bones)
    rots = np.empty((B, 3, 3))
    pos = np.empty((B, 3))
    for i, (b, sl) in enumerate(zip(skeleton.bones, skeleton.angle_slices())):
        local = bone_rotation(b, pose[sl])
        if b.parent is None:
            pos[i] = b.offset
            rots[i] = local
        else:
            pos[i] = pos[b.parent] + rots[b.parent] @ np.asarray(b.offset)
            rots[i] = rots[b.parent] @ local
    return rots, pos


def forward_kinematics(skeleton: Skeleton, pose, bone: int) -> np.ndarray:
    """Position of ``bone``'s joint in the root coordinate system.

    Each bone contributes Translate(offset) @ Rotate(channels), so a bone's own
    rotation moves its descendants but not itself.  Root translation channels
    are not applied.
    """
    if not 0 <= bone < len(skeleton.bones):
        raise IndexError(f"bone index {bone} out of range")
    return global_transforms(skeleton, pose)[1][bone]


def all_positions(skeleton: Skeleton, pose) -> np.ndarray:
    return global_transforms(skeleton, pose)[1]


# ---------------------------------------------------------------------------
# Clip <-> curve


def wrap_angle(x):
    """Reduce angles into (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(x, dtype=float), 2 * np.pi)


def unwrap_angles(frames: np.ndarray) -> np.ndarray:
    """Lift angle sequences (frames along axis 0) from the torus to R^n.

    Consecutive samples end up less than pi apart; a jump of exactly pi is
    ambiguous and raises ``UnwrapError``.
    """
    frames = np.asarray(frames, dtype=float)
    step = wrap_angle(np.diff(frames, axis=0))
    bad = np.argwhere(np.isclose(np.abs(step), np.pi, rtol=0, atol=1e-12))
    if len(bad):
        f, ch = bad[0]
        raise UnwrapError(f"channel {ch}: jump of exactly pi between frames {f} and {f + 1}")
    # whole turns added per step; samples that need none are returned verbatim
    turns = np.round((step - np.diff(frames, axis=0)) / (2 * np.pi))
    out = frames.copy()
    out[1:] += 2 * np.pi * np.cumsum(turns, axis=0)
    return out


def clip_to_curve(clip: AnimationClip, include_root_translation: bool = False,
                  duration: Optional[float] = None) -> SampledCurve:
    """Unwrapped joint-angle curve of a clip.

    ``duration`` overrides the clip's own time span, e.g. to compare clips on
    a common time length.
    """
    samples = unwrap_angles(clip.frames)
    if include_root_translation:
        samples = np.hstack([samples, clip.root_translation])
    return SampledCurve(samples, clip.duration if duration is None else duration)


def curve_to_clip(curve: SampledCurve, template: AnimationClip,
                  include_root_translation: Optional[bool] = None) -> AnimationClip:
    """Turn a curve back into a clip shaped like ``template``.

    With ``include_root_translation`` unset, it is inferred from the curve
    dimension (n or n + 3).  Root translation not carried by the curve is
    copied from the template, which then must have the same frame count.
    """
    n = template.skeleton.n
    dim = curve.dim
    if include_root_translation is None:
        include_root_translation = dim == n + 3
    expected = n + 3 if include_root_translation else n
    if dim != expected:
        raise ValueError(f"curve has dimension {dim}, template expects {expected}")
    m = curve.m
    angles = wrap_angle(curve.samples[:, :n])
    if include_root_translation:
        root = curve.samples[:, n:]
    elif template.frame_count == m:
        root = template.root_translation
    else:
        raise ValueError("template frame count differs from curve; cannot copy root translation")
    extra = template.extra_translation if template.frame_count == m else None
    return AnimationClip(template.skeleton, angles, root, curve.duration / (m - 1), extra)


def _interp_frames(values: np.ndarray, new_count: int, angular: bool) -> np.ndarray:
    F = values.shape[0]
    x = np.linspace(0.0, F - 1, new_count)
    x[-1] = F - 1
    lo = np.minimum(np.floor(x).astype(int), F - 2)
    frac = (x - lo)[:, None]
    step = values[lo + 1] - values[lo]
    if angular:
        step = wrap_angle(step)
    out = values[lo] + frac * step
    # exact hits on input frames (including both ends) copy the original value
    exact = frac[:, 0] == 0
    out[exact] = values[lo[exact]]
    out[-1] = values[-1]
    return out


def resample_clip(clip: AnimationClip, frame_count: int) -> AnimationClip:
    """Uniformly resample to ``frame_count`` frames, keeping the total duration.

    Angles are interpolated along the short way around the circle, which is
    linear interpolation of the unwrapped sequence.  End frames are copied.
    """
    if frame_count < 2:
        raise ValueError("frame_count must be at least 2")
    if frame_count == clip.frame_count:
        return clip
    frames = _interp_frames(clip.frames, frame_count, angular=True)
    root = _interp_frames(clip.root_translation, frame_count, angular=False)
    extra = clip.extra_translation
    extra = _interp_frames(extra, frame_count, angular=False) if extra.shape[1] else None
    return AnimationClip(clip.skeleton, frames, root, clip.duration / (frame_count - 1), extra)


def clips_compatible(a: AnimationClip, b: AnimationClip) -> bool:
    return a.skeleton.topology() == b.skeleton.topology()
