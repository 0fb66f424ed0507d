"""Turning nearly periodic clips into seamlessly looping ones."""
from __future__ import annotations

import math

import numpy as np

from ..curve_core import (
    SampledCurve,
    closure_projection,
    integrate_srv,
    reconstruction_defect,
    srv_transform,
)
from ..mocap_io import AnimationClip, all_positions, clip_to_curve, curve_to_clip, wrap_angle

SEAM_WINDOW = 0.05


class NotPeriodicError(ValueError):
    """The clip's start and end poses are too far apart to close."""


def closure_report(clip: AnimationClip) -> dict:
    """Start/end mismatch of a clip in joint space and in world space.

    ``joint_gap`` is the norm of the wrapped angle differences (radians);
    ``world_gap`` the largest joint-position mismatch over all bones.
    """
    first, last = clip.frames[0], clip.frames[-1]
    joint = float(np.linalg.norm(wrap_angle(last - first)))
    sk = clip.skeleton
    world = float(np.max(np.linalg.norm(all_positions(sk, last) - all_positions(sk, first), axis=1)))
    return {"joint_gap": joint, "world_gap": world}


def seam_velocity_jump(clip: AnimationClip) -> float:
    """|c'(T) - c'(0)| from one-sided differences of the unwrapped angles."""
    c = clip_to_curve(clip).samples
    dt = clip.frame_time
    return float(np.linalg.norm((c[-1] - c[-2]) / dt - (c[1] - c[0]) / dt))


def smooth_seam(q: np.ndarray, window: int) -> np.ndarray:
    """Remove the jump of a periodic SRV sequence across its seam (node 0).

    Both sides are extrapolated linearly to the seam; their mismatch is split
    between the sides and faded out with a cosine taper over ``window`` nodes.
    """
    p = q.shape[0]
    window = max(1, min(window, p // 2 - 1))
    right = 2 * q[1] - q[2]
    left = 2 * q[p - 1] - q[p - 2]
    jump = right - left
    out = q.copy()
    d = np.arange(1, window + 1)
    taper = (0.5 * (1 + np.cos(np.pi * d / (window + 1))))[:, None]
    out[d] -= 0.5 * taper * jump
    out[p - d] += 0.5 * taper * jump
    out[0] = 0.5 * (right + left)
    return out


def cyclify(clip: AnimationClip, epsilon: float = 1e-6, seam_smoothing: bool = True,
            sanity_bound: float = math.pi / 2, include_root_translation: bool = False,
            max_iter: int = 200) -> AnimationClip:
    """Closest looping version of a nearly periodic clip.

    The unwrapped angle curve goes to its SRV on the periodic grid, the seam
    is optionally smoothed, and the SRV is projected onto the closed-curve
    manifold.  The result keeps the original length and start pose; its
    start/end gap is below ``epsilon`` (in the curve's own units).

    The discrete round trip SRV -> curve has a quadrature error of order
    dt^2; it is measured on the input and added back, so only the change made
    by the projection reaches the output.  Clips already closed to within
    ``epsilon`` are returned as they are.

    Without ``include_root_translation`` the root trajectory loses its linear
    trend so that it closes as well.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    curve = clip_to_curve(clip, include_root_translation)
    c = curve.samples
    n = clip.skeleton.n
    gap = c[-1] - c[0]
    worst = int(np.argmax(np.abs(gap[:n])))
    if abs(gap[worst]) > sanity_bound:
        raise NotPeriodicError(f"channel {worst}: start/end gap {abs(gap[worst]):.3g} rad exceeds "
                               f"the sanity bound {sanity_bound:.3g}")

    root = clip.root_translation
    if not include_root_translation:
        ramp = np.linspace(0.0, 1.0, clip.frame_count)[:, None]
        root = root - ramp * (root[-1] - root[0])

    if np.linalg.norm(gap) < epsilon:
        return clip.replace(root_translation=root)

    srv = srv_transform(curve, "closed")
    defect = reconstruction_defect(curve, srv)
    q = srv.q
    w = srv.weights
    if seam_smoothing:
        q = smooth_seam(q, int(round(SEAM_WINDOW * srv.m)))
        q = q / np.sqrt(w @ np.sum(q * q, axis=1))
    q, _ = closure_projection(q, w, epsilon / srv.scale, max_iter)
    samples = srv.basepoint + srv.scale * integrate_srv(q, srv.duration, True) + defect
    return curve_to_clip(SampledCurve(samples, curve.duration), clip.replace(root_translation=root),
                         include_root_translation)
