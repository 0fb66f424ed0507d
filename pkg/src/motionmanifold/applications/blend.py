"""Blending two animations along a geodesic between their SRV curves."""
from __future__ import annotations

import math

import numpy as np

from ..curve_core import SampledCurve, SrvCurve, closure_projection, integrate_srv, srv_transform
from ..geodesics import GeodesicPath, evaluate_path, path_length, path_straightening, sphere_geodesic
from ..mocap_io import AnimationClip, clip_to_curve, curve_to_clip
from ..motion_space import Reparametrization, align, optimal_reparametrization

SPACES = ("open", "closed", "shape")


def warp_samples(c: np.ndarray, rho: Reparametrization) -> np.ndarray:
    """Curve samples re-timed by ``rho``: c(phi(t) + offset) at the grid nodes.

    The curve is continued past its end periodically up to its start/end
    gap, matching how the SRV grid treats the seam.
    """
    p = c.shape[0] - 1
    dt = rho.duration / p
    x = rho.phi / dt + rho.start_offset
    lap = np.floor(x / p)
    x = x - lap * p
    lo = np.minimum(np.floor(x).astype(int), p - 1)
    frac = (x - lo)[:, None]
    out = (1 - frac) * c[lo] + frac * c[lo + 1]
    return out + lap[:, None] * (c[-1] - c[0])


class Blender:
    """A geodesic between two clips, evaluated at any blend parameter.

    Both clips are compared on the common time interval [0, 1].  The path
    endpoints are the clips' SRVs, projected onto the closed manifold for the
    closed and shape spaces; in shape space the second clip is first aligned
    to the first.  Each clip's residual against its path endpoint (quadrature
    error, plus the projection's displacement in closed spaces) is blended
    linearly alongside, so s = 0 and s = 1 return the endpoint clips exactly.
    In shape space the s = 1 clip is ``clip_b`` re-timed onto ``clip_a``.
    """

    def __init__(self, clip_a: AnimationClip, clip_b: AnimationClip, space: str = "closed",
                 k: int = 16, seed_count: int = 16, epsilon: float = 1e-6,
                 include_root_translation: bool = False):
        if space not in SPACES:
            raise ValueError(f"space must be one of {SPACES}")
        if clip_a.skeleton.topology() != clip_b.skeleton.topology():
            raise ValueError("clips use different skeletons")
        if clip_a.frame_count != clip_b.frame_count:
            raise ValueError("clips differ in frame count; resample one of them first")
        self.clip_a, self.space, self.include_root = clip_a, space, include_root_translation
        ca = clip_to_curve(clip_a, include_root_translation, duration=1.0).samples
        cb = clip_to_curve(clip_b, include_root_translation, duration=1.0).samples
        n = clip_a.skeleton.n
        # put b's unwrapped angles on the same turn as a's so the blend goes the short way
        cb = cb.copy()
        cb[:, :n] += 2 * math.pi * np.round((ca[0, :n] - cb[0, :n]) / (2 * math.pi))
        root_b = clip_b.root_translation

        domain = "open" if space == "open" else "closed"
        qa = self._srv(ca, domain, epsilon)
        qb = self._srv(cb, domain, epsilon)
        if space == "shape":
            rho, _ = optimal_reparametrization(qa, qb, seed_count, k=k)
            qb = align(qb, rho)
            cb = warp_samples(cb, rho)
            root_b = warp_samples(root_b, rho)
            qb = SrvCurve(qb.q, "closed", cb[0], qb.scale, 1.0)

        if domain == "open":
            self.path: GeodesicPath = sphere_geodesic(qa, qb, k)
        else:
            self.path = path_straightening(qa, qb, k)
        self.residual_a = ca - self._curve(qa)
        self.residual_b = cb - self._curve(qb)
        self.root_a, self.root_b = clip_a.root_translation, root_b
        self.frame_time = (clip_a.frame_time, clip_b.frame_time)

    @staticmethod
    def _srv(c: np.ndarray, domain: str, epsilon: float) -> SrvCurve:
        srv = srv_transform(SampledCurve(c, 1.0), domain)
        if domain == "closed":
            srv = srv.with_q(closure_projection(srv.q, srv.weights, epsilon / srv.scale)[0])
        return srv

    @staticmethod
    def _curve(srv: SrvCurve) -> np.ndarray:
        return srv.basepoint + srv.scale * integrate_srv(srv.q, srv.duration, srv.closed)

    def at(self, s: float) -> AnimationClip:
        if not 0 <= s <= 1:
            raise ValueError("s must lie in [0, 1]")
        c = self._curve(evaluate_path(self.path, s))
        c = c + (1 - s) * self.residual_a + s * self.residual_b
        root = (1 - s) * self.root_a + s * self.root_b
        frame_time = (1 - s) * self.frame_time[0] + s * self.frame_time[1]
        duration = frame_time * (c.shape[0] - 1)
        template = self.clip_a.replace(root_translation=root)
        return curve_to_clip(SampledCurve(c, duration), template, self.include_root)

    @property
    def length(self) -> float:
        return path_length(self.path)


def blend(clip_a: AnimationClip, clip_b: AnimationClip, s: float, space: str = "closed",
          **kw) -> AnimationClip:
    """The clip at parameter ``s`` on the geodesic from ``clip_a`` to ``clip_b``."""
    return Blender(clip_a, clip_b, space, **kw).at(s)


def blend_sweep(clip_a: AnimationClip, clip_b: AnimationClip, count: int, space: str = "closed",
                **kw) -> list[AnimationClip]:
    """``count`` clips at s uniformly spaced over [0, 1], sharing one geodesic."""
    if count < 2:
        raise ValueError("a sweep needs at least 2 clips")
    b = Blender(clip_a, clip_b, space, **kw)
    return [b.at(float(s)) for s in np.linspace(0.0, 1.0, count)]

