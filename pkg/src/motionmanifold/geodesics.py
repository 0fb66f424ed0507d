"""Geodesics between SRV curves.

Open curves form a sphere in L2, so geodesics are spherical linear
interpolation.  On the closed-curve manifold the geodesic is found by
path-straightening: gradient descent of the path energy over paths with fixed
endpoints, keeping every interior point on the manifold.
"""
from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .curve_core import (
    ProjectionError,
    SrvCurve,
    closure_projection,
    inner,
    srv_from_csv,
    srv_to_csv,
    tangent_projection,
)

log = logging.getLogger(__name__)

ANTIPODAL_GUARD = 1e-9
# closure tolerance for interior path points
PATH_EPSILON = 1e-9


class AntipodalError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GeodesicPath:
    """Discrete path alpha(tau_j), tau_j = j/k, between two SRV curves.

    ``qs`` holds the k + 1 points as a (k+1, m, n) array; ``start`` and
    ``end`` carry the endpoint metadata (basepoint, scale, duration).
    """

    qs: np.ndarray
    start: SrvCurve
    end: SrvCurve
    energy_trace: list = field(default_factory=list)
    status: str = "converged"

    @property
    def k(self) -> int:
        return self.qs.shape[0] - 1

    @property
    def domain(self) -> str:
        return self.start.domain

    @property
    def weights(self) -> np.ndarray:
        return self.start.weights

    @property
    def iterations(self) -> int:
        return max(len(self.energy_trace) - 1, 0)

    def point(self, j: int) -> SrvCurve:
        """Path point j as an SrvCurve; basepoint and scale interpolate linearly."""
        tau = j / self.k
        c0 = (1 - tau) * self.start.basepoint + tau * self.end.basepoint
        L = (1 - tau) * self.start.scale + tau * self.end.scale
        return SrvCurve(self.qs[j], self.domain, c0, L, self.start.duration)

    @property
    def points(self) -> list[SrvCurve]:
        return [self.point(j) for j in range(self.k + 1)]

    def speeds(self) -> np.ndarray:
        d = np.diff(self.qs, axis=0)
        return np.sqrt(np.einsum("i,jik,jik->j", self.weights, d, d)) * self.k


def _chords(qs: np.ndarray, w: np.ndarray) -> np.ndarray:
    d = np.diff(qs, axis=0)
    return np.einsum("i,jik,jik->j", w, d, d)


def path_length(path: GeodesicPath) -> float:
    return float(np.sum(np.sqrt(_chords(path.qs, path.weights))))


def path_energy(path: GeodesicPath) -> float:
    return 0.5 * path.k * float(np.sum(_chords(path.qs, path.weights)))


def _energy(qs: np.ndarray, w: np.ndarray) -> float:
    return 0.5 * (qs.shape[0] - 1) * float(np.sum(_chords(qs, w)))


# ---------------------------------------------------------------------------
# Sphere


def _check_pair(beta: SrvCurve, gamma: SrvCurve) -> None:
    if beta.q.shape != gamma.q.shape or beta.domain != gamma.domain:
        raise ValueError("curves must share sample count, dimension and domain")
    if not np.isclose(beta.duration, gamma.duration, rtol=1e-12, atol=0):
        raise ValueError("curves must share the same duration")


def slerp(a: np.ndarray, b: np.ndarray, w: np.ndarray, taus) -> np.ndarray:
    """Great-circle interpolation between unit vectors a and b at each tau."""
    taus = np.asarray(taus, dtype=float)
    if np.array_equal(a, b):
        return np.repeat(a[None], len(taus), axis=0)
    cos_theta = inner(a, b, w)
    if cos_theta <= -1 + ANTIPODAL_GUARD:
        raise AntipodalError("antipodal curves: the geodesic is not unique")
    theta = math.acos(min(cos_theta, 1.0))
    if theta < 1e-8:
        out = (1 - taus)[:, None, None] * a + taus[:, None, None] * b
    else:
        s = math.sin(theta)
        out = (np.sin(theta * (1 - taus))[:, None, None] * a
               + np.sin(theta * taus)[:, None, None] * b) / s
    out /= np.sqrt(np.einsum("i,jik,jik->j", w, out, out))[:, None, None]
    out[taus == 0] = a
    out[taus == 1] = b
    return out


def sphere_geodesic(beta: SrvCurve, gamma: SrvCurve, k: int = 16) -> GeodesicPath:
    _check_pair(beta, gamma)
    if beta.closed:
        raise ValueError("sphere geodesics are for open curves; use path_straightening")
    if k < 1:
        raise ValueError("k must be at least 1")
    qs = slerp(beta.q, gamma.q, beta.weights, np.linspace(0, 1, k + 1))
    return GeodesicPath(qs, beta, gamma, [])


def sphere_distance(beta: SrvCurve, gamma: SrvCurve) -> float:
    _check_pair(beta, gamma)
    c = inner(beta.q, gamma.q, beta.weights)
    if c > 0.5:
        # chord form keeps precision for nearby curves and is exactly 0 for equal ones
        d = beta.q - gamma.q
        return 2 * math.asin(min(1.0, 0.5 * math.sqrt(inner(d, d, beta.weights))))
    return math.acos(max(c, -1.0))


# ---------------------------------------------------------------------------
# Path-straightening


def _reproject(qs: np.ndarray, w: np.ndarray) -> np.ndarray:
    out = qs.copy()
    for j in range(1, len(qs) - 1):
        q = qs[j] / np.sqrt(inner(qs[j], qs[j], w))
        out[j] = closure_projection(q, w, PATH_EPSILON)[0]
    return out


def _l2_gradient(qs: np.ndarray) -> np.ndarray:
    k = qs.shape[0] - 1
    g = np.zeros_like(qs)
    g[1:-1] = k * (2 * qs[1:-1] - qs[:-2] - qs[2:])
    return g


def _tangent(qs: np.ndarray, g: np.ndarray, w: np.ndarray) -> np.ndarray:
    out = np.zeros_like(g)
    for j in range(1, qs.shape[0] - 1):
        out[j] = tangent_projection(qs[j], g[j], w, True)
    return out


def _palais(g: np.ndarray) -> np.ndarray:
    # Riesz map of the H^1 (Palais) path metric with pinned ends: solve the
    # discrete path Laplacian against the L2 gradient
    k = g.shape[0] - 1
    A = k * (2 * np.eye(k - 1) - np.eye(k - 1, k=1) - np.eye(k - 1, k=-1))
    out = np.zeros_like(g)
    out[1:-1] = np.linalg.solve(A, g[1:-1].reshape(k - 1, -1)).reshape(g[1:-1].shape)
    return out


def path_straightening(beta: SrvCurve, gamma: SrvCurve, k: int = 16, max_iter: int = 100,
                       tol: float = 1e-6, max_halvings: int = 20) -> GeodesicPath:
    """Geodesic between two closed SRV curves by path-straightening.

    Starts from the spherical interpolation with each interior point projected
    onto the closed-curve manifold.  Each iteration takes the L2 energy
    gradient, projects it onto the tangent space at every interior point,
    preconditions it with the Palais metric (plain gradient as fallback),
    steps with backtracking and re-projects.
    Only energy-decreasing steps are accepted, so the trace never increases.
    """
    _check_pair(beta, gamma)
    if not (beta.closed and gamma.closed):
        raise ValueError("path_straightening needs closed-domain curves")
    if k < 1:
        raise ValueError("k must be at least 1")
    w = beta.weights
    if np.array_equal(beta.q, gamma.q):
        qs = np.repeat(beta.q[None], k + 1, axis=0)
        return GeodesicPath(qs, beta, gamma, [0.0], "converged")

    try:
        qs = _reproject(slerp(beta.q, gamma.q, w, np.linspace(0, 1, k + 1)), w)
    except ProjectionError as e:
        raise ProjectionError(f"initial path: {e}") from e
    qs[0], qs[-1] = beta.q, gamma.q
    energy = _energy(qs, w)
    trace = [energy]
    status = "max_iter"

    for _ in range(max_iter):
        g = _tangent(qs, _l2_gradient(qs), w)
        accepted = False
        # Palais-preconditioned direction first, raw L2 gradient as fallback
        for u, step in ((_tangent(qs, _palais(g), w), 1.0), (g, 0.5 / k)):
            for _ in range(max_halvings + 1):
                try:
                    cand = _reproject(qs - step * u, w)
                except ProjectionError:
                    cand = None
                if cand is not None:
                    e_new = _energy(cand, w)
                    if e_new < energy:
                        accepted = True
                        break
                step *= 0.5
            if accepted:
                break
        if not accepted:
            status = "line_search_exhausted"
            log.info("path_straightening: no energy-decreasing step, returning best path")
            break
        decrease = (energy - e_new) / energy
        qs, energy = cand, e_new
        trace.append(energy)
        if decrease < tol:
            status = "converged"
            break
    return GeodesicPath(qs, beta, gamma, trace, status)


def closed_distance(beta: SrvCurve, gamma: SrvCurve, **kw) -> float:
    """Length of the path-straightened geodesic."""
    return path_length(path_straightening(beta, gamma, **kw))


def evaluate_path(path: GeodesicPath, s: float) -> SrvCurve:
    """Path point at an arbitrary tau = s, by interpolating neighbouring nodes.

    Interior interpolants are renormalized and, for closed paths, re-projected.
    """
    if not 0 <= s <= 1:
        raise ValueError("s must lie in [0, 1]")
    x = s * path.k
    j = min(int(math.floor(x)), path.k - 1)
    frac = x - j
    if frac == 0:
        q = path.qs[j]
    elif frac == 1:
        q = path.qs[j + 1]
    else:
        w = path.weights
        q = slerp(path.qs[j], path.qs[j + 1], w, [frac])[0]
        if path.domain == "closed":
            q = closure_projection(q, w, PATH_EPSILON)[0]
    c0 = (1 - s) * path.start.basepoint + s * path.end.basepoint
    L = (1 - s) * path.start.scale + s * path.end.scale
    return SrvCurve(q, path.domain, c0, L, path.start.duration)


# ---------------------------------------------------------------------------
# Serialization


def save_path(path: GeodesicPath, directory) -> None:
    """Write one CSV per path point plus ``manifest.json``."""
    os.makedirs(directory, exist_ok=True)
    files = []
    for j, srv in enumerate(path.points):
        name = f"tau_{j:03d}.csv"
        with open(os.path.join(directory, name), "w") as f:
            f.write(srv_to_csv(srv))
        files.append(name)
    manifest = {
        "k": path.k,
        "domain": path.domain,
        "energy_trace": [float(e) for e in path.energy_trace],
        "length": path_length(path),
        "energy": path_energy(path),
        "status": path.status,
        "points": files,
    }
    with open(os.path.join(directory, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2)


def load_path(directory) -> GeodesicPath:
    with open(os.path.join(directory, "manifest.json")) as f:
        manifest = json.load(f)
    srvs = []
    for name in manifest["points"]:
        with open(os.path.join(directory, name)) as f:
            srvs.append(srv_from_csv(f.read()))
    qs = np.stack([s.q for s in srvs])
    return GeodesicPath(qs, srvs[0], srvs[-1], manifest["energy_trace"], manifest["status"])
