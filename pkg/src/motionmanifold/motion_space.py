"""Closed curves modulo reparametrization (start point and playback speed)."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .curve_core import SrvCurve, closure_projection, inner
from .geodesics import PATH_EPSILON, path_length, path_straightening

# local lattice moves (rows of beta, columns of gamma); slopes stay in [1/3, 3]
MOVES = ((1, 1), (1, 2), (2, 1), (1, 3), (3, 1))
DEFAULT_SEEDS = 16


@dataclass(frozen=True, eq=False)
class Reparametrization:
    """A cyclic start shift followed by a monotone time warp.

    ``phi`` gives the warped time at the p + 1 grid nodes t_i = i T/p,
    including both ends.
    """

    phi: np.ndarray
    start_offset: int = 0

    def __post_init__(self):
        phi = np.array(self.phi, dtype=float)
        if phi.ndim != 1 or len(phi) < 3:
            raise ValueError("phi must be a 1-D array of at least 3 nodes")
        if not np.all(np.diff(phi) > 0):
            raise ValueError("phi must be strictly increasing")
        if phi[0] != 0:
            raise ValueError("phi must start at 0")
        if not 0 <= self.start_offset < len(phi) - 1:
            raise ValueError("start_offset must lie in [0, p)")
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)

    @property
    def p(self) -> int:
        return len(self.phi) - 1

    @property
    def duration(self) -> float:
        return float(self.phi[-1])

    @classmethod
    def identity(cls, p: int, duration: float = 1.0, start_offset: int = 0) -> "Reparametrization":
        return cls(np.arange(p + 1) * (duration / p), start_offset)

    @property
    def is_warp_identity(self) -> bool:
        return np.array_equal(self.phi, np.arange(self.p + 1) * (self.duration / self.p))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["#offset", self.start_offset])
        w.writerow(["t", "phi"])
        t = np.arange(self.p + 1) * (self.duration / self.p)
        for a, b in zip(t, self.phi):
            w.writerow([repr(float(a)), repr(float(b))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Reparametrization":
        offset, phi = 0, []
        for row in csv.reader(io.StringIO(text)):
            if not row:
                continue
            if row[0] == "#offset":
                offset = int(row[1])
            elif row[0] != "t":
                phi.append(float(row[1]))
        return cls(np.array(phi), offset)


def apply_reparam(srv: SrvCurve, rho: Reparametrization) -> SrvCurve:
    """(gamma, rho) -> shifted gamma composed with phi, times sqrt(phi').

    The sqrt(phi') factor keeps the action norm preserving; the discrete
    result is rescaled so the L2 norm matches the input exactly.
    """
    if not srv.closed:
        raise ValueError("reparametrization acts on closed curves")
    p = srv.m
    if rho.p != p:
        raise ValueError(f"reparametrization has {rho.p} intervals, curve has {p} samples")
    if not np.isclose(rho.duration, srv.duration, rtol=1e-12, atol=0):
        raise ValueError("reparametrization duration does not match the curve")
    q = np.roll(srv.q, -rho.start_offset, axis=0)
    if rho.is_warp_identity:
        return srv.with_q(q)
    out = _warp(np.vstack([q, q[:1]]), rho.phi, srv.duration / p)
    w = srv.weights
    out *= np.sqrt(inner(srv.q, srv.q, w) / inner(out, out, w))
    return srv.with_q(out)


def _edge_costs(b: np.ndarray, g: np.ndarray, dt: float) -> dict:
    """Chordal mismatch cost for every lattice move ending at every node (i, j).

    ``b`` and ``g`` are periodic SRV samples extended to p + 1 nodes.  The cost
    of a move (a, c) into (i, j) integrates |b(t) - sqrt(c/a) g(phi(t))|^2
    with the trapezoid rule over the a + 1 nodes of the segment, phi linear.
    The square is expanded so every term is a precomputed inner product.
    """
    P = b.shape[0]
    bb = np.sum(b * b, axis=1)
    gg = np.sum(g * g, axis=1)
    g_next = np.sum(g[:-1] * g[1:], axis=1)
    M = b @ g.T
    costs = {}
    for a, c in MOVES:
        C = np.full((P, P), np.inf)
        if a < P and c < P:
            rows = np.arange(a, P)
            cols = np.arange(c, P)
            ratio = c / a
            acc = np.zeros((len(rows), len(cols)))
            for s in range(a + 1):
                weight = 0.5 if s in (0, a) else 1.0
                x = cols - c + s * ratio
                lo = np.minimum(np.floor(x).astype(int), P - 2)
                fr = x - lo
                g2 = (1 - fr) ** 2 * gg[lo] + fr ** 2 * gg[lo + 1] + 2 * fr * (1 - fr) * g_next[lo]
                r = rows - a + s
                bg = (1 - fr) * M[np.ix_(r, lo)] + fr * M[np.ix_(r, lo + 1)]
                acc += weight * (bb[r][:, None] - 2 * np.sqrt(ratio) * bg + ratio * g2[None, :])
            C[a:, c:] = np.maximum(acc, 0.0) * dt
        costs[(a, c)] = C
    return costs


def dp_align(beta_q: np.ndarray, gamma_q: np.ndarray, duration: float) -> tuple[np.ndarray, float]:
    """Optimal monotone lattice path from (0, 0) to (p, p).

    Returns phi at the p + 1 grid nodes and the accumulated cost.
    """
    p = beta_q.shape[0]
    b = np.vstack([beta_q, beta_q[:1]])
    g = np.vstack([gamma_q, gamma_q[:1]])
    dt = duration / p
    costs = _edge_costs(b, g, dt)
    costs = np.stack([costs[mv] for mv in MOVES])
    P = p + 1
    D = np.full((P, P), np.inf)
    D[0, 0] = 0.0
    choice = np.full((P, P), -1, dtype=np.int8)
    cand = np.empty((len(MOVES), P))
    for i in range(1, P):
        cand.fill(np.inf)
        for k, (a, c) in enumerate(MOVES):
            if a <= i:
                cand[k, c:] = D[i - a, :P - c] + costs[k, i, c:]
        # argmin keeps the first move on ties
        choice[i] = np.argmin(cand, axis=0)
        D[i] = cand[choice[i], np.arange(P)]
    if not np.isfinite(D[p, p]):
        raise RuntimeError("no admissible alignment path")
    nodes = [(p, p)]
    i, j = p, p
    while (i, j) != (0, 0):
        a, c = MOVES[choice[i, j]]
        i, j = i - a, j - c
        nodes.append((i, j))
    nodes.reverse()
    ni, nj = np.array(nodes).T
    phi = np.interp(np.arange(P), ni, nj) * dt
    phi[0], phi[-1] = 0.0, duration
    return phi, float(D[p, p])


def _warp(q_ext: np.ndarray, phi: np.ndarray, dt: float) -> np.ndarray:
    """(q o phi) sqrt(phi') on the p periodic nodes; q_ext has p + 1 nodes."""
    p = q_ext.shape[0] - 1
    x = phi[:p] / dt
    lo = np.minimum(np.floor(x).astype(int), p - 1)
    frac = (x - lo)[:, None]
    warped = (1 - frac) * q_ext[lo] + frac * q_ext[lo + 1]
    prev = np.concatenate([[phi[p - 1] - phi[p]], phi[:p - 1]])
    dphi = (phi[1:p + 1] - prev) / (2 * dt)
    return warped * np.sqrt(dphi)[:, None]


def refine_warp(beta_q: np.ndarray, gamma_q: np.ndarray, phi: np.ndarray, duration: float,
                iterations: int = 60, modes: int = 12) -> np.ndarray:
    """Polish a lattice warp by gradient descent on the chordal mismatch.

    Updates are phi <- phi o (id + v) with v in the span of the first
    ``modes`` periodic harmonics vanishing at both ends.  Only steps that
    lower the mismatch and keep phi strictly increasing are taken.
    """
    p = beta_q.shape[0]
    dt = duration / p
    t = np.arange(p) * dt
    tt = np.arange(p + 1) * dt
    ext = np.vstack([gamma_q, gamma_q[:1]])
    h = 2 * np.pi * np.arange(1, modes + 1)[:, None] * t[None, :] / duration
    basis = np.vstack([np.sin(h), np.cos(h) - 1])
    basis /= np.sqrt(np.sum(basis ** 2, axis=1) * dt)[:, None]

    def mismatch(ph):
        d = beta_q - _warp(ext, ph, dt)
        return float(np.sum(d * d) * dt)

    cost = mismatch(phi)
    step = 1.0
    for _ in range(iterations):
        qw = _warp(ext, phi, dt)
        r = beta_q - qw
        dq = (np.roll(qw, -1, axis=0) - np.roll(qw, 1, axis=0)) / (2 * dt)
        rq = np.sum(r * qw, axis=1)
        grad = -2 * (np.sum(r * dq, axis=1) - 0.5 * (np.roll(rq, -1) - np.roll(rq, 1)) / (2 * dt))
        v = -(basis @ grad * dt) @ basis
        if not np.any(v):
            break
        v = np.append(v, 0.0)
        improved = False
        for _ in range(20):
            cand = np.interp(tt + step * v, tt, phi)
            cand[0], cand[-1] = 0.0, duration
            if np.all(np.diff(cand) > 0):
                c = mismatch(cand)
                if c < cost:
                    improved = True
                    break
            step *= 0.5
        if not improved:
            break
        rel = (cost - c) / cost if cost > 0 else 0.0
        phi, cost = cand, c
        step *= 2
        if rel < 1e-6:
            break
    return phi


def _seed_offsets(p: int, seed_count: int) -> list[int]:
    return sorted({int(round(k * p / seed_count)) % p for k in range(seed_count)})


def optimal_reparametrization(beta: SrvCurve, gamma: SrvCurve, seed_count: int = DEFAULT_SEEDS,
                              refine: bool = True, unaligned_distance: Optional[float] = None,
                              **ps_kw) -> tuple[Reparametrization, float]:
    """Best reparametrization of ``gamma`` towards ``beta`` and the resulting distance.

    Start offsets are seeded uniformly; each seed is aligned by dynamic
    programming under the chordal cost.  With ``refine`` the offsets between
    the best seed and its neighbours are also tried and the winning warp is
    polished by ``refine_warp``.  The distance of the best
    alignment is measured by path-straightening and compared with the
    unaligned distance, so the result never exceeds it.
    """
    if not (beta.closed and gamma.closed):
        raise ValueError("alignment needs closed-domain curves")
    if beta.q.shape != gamma.q.shape:
        raise ValueError("curves must share sample count and dimension")
    if seed_count < 1:
        raise ValueError("seed_count must be at least 1")
    p, T = beta.m, beta.duration

    results = {}

    def run(offset: int) -> None:
        if offset not in results:
            results[offset] = dp_align(beta.q, np.roll(gamma.q, -offset, axis=0), T)

    for o in _seed_offsets(p, seed_count):
        run(o)
    if refine and seed_count < p:
        best = min(results, key=lambda o: results[o][1])
        half = int(np.ceil(p / seed_count / 2))
        for d in range(-half, half + 1):
            run((best + d) % p)
    offset = min(results, key=lambda o: (results[o][1], o))
    phi = results[offset][0]
    if refine:
        phi = refine_warp(beta.q, np.roll(gamma.q, -offset, axis=0), phi, T)
    rho = Reparametrization(phi, offset)

    if unaligned_distance is None:
        unaligned_distance = path_length(path_straightening(beta, gamma, **ps_kw))
    aligned = align(gamma, rho)
    d = path_length(path_straightening(beta, aligned, **ps_kw))
    if d <= unaligned_distance:
        return rho, d
    return Reparametrization.identity(p, T), unaligned_distance


def align(gamma: SrvCurve, rho: Reparametrization) -> SrvCurve:
    """Apply ``rho`` and restore the closure constraint lost to resampling."""
    out = apply_reparam(gamma, rho)
    if rho.is_warp_identity:
        return out
    return out.with_q(closure_projection(out.q, out.weights, PATH_EPSILON)[0])


def shape_distance(beta: SrvCurve, gamma: SrvCurve, seed_count: int = DEFAULT_SEEDS, **kw) -> float:
    return optimal_reparametrization(beta, gamma, seed_count, **kw)[1]
