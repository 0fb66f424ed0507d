"""Discrete square-root velocity (SRV) curves.

Open curves are sampled on m nodes t_i = i T/(m-1) and integrated with the
trapezoid rule.  Closed curves live on a periodic grid of p nodes
t_i = i T/p (the seam sample is not duplicated), where the trapezoid rule
reduces to uniform weights.

Velocities are central differences.  At open endpoints and across the seam
of a closed curve, the difference stencil is chosen so that the quadrature
of the velocity telescopes: integrating the discrete velocity over the whole
domain reproduces c(T) - c(0) to round-off.  Closure residuals measured on
the SRV side therefore equal the positional gap of the sampled curve.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

Domain = Literal["open", "closed"]


class ImmersionError(ValueError):
    """The curve has a vanishing velocity somewhere."""


class ProjectionError(RuntimeError):
    """Closure projection failed (singular Jacobian or no convergence)."""


def _as_samples(samples) -> np.ndarray:
    a = np.array(samples, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError("samples must be an (m, n) array")
    return a


@dataclass(frozen=True, eq=False)
class SampledCurve:
    samples: np.ndarray
    duration: float

    def __post_init__(self):
        s = _as_samples(self.samples)
        if s.shape[0] < 2 or s.shape[1] < 1:
            raise ValueError("a curve needs at least 2 samples of dimension >= 1")
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if not np.all(np.isfinite(s)):
            raise ValueError("samples must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def m(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    @property
    def dt(self) -> float:
        return self.duration / (self.m - 1)

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.duration, self.m)

    def is_immersion(self) -> bool:
        return bool(np.all(np.any(np.diff(self.samples, axis=0) != 0, axis=1)))

    def closure_gap(self) -> float:
        return float(np.linalg.norm(self.samples[-1] - self.samples[0]))


@dataclass(frozen=True, eq=False)
class SrvCurve:
    """q = c'/sqrt|c'| scaled to unit L2 norm.

    ``basepoint`` and ``scale`` (the length of the original curve) hold what
    the representation factors out, so that ``srv_inverse`` can restore it.
    """

    q: np.ndarray
    domain: Domain
    basepoint: np.ndarray
    scale: float
    duration: float

    def __post_init__(self):
        q = _as_samples(self.q)
        if self.domain not in ("open", "closed"):
            raise ValueError(f"unknown domain {self.domain!r}")
        if q.shape[0] < (3 if self.domain == "closed" else 2):
            raise ValueError("too few samples")
        c0 = np.array(self.basepoint, dtype=float).reshape(q.shape[1])
        if not self.scale > 0 or not self.duration > 0:
            raise ValueError("scale and duration must be positive")
        for name, a in (("q", q), ("basepoint", c0)):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def m(self) -> int:
        return self.q.shape[0]

    @property
    def dim(self) -> int:
        return self.q.shape[1]

    @property
    def closed(self) -> bool:
        return self.domain == "closed"

    @property
    def weights(self) -> np.ndarray:
        return quadrature_weights(self.m, self.duration, self.domain)

    @property
    def norm(self) -> float:
        return float(np.sqrt(l2_inner(self, self)))

    def closure_residual(self) -> np.ndarray:
        """Integral of q|q| over the domain, i.e. R^{-1}[q](T) with c0 = 0, L = 1."""
        return closure_integral(self.q, self.weights)

    def with_q(self, q: np.ndarray, domain: Optional[Domain] = None) -> "SrvCurve":
        return SrvCurve(q, domain or self.domain, self.basepoint, self.scale, self.duration)


def quadrature_weights(m: int, duration: float, domain: Domain) -> np.ndarray:
    if domain == "closed":
        return np.full(m, duration / m)
    w = np.full(m, duration / (m - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def inner(a: np.ndarray, b: np.ndarray, weights: np.ndarray) -> float:
    # a * b is commutative elementwise, so the result is exactly symmetric
    return float(weights @ np.sum(a * b, axis=1))


def closure_integral(q: np.ndarray, weights: np.ndarray) -> np.ndarray:
    speed = np.linalg.norm(q, axis=1)
    return weights @ (q * speed[:, None])


# ---------------------------------------------------------------------------
# Transform and inverse


def velocity(samples: np.ndarray, dt: float, closed: bool) -> np.ndarray:
    """Discrete velocity on the grid used by the SRV of that domain.

    Open: m values, central differences inside, first-order one-sided at the
    ends.  Closed: the m input samples are read as p = m - 1 periodic nodes
    plus the endpoint c(T); p values are returned.  A curve that is not
    exactly closed is continued periodically up to the translation
    c(T) - c(0), so the seam velocity averages the end and start slopes.
    """
    c = samples
    if closed:
        p = c.shape[0] - 1
        gap = c[p] - c[0]
        prev = np.vstack([c[p - 1] - gap, c[:p - 1]])
        return (c[1:p + 1] - prev) / (2 * dt)
    v = np.empty_like(c)
    v[1:-1] = (c[2:] - c[:-2]) / (2 * dt)
    v[0] = (c[1] - c[0]) / dt
    v[-1] = (c[-1] - c[-2]) / dt
    return v


def srv_transform(curve: SampledCurve, domain: Domain = "open") -> SrvCurve:
    """SRV representation of a sampled curve.

    ``domain="closed"`` treats the curve as a loop; its last sample is the
    endpoint c(T) and is not kept as a separate node.
    """
    if domain == "closed" and curve.m < 4:
        raise ValueError("closed treatment needs at least 4 samples")
    v = velocity(curve.samples, curve.dt, domain == "closed")
    speed = np.linalg.norm(v, axis=1)
    bad = np.flatnonzero(speed == 0)
    if len(bad):
        raise ImmersionError(f"zero velocity at sample {bad[0]}")
    w = quadrature_weights(len(v), curve.duration, domain)
    length = float(w @ speed)
    q = v / np.sqrt(speed)[:, None] / np.sqrt(length)
    return SrvCurve(q, domain, curve.samples[0], length, curve.duration)


def _cumulative(f: np.ndarray, dt: float, closed: bool) -> np.ndarray:
    if closed:
        f = np.vstack([f, f[:1]])
    steps = 0.5 * dt * (f[1:] + f[:-1])
    return np.vstack([np.zeros((1, f.shape[1])), np.cumsum(steps, axis=0)])


def integrate_srv(q: np.ndarray, duration: float, closed: bool) -> np.ndarray:
    """Cumulative trapezoid integral of q|q| starting at 0.

    Returns m samples for an open grid and p + 1 samples (seam repeated at T)
    for a closed one.
    """
    m = q.shape[0]
    dt = duration / m if closed else duration / (m - 1)
    f = q * np.linalg.norm(q, axis=1)[:, None]
    return _cumulative(f, dt, closed)


def srv_inverse(srv: SrvCurve) -> SampledCurve:
    """c(t) = c0 + L * int_0^t q|q| ds.  Closed curves come back with c(T) appended."""
    speed = np.linalg.norm(srv.q, axis=1)
    if np.any(speed == 0):
        raise ImmersionError(f"q vanishes at sample {int(np.flatnonzero(speed == 0)[0])}")
    samples = srv.basepoint + srv.scale * integrate_srv(srv.q, srv.duration, srv.closed)
    return SampledCurve(samples, srv.duration)


def reconstruction_defect(curve: SampledCurve, srv: SrvCurve) -> np.ndarray:
    """curve - srv_inverse(srv): the quadrature error of the discrete round trip.

    Adding it back to a reconstruction makes ``srv_inverse`` an exact left
    inverse of ``srv_transform`` on this curve.  It vanishes at both ends.
    """
    return curve.samples - (srv.basepoint + srv.scale * integrate_srv(srv.q, srv.duration, srv.closed))


# ---------------------------------------------------------------------------
# Geometry


def _check_compatible(a: SrvCurve, b: SrvCurve) -> None:
    if a.q.shape != b.q.shape or a.domain != b.domain:
        raise ValueError(f"incompatible SRV curves: {a.q.shape}/{a.domain} vs {b.q.shape}/{b.domain}")
    if not np.isclose(a.duration, b.duration, rtol=1e-12, atol=0):
        raise ValueError("SRV curves have different durations")


def l2_inner(a: SrvCurve, b: SrvCurve) -> float:
    _check_compatible(a, b)
    return inner(a.q, b.q, a.weights)


def normal_fields(q: np.ndarray) -> np.ndarray:
    """The n + 1 fields spanning the normal space of the closed-curve manifold at q.

    Returns an (n + 1, m, n) array: q itself, then q_i/|q| q + |q| e_i.
    """
    speed = np.linalg.norm(q, axis=1)
    if np.any(speed == 0):
        raise ImmersionError(f"q vanishes at sample {int(np.flatnonzero(speed == 0)[0])}")
    n = q.shape[1]
    fields = (q / speed[:, None]).T[:, :, None] * q[None, :, :]
    fields += speed[None, :, None] * np.eye(n)[:, None, :]
    return np.concatenate([q[None], fields])


def normal_space_basis(srv: SrvCurve) -> list[np.ndarray]:
    if not srv.closed:
        raise ValueError("the normal space basis is defined for closed curves")
    return list(normal_fields(srv.q))


def _orthonormalize(fields: np.ndarray, weights: np.ndarray) -> np.ndarray:
    # weighted QR; on (near) rank deficiency fall back to modified Gram-Schmidt,
    # which drops dependent fields
    k = fields.shape[0]
    root = np.sqrt(weights)[None, :, None]
    A = (fields * root).reshape(k, -1).T
    Q, R = np.linalg.qr(A)
    d = np.abs(np.diag(R))
    if d.min() > 1e-10 * d.max():
        return Q.T.reshape(fields.shape) / root
    basis = []
    for f in fields:
        v = f.copy()
        for b in basis:
            v -= inner(v, b, weights) * b
        nv = np.sqrt(max(inner(v, v, weights), 0.0))
        if nv > 1e-12 * np.sqrt(inner(f, f, weights)):
            basis.append(v / nv)
    return np.array(basis)


def tangent_projection(q: np.ndarray, v: np.ndarray, weights: np.ndarray, closed: bool) -> np.ndarray:
    if not closed:
        return v - inner(v, q, weights) / inner(q, q, weights) * q
    onb = _orthonormalize(normal_fields(q), weights)
    coef = np.einsum("i,kij,ij->k", weights, onb, v)
    return v - np.tensordot(coef, onb, axes=1)


def project_tangent(srv: SrvCurve, v) -> np.ndarray:
    """Project a vector field along ``srv`` onto the tangent space at it."""
    v = np.asarray(v, dtype=float)
    if v.shape != srv.q.shape:
        raise ValueError(f"vector field shape {v.shape} does not match {srv.q.shape}")
    return tangent_projection(srv.q, v, srv.weights, srv.closed)


def closure_jacobian(q: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """J_ij = delta_ij + 3 int q_i q_j, the closure residual's response to the normal fields."""
    return np.eye(q.shape[1]) + 3 * np.einsum("t,ti,tj->ij", weights, q, q)


def closure_projection(q: np.ndarray, weights: np.ndarray, epsilon: float = 1e-6,
                       max_iter: int = 200) -> tuple[np.ndarray, int]:
    """Newton-type projection of unit-norm q onto {int q|q| = 0}.

    Each step moves q along the non-trivial normal fields by -J^{-1} r and
    renormalizes.  Returns the projected q and the number of updates.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    q = np.array(q, dtype=float)
    for it in range(max_iter + 1):
        r = closure_integral(q, weights)
        if np.linalg.norm(r) < epsilon:
            return q, it
        if it == max_iter:
            break
        J = closure_jacobian(q, weights)
        try:
            beta = -np.linalg.solve(J, r)
        except np.linalg.LinAlgError:
            raise ProjectionError("singular closure Jacobian") from None
        q = q + np.tensordot(beta, normal_fields(q)[1:], axes=1)
        q /= np.sqrt(inner(q, q, weights))
    raise ProjectionError(f"closure projection did not converge in {max_iter} iterations "
                          f"(residual {np.linalg.norm(r):.3g})")


def project_closed(srv: SrvCurve, epsilon: float = 1e-6, max_iter: int = 200,
                   full_output: bool = False):
    """Project a unit-norm closed-domain SRV curve onto the closed-curve manifold.

    With ``full_output`` returns ``(srv, iterations)``.
    """
    if not srv.closed:
        raise ValueError("project_closed needs a curve on the periodic grid; "
                         "use srv_transform(curve, 'closed')")
    if not np.isclose(srv.norm, 1.0, atol=1e-8):
        raise ValueError(f"SRV curve must have unit L2 norm, has {srv.norm:.12g}")
    q, it = closure_projection(srv.q, srv.weights, epsilon, max_iter)
    out = srv if it == 0 else srv.with_q(q)
    return (out, it) if full_output else out


# ---------------------------------------------------------------------------
# CSV serialization


def _write_rows(header: list[str], rows, meta: list[tuple[str, list]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for key, values in meta:
        w.writerow([f"#{key}", *values])
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def _read_rows(text: str) -> tuple[dict, list[str], np.ndarray]:
    meta, header, rows = {}, None, []
    for row in csv.reader(io.StringIO(text)):
        if not row:
            continue
        if row[0].startswith("#"):
            meta[row[0][1:]] = row[1:]
        elif header is None:
            header = row
        else:
            rows.append([float(x) for x in row])
    if header is None:
        raise ValueError("missing header row")
    return meta, header, np.array(rows, dtype=float)


def curve_to_csv(curve: SampledCurve) -> str:
    header = ["t"] + [f"dim{i}" for i in range(curve.dim)]
    return _write_rows(header, np.column_stack([curve.times, curve.samples]), [])


def curve_from_csv(text: str) -> SampledCurve:
    _, _, data = _read_rows(text)
    return SampledCurve(data[:, 1:], float(data[-1, 0] - data[0, 0]))


def srv_to_csv(srv: SrvCurve) -> str:
    header = ["t"] + [f"dim{i}" for i in range(srv.dim)]
    t = np.arange(srv.m) * (srv.duration / (srv.m if srv.closed else srv.m - 1))
    meta = [("c0", [repr(float(x)) for x in srv.basepoint]), ("L", [repr(srv.scale)]),
            ("T", [repr(srv.duration)]), ("domain", [srv.domain])]
    return _write_rows(header, np.column_stack([t, srv.q]), meta)


def srv_from_csv(text: str) -> SrvCurve:
    meta, _, data = _read_rows(text)
    try:
        return SrvCurve(data[:, 1:], meta["domain"][0], [float(x) for x in meta["c0"]],
                        float(meta["L"][0]), float(meta["T"][0]))
    except KeyError as e:
        raise ValueError(f"missing metadata row {e}") from None
