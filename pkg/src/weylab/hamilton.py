"""Bicharacteristic flows of the principal symbol and non-trapping probes.

Trajectories solve (x', xi') = (grad_xi a_m, -grad_x a_m) with classical RK4
in unbounded phase space (no torus: bicharacteristics are ODE objects
independent of the PDE grid).  Integration halts if |xi| falls below a floor,
since homogeneous symbols are not smooth at xi = 0.

Escape times are located by linear interpolation between accepted steps plus
bisection refinement.  A finite-horizon computation can certify escape but
never trapping, so verdicts are escape certificates or inconclusive.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .symbol.core import Symbol, as_points

__all__ = [
    "Trajectory",
    "TrappingVerdict",
    "EllipticityClassification",
    "QDeltaReport",
    "hamiltonian_field",
    "integrate_bicharacteristic",
    "classify_strong_ellipticity",
    "trapping_probe",
    "qdelta_monotonicity",
    "qdelta_values",
    "trajectory_to_csv",
]

XI_FLOOR = 1e-6
DRIFT_TOLERANCE = 1e-6


def hamiltonian_field(a: Symbol, x, xi) -> tuple[np.ndarray, np.ndarray]:
    """(x_dot, xi_dot) = (grad_xi a, -grad_x a) from the derivative closures."""
    xdot = np.real(a.grad_xi(x, xi))
    xidot = -np.real(a.grad_x(x, xi))
    return xdot, xidot


@dataclass
class Trajectory:
    """Sampled bicharacteristic (t_i, x(t_i), xi(t_i)), time-sorted."""

    t: np.ndarray
    x: np.ndarray
    xi: np.ndarray
    h: float
    integrator: str
    drift: float
    xi_min: float
    xi_max: float
    truncated_forward: bool = False
    truncated_backward: bool = False
    drift_tolerance: float = DRIFT_TOLERANCE

    @property
    def accepted(self) -> bool:
        return self.drift <= self.drift_tolerance

    @property
    def start_index(self) -> int:
        return int(np.argmin(np.abs(self.t)))


def _rk4_path(a: Symbol, z0: np.ndarray, T: float, h: float, direction: float):
    """Fixed-step RK4 from 0 to direction*T; returns times, states, truncation flag."""
    n = z0.size // 2

    def f(z):
        x = z[:n][None, :]
        xi = z[n:][None, :]
        xd = np.real(a.grad_xi(x, xi))[0]
        xid = -np.real(a.grad_x(x, xi))[0]
        return np.concatenate([xd, xid])

    steps = max(1, int(np.ceil(T / h - 1e-12)))
    hh = direction * T / steps
    ts = [0.0]
    zs = [z0.copy()]
    z = z0.copy()
    t = 0.0
    truncated = False
    for _ in range(steps):
        k1 = f(z)
        k2 = f(z + 0.5 * hh * k1)
        k3 = f(z + 0.5 * hh * k2)
        k4 = f(z + hh * k3)
        z = z + (hh / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += hh
        if np.linalg.norm(z[n:]) < XI_FLOOR:
            truncated = True
            break
        ts.append(t)
        zs.append(z.copy())
    return np.array(ts), np.array(zs), truncated


def integrate_bicharacteristic(
    a_m: Symbol,
    x0,
    xi0,
    T: float,
    h: float,
    *,
    drift_tolerance: float = DRIFT_TOLERANCE,
) -> Trajectory:
    """Integrate the H_{a_m} flow forward and backward to +-T with step h."""
    n = a_m.n
    x0 = as_points(x0, n).reshape(n)
    xi0 = as_points(xi0, n).reshape(n)
    if np.linalg.norm(xi0) <= XI_FLOOR:
        raise ValueError("initial frequency must satisfy |xi0| > 0")
    if h <= 0 or T <= 0:
        raise ValueError("horizon T and step h must be positive")
    z0 = np.concatenate([x0, xi0])
    tf, zf, trunc_f = _rk4_path(a_m, z0, T, h, +1.0)
    tb, zb, trunc_b = _rk4_path(a_m, z0, T, h, -1.0)
    t = np.concatenate([tb[::-1][:-1], tf])
    z = np.concatenate([zb[::-1][:-1], zf], axis=0)
    x = z[:, :n]
    xi = z[:, n:]
    a_vals = np.real(a_m.eval(x, xi))
    a0 = np.real(a_m.eval(x0[None, :], xi0[None, :]))[0]
    drift = float(np.max(np.abs(a_vals - a0)))
    xin = np.linalg.norm(xi, axis=1)
    return Trajectory(
        t=t,
        x=x,
        xi=xi,
        h=h,
        integrator="rk4",
        drift=drift,
        xi_min=float(np.min(xin)),
        xi_max=float(np.max(xin)),
        truncated_forward=trunc_f,
        truncated_backward=trunc_b,
        drift_tolerance=drift_tolerance,
    )


@dataclass
class EllipticityClassification:
    ok: bool
    C: float
    reason: str = ""


def classify_strong_ellipticity(a_m: Symbol, traj: Trajectory, *, tol: float = 1e-10) -> EllipticityClassification:
    """Fit C with C^{-1}|xi(t)|^m <= |a_m| <= C|xi(t)|^m along the trajectory.

    Points with a_m ~ 0 are off the elliptic co-sphere and are rejected
    (reported, not raised)."""
    if not traj.accepted:
        return EllipticityClassification(False, np.inf, "trajectory drift above tolerance")
    vals = np.abs(np.real(a_m.eval(traj.x, traj.xi)))
    start = vals[traj.start_index]
    if start < tol:
        return EllipticityClassification(
            False, np.inf, "a_m vanishes at the start point (not on the elliptic co-sphere)"
        )
    base = np.linalg.norm(traj.xi, axis=1) ** a_m.order
    if np.min(vals) < tol * max(1.0, float(np.max(vals))):
        return EllipticityClassification(False, np.inf, "a_m degenerates along the flow")
    C = float(max(np.max(vals / base), np.max(base / vals)))
    return EllipticityClassification(True, C, "")


@dataclass
class TrappingVerdict:
    forward_escape_time: Optional[float]
    backward_escape_time: Optional[float]
    radius: float
    horizon: float
    verdict: str  # forward_nontrapped | backward_nontrapped | nontrapped_both | inconclusive

    @property
    def nontrapped(self) -> bool:
        return self.verdict != "inconclusive"


def _first_escape(t: np.ndarray, x: np.ndarray, R: float, *, refine_tol: float = 1e-8):
    """First |x(t)| >= R by linear interpolation between samples + bisection."""
    r = np.linalg.norm(x, axis=1)
    hit = np.nonzero(r >= R)[0]
    if hit.size == 0:
        return None
    i = int(hit[0])
    if i == 0:
        return float(t[0])
    t_lo, t_hi = float(t[i - 1]), float(t[i])
    x_lo, x_hi = x[i - 1], x[i]

    # bisect on the segment parameter (times may run either direction)
    def radius_at(w):
        return np.linalg.norm(x_lo + w * (x_hi - x_lo))

    lo, hi = 0.0, 1.0
    while (hi - lo) * abs(t_hi - t_lo) > refine_tol:
        mid = 0.5 * (lo + hi)
        if radius_at(mid) >= R:
            hi = mid
        else:
            lo = mid
    return t_lo + hi * (t_hi - t_lo)


def trapping_probe(a_m: Symbol, x0, xi0, R: float, T_max: float, h: float) -> TrappingVerdict:
    """Certify escape from |x| < R within the horizon, in either direction."""
    traj = integrate_bicharacteristic(a_m, x0, xi0, T_max, h)
    i0 = traj.start_index
    fwd = _first_escape(traj.t[i0:], traj.x[i0:], R)
    bwd = _first_escape(traj.t[: i0 + 1][::-1], traj.x[: i0 + 1][::-1], R)
    if fwd is not None and bwd is not None:
        verdict = "nontrapped_both"
    elif fwd is not None:
        verdict = "forward_nontrapped"
    elif bwd is not None:
        verdict = "backward_nontrapped"
    else:
        verdict = "inconclusive"
    return TrappingVerdict(
        forward_escape_time=fwd,
        backward_escape_time=bwd,
        radius=R,
        horizon=T_max,
        verdict=verdict,
    )


def qdelta_values(a_m: Symbol, x, xi, delta: float) -> np.ndarray:
    """q_delta = <xi>_delta^{-(m-1)} sum_j x_j d_{xi_j} a_m, <xi>_delta = (delta+|xi|^2)^{1/2}."""
    X = as_points(x, a_m.n)
    XI = as_points(xi, a_m.n)
    grad = np.real(a_m.grad_xi(X, XI))
    base = (delta + np.sum(XI**2, axis=-1)) ** (-(a_m.order - 1.0) / 2.0)
    return base * np.sum(X * grad, axis=-1)


def _hamilton_qdelta(a_m: Symbol, x, xi, delta: float) -> np.ndarray:
    """H_{a_m} q_delta via the symbols' closures (first derivatives of q_delta
    assembled by chain rule; needs second derivatives of a_m)."""
    n = a_m.n
    X = as_points(x, n)
    XI = as_points(xi, n)
    m = a_m.order
    bes2 = delta + np.sum(XI**2, axis=-1)
    base = bes2 ** (-(m - 1.0) / 2.0)
    grad_xi_a = np.real(a_m.grad_xi(X, XI))
    grad_x_a = np.real(a_m.grad_x(X, XI))
    s0 = np.sum(X * grad_xi_a, axis=-1)

    out = np.zeros(X.shape[:-1])
    zeros = (0,) * n
    for k in range(n):
        ek = tuple(1 if i == k else 0 for i in range(n))
        # d_{x_k} q_delta
        sx = np.real(a_m.deriv(ek, zeros, X, XI)) + 0.0
        acc = np.zeros_like(sx)
        for j in range(n):
            ej = tuple(1 if i == j else 0 for i in range(n))
            acc += X[..., j] * np.real(a_m.deriv(ej, ek, X, XI))
        dq_xk = base * (sx + acc)
        # d_{xi_k} q_delta
        acc2 = np.zeros_like(sx)
        for j in range(n):
            ejk = tuple((1 if i == j else 0) + (1 if i == k else 0) for i in range(n))
            acc2 += X[..., j] * np.real(a_m.deriv(ejk, zeros, X, XI))
        dq_xik = -(m - 1.0) * XI[..., k] / bes2 * base * s0 + base * acc2
        out += grad_xi_a[..., k] * dq_xk - grad_x_a[..., k] * dq_xik
    return out


@dataclass
class QDeltaReport:
    delta: float
    identity_rel_error: float
    mu: float
    ls_slope: float
    t: np.ndarray = field(repr=False)
    q_values: np.ndarray = field(repr=False)

    @property
    def monotone(self) -> bool:
        return self.mu > 0


def qdelta_monotonicity(a_m: Symbol, traj: Trajectory, delta: float) -> QDeltaReport:
    """Verify q_delta(x(t), xi(t)) = q_delta(0) + int_0^t H_{a_m} q_delta along the
    trajectory and fit the growth rate mu with q_delta(t) >= q_delta(0) + mu t."""
    if not (0.0 < delta <= 1.0):
        raise ValueError("delta must lie in (0, 1]")
    if not traj.accepted:
        raise ValueError("trajectory drift exceeds tolerance; refine the step")
    i0 = traj.start_index
    t = traj.t[i0:]
    x = traj.x[i0:]
    xi = traj.xi[i0:]
    qv = qdelta_values(a_m, x, xi, delta)
    hv = _hamilton_qdelta(a_m, x, xi, delta)
    # cumulative composite trapezoid of H q_delta against the endpoint values
    integ = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (hv[1:] + hv[:-1]))])
    scale = float(np.max(np.abs(qv - qv[0])))
    err = 0.0 if scale == 0 else float(np.max(np.abs(qv - qv[0] - integ)) / scale)
    dt_pos = t[1:] - t[0]
    ratios = (qv[1:] - qv[0]) / dt_pos
    mu = float(np.min(ratios)) if ratios.size else 0.0
    ls = float(np.polyfit(t, qv, 1)[0]) if t.size > 2 else np.nan
    return QDeltaReport(
        delta=delta, identity_rel_error=err, mu=mu, ls_slope=ls, t=t, q_values=qv
    )


def trajectory_to_csv(path, traj: Trajectory, a_m: Symbol, delta: Optional[float] = None) -> None:
    """Export (t, x, xi, a_m, q_delta) samples."""
    n = traj.x.shape[1]
    a_vals = np.real(a_m.eval(traj.x, traj.xi))
    q_vals = None if delta is None else qdelta_values(a_m, traj.x, traj.xi, delta)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        header = (
            ["t"]
            + [f"x{i + 1}" for i in range(n)]
            + [f"xi{i + 1}" for i in range(n)]
            + ["a_m"]
            + (["q_delta"] if delta is not None else [])
        )
        w.writerow(header)
        for i in range(traj.t.size):
            row = [traj.t[i], *traj.x[i], *traj.xi[i], a_vals[i]]
            if delta is not None:
                row.append(q_vals[i])
            w.writerow(row)
