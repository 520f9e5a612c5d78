"""Numerical verification of the symbol-class conditions.

The checks sample log-spaced frequency shells crossed with a spatial lattice
(the conditions are homogeneous in xi, so shells capture them) and fit the
constants of

  * gradient ellipticity   1/C |xi|^{m-1} <= |grad_xi Re a| <= C |xi|^{m-1}
  * spatial decay          |d_x^beta d_xi^alpha Re a| <= eps lam(|x|) |xi|^{m-|alpha|}
  * imaginary smallness    |Im a_{m-1}| <= c0 lam(|x|) |xi|^{m-1}

Verdicts: fail when the slack is negative beyond tolerance at a sample,
inconclusive when it sits inside the tolerance band, pass otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import Symbol, multi_indices_upto

__all__ = [
    "SampleSet",
    "ConditionReport",
    "check_grad_ellipticity",
    "check_x_decay",
    "check_im_smallness",
    "seminorm_estimate",
]

# |xi|^{m-1} is regularized as max(|xi|, XI_FLOOR)^{m-1} purely for ratio
# fitting near xi = 0, where both sides of the conditions vanish.
XI_FLOOR = 1e-8


@dataclass(frozen=True)
class SampleSet:
    """Phase-space sample points: X and XI of shape (M, n), with shell metadata."""

    n: int
    X: np.ndarray
    XI: np.ndarray
    shell_radii: np.ndarray
    shell_index: np.ndarray
    description: str = ""

    def __post_init__(self):
        for name in ("X", "XI", "shell_radii", "shell_index"):
            arr = getattr(self, name)
            arr.setflags(write=False)

    @property
    def xi_norm(self) -> np.ndarray:
        return np.sqrt(np.sum(self.XI**2, axis=-1))

    @property
    def x_norm(self) -> np.ndarray:
        return np.sqrt(np.sum(self.X**2, axis=-1))

    @classmethod
    def standard(
        cls,
        n: int,
        x_radius: float = 10.0,
        xi_max: float = 64.0,
        num_shells: int = 24,
        num_directions: int = 32,
        x_points: int = 33,
    ) -> "SampleSet":
        """Default scan: 24 log shells |xi| in [1, xi_max], 32 directions (n=2)
        or {+-1} (n=1), crossed with a 33^n spatial lattice over the box."""
        radii = np.logspace(0.0, np.log10(xi_max), num_shells)
        if n == 1:
            dirs = np.array([[1.0], [-1.0]])
        elif n == 2:
            ang = 2.0 * np.pi * np.arange(num_directions) / num_directions
            dirs = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        else:
            raise ValueError("standard sample sets support n in {1, 2}")
        xi_pts = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, n)
        shell_of_xi = np.repeat(np.arange(num_shells), dirs.shape[0])

        axis = np.linspace(-x_radius, x_radius, x_points)
        x_lattice = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)

        X = np.repeat(x_lattice, xi_pts.shape[0], axis=0)
        XI = np.tile(xi_pts, (x_lattice.shape[0], 1))
        shell_index = np.tile(shell_of_xi, x_lattice.shape[0])
        desc = (
            f"{num_shells} log shells |xi| in [1, {xi_max:g}] x {dirs.shape[0]} directions "
            f"x {x_points}^{n} spatial lattice over [-{x_radius:g}, {x_radius:g}]^{n}"
        )
        return cls(n=n, X=X, XI=XI, shell_radii=radii, shell_index=shell_index, description=desc)

    @classmethod
    def from_grid(cls, grid, **kwargs) -> "SampleSet":
        kwargs.setdefault("x_radius", grid.L)
        kwargs.setdefault("xi_max", grid.xi_max)
        return cls.standard(grid.n, **kwargs)


@dataclass
class ConditionReport:
    condition: str
    sample_description: str
    constants: dict = field(default_factory=dict)
    worst_point: Optional[tuple] = None
    worst_value: float = np.nan
    verdict: str = "inconclusive"
    threshold: Optional[float] = None

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def as_dict(self) -> dict:
        return {
            "condition": self.condition,
            "samples": self.sample_description,
            "constants": {k: v for k, v in self.constants.items()},
            "worst_point": None
            if self.worst_point is None
            else [list(map(float, p)) for p in self.worst_point],
            "worst_value": float(self.worst_value),
            "verdict": self.verdict,
            "threshold": self.threshold,
        }


def _worst(S: SampleSet, idx: int) -> tuple:
    return (tuple(S.X[idx]), tuple(S.XI[idx]))


def check_grad_ellipticity(
    a: Symbol,
    S: SampleSet,
    *,
    degenerate_tol: float = 1e-8,
    pass_tol: float = 1e-3,
) -> ConditionReport:
    """Two-sided fit of |grad_xi Re a| against |xi|^{m-1} over the sample set."""
    m = a.order
    grad = a.grad_xi(S.X, S.XI)
    gnorm = np.sqrt(np.sum(np.real(grad) ** 2, axis=-1))
    base = np.maximum(S.xi_norm, XI_FLOOR) ** (m - 1.0)
    ratio = gnorm / base
    i_min = int(np.argmin(ratio))
    i_max = int(np.argmax(ratio))
    r_min = float(ratio[i_min])
    r_max = float(ratio[i_max])
    c_lower = np.inf if r_min == 0 else 1.0 / r_min
    constants = {
        "C_lower": float(c_lower),
        "C_upper": r_max,
        "C": float(max(c_lower, r_max)),
    }
    if r_min <= degenerate_tol:
        verdict = "fail"
    elif r_min < pass_tol:
        verdict = "inconclusive"
    else:
        verdict = "pass"
    return ConditionReport(
        condition="grad_ellipticity",
        sample_description=S.description,
        constants=constants,
        worst_point=_worst(S, i_min),
        worst_value=r_min,
        verdict=verdict,
        threshold=pass_tol,
    )


def check_x_decay(
    a: Symbol,
    lam: Callable[[np.ndarray], np.ndarray],
    S: SampleSet,
    max_order: int = 3,
    *,
    eps_threshold: float = 1.0,
    band: float = 1e-9,
) -> ConditionReport:
    """Fit eps_hat = max |d_x^beta d_xi^alpha Re a| / (lam(|x|) |xi|^{m-|alpha|})
    over 1 <= |beta|, |alpha| + |beta| <= max_order."""
    m = a.order
    lam_vals = np.asarray(lam(S.x_norm), dtype=float)
    xi = np.maximum(S.xi_norm, XI_FLOOR)
    eps_hat = 0.0
    worst_idx = 0
    worst_key = None
    by_index = {}
    for alpha in multi_indices_upto(a.n, max_order):
        for beta in multi_indices_upto(a.n, max_order - sum(alpha)):
            if sum(beta) < 1:
                continue
            vals = np.abs(np.real(a.deriv(alpha, beta, S.X, S.XI)))
            ratio = vals / (lam_vals * xi ** (m - sum(alpha)))
            j = int(np.argmax(ratio))
            by_index[f"alpha={alpha},beta={beta}"] = float(ratio[j])
            if ratio[j] > eps_hat:
                eps_hat = float(ratio[j])
                worst_idx = j
                worst_key = (alpha, beta)
    slack = eps_threshold - eps_hat
    verdict = "pass" if slack > band else ("inconclusive" if slack >= -band else "fail")
    return ConditionReport(
        condition="x_decay",
        sample_description=S.description,
        constants={"eps_hat": eps_hat, "worst_index": str(worst_key), "by_index": by_index},
        worst_point=_worst(S, worst_idx),
        worst_value=eps_hat,
        verdict=verdict,
        threshold=eps_threshold,
    )


def check_im_smallness(
    a: Symbol,
    lam: Callable[[np.ndarray], np.ndarray],
    S: SampleSet,
    *,
    c0_threshold: float = 1.0,
    band: float = 1e-9,
) -> ConditionReport:
    """Fit c0_hat = max |Im a_{m-1}| / (lam(|x|) |xi|^{m-1}); needs the parts split."""
    m = a.order
    if a.real_valued:
        im_vals = np.zeros(S.X.shape[0])
    else:
        if a.parts is None:
            raise ValueError("imaginary-part check requires the a_m + a_{m-1} split")
        im_vals = np.abs(np.imag(a.parts[1].eval(S.X, S.XI)))
    lam_vals = np.asarray(lam(S.x_norm), dtype=float)
    ratio = im_vals / (lam_vals * np.maximum(S.xi_norm, XI_FLOOR) ** (m - 1.0))
    j = int(np.argmax(ratio))
    c0_hat = float(ratio[j])
    slack = c0_threshold - c0_hat
    verdict = "pass" if slack > band else ("inconclusive" if slack >= -band else "fail")
    return ConditionReport(
        condition="im_smallness",
        sample_description=S.description,
        constants={"c0_hat": c0_hat},
        worst_point=_worst(S, j),
        worst_value=c0_hat,
        verdict=verdict,
        threshold=c0_threshold,
    )


def seminorm_estimate(a: Symbol, k: int, S: Optional[SampleSet] = None) -> float:
    """Approximate the class seminorm sup |d^beta_x d^alpha_xi a| <xi>^{-m+|alpha|}
    over |alpha| + |beta| <= k on the sample set."""
    if S is None:
        S = SampleSet.standard(a.n)
    bessel = np.sqrt(1.0 + S.xi_norm**2)
    best = 0.0
    for alpha in multi_indices_upto(a.n, k):
        for beta in multi_indices_upto(a.n, k - sum(alpha)):
            vals = np.abs(a.deriv(alpha, beta, S.X, S.XI))
            best = max(best, float(np.max(vals * bessel ** (-a.order + sum(alpha)))))
    return best
