"""Bernstein functions in Levy-Khintchine form and the inequalities they satisfy.

A Bernstein function is represented as

    B(u) = a + b*u + sum_i w_i * (1 - exp(-t_i * u)),    u >= 0,

with nonnegative drift constants a, b and a finite list of atoms
(t_i > 0, w_i > 0) standing in for the measure mu(dt).

Sign convention: B >= 0, B(0) = a, and B' is completely monotone,
i.e. (-1)**(n-1) * B^(n)(u) >= 0 for n >= 1.  (The variant convention
(-1)**n * d^n B / du^n >= 0 for n >= 1 that circulates in parts of the
literature would force B to be nonincreasing and already fails for
B(u) = u; it is not used here.)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BernsteinFunction",
    "InequalityReport",
    "UnsupportedOrderError",
    "cubic_upper_bound_check",
    "exponential_inequality_check",
    "lemma1_check",
    "lemma1_gap",
    "preset",
]


class UnsupportedOrderError(ValueError):
    """Derivative order outside the supported closed-form range 1..4."""


@dataclass(frozen=True)
class BernsteinFunction:
    """Drift pair (a, b) plus a finite atomic approximation of the Levy measure."""

    drift_a: float = 0.0
    drift_b: float = 0.0
    atoms: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        atoms = tuple((float(t), float(w)) for t, w in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "drift_a", float(self.drift_a))
        object.__setattr__(self, "drift_b", float(self.drift_b))
        if not (self.drift_a >= 0.0 and math.isfinite(self.drift_a)):
            raise ValueError(f"drift_a must be finite and >= 0, got {self.drift_a}")
        if not (self.drift_b >= 0.0 and math.isfinite(self.drift_b)):
            raise ValueError(f"drift_b must be finite and >= 0, got {self.drift_b}")
        for t, w in atoms:
            if not (t > 0.0 and math.isfinite(t)):
                raise ValueError(f"atom location must be finite and > 0, got {t}")
            if not (w > 0.0 and math.isfinite(w)):
                raise ValueError(f"atom weight must be finite and > 0, got {w}")
        # finite atomic lists always integrate min(t, 1); assert anyway
        mass = sum(w * min(t, 1.0) for t, w in atoms)
        if not math.isfinite(mass):
            raise ValueError("Levy mass sum_i w_i*min(t_i,1) must be finite")
        object.__setattr__(self, "_t", np.array([t for t, _ in atoms], dtype=float))
        object.__setattr__(self, "_w", np.array([w for _, w in atoms], dtype=float))

    def evaluate(self, u):
        """B(u) for scalar or array u >= 0.  Preserves floating dtype of `u`."""
        u_arr = np.asarray(u)
        if np.any(u_arr < 0.0):
            raise ValueError("Bernstein functions are defined on u >= 0")
        out = self.drift_a + self.drift_b * u_arr
        if self._t.size:
            tails = -np.expm1(-np.multiply.outer(u_arr, self._t))
            out = out + tails @ self._w
        if np.ndim(u) == 0:
            return float(out)
        return out

    def derivative(self, u, n: int = 1):
        """Closed-form n-th derivative, 1 <= n <= 4; u >= 0 (limit value at 0)."""
        n = int(n)
        if not 1 <= n <= 4:
            raise UnsupportedOrderError(f"derivative order must be in 1..4, got {n}")
        u_arr = np.asarray(u, dtype=float)
        if np.any(u_arr < 0.0):
            raise ValueError("derivative is evaluated on u >= 0")
        out = np.full(u_arr.shape, self.drift_b if n == 1 else 0.0)
        if self._t.size:
            sign = 1.0 if n % 2 == 1 else -1.0
            decay = np.exp(-np.multiply.outer(u_arr, self._t))
            out = out + sign * (decay @ (self._w * self._t**n))
        if np.ndim(u) == 0:
            return float(out)
        return out

    def __call__(self, u):
        return self.evaluate(u)


def preset(name: str, **params) -> BernsteinFunction:
    """Named constructors used by the job-config format.

    linear:        B(u) = slope*u                       (slope=1)
    one_minus_exp: B(u) = weight*(1 - exp(-rate*u))     (rate=1, weight=1)
    sqrt_shifted:  atomic quadrature of sqrt(u+mass^2)-mass, accurate to
                   roughly 1e-3 relative on u in [0, u_max]
    """
    if name == "linear":
        return BernsteinFunction(0.0, float(params.pop("slope", 1.0)), ())
    if name == "one_minus_exp":
        rate = float(params.pop("rate", 1.0))
        weight = float(params.pop("weight", 1.0))
        return BernsteinFunction(0.0, 0.0, ((rate, weight),))
    if name == "sqrt_shifted":
        mass = float(params.pop("mass", 1.0))
        n_atoms = int(params.pop("n_atoms", 512))
        u_max = float(params.pop("u_max", 2.0e4))
        return _sqrt_shifted_atoms(mass, n_atoms, u_max)
    raise ValueError(f"unknown Bernstein preset {name!r}")


def _sqrt_shifted_atoms(mass: float, n_atoms: int, u_max: float) -> BernsteinFunction:
    # sqrt(u+m^2)-m = int_0^inf (1-e^{-ut}) * e^{-m^2 t}/(2 sqrt(pi) t^{3/2}) dt;
    # midpoint rule in log t.  t_min set so the small-t tail costs < ~1e-4*sqrt(u_max).
    if mass <= 0:
        raise ValueError("mass must be positive")
    t_min = (1.0e-4 * math.sqrt(math.pi) / math.sqrt(u_max)) ** 2
    t_max = 45.0 / mass**2
    edges = np.geomspace(t_min, t_max, n_atoms + 1)
    mids = np.sqrt(edges[:-1] * edges[1:])
    widths = np.diff(edges)
    dens = np.exp(-(mass**2) * mids) / (2.0 * math.sqrt(math.pi) * mids**1.5)
    weights = dens * widths
    keep = weights > 0.0
    return BernsteinFunction(0.0, 0.0, tuple(zip(mids[keep], weights[keep])))


@dataclass(frozen=True)
class InequalityReport:
    """Worst observed violation of an inequality over a finite scan."""

    max_violation: float
    argmax: tuple
    tolerance: float
    n_checked: int

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance


def exponential_inequality_check(t, p, k):
    """Signed gap of  -e^{-|p+k|^2 t} - e^{-|p-k|^2 t} + 2 e^{-|p|^2 t} <= 2(1 - e^{-|k|^2 t}).

    Returns LHS - RHS, which is <= 0 for every t >= 0.  Evaluated through the
    algebraically identical factorization

        LHS - RHS = -[ 2*(1-e^{-|p|^2 t})(1-e^{-|k|^2 t})
                       + (e^{-|p-k|^2 t/2} - e^{-|p+k|^2 t/2})^2 ],

    a sum of products of nonnegative factors, so the sign survives floating
    point and the value is 0 exactly iff t=0, p=0 or k=0.

    `t` may be a scalar or array; `p`, `k` are d-vectors or (..., d) arrays.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0.0) or not np.all(np.isfinite(t_arr)):
        raise ValueError("t must be finite and >= 0")
    p_arr = np.asarray(p, dtype=float)
    k_arr = np.asarray(k, dtype=float)
    usum_p = (p_arr * p_arr).sum(axis=-1)
    usum_k = (k_arr * k_arr).sum(axis=-1)
    u_plus = ((p_arr + k_arr) ** 2).sum(axis=-1)
    u_minus = ((p_arr - k_arr) ** 2).sum(axis=-1)
    term_pk = 2.0 * np.expm1(-t_arr * usum_p) * np.expm1(-t_arr * usum_k)
    term_sq = (np.exp(-0.5 * t_arr * u_minus) - np.exp(-0.5 * t_arr * u_plus)) ** 2
    out = -(term_pk + term_sq)
    if np.ndim(out) == 0:
        return float(out)
    return out


def lemma1_gap(B: BernsteinFunction, p, k):
    """Signed gap  0.5*(B(|p+k|^2) + B(|p-k|^2) - 2 B(|p|^2)) - B(|k|^2)  (<= 0).

    The linear drift contributes exactly zero by the parallelogram law and the
    constant drift contributes -a; each atom contributes w/2 times the
    exponential gap, so the whole expression reduces to a sign-exact sum.
    Accepts p of shape (d,) or (np, d) and k of shape (d,) or (nk, d); array
    inputs produce the full (np, nk) pair matrix.
    """
    p_arr = np.atleast_2d(np.asarray(p, dtype=float))
    k_arr = np.atleast_2d(np.asarray(k, dtype=float))
    scalar = np.ndim(p) == 1 and np.ndim(k) == 1
    usum_p = (p_arr * p_arr).sum(axis=-1)
    usum_k = (k_arr * k_arr).sum(axis=-1)
    u_plus = ((p_arr[:, None, :] + k_arr[None, :, :]) ** 2).sum(axis=-1)
    u_minus = ((p_arr[:, None, :] - k_arr[None, :, :]) ** 2).sum(axis=-1)
    gap = np.full(u_plus.shape, -B.drift_a)
    for t, w in B.atoms:
        term_pk = 2.0 * np.multiply.outer(np.expm1(-t * usum_p), np.expm1(-t * usum_k))
        term_sq = (np.exp(-0.5 * t * u_minus) - np.exp(-0.5 * t * u_plus)) ** 2
        gap = gap - (0.5 * w) * (term_pk + term_sq)
    if scalar:
        return float(gap[0, 0])
    return gap


def lemma1_check(B: BernsteinFunction, p_grid, k_grid, *, tolerance: float = 1e-12,
                 gap_fn=lemma1_gap) -> InequalityReport:
    """Scan  0.5*(B(|p+k|^2)+B(|p-k|^2)-2B(|p|^2)) <= B(|k|^2)  over all pairs.

    Returns the full-scan report (max gap and the attaining pair) instead of
    aborting on the first offender.  `gap_fn` is injectable so a deliberately
    broken comparator can be used to exercise the failure path.
    """
    p_arr = np.atleast_2d(np.asarray(p_grid, dtype=float))
    k_arr = np.atleast_2d(np.asarray(k_grid, dtype=float))
    if p_arr.size == 0 or k_arr.size == 0:
        raise ValueError("lemma1_check requires nonempty grids")
    gap = np.atleast_2d(gap_fn(B, p_arr, k_arr))
    flat = int(np.argmax(gap))
    i, j = np.unravel_index(flat, gap.shape)
    return InequalityReport(
        max_violation=float(gap[i, j]),
        argmax=(tuple(p_arr[i]), tuple(k_arr[j])),
        tolerance=tolerance,
        n_checked=gap.size,
    )


def cubic_upper_bound_check(B: BernsteinFunction, u_grid) -> InequalityReport:
    """Evaluate B(u) - [u^3/6 + B''(0) u^2/2 + B'(0) u] over a grid.

    The right-hand side is a printed bound that fails in general (B''(0) <= 0
    can drive it negative while B >= 0, and the cubic term carries no
    third-derivative factor), so this reports the worst margin instead of
    asserting; positive values flag grid points where the bound is violated.
    """
    u_arr = np.asarray(u_grid, dtype=float).ravel()
    if u_arr.size == 0:
        raise ValueError("cubic_upper_bound_check requires a nonempty grid")
    if np.any(u_arr < 0.0):
        raise ValueError("grid entries must be >= 0")
    d1 = B.derivative(0.0, 1)
    d2 = B.derivative(0.0, 2)
    bound = u_arr**3 / 6.0 + 0.5 * d2 * u_arr**2 + d1 * u_arr
    violation = B.evaluate(u_arr) - bound
    i = int(np.argmax(violation))
    return InequalityReport(
        max_violation=float(violation[i]),
        argmax=(float(u_arr[i]),),
        tolerance=0.0,
        n_checked=u_arr.size,
    )
