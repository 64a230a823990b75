"""Kinetic dispersion profiles K(k), external potentials V(x), periodic lattices.

All three shipped dispersions are radial functions of the squared momentum:
|k|^2/(2m), sqrt(|k|^2+m^2)-m, and B(|k|^2) for a Bernstein function B.  Each
vanishes at k=0, is even, and is nonnegative.  Potentials are sampled on the
position lattice; the singular families must be softened or cell-averaged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .bernstein import BernsteinFunction, InequalityReport

__all__ = [
    "BernsteinKinetic",
    "Coulomb",
    "GaussianWell",
    "GridSpec",
    "Harmonic",
    "KineticProfile",
    "NonRelativistic",
    "PotentialSpec",
    "SemiRelativistic",
    "SingularPotentialError",
    "SquareWell",
    "Tabulated",
    "Yukawa",
    "ZeroPotential",
    "h3_margin",
    "kinetic_on_grid",
    "load_tabulated",
    "potential_on_grid",
    "save_tabulated",
]


class SingularPotentialError(ValueError):
    """A singular potential was sampled at its singularity without softening."""


def _is_power_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Periodic cubic box [-L/2, L/2)^d with N points per axis (N a power of two).

    Position lattice: x_j = -L/2 + j*L/N.  Momentum lattice (FFT order):
    k_n = 2*pi*n/L for n in {0, 1, ..., N/2-1, -N/2, ..., -1}.  The single
    Nyquist point n = -N/2 has no positive partner and is excluded from
    symmetry-sensitive scans.
    """

    dim: int
    length: float
    points: int

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if not self.length > 0:
            raise ValueError(f"length must be positive, got {self.length}")
        if not _is_power_of_two(self.points):
            raise ValueError(f"points must be a power of two >= 2, got {self.points}")

    @property
    def spacing(self) -> float:
        return self.length / self.points

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.dim

    @property
    def num_points(self) -> int:
        return self.points**self.dim

    def axis_positions(self) -> np.ndarray:
        return -0.5 * self.length + self.spacing * np.arange(self.points)

    def axis_momenta(self) -> np.ndarray:
        return 2.0 * math.pi * np.fft.fftfreq(self.points, d=self.spacing)

    def position_mesh(self) -> tuple[np.ndarray, ...]:
        x = self.axis_positions()
        return tuple(np.meshgrid(*([x] * self.dim), indexing="ij"))

    def radius_sq_mesh(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for axis_vals in self.position_mesh():
            out += axis_vals**2
        return out

    def radius_mesh(self) -> np.ndarray:
        return np.sqrt(self.radius_sq_mesh())

    def momentum_sq_mesh(self) -> np.ndarray:
        k = self.axis_momenta()
        out = np.zeros(self.shape)
        for axis in range(self.dim):
            shape = [1] * self.dim
            shape[axis] = self.points
            out = out + (k**2).reshape(shape)
        return out

    def momentum_vectors(self, exclude_nyquist: bool = False) -> np.ndarray:
        """Flattened (num_points, dim) array of lattice momenta, C order."""
        k = self.axis_momenta()
        mesh = np.meshgrid(*([k] * self.dim), indexing="ij")
        vecs = np.stack([m.ravel() for m in mesh], axis=-1)
        if exclude_nyquist:
            nyq = k[self.points // 2]
            keep = ~np.any(vecs == nyq, axis=1)
            vecs = vecs[keep]
        return vecs


@dataclass(frozen=True)
class NonRelativistic:
    """K(k) = |k|^2 / (2m)."""

    mass: float = 1.0

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("mass must be positive")

    def dispersion(self, ksq):
        return ksq / (2.0 * self.mass)


@dataclass(frozen=True)
class SemiRelativistic:
    """K(k) = sqrt(|k|^2 + m^2) - m, computed as ksq/(sqrt(ksq+m^2)+m).

    The rational form is exact at ksq = 0 and avoids the subtractive
    cancellation of the textbook expression for small |k|.
    """

    mass: float = 1.0

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("mass must be positive")

    def dispersion(self, ksq):
        m = self.mass
        return ksq / (np.sqrt(ksq + m * m) + m)


@dataclass(frozen=True)
class BernsteinKinetic:
    """K(k) = B(|k|^2) for a Bernstein function with zero constant drift."""

    shape: BernsteinFunction

    def __post_init__(self):
        if self.shape.drift_a != 0.0:
            raise ValueError("kinetic profiles require B(0) = 0, i.e. drift_a = 0")

    def dispersion(self, ksq):
        return self.shape.evaluate(ksq)


KineticProfile = Union[NonRelativistic, SemiRelativistic, BernsteinKinetic]


def kinetic_on_grid(profile: KineticProfile, grid: GridSpec) -> np.ndarray:
    """Sample K over the full momentum lattice (FFT order along each axis)."""
    return profile.dispersion(grid.momentum_sq_mesh())


# ---------------------------------------------------------------------------
# potentials


@dataclass(frozen=True)
class ZeroPotential:
    """V = 0 (the free comparison case)."""

    def sample(self, grid: GridSpec) -> np.ndarray:
        return np.zeros(grid.shape)


@dataclass(frozen=True)
class Harmonic:
    """V(x) = 0.5 * omega^2 * |x|^2."""

    stiffness: float = 1.0

    def sample(self, grid: GridSpec) -> np.ndarray:
        return 0.5 * self.stiffness**2 * grid.radius_sq_mesh()


@dataclass(frozen=True)
class GaussianWell:
    """V(x) = -depth * exp(-|x|^2 / (2 width^2))."""

    depth: float = 1.0
    width: float = 1.0

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("width must be positive")

    def sample(self, grid: GridSpec) -> np.ndarray:
        return -self.depth * np.exp(-grid.radius_sq_mesh() / (2.0 * self.width**2))


@dataclass(frozen=True)
class SquareWell:
    """V(x) = -depth for |x| <= radius, else 0."""

    depth: float = 1.0
    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")

    def sample(self, grid: GridSpec) -> np.ndarray:
        return np.where(grid.radius_mesh() <= self.radius, -self.depth, 0.0)


@dataclass(frozen=True)
class Coulomb:
    """V(x) = -Z / sqrt(|x|^2 + eps^2), optionally cell-averaged in d=3.

    softening=None means one lattice spacing at sampling time.  With
    cell_average=True the exact mean of -Z/|x| over each grid cell is used
    (d=3 only); this keeps the sample finite without a softening scale and
    converges faster under grid refinement.
    """

    charge: float = 1.0
    softening: float | None = None
    cell_average: bool = False

    def sample(self, grid: GridSpec) -> np.ndarray:
        if self.cell_average:
            if grid.dim != 3:
                raise ValueError("cell-averaged Coulomb sampling is implemented for d=3 only")
            return -self.charge * _inv_r_cell_average(grid)
        eps = grid.spacing if self.softening is None else float(self.softening)
        r2 = grid.radius_sq_mesh()
        if eps == 0.0 and np.any(r2 == 0.0):
            raise SingularPotentialError(
                "Coulomb with softening=0 hits the lattice origin; "
                "set a softening or enable cell averaging"
            )
        return -self.charge / np.sqrt(r2 + eps * eps)


@dataclass(frozen=True)
class Yukawa:
    """V(x) = -g * exp(-mu |x|) / sqrt(|x|^2 + eps^2); softening defaults to one spacing."""

    strength: float = 1.0
    screening: float = 1.0
    softening: float | None = None

    def sample(self, grid: GridSpec) -> np.ndarray:
        eps = grid.spacing if self.softening is None else float(self.softening)
        r2 = grid.radius_sq_mesh()
        if eps == 0.0 and np.any(r2 == 0.0):
            raise SingularPotentialError(
                "Yukawa with softening=0 hits the lattice origin; set a softening"
            )
        return -self.strength * np.exp(-self.screening * np.sqrt(r2)) / np.sqrt(r2 + eps * eps)


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Values on an explicit lattice; resampled to other grids by nearest neighbor."""

    values: np.ndarray
    dim: int
    length: float
    points: int

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).reshape((self.points,) * self.dim)
        object.__setattr__(self, "values", vals)

    def sample(self, grid: GridSpec) -> np.ndarray:
        if grid.length != self.length or grid.dim != self.dim:
            raise ValueError("tabulated potential covers a different box")
        if grid.points == self.points:
            return self.values.copy()
        # nearest-neighbor: V enters diagonally, so higher-order interpolation
        # buys no Rayleigh-quotient accuracy
        src_spacing = self.length / self.points
        x = grid.axis_positions()
        idx = np.rint((x + 0.5 * self.length) / src_spacing).astype(int) % self.points
        mesh = np.meshgrid(*([idx] * self.dim), indexing="ij")
        return self.values[tuple(mesh)]


PotentialSpec = Union[
    ZeroPotential, Harmonic, GaussianWell, SquareWell, Coulomb, Yukawa, Tabulated
]


def potential_on_grid(potential: PotentialSpec, grid: GridSpec) -> np.ndarray:
    """Sample V over the position lattice; result is real with the grid's shape."""
    out = np.asarray(potential.sample(grid), dtype=float)
    if out.shape != grid.shape:
        raise ValueError(f"potential sample has shape {out.shape}, expected {grid.shape}")
    return out


def save_tabulated(path, values: np.ndarray, grid: GridSpec) -> None:
    """Write lattice values in the one-value-per-line format with a `d L N` header."""
    flat = np.asarray(values, dtype=float).ravel()
    if flat.size != grid.num_points:
        raise ValueError("value count does not match the grid")
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{grid.dim} {grid.length!r} {grid.points}\n")
        for v in flat:
            fh.write(format(v, ".17g") + "\n")


def load_tabulated(path) -> Tabulated:
    """Read the `d L N` header format written by save_tabulated."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise ValueError("tabulated file must start with a 'd L N' header line")
        dim, length, points = int(header[0]), float(header[1]), int(header[2])
        vals = np.array([float(line) for line in fh if line.strip()])
    if vals.size != points**dim:
        raise ValueError(f"expected {points**dim} values, found {vals.size}")
    return Tabulated(values=vals, dim=dim, length=length, points=points)


def _inv_r_cell_average(grid: GridSpec) -> np.ndarray:
    """Exact cell averages of 1/|x| over every grid cell of a d=3 lattice.

    Uses the closed-form triple antiderivative of 1/r (alternating corner sum
    over each cell).  Cell corners sit at half-integer multiples of the
    spacing, so no corner coordinate vanishes and every term is regular.
    """
    h = grid.spacing
    x = grid.axis_positions()
    lo = x - 0.5 * h
    hi = x + 0.5 * h

    def antideriv(cx, cy, cz):
        r = np.sqrt(cx * cx + cy * cy + cz * cz)
        return (
            cx * cy * np.log(cz + r)
            + cy * cz * np.log(cx + r)
            + cz * cx * np.log(cy + r)
            - 0.5 * cx * cx * np.arctan(cy * cz / (cx * r))
            - 0.5 * cy * cy * np.arctan(cz * cx / (cy * r))
            - 0.5 * cz * cz * np.arctan(cx * cy / (cz * r))
        )

    total = np.zeros(grid.shape)
    corners = (hi, lo)  # sign +1 when all arguments are upper bounds
    for sx in (0, 1):
        for sy in (0, 1):
            for sz in (0, 1):
                sign = (-1.0) ** (sx + sy + sz)
                cx = corners[sx][:, None, None]
                cy = corners[sy][None, :, None]
                cz = corners[sz][None, None, :]
                total += sign * antideriv(cx, cy, cz)
    return total / h**3


# ---------------------------------------------------------------------------
# dispersion midpoint bound (H.3)


def _h3_points(grid: GridSpec, max_points: int) -> np.ndarray:
    """Deterministic momentum subsample for the pairwise margin scan.

    Always contains the zero vector (where the margin attains its maximum 0)
    and the full axis rays; fills up with a strided slice of the remaining
    lattice.  The Nyquist column is excluded throughout.
    """
    k = grid.axis_momenta()
    keep = np.delete(np.arange(grid.points), grid.points // 2)
    axis_vals = k[keep]
    rows = [np.zeros((1, grid.dim))]
    for axis in range(grid.dim):
        ray = np.zeros((axis_vals.size, grid.dim))
        ray[:, axis] = axis_vals
        rows.append(ray)
    base = np.unique(np.concatenate(rows, axis=0), axis=0)
    if grid.dim == 1 or base.shape[0] >= max_points:
        return base[:max_points] if base.shape[0] > max_points else base
    full = grid.momentum_vectors(exclude_nyquist=True)
    budget = max_points - base.shape[0]
    if full.shape[0] <= max_points:
        return np.unique(np.concatenate([base, full], axis=0), axis=0)
    stride = int(math.ceil(full.shape[0] / budget))
    extra = full[::stride]
    return np.unique(np.concatenate([base, extra], axis=0), axis=0)


def h3_margin(profile: KineticProfile, grid: GridSpec, *, tolerance: float = 1e-12,
              max_pairs: int = 2_000_000) -> InequalityReport:
    """Worst margin of  0.5*(K(p+k) + K(p-k) - 2K(p)) <= K(k)  over lattice pairs.

    K is evaluated off-lattice at p+k and p-k through the profile's continuum
    dispersion.  The scan runs over a deterministic subsample when the full
    pair set exceeds `max_pairs` (the subsample includes p=0, where the margin
    is exactly 0, so the reported maximum is exact whenever the bound holds).
    Margins are accumulated in extended precision so that the 1e-12 tolerance
    is meaningful at large momenta.
    """
    pts = _h3_points(grid, int(math.floor(math.sqrt(max_pairs))))
    work = np.longdouble if np.finfo(np.longdouble).eps < 1e-18 else np.float64
    p = pts.astype(work)
    usum_p = (p * p).sum(axis=1)
    disp_p = profile.dispersion(usum_p)

    best = -np.inf
    best_pair = (tuple(pts[0]), tuple(pts[0]))
    chunk = max(1, int(max_pairs // max(1, pts.shape[0]) // 4))
    for start in range(0, pts.shape[0], chunk):
        kblk = p[start:start + chunk]
        u_plus = ((p[:, None, :] + kblk[None, :, :]) ** 2).sum(axis=-1)
        u_minus = ((p[:, None, :] - kblk[None, :, :]) ** 2).sum(axis=-1)
        margin = 0.5 * (profile.dispersion(u_plus) + profile.dispersion(u_minus)
                        - 2.0 * disp_p[:, None])
        margin -= profile.dispersion((kblk * kblk).sum(axis=1))[None, :]
        flat = int(np.argmax(margin))
        i, j = np.unravel_index(flat, margin.shape)
        if margin[i, j] > best:
            best = margin[i, j]
            best_pair = (tuple(pts[i]), tuple(pts[start + j]))
    return InequalityReport(
        max_violation=float(best),
        argmax=best_pair,
        tolerance=tolerance,
        n_checked=pts.shape[0] ** 2,
    )
