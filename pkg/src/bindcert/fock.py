"""Truncated particle-boson Hamiltonians diagonalized exactly on a periodic lattice.

The model couples a lattice particle with Bernstein kinetic energy B(p^2) to a
finite set of boson modes through a polynomial of the field operator:

    H^0 = B(p^2) (x) I  +  I (x) sum_j w_j a_j* a_j  +  P(phi(x)),
    H^V = H^0 + V (x) I,

with phi(x) = sum_j (g_j e^{-i k_j x} a_j* + conj) / sqrt(2) and a hard
occupation cap n_max per mode (a* annihilates the top state).  Everything is
assembled as an explicit sparse Hermitian matrix, so ground energies, the
translation-symmetry and dispersion-bound hypotheses, and the transported
trial state can all be checked end to end at desk scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .bernstein import BernsteinFunction, InequalityReport
from .eigensolve import fix_phase, lowest_eigenpair
from .onebody import SolveResult, apply_h, even_reflect, lattice_digest
from .operators import (
    BernsteinKinetic,
    GridSpec,
    PotentialSpec,
    h3_margin,
    kinetic_on_grid,
    potential_on_grid,
)

__all__ = [
    "ConsistencyError",
    "DimensionCapError",
    "FockTruncation",
    "GroundPair",
    "HypothesisViolation",
    "Mode",
    "NelsonInstance",
    "TheoremReport",
    "TrialStateReport",
    "assemble",
    "check_h2",
    "check_h3",
    "ground_pair",
    "symmetrize_trial",
    "theorem_verify",
    "translation_unitary",
    "trial_state_verify",
]

_MAX_PARTICLE_POINTS = 4096


class DimensionCapError(ValueError):
    """Requested truncated state space exceeds the configured dimension cap."""


class ConsistencyError(ValueError):
    """One-body input was computed on a different lattice operator."""


class HypothesisViolation(RuntimeError):
    """A structural hypothesis check failed; certification is refused."""

    def __init__(self, kind: str, value: float, tolerance: float):
        super().__init__(f"hypothesis check {kind} failed: {value} > {tolerance}")
        self.kind = kind
        self.value = value
        self.tolerance = tolerance


@dataclass(frozen=True)
class Mode:
    """One boson mode: lattice momentum, complex coupling, nonnegative frequency."""

    momentum: tuple[float, ...]
    coupling: complex
    frequency: float

    def __post_init__(self):
        mom = self.momentum
        if np.ndim(mom) == 0:
            mom = (float(mom),)
        object.__setattr__(self, "momentum", tuple(float(c) for c in mom))
        object.__setattr__(self, "coupling", complex(self.coupling))
        object.__setattr__(self, "frequency", float(self.frequency))
        if not self.frequency >= 0.0:
            raise ValueError("mode frequency must be >= 0")


@dataclass(frozen=True)
class FockTruncation:
    """Mode selection plus a per-mode occupation cap defining the finite field space."""

    modes: tuple[Mode, ...]
    n_max: int

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        if int(self.n_max) < 1:
            raise ValueError("n_max must be >= 1")
        object.__setattr__(self, "n_max", int(self.n_max))

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def field_dim(self) -> int:
        return (self.n_max + 1) ** self.n_modes

    def off_lattice_modes(self, grid: GridSpec) -> list[int]:
        """Indices of modes whose momentum misses the grid's momentum lattice."""
        bad = []
        for j, mode in enumerate(self.modes):
            if len(mode.momentum) != grid.dim:
                raise ValueError("mode momentum dimension does not match the grid")
            for comp in mode.momentum:
                steps = comp * grid.length / (2.0 * math.pi)
                if abs(steps - round(steps)) > 1e-9:
                    bad.append(j)
                    break
        return bad

    def occupation_table(self) -> np.ndarray:
        """(n_modes, field_dim) occupation numbers in the kron basis order."""
        levels = np.arange(self.n_max + 1)
        if self.n_modes == 0:
            return np.zeros((0, 1), dtype=int)
        mesh = np.meshgrid(*([levels] * self.n_modes), indexing="ij")
        return np.stack([m.ravel() for m in mesh])


@dataclass(frozen=True)
class NelsonInstance:
    """A fully specified finite model: lattice, kinetic shape, modes, coupling polynomial, V."""

    grid: GridSpec
    kinetic_shape: BernsteinFunction
    truncation: FockTruncation
    poly_coeffs: tuple[float, ...]
    potential: PotentialSpec
    dim_cap: int = 200_000

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.poly_coeffs)
        while coeffs and coeffs[-1] == 0.0:
            coeffs = coeffs[:-1]
        object.__setattr__(self, "poly_coeffs", coeffs)
        degree = len(coeffs) - 1
        if degree >= 2:
            if degree % 2 != 0:
                raise ValueError("coupling polynomial of degree >= 2 must have even degree")
            if coeffs[-1] <= 0.0:
                raise ValueError("coupling polynomial must have a positive leading coefficient")
        if self.grid.num_points > _MAX_PARTICLE_POINTS:
            raise DimensionCapError(
                f"particle lattice has {self.grid.num_points} points;"
                f" dense kinetic assembly is capped at {_MAX_PARTICLE_POINTS}"
            )
        if self.dimension > self.dim_cap:
            raise DimensionCapError(
                f"state space dimension {self.dimension} exceeds the cap {self.dim_cap}"
            )

    @property
    def dimension(self) -> int:
        return self.grid.num_points * self.truncation.field_dim

    @property
    def continuum_unbounded(self) -> bool:
        """Linear coupling polynomials are admissible here but unbounded below in continuum."""
        return len(self.poly_coeffs) == 2

    def kinetic_field(self) -> np.ndarray:
        return kinetic_on_grid(BernsteinKinetic(self.kinetic_shape), self.grid)

    def potential_field(self) -> np.ndarray:
        return potential_on_grid(self.potential, self.grid)

    def digest(self) -> str:
        """Checksum of (grid, kinetic samples, V samples); must match the one-body side."""
        return lattice_digest(self.grid, self.kinetic_field(), self.potential_field())


def _particle_kinetic_dense(instance: NelsonInstance) -> np.ndarray:
    """B(p^2) as a dense Hermitian matrix in the position basis.

    Built by applying the pseudospectral kernel to every basis vector, which
    keeps it bit-consistent with the one-body operator.
    """
    grid = instance.grid
    n = grid.num_points
    k_field = instance.kinetic_field()
    axes = tuple(range(1, grid.dim + 1))
    eye = np.eye(n).reshape((n,) + grid.shape)
    spec = np.fft.fftn(eye, axes=axes, norm="ortho")
    spec *= k_field[None, ...]
    cols = np.fft.ifftn(spec, axes=axes, norm="ortho").reshape(n, n)
    mat = cols.T
    if np.abs(mat.imag).max() > 1e-12:
        raise AssertionError("particle kinetic matrix should be real (K is even)")
    return mat.real


def _mode_annihilators(trunc: FockTruncation) -> list[sp.spmatrix]:
    levels = trunc.n_max + 1
    local = sp.diags(np.sqrt(np.arange(1.0, levels)), 1, format="csr")
    ops = []
    for j in range(trunc.n_modes):
        left = sp.identity(levels**j, format="csr")
        right = sp.identity(levels ** (trunc.n_modes - 1 - j), format="csr")
        ops.append(sp.kron(sp.kron(left, local), right, format="csr"))
    return ops


def assemble(instance: NelsonInstance, *, hermiticity_tol: float = 1e-13):
    """Build the sparse Hermitian pair (H^0, H^V) for the instance.

    phi(x) is assembled as a Hermitian matrix first and the coupling
    polynomial is applied to the matrix, which avoids any normal-ordering
    ambiguity.  Raises on a non-Hermitian assembly beyond `hermiticity_tol`.
    """
    grid = instance.grid
    trunc = instance.truncation
    n_p = grid.num_points
    dim_f = trunc.field_dim

    kinetic = sp.kron(sp.csr_matrix(_particle_kinetic_dense(instance)),
                      sp.identity(dim_f, format="csr"), format="csr")

    occ = trunc.occupation_table()
    freq = np.array([m.frequency for m in trunc.modes])
    hf_diag = freq @ occ if trunc.n_modes else np.zeros(dim_f)
    field_energy = sp.kron(sp.identity(n_p, format="csr"),
                           sp.diags(hf_diag, format="csr"), format="csr")

    x_flat = np.stack([m.ravel() for m in grid.position_mesh()], axis=-1)
    annihilators = _mode_annihilators(trunc)
    dim = n_p * dim_f
    phi = sp.csr_matrix((dim, dim), dtype=complex)
    for mode, a_op in zip(trunc.modes, annihilators):
        wave = mode.coupling * np.exp(-1j * (x_flat @ np.asarray(mode.momentum)))
        raising = sp.kron(sp.diags(wave), a_op.conj().T, format="csr")
        phi = phi + (raising + raising.conj().T) * (1.0 / math.sqrt(2.0))

    coupling = sp.csr_matrix((dim, dim), dtype=complex)
    if instance.poly_coeffs:
        power = sp.identity(dim, format="csr", dtype=complex)
        coupling = instance.poly_coeffs[0] * power
        for c in instance.poly_coeffs[1:]:
            power = power @ phi
            coupling = coupling + c * power

    h0 = (kinetic + field_energy + coupling).tocsr()
    drift = h0 - h0.conj().T
    worst = float(np.abs(drift.data).max()) if drift.nnz else 0.0
    if worst > hermiticity_tol:
        raise AssertionError(f"assembled H^0 deviates from Hermitian by {worst}")
    h0 = (h0 + h0.conj().T) * 0.5

    v_diag = sp.kron(sp.diags(instance.potential_field().ravel()),
                     sp.identity(dim_f, format="csr"), format="csr")
    hv = (h0 + v_diag).tocsr()
    return h0.tocsr(), hv


@dataclass
class GroundPair:
    """Lowest eigenpairs of H^0 and H^V with solver metadata."""

    E0: float
    EV: float
    vec0: np.ndarray
    vecV: np.ndarray
    residual0: float
    residualV: float
    converged: bool
    digest: str


def ground_pair(instance: NelsonInstance, *, tol: float = 1e-10,
                max_matvecs: int = 60000, seed: int = 11, matrices=None) -> GroundPair:
    """Ground energies E^0 and E^V by the deterministic sparse Krylov solver."""
    h0, hv = matrices if matrices is not None else assemble(instance)
    dim = h0.shape[0]
    r0 = lowest_eigenpair(h0.dot, dim, is_complex=True, seed=seed, tol=tol,
                          max_matvecs=max_matvecs)
    rv = lowest_eigenpair(hv.dot, dim, is_complex=True, seed=seed, tol=tol,
                          max_matvecs=max_matvecs)
    v_min = float(instance.potential_field().min())
    if not r0.value <= rv.value + max(0.0, -v_min) + 1e-8:
        raise AssertionError("ground energies violate the coarse shift bound")
    return GroundPair(
        E0=r0.value,
        EV=rv.value,
        vec0=fix_phase(r0.vector),
        vecV=fix_phase(rv.vector),
        residual0=r0.residual,
        residualV=rv.residual,
        converged=r0.converged and rv.converged,
        digest=instance.digest(),
    )


def translation_unitary(instance: NelsonInstance, axis: int = 0) -> sp.spmatrix:
    """Unitary of translation by one lattice spacing along `axis`.

    Particle part shifts psi(x) -> psi(x + dx); the field part multiplies each
    occupation state by exp(i dx sum_j k_j n_j).  For on-lattice mode momenta
    this commutes with H^0 exactly.
    """
    grid = instance.grid
    n_p = grid.num_points
    idx = np.arange(n_p).reshape(grid.shape)
    src = np.roll(idx, -1, axis=axis).ravel()
    shift = sp.csr_matrix((np.ones(n_p), (np.arange(n_p), src)), shape=(n_p, n_p))
    occ = instance.truncation.occupation_table()
    k_axis = np.array([m.momentum[axis] for m in instance.truncation.modes])
    pf = k_axis @ occ if instance.truncation.n_modes else np.zeros(occ.shape[1])
    phases = np.exp(1j * grid.spacing * pf)
    return sp.kron(shift, sp.diags(phases), format="csr")


def check_h2(instance: NelsonInstance, h0: sp.spmatrix) -> float:
    """Max-norm of T H^0 T* - H^0 over single-spacing translations (one per axis)."""
    worst = 0.0
    for axis in range(instance.grid.dim):
        t = translation_unitary(instance, axis)
        diff = t @ h0 @ t.conj().T - h0
        if diff.nnz:
            worst = max(worst, float(np.abs(diff.data).max()))
    return worst


def check_h3(instance: NelsonInstance, *, tolerance: float = 1e-12) -> InequalityReport:
    """Dispersion midpoint bound for K(k) = B(k^2) on the instance lattice."""
    return h3_margin(BernsteinKinetic(instance.kinetic_shape), instance.grid,
                     tolerance=tolerance)


def symmetrize_trial(psi: np.ndarray) -> np.ndarray:
    """Real, even-symmetrized, normalized copy of a lattice function."""
    f = np.asarray(psi)
    if np.iscomplexobj(f):
        f = f.real
    f = 0.5 * (f + even_reflect(f))
    norm = np.linalg.norm(f)
    if norm == 0.0:
        raise ValueError("trial function vanishes after symmetrization")
    return f / norm


@dataclass
class TrialStateReport:
    """Margins of the three transported-trial-state claims.

    The trial Phi_y = f(x) T^y F is summed over all lattice translations y
    with unit counting weight; f and F are unit vectors in the plain lattice
    l2 norm, which makes the total mass exactly one.
    """

    norm_total: float
    norm_error: float
    kinetic_lhs: float
    kinetic_rhs: float
    kinetic_margin: float
    potential_lhs: float
    potential_rhs: float
    potential_error: float
    variational_bound: float


def trial_state_verify(instance: NelsonInstance, ground_vector: np.ndarray,
                       trial: np.ndarray, *, h0: sp.spmatrix | None = None) -> TrialStateReport:
    """Check the three claims behind the energy comparison, reporting each margin.

    (i)   sum_y ||Phi_y||^2 = 1,
    (ii)  sum_y <Phi_y, H^0 Phi_y> <= <F, H^0 F> + <f, K(p) f>  with K(k)=B(k^2),
    (iii) sum_y <Phi_y, (V x I) Phi_y> = <f, V f>.

    `trial` must be real, even-symmetric and normalized; `ground_vector` any
    normalized state (the claims hold for every F, not only the minimizer).
    """
    grid = instance.grid
    trunc = instance.truncation
    n_p = grid.num_points
    dim_f = trunc.field_dim

    f = np.asarray(trial)
    if np.iscomplexobj(f):
        if float(np.abs(f.imag).max()) > 1e-13:
            raise ValueError("trial function must be real")
        f = f.real
    f = f.reshape(grid.shape)
    scale = float(np.abs(f).max()) or 1.0
    if float(np.abs(f - even_reflect(f)).max()) > 1e-12 * scale:
        raise ValueError("trial function must be even-symmetric on the lattice")
    if abs(np.linalg.norm(f) - 1.0) > 1e-12:
        raise ValueError("trial function must be normalized")

    big_f = np.asarray(ground_vector, dtype=complex).reshape((n_p, dim_f))
    if abs(np.linalg.norm(big_f) - 1.0) > 1e-10:
        raise ValueError("ground vector must be normalized")
    if h0 is None:
        h0, _ = assemble(instance)

    occ = trunc.occupation_table()
    pf_axes = []
    for axis in range(grid.dim):
        k_axis = np.array([m.momentum[axis] for m in trunc.modes])
        pf_axes.append(k_axis @ occ if trunc.n_modes else np.zeros(dim_f))

    f_mesh = f
    f_flat = f.ravel()
    v_flat = instance.potential_field().ravel()
    big_f_mesh = big_f.reshape(grid.shape + (dim_f,))

    norm_total = 0.0
    kinetic_lhs = 0.0
    potential_lhs = 0.0
    for y in np.ndindex(grid.shape):
        shifted = big_f_mesh
        for axis, steps in enumerate(y):
            if steps:
                shifted = np.roll(shifted, -steps, axis=axis)
        phase = np.exp(1j * grid.spacing * sum(s * pf for s, pf in zip(y, pf_axes)))
        phi_y = (f_mesh[..., None] * shifted * phase).reshape(n_p, dim_f)
        flat = phi_y.ravel()
        norm_total += float(np.vdot(flat, flat).real)
        kinetic_lhs += float(np.vdot(flat, h0 @ flat).real)
        potential_lhs += float(v_flat @ (np.abs(phi_y) ** 2).sum(axis=1))

    k_field = instance.kinetic_field()
    zero_v = np.zeros(grid.shape)
    trial_kinetic = float(np.sum(f_mesh * apply_h(k_field, zero_v, grid, f_mesh)))
    base_energy = float(np.vdot(big_f.ravel(), h0 @ big_f.ravel()).real)
    kinetic_rhs = base_energy + trial_kinetic
    potential_rhs = float(v_flat @ (f_flat**2))

    return TrialStateReport(
        norm_total=norm_total,
        norm_error=abs(norm_total - 1.0),
        kinetic_lhs=kinetic_lhs,
        kinetic_rhs=kinetic_rhs,
        kinetic_margin=kinetic_lhs - kinetic_rhs,
        potential_lhs=potential_lhs,
        potential_rhs=potential_rhs,
        potential_error=abs(potential_lhs - potential_rhs),
        variational_bound=kinetic_lhs + potential_lhs,
    )


@dataclass
class TheoremReport:
    """Energies and margins of one end-to-end verification run."""

    E0: float
    EV: float
    e0: float
    slack: float
    h2_norm: float
    h3_report: InequalityReport
    trial: TrialStateReport
    digest: str
    continuum_unbounded: bool
    converged: bool


def theorem_verify(instance: NelsonInstance, onebody_result: SolveResult,
                   onebody_vector: np.ndarray, *, tol_h2: float = 1e-12,
                   tol_h3: float = 1e-12, tol: float = 1e-10,
                   max_matvecs: int = 60000, seed: int = 11) -> TheoremReport:
    """Certify E^V <= E^0 + e0 for one instance, refusing on any hypothesis failure.

    `onebody_result` must come from the identical lattice operator (same grid,
    same B(k^2) samples, same V samples); the embedded checksum enforces this,
    since the discrete argument is exact only under that consistency.
    """
    digest = instance.digest()
    if onebody_result.meta.get("digest") != digest:
        raise ConsistencyError(
            "one-body energy was computed on a different lattice operator"
        )
    h0, hv = assemble(instance)
    h2 = check_h2(instance, h0)
    if h2 > tol_h2:
        raise HypothesisViolation("h2", h2, tol_h2)
    h3_report = check_h3(instance, tolerance=tol_h3)
    if not h3_report.passed:
        raise HypothesisViolation("h3", h3_report.max_violation, tol_h3)
    pair = ground_pair(instance, tol=tol, max_matvecs=max_matvecs, seed=seed,
                       matrices=(h0, hv))
    trial = trial_state_verify(instance, pair.vec0, symmetrize_trial(onebody_vector),
                               h0=h0)
    slack = pair.E0 + onebody_result.eigenvalue - pair.EV
    return TheoremReport(
        E0=pair.E0,
        EV=pair.EV,
        e0=onebody_result.eigenvalue,
        slack=slack,
        h2_norm=h2,
        h3_report=h3_report,
        trial=trial,
        digest=digest,
        continuum_unbounded=instance.continuum_unbounded,
        converged=pair.converged and onebody_result.converged,
    )
