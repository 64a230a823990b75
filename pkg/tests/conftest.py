import numpy as np
import pytest
from hypothesis import strategies as st

from bindcert.bernstein import BernsteinFunction


@st.composite
def bernstein_functions(draw, max_atoms=8, allow_drift_a=False, max_coeff=10.0):
    """Random Bernstein functions with bounded drift and up to max_atoms atoms."""
    a = draw(st.floats(0.0, max_coeff)) if allow_drift_a else 0.0
    b = draw(st.floats(0.0, max_coeff))
    n = draw(st.integers(0, max_atoms))
    ts = draw(st.lists(st.floats(1e-3, max_coeff), min_size=n, max_size=n))
    ws = draw(st.lists(st.floats(1e-3, max_coeff), min_size=n, max_size=n))
    return BernsteinFunction(a, b, tuple(zip(ts, ws)))


@st.composite
def momentum_vectors(draw, bound=10.0, dims=(1, 2, 3)):
    d = draw(st.sampled_from(dims))
    comps = draw(st.lists(st.floats(-bound, bound), min_size=d, max_size=d))
    return np.array(comps)


def dense_onebody_matrix(kinetic_field, potential_field, grid):
    """Explicit matrix of the lattice operator, assembled column by column.

    Independent dense route used as the eigensolver oracle.
    """
    from bindcert.onebody import apply_h

    n = grid.num_points
    mat = np.zeros((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        mat[:, j] = apply_h(kinetic_field, potential_field, grid, e.reshape(grid.shape)).ravel()
    return mat


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
