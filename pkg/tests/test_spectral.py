import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dpr0.errors import ArgumentError, ConvergenceError
from dpr0.spectral import frobenius_norm, operator_norm, spectral_radius


def jacobi_eigenvalues(a, sweeps=100):
    """Cyclic Jacobi rotations; test oracle independent of LAPACK."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    for _ in range(sweeps):
        off = math.sqrt(sum(a[i, j] ** 2 for i in range(n) for j in range(n) if i != j))
        if off < 1e-15 * max(1.0, np.abs(a).max()):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p, q] == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2 * a[p, q])
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
    return np.sort(np.diag(a))


def test_fifteen_node_complete_graph():
    assert abs(spectral_radius(np.full((15, 15), 0.25)).value - 3.75) < 1e-10


def test_scaled_identity():
    assert spectral_radius(2.5 * np.eye(7)).value == pytest.approx(2.5, abs=1e-14)


def test_random_symmetric_against_jacobi(rng):
    for _ in range(10):
        a = rng.random((5, 5))
        a = a + a.T
        res = spectral_radius(a)
        assert abs(res.value - jacobi_eigenvalues(a)[-1]) < 1e-9
        assert res.residual <= 1e-10 * max(1.0, np.abs(a).sum(axis=1).max())


def test_symmetric_with_negative_entries(rng):
    a = rng.standard_normal((6, 6))
    a = a + a.T
    ev = jacobi_eigenvalues(a)
    assert abs(spectral_radius(a).value - max(abs(ev[0]), abs(ev[-1]))) < 1e-9


def test_bipartite_symmetric():
    # eigenvalues +1 and -1 tie in modulus; the shift breaks the tie toward +1
    a = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert spectral_radius(a).value == pytest.approx(1.0, abs=1e-12)


def test_directed_periodic_and_nilpotent():
    cyc = np.roll(np.eye(4), 1, axis=1)
    assert spectral_radius(cyc).value == pytest.approx(1.0, abs=1e-12)
    assert spectral_radius(np.array([[0.0, 1.0], [0.0, 0.0]])).value == pytest.approx(0.0, abs=1e-12)


def test_directed_perron_root(rng):
    a = rng.random((6, 6))
    ev = np.linalg.eigvals(a)
    assert abs(spectral_radius(a).value - np.max(np.abs(ev))) < 1e-10


def test_operator_norm_cases(rng):
    assert operator_norm(np.diag([1.0, -3.0, 2.0])).value == pytest.approx(3.0, abs=1e-12)
    assert operator_norm(np.array([[0.0, 1.0], [0.0, 0.0]])).value == pytest.approx(1.0, abs=1e-12)
    a = rng.standard_normal((6, 6))
    top = math.sqrt(jacobi_eigenvalues(a.T @ a)[-1])
    assert abs(operator_norm(a).value - top) < 1e-8


def test_operator_norm_equals_radius_for_psd(rng):
    m = rng.random((5, 5))
    psd = m @ m.T
    assert abs(operator_norm(psd).value - spectral_radius(psd).value) < 1e-8


def test_frobenius(rng):
    assert frobenius_norm(np.zeros((3, 3))) == 0.0
    assert frobenius_norm(np.eye(5)) == pytest.approx(math.sqrt(5), abs=1e-15)
    a = rng.random((3, 3))
    total = 0.0
    for i in range(3):
        for j in range(3):
            total += a[i, j] ** 2
    assert frobenius_norm(a) == math.sqrt(total)


def test_convergence_error_carries_residual():
    a = np.array([[1.0, 0.999999], [0.999999, 1.0]]) + np.diag([0.0, 1e-7])
    with pytest.raises(ConvergenceError) as exc:
        spectral_radius(np.kron(np.eye(2), a) + 1e-9, max_iter=2)
    assert exc.value.residual is not None and exc.value.iterations == 2


def test_bad_input():
    with pytest.raises(ArgumentError):
        spectral_radius(np.ones((2, 3)))
    with pytest.raises(ArgumentError):
        spectral_radius(np.array([[np.nan]]))


@st.composite
def sym_nonneg(draw, n_max=7):
    n = draw(st.integers(1, n_max))
    seed = draw(st.integers(0, 2**32))
    a = np.random.default_rng(seed).random((n, n))
    return a + a.T


@given(sym_nonneg())
def test_norm_chain(a):
    rho = spectral_radius(a).value
    op = operator_norm(a).value
    fro = frobenius_norm(a)
    assert rho <= op + 1e-9
    assert op <= fro + 1e-9


@given(sym_nonneg(), st.sampled_from([0.5, 2.0, 10.0]))
def test_scale_equivariance(a, c):
    assert abs(spectral_radius(c * a).value - c * spectral_radius(a).value) <= 1e-10 * max(1.0, c * np.abs(a).max())


@given(st.integers(0, 2**32))
def test_directed_norm_chain(seed):
    a = np.random.default_rng(seed).random((5, 5))
    assert spectral_radius(a).value <= operator_norm(a).value + 1e-9 <= frobenius_norm(a) + 2e-9
