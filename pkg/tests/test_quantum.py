import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from localdisc.linalg import DimensionError
from localdisc.quantum import (
    DensityOperator,
    Ensemble,
    Ket,
    Povm,
    born_probability,
    outcome_distribution,
    validate_povm,
)


def test_ket_renormalizes_small_drift_only():
    k = Ket(np.array([1.0 + 5e-7, 0.0]))
    assert np.isclose(np.linalg.norm(k.amps), 1.0, atol=1e-15)
    with pytest.raises(ValueError, match="normalization"):
        Ket(np.array([1.0, 1.0]))


def test_superpose_and_tensor():
    p = Ket.superpose(0, 1, 2)
    m = Ket.superpose(0, 1, 2, -1)
    assert abs(p.inner(m)) < 1e-15
    t = Ket.basis(1, 2).tensor(p)
    assert t.dim == 4
    assert np.allclose(t.amps, [0, 0, 2**-0.5, 2**-0.5])


def test_density_operator_validation():
    with pytest.raises(ValueError, match="trace"):
        DensityOperator(np.eye(2))
    with pytest.raises(ValueError, match="PSD"):
        DensityOperator(np.diag([1.5, -0.5]))
    mix = DensityOperator.mixture([Ket.basis(0, 2), Ket.basis(1, 2)])
    assert np.allclose(mix.matrix, np.eye(2) / 2)


def test_ensemble_validation():
    k = [Ket.basis(0, 2), Ket.basis(1, 2)]
    with pytest.raises(ValueError):
        Ensemble((2,), tuple(k), np.array([0.7, 0.7]))
    with pytest.raises(ValueError):
        Ensemble((2,), tuple(k), np.array([1.2, -0.2]))
    with pytest.raises((ValueError, DimensionError)):
        Ensemble((3,), tuple(k), np.array([0.5, 0.5]))
    e = Ensemble.uniform((2,), k, ("a", "b"))
    assert e.index("b") == 1


@given(st.integers(0, 2**32 - 1), st.integers(2, 9), st.integers(2, 6))
def test_born_distribution_is_normalized(seed, dim, n):
    rng = np.random.default_rng(seed)
    from localdisc.optimizer import random_povm

    povm = random_povm(n, dim, rng)
    assert validate_povm(povm).passed
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    rho /= np.trace(rho)
    dist = outcome_distribution(rho, povm)
    assert np.all(dist >= 0) and np.isclose(dist.sum(), 1.0, atol=1e-12)
    # Oracle: explicit trace of the product
    assert np.allclose(dist, [np.trace(rho @ e).real for e in povm.effects], atol=1e-13)


def test_born_probability_clamped():
    assert born_probability(np.diag([1.0, 0.0]), np.diag([1.0 + 1e-16, 0.0])) <= 1.0


def test_povm_validation_reports():
    bad = Povm((np.diag([1.0, 0.0]), np.diag([0.0, 0.9])))
    rep = validate_povm(bad)
    assert not rep.passed and np.isclose(rep.max_completeness_residual, 0.1)
    neg = Povm((np.diag([1.2, 0.5]), np.diag([-0.2, 0.5])))
    rep = validate_povm(neg)
    assert not rep.passed and rep.min_effect_eigenvalue < 0
    with pytest.raises(ValueError):
        neg.checked()
    basis = Povm.from_basis([Ket.basis(0, 2), Ket.basis(1, 2)])
    assert validate_povm(basis).passed
