import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from localdisc import catalog
from localdisc.helstrom import (
    check_helstrom_conditions,
    helstrom_measurement,
    helstrom_two_state_bound,
    subset_success_probability,
    success_probability,
)
from localdisc.linalg import DimensionError
from localdisc.optimizer import breidbart_povm, random_povm
from localdisc.quantum import DensityOperator, Ensemble, Ket, Povm

BREIDBART = 0.5 * (1 + 1 / math.sqrt(2))


def _random_state(rng, dim, rank):
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.floats(0.05, 0.95))
def test_two_state_bound_matches_pure_state_formula(seed, dim, p0):
    # Oracle: 1/2 (1 + sqrt(1 - 4 p0 p1 |<a|b>|^2)) for pure states
    rng = np.random.default_rng(seed)
    a = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    b = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    a, b = Ket(a / np.linalg.norm(a)), Ket(b / np.linalg.norm(b))
    expected = 0.5 * (1 + math.sqrt(max(0.0, 1 - 4 * p0 * (1 - p0) * abs(a.inner(b)) ** 2)))
    assert abs(helstrom_two_state_bound(a, b, p0) - expected) <= 1e-12


@given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.95))
def test_helstrom_measurement_attains_bound_and_certifies(seed, p0):
    rng = np.random.default_rng(seed)
    r0, r1 = _random_state(rng, 3, 2), _random_state(rng, 3, 3)
    ens = Ensemble((3,), (DensityOperator(r0), DensityOperator(r1)), np.array([p0, 1 - p0]))
    povm = helstrom_measurement(r0, r1, p0)
    assert abs(success_probability(ens, povm) - helstrom_two_state_bound(r0, r1, p0)) <= 1e-12
    assert check_helstrom_conditions(ens, povm).passed


def test_random_povms_never_beat_certified_optimum(rng):
    ens = catalog.sigma_ensemble()
    from localdisc.optimizer import solve_symmetric_gamma

    best = success_probability(ens, solve_symmetric_gamma().povm)
    for _ in range(1000):
        assert success_probability(ens, random_povm(8, 3, rng)) <= best + 1e-12


def test_breidbart_certified_on_pair_problem():
    ens = catalog.gv_bob_ensemble()
    rep = check_helstrom_conditions(ens, breidbart_povm())
    assert rep.passed
    assert abs(rep.success - BREIDBART) <= 1e-12


def test_suboptimal_povm_fails_conditions():
    ens = catalog.gv_bob_ensemble()
    split = Povm((np.eye(2) / 2, np.eye(2) / 2))
    rep = check_helstrom_conditions(ens, split)
    assert not rep.passed
    assert min(rep.min_eigenvalues) < -1e-3


def test_report_serializes():
    d = check_helstrom_conditions(catalog.gv_bob_ensemble(), breidbart_povm()).to_dict()
    assert d["pass"] is True and len(d["min_eigenvalues"]) == 2


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        success_probability(catalog.gv_bob_ensemble(), Povm((np.eye(3),)))
    with pytest.raises((DimensionError, ValueError)):
        subset_success_probability(catalog.sigma_operators()[:4], random_povm(8, 3, 0))


def test_subset_formula_direct_sum(rng):
    # Oracle: (8/3)(1/8) sum_k Tr(sigma_k pi_k)
    sig = catalog.sigma_operators()
    povm = random_povm(8, 3, rng)
    expected = (8 / 3) * sum(np.trace(s @ e).real for s, e in zip(sig, povm.effects)) / 8
    assert abs(subset_success_probability(sig, povm) - expected) <= 1e-14
