import math

import numpy as np
import pytest
from scipy.optimize import fsolve

from localdisc import catalog
from localdisc.helstrom import check_helstrom_conditions, helstrom_two_state_bound, success_probability
from localdisc.optimizer import (
    GUESS_SCALE,
    iterate_min_error,
    oneway_bound_analyses,
    qubit_projective_grid_search,
    random_povm,
    solve_symmetric_gamma,
    symmetric_gamma,
    verify_guess_function_optimality,
)
from localdisc.quantum import validate_povm

BREIDBART = 0.5 * (1 + 1 / math.sqrt(2))
P_CLOSED = (51 + math.sqrt(1953)) / 864
Q_CLOSED = (63 + math.sqrt(1953)) / 1152


@pytest.fixture(scope="module")
def sol():
    return solve_symmetric_gamma()


def test_gamma_parameters_against_determinant_oracle(sol):
    sig = catalog.sigma_operators()

    def eqs(x):
        g = np.diag([x[0], x[1], x[0]])
        return [np.linalg.det(g - sig[0] / 8).real, np.linalg.det(g - sig[4] / 8).real]

    p, q = fsolve(eqs, [0.11, 0.09], xtol=1e-13)
    assert abs(sol.p - p) <= 1e-10 and abs(sol.q - q) <= 1e-10
    assert abs(sol.p - P_CLOSED) <= 1e-12 and abs(sol.q - Q_CLOSED) <= 1e-12


def test_gamma_commutes_with_symmetries(sol):
    u, v = catalog.symmetry_unitaries()
    for w in (u, v):
        assert np.max(np.abs(w @ sol.gamma - sol.gamma @ w)) <= 1e-14
    assert np.allclose(symmetric_gamma(0.1, 0.2), np.diag([0.1, 0.2, 0.1]))


def test_domino_povm_structure(sol):
    povm = sol.povm
    assert len(povm) == 8
    for e in povm.effects:
        vals = np.linalg.eigvalsh(e)
        assert vals[0] >= -1e-12 and np.sum(vals > 1e-10) == 1
    assert validate_povm(povm, 1e-10).passed
    assert sol.completeness_residual <= 1e-10


def test_domino_weights_by_full_lstsq(sol):
    # Oracle: fit all eight weights freely against identity.
    projs = [np.outer(v, v.conj()) for v in sol.kernel_vectors]
    a = np.column_stack([np.concatenate([p.real.ravel(), p.imag.ravel()]) for p in projs])
    b = np.concatenate([np.eye(3).ravel(), np.zeros(9)])
    w, *_ = np.linalg.lstsq(a, b, rcond=None)
    assert np.linalg.norm(a @ w - b) <= 1e-10
    recon = sum(wi * p for wi, p in zip(w, projs))
    assert np.allclose(recon, np.eye(3), atol=1e-10)


def test_domino_povm_is_covariant(sol):
    u, v = catalog.symmetry_unitaries()
    for w in (u, v):
        moved = [w @ e @ w.conj().T for e in sol.povm.effects]
        assert catalog.match_permutation(moved, list(sol.povm.effects), 1e-10) is not None


def test_domino_success_and_certificate(sol):
    assert abs(sol.success - GUESS_SCALE * (2 * sol.p + sol.q)) <= 1e-15
    assert 0.8355 <= sol.success <= 0.8360
    ens = catalog.sigma_ensemble()
    assert abs(GUESS_SCALE * success_probability(ens, sol.povm) - sol.success) <= 1e-12
    assert check_helstrom_conditions(ens, sol.povm, 1e-9).passed


def test_guess_function_certificate(sol):
    rep = verify_guess_function_optimality(sol.gamma)
    assert rep.psd_failures == 0
    assert len(rep.kernel_hits) == 8
    assert rep.strictly_positive == 19
    assert rep.passed
    # Oracle: direct eigvalsh over 27 operators
    for g in catalog.domino_guess_operators():
        assert np.linalg.eigvalsh(GUESS_SCALE * sol.gamma - g.operator)[0] >= -1e-10


def test_shifted_gamma_breaks_certificate(sol):
    rep = verify_guess_function_optimality(sol.gamma * (1 - 1e-3))
    assert not rep.passed and rep.psd_failures > 0


@pytest.mark.parametrize("seed", range(10))
def test_iterative_matches_symmetric_optimum(sol, seed):
    ens = catalog.sigma_ensemble()
    povm, trace = iterate_min_error(ens, init=random_povm(8, 3, seed), tol=1e-9)
    assert trace.converged
    assert abs(GUESS_SCALE * trace.success - sol.success) <= 1e-5
    assert trace.is_monotone()


def test_iterative_on_domino_rows_alice(sol):
    prob = catalog.named_problems()["domino-rows-alice"]
    _, trace = iterate_min_error(prob.ensemble, tol=1e-9)
    assert trace.converged and trace.report.passed
    assert abs(prob.scale * trace.success - sol.success) <= 1e-5


def test_iterative_binary_matches_two_state_formula():
    ens = catalog.gv_bob_ensemble()
    _, trace = iterate_min_error(ens, tol=1e-10)
    exact = helstrom_two_state_bound(ens.states[0], ens.states[1], 0.5)
    assert abs(exact - BREIDBART) <= 1e-12
    assert abs(trace.success - exact) <= 1e-6


def test_iterative_reports_nonconvergence():
    _, trace = iterate_min_error(catalog.sigma_ensemble(), tol=1e-15, max_iter=20)
    assert not trace.converged


def test_grid_search_never_beats_certified_optimum():
    ens = catalog.gv_bob_ensemble()
    res = qubit_projective_grid_search(ens, resolution=7201)
    assert res.value <= BREIDBART + 1e-9
    assert abs(res.value - BREIDBART) <= 1e-6
    # Both outcome orders reach the same value, at the Breidbart basis or its relabelling.
    values = [v for _, _, v in res.per_guess]
    assert max(values) - min(values) <= 1e-12
    for _, angle, _ in res.per_guess:
        assert min(abs(abs(angle) - math.pi / 8), abs(abs(angle) - 3 * math.pi / 8)) <= math.pi / 7200


def test_grid_search_on_other_binary_problems():
    for name in ("twofour-alice-bases", "twofour-bob-upper"):
        ens = catalog.named_problems()[name].ensemble
        res = qubit_projective_grid_search(ens)
        bound = helstrom_two_state_bound(ens.states[0], ens.states[1], float(ens.priors[0]))
        assert res.value <= bound + 1e-9
        assert abs(res.value - bound) <= 1e-6


def test_oneway_bounds():
    out = oneway_bound_analyses(1e-10)
    for key in ("gv_backward", "twofour_AB", "twofour_BA"):
        b = out[key]
        assert abs(b.helstrom - BREIDBART) <= 1e-12
        assert abs(b.iterative - BREIDBART) <= 1e-6
        assert b.converged
