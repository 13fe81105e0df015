import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from localdisc import catalog
from localdisc.helstrom import subset_success_probability
from localdisc.linalg import DimensionError, embed, sqrtm_psd
from localdisc.locc import (
    Leaf,
    LoccProtocol,
    Node,
    ProtocolError,
    builtin_ensemble,
    builtin_protocols,
    domino_oneway,
    evaluate_exact,
    leaf_distribution,
    per_state_success,
    sample,
)
from localdisc.optimizer import solve_symmetric_gamma

BREIDBART = 0.5 * (1 + 1 / math.sqrt(2))
EXPECTED = {
    "gv_forward": 1.0,
    "gv_backward_breidbart": BREIDBART,
    "gv_backward_alternate": BREIDBART,
    "twofour_two_way": 1.0,
    "twofour_oneway_AB": BREIDBART,
    "twofour_oneway_BA": BREIDBART,
}
BUILTINS = sorted(builtin_protocols())


def _leaf_operators(protocol):
    # Oracle: each leaf's global effect is K^dagger K for the product of Kraus ops along its path.
    out = []

    def walk(node, k):
        proj = node.is_projective()
        for e, child in zip(node.effects, node.children):
            kk = embed(e if proj else sqrtm_psd(e), protocol.dims, node.party) @ k
            if isinstance(child, Leaf):
                out.append((child.guess, kk.conj().T @ kk))
            else:
                walk(child, kk)

    walk(protocol.root, np.eye(protocol.dims[0] * protocol.dims[1]))
    return out


def _oracle_success(protocol, ensemble):
    ops = _leaf_operators(protocol)
    total = 0.0
    for p, label, rho in zip(ensemble.priors, ensemble.labels, ensemble.matrices()):
        total += p * sum(np.trace(rho @ m).real for g, m in ops if g == label)
    return total


@pytest.mark.parametrize("name", BUILTINS)
def test_exact_matches_global_effect_oracle(name):
    b = builtin_protocols()[name]
    ens = builtin_ensemble(b.ensemble)
    assert abs(evaluate_exact(b.protocol, ens) - _oracle_success(b.protocol, ens)) <= 1e-12
    if name in EXPECTED:
        assert abs(evaluate_exact(b.protocol, ens) - EXPECTED[name]) <= 1e-12


@pytest.mark.parametrize("name", BUILTINS)
def test_leaf_effects_resolve_identity(name):
    p = builtin_protocols()[name].protocol
    total = sum(m for _, m in _leaf_operators(p))
    assert np.allclose(total, np.eye(total.shape[0]), atol=1e-10)


@pytest.mark.parametrize("name", BUILTINS)
def test_leaf_probabilities_sum_to_one(name):
    b = builtin_protocols()[name]
    for rho in builtin_ensemble(b.ensemble).matrices():
        assert abs(sum(br.probability for br in leaf_distribution(b.protocol, rho)) - 1.0) <= 1e-12


def test_message_counts_and_directions():
    protos = {k: v.protocol for k, v in builtin_protocols().items()}
    assert protos["twofour_two_way"].messages() == 2
    for k in BUILTINS:
        if k != "twofour_two_way":
            assert protos[k].messages() == 1
            assert protos[k].direction in ("A->B", "B->A")


def test_degenerate_breidbart_protocols():
    ens = builtin_ensemble("gv")
    protos = builtin_protocols()
    a = evaluate_exact(protos["gv_backward_breidbart"].protocol, ens)
    b = evaluate_exact(protos["gv_backward_alternate"].protocol, ens)
    assert abs(a - b) <= 1e-12


def test_domino_protocol_equals_subset_formula():
    sol = solve_symmetric_gamma()
    value = evaluate_exact(domino_oneway(sol.povm.effects), builtin_ensemble("domino"))
    assert abs(value - subset_success_probability(catalog.sigma_operators(), sol.povm)) <= 1e-10
    assert 1 - value > 0.16


def test_per_state_success_of_perfect_protocol():
    b = builtin_protocols()["twofour_two_way"]
    assert np.allclose(per_state_success(b.protocol, builtin_ensemble("twofour")), 1.0, atol=1e-12)


def test_reused_party_after_general_povm_is_rejected():
    half = np.eye(2) / 2
    z = (np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
    inner = Node("A", z, (Leaf("psi_00"), Leaf("psi_01")))
    with pytest.raises(ProtocolError, match="non-projective"):
        LoccProtocol("bad", (2, 2), Node("A", (half, half), (inner, inner)))
    # Fine if the other party takes over.
    bob = Node("B", z, (Leaf("psi_00"), Leaf("psi_01")))
    LoccProtocol("ok", (2, 2), Node("A", (half, half), (bob, bob)), "A->B")


def test_structural_errors():
    z = (np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
    with pytest.raises(ProtocolError):
        Node("C", z, (Leaf("a"), Leaf("b")))
    with pytest.raises(ProtocolError):
        Node("A", z, (Leaf("a"),))
    with pytest.raises(ProtocolError, match="identity"):
        LoccProtocol("x", (2, 2), Node("A", (z[0], z[0]), (Leaf("a"), Leaf("b"))))
    with pytest.raises(ProtocolError, match="dimension"):
        LoccProtocol("x", (3, 2), Node("A", z, (Leaf("a"), Leaf("b"))))
    back = Node("A", z, (Node("B", z, (Leaf("a"), Leaf("b"))), Leaf("c")))
    with pytest.raises(ProtocolError, match="direction"):
        LoccProtocol("x", (2, 2), back, "B->A")


def test_guess_label_and_dimension_checks():
    p = builtin_protocols()["gv_forward"].protocol
    with pytest.raises(DimensionError):
        evaluate_exact(p, builtin_ensemble("twofour"))
    z = (np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
    q = LoccProtocol("x", (2, 2), Node("A", z, (Leaf("nobody"), Leaf("psi_00"))))
    with pytest.raises(ProtocolError):
        evaluate_exact(q, builtin_ensemble("gv"))


@pytest.mark.parametrize("name", BUILTINS)
def test_monte_carlo_within_four_sigma(name):
    b = builtin_protocols()[name]
    ens = builtin_ensemble(b.ensemble)
    exact = evaluate_exact(b.protocol, ens)
    shots = 10**6
    rep = sample(b.protocol, ens, shots, seed=7)
    sigma = math.sqrt(exact * (1 - exact) / shots)
    if sigma == 0:
        assert rep.aggregate == exact
    else:
        assert abs(rep.aggregate - exact) <= 4 * sigma
    assert sum(rep.counts.values()) == shots


@given(st.integers(0, 2**63 - 1))
def test_same_seed_same_report(seed):
    b = builtin_protocols()["gv_backward_breidbart"]
    ens = builtin_ensemble("gv")
    r1 = sample(b.protocol, ens, 2000, seed)
    r2 = sample(b.protocol, ens, 2000, seed)
    assert r1.to_dict() == r2.to_dict()


def test_different_seeds_differ():
    b = builtin_protocols()["gv_backward_breidbart"]
    ens = builtin_ensemble("gv")
    assert sample(b.protocol, ens, 10000, 1).counts != sample(b.protocol, ens, 10000, 2).counts


def test_sample_stderr_matches_binomial():
    b = builtin_protocols()["gv_backward_breidbart"]
    rep = sample(b.protocol, builtin_ensemble("gv"), 400000, 3)
    binomial = math.sqrt(BREIDBART * (1 - BREIDBART) / 400000)
    assert abs(rep.stderr - binomial) / binomial < 0.05
    assert rep.rng == "numpy.random.PCG64"
