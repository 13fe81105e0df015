"""Constructors for the product-state ensembles and the objects derived from them.

Product states are kept together with their local factors so that subset
families and protocols can be built from the single-party kets. Labels follow
the two-index naming ``psi_ij``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .linalg import (
    CERTIFY_TOL,
    CONSTRUCTION_TOL,
    ComplexMatrix,
    DimensionError,
    partial_trace,
)
from .quantum import DensityOperator, Ensemble, Ket

PI8 = np.pi / 8


def ket(i: int, dim: int) -> Ket:
    return Ket.basis(i, dim)


def plus(i: int, j: int, dim: int) -> Ket:
    return Ket.superpose(i, j, dim, +1)


def minus(i: int, j: int, dim: int) -> Ket:
    return Ket.superpose(i, j, dim, -1)


@dataclass(frozen=True, eq=False)
class ProductBasis:
    """Labelled product states with their Alice and Bob factors."""

    name: str
    dims: tuple[int, int]
    factors: Mapping[str, tuple[Ket, Ket]]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.factors)

    def alice(self, label: str) -> Ket:
        return self.factors[label][0]

    def bob(self, label: str) -> Ket:
        return self.factors[label][1]

    def side(self, label: str, party: str) -> Ket:
        return self.factors[label][0 if party == "A" else 1]

    def ket(self, label: str) -> Ket:
        a, b = self.factors[label]
        return a.tensor(b)

    def ensemble(self) -> Ensemble:
        labels = self.labels
        return Ensemble.uniform(self.dims, [self.ket(l) for l in labels], labels, self.name)


def gram(kets: Sequence[Ket]) -> ComplexMatrix:
    m = np.array([k.amps for k in kets])
    return m.conj() @ m.T


# --- two-qubit set -----------------------------------------------------------


def gv_basis() -> ProductBasis:
    factors = {
        "psi_00": (ket(0, 2), ket(0, 2)),
        "psi_01": (ket(0, 2), ket(1, 2)),
        "psi_10": (ket(1, 2), plus(0, 1, 2)),
        "psi_11": (ket(1, 2), minus(0, 1, 2)),
    }
    return ProductBasis("gv", (2, 2), factors)


def gv_ensemble() -> Ensemble:
    return gv_basis().ensemble()


def breidbart_basis() -> tuple[Ket, Ket]:
    """The qubit basis bisecting the z and x bases."""
    c, s = np.cos(PI8), np.sin(PI8)
    return Ket([c, s]), Ket([s, -c])


def antibreidbart_basis() -> tuple[Ket, Ket]:
    """Eigenbasis of ``(sigma_z - sigma_x)/sqrt(2)``; bisects ``|0>`` and ``|0-1>``."""
    c, s = np.cos(PI8), np.sin(PI8)
    return Ket([c, -s]), Ket([s, c])


@dataclass(frozen=True)
class SubsetFamily:
    name: str
    basis: str
    subsets: Mapping[str, tuple[str, ...]]
    # Party on which each subset's members are pairwise orthogonal; None if not advertised.
    side: str | None = None

    def check(self, product: ProductBasis, tol: float = CONSTRUCTION_TOL) -> None:
        for key, members in self.subsets.items():
            for label in members:
                if label not in product.factors:
                    raise KeyError(f"subset {key} references unknown state {label}")
            if self.side is None:
                continue
            g = gram([product.side(l, self.side) for l in members])
            err = float(np.max(np.abs(g - np.eye(len(members)))))
            if err > tol:
                raise ValueError(f"subset {key} is not orthogonal on side {self.side} (error {err:.2e})")


def gv_subsets() -> SubsetFamily:
    """The pairs whose members differ on Alice's side."""
    return SubsetFamily(
        "gv-alice-pairs",
        "gv",
        {
            "S_00": ("psi_00", "psi_10"),
            "S_01": ("psi_00", "psi_11"),
            "S_10": ("psi_01", "psi_10"),
            "S_11": ("psi_01", "psi_11"),
        },
        side="A",
    )


def gv_bob_ensemble() -> Ensemble:
    """Bob's binary problem when only Bob may signal: pair S_00 against S_11."""
    zero, one = ket(0, 2), ket(1, 2)
    tau0 = DensityOperator.mixture([zero, plus(0, 1, 2)])
    tau1 = DensityOperator.mixture([one, minus(0, 1, 2)])
    return Ensemble((2,), (tau0, tau1), np.array([0.5, 0.5]), ("S_00", "S_11"), "gv-bob-subsets")


# --- 2x4 set ------------------------------------------------------------------


def twofour_basis() -> ProductBasis:
    factors = {
        "psi_00": (ket(0, 2), ket(0, 4)),
        "psi_01": (ket(0, 2), ket(1, 4)),
        "psi_10": (ket(1, 2), plus(0, 1, 4)),
        "psi_11": (ket(1, 2), minus(0, 1, 4)),
        "psi_02": (plus(0, 1, 2), ket(2, 4)),
        "psi_03": (plus(0, 1, 2), ket(3, 4)),
        "psi_12": (minus(0, 1, 2), plus(2, 3, 4)),
        "psi_13": (minus(0, 1, 2), minus(2, 3, 4)),
    }
    return ProductBasis("twofour", (2, 4), factors)


def twofour_ensemble() -> Ensemble:
    return twofour_basis().ensemble()


def twofour_subsets() -> SubsetFamily:
    """The two halves Bob separates by projecting onto span{0,1} or span{2,3}."""
    return SubsetFamily(
        "twofour-bob-subspaces",
        "twofour",
        {
            "S_0": ("psi_00", "psi_01", "psi_10", "psi_11"),
            "S_1": ("psi_02", "psi_03", "psi_12", "psi_13"),
        },
    )


def twofour_alice_ensemble() -> Ensemble:
    """Alice's binary problem when only Alice may signal: {|0>,|0+1>} against {|1>,|0-1>}."""
    a0 = DensityOperator.mixture([ket(0, 2), plus(0, 1, 2)])
    a1 = DensityOperator.mixture([ket(1, 2), minus(0, 1, 2)])
    return Ensemble((2,), (a0, a1), np.array([0.5, 0.5]), ("z0_or_x0", "z1_or_x1"), "twofour-alice-bases")


def twofour_bob_upper_ensemble() -> Ensemble:
    """Bob's binary problem inside the {|2>,|3>} half, restricted to that qubit.

    Pairs {psi_02, psi_12} against {psi_03, psi_13}; Alice's factors |0+1>
    and |0-1> then separate the members of each pair.
    """
    two, three = ket(0, 2), ket(1, 2)
    b0 = DensityOperator.mixture([two, plus(0, 1, 2)])
    b1 = DensityOperator.mixture([three, minus(0, 1, 2)])
    return Ensemble((2,), (b0, b1), np.array([0.5, 0.5]), ("psi_02|psi_12", "psi_03|psi_13"), "twofour-bob-upper")


# --- domino states ----------------------------------------------------------------


def domino_basis() -> ProductBasis:
    factors = {
        "psi_00": (ket(0, 3), minus(0, 1, 3)),
        "psi_01": (ket(0, 3), plus(0, 1, 3)),
        "psi_02": (minus(0, 1, 3), ket(2, 3)),
        "psi_10": (plus(1, 2, 3), ket(0, 3)),
        "psi_11": (ket(1, 3), ket(1, 3)),
        "psi_12": (plus(0, 1, 3), ket(2, 3)),
        "psi_20": (minus(1, 2, 3), ket(0, 3)),
        "psi_21": (ket(2, 3), minus(1, 2, 3)),
        "psi_22": (ket(2, 3), plus(1, 2, 3)),
    }
    return ProductBasis("domino", (3, 3), factors)


def domino_ensemble() -> Ensemble:
    return domino_basis().ensemble()


def domino_subsets() -> SubsetFamily:
    """The eight triples that Bob alone can tell apart."""
    return SubsetFamily(
        "domino-bob-triples",
        "domino",
        {
            "S_0": ("psi_00", "psi_01", "psi_02"),
            "S_1": ("psi_00", "psi_01", "psi_12"),
            "S_2": ("psi_10", "psi_21", "psi_22"),
            "S_3": ("psi_20", "psi_21", "psi_22"),
            "S_4": ("psi_10", "psi_11", "psi_02"),
            "S_5": ("psi_10", "psi_11", "psi_12"),
            "S_6": ("psi_20", "psi_11", "psi_02"),
            "S_7": ("psi_20", "psi_11", "psi_12"),
        },
        side="B",
    )


# Guess function g (Bob outcome b -> row index) identified by each triple S_k.
# Recomputed and compared by ``subset_guess_functions`` in the test suite.
DOMINO_SUBSET_GUESS: dict[str, tuple[int, int, int]] = {
    "S_0": (0, 0, 0),
    "S_1": (0, 0, 1),
    "S_2": (1, 2, 2),
    "S_3": (2, 2, 2),
    "S_4": (1, 1, 0),
    "S_5": (1, 1, 1),
    "S_6": (2, 1, 0),
    "S_7": (2, 1, 1),
}


def row_of(label: str) -> int:
    return int(label.split("_")[1][0])


def subset_guess_functions(
    family: SubsetFamily | None = None, product: ProductBasis | None = None, tol: float = CONSTRUCTION_TOL
) -> dict[str, tuple[int, ...]]:
    """For each subset, map Bob's computational outcome ``b`` to the row of the members overlapping ``|b>``."""
    family = family or domino_subsets()
    product = product or domino_basis()
    d_b = product.dims[1]
    out: dict[str, tuple[int, ...]] = {}
    for key, members in family.subsets.items():
        g = []
        for b in range(d_b):
            rows = {row_of(l) for l in members if abs(product.bob(l).amps[b]) > tol}
            if len(rows) != 1:
                raise ValueError(f"subset {key}: outcome {b} overlaps members from rows {sorted(rows)}")
            g.append(rows.pop())
        out[key] = tuple(g)
    return out


def subset_bob_basis(key: str, family: SubsetFamily | None = None, product: ProductBasis | None = None) -> list[tuple[str, Ket]]:
    family = family or domino_subsets()
    product = product or domino_basis()
    return [(l, product.bob(l)) for l in family.subsets[key]]


def domino_row_mixtures() -> Ensemble:
    """Equal mixtures over each row ``j`` of the domino states, equiprobable."""
    product = domino_basis()
    rows = []
    for j in range(3):
        rows.append(DensityOperator.mixture([product.ket(f"psi_{j}{k}") for k in range(3)]))
    return Ensemble.uniform((3, 3), rows, ("rho_0", "rho_1", "rho_2"), "domino-rows")


def symmetry_unitaries() -> tuple[ComplexMatrix, ComplexMatrix]:
    """``U`` flips the sign of ``|0>``; ``V`` swaps ``|0>`` and ``|2>``."""
    u = np.diag([-1.0, 1.0, 1.0]).astype(np.complex128)
    v = np.array([[0, 0, 1], [0, 1, 0], [1, 0, 0]], dtype=np.complex128)
    return u, v


def sigma_operators() -> list[ComplexMatrix]:
    """Alice's reduced operators for the eight triples, via the partial trace."""
    product = domino_basis()
    out = []
    for members in domino_subsets().subsets.values():
        mix = sum(product.ket(l).matrix for l in members) / 3.0
        out.append(partial_trace(mix, product.dims, "A"))
    return out


def sigma_closed_forms() -> list[ComplexMatrix]:
    """The same eight operators from two seeds and conjugation by ``U`` and ``V``."""
    u, v = symmetry_unitaries()
    m01 = minus(0, 1, 3).matrix
    s0 = (2 / 3) * ket(0, 3).matrix + (1 / 3) * m01
    s4 = (m01 + ket(1, 3).matrix + plus(1, 2, 3).matrix) / 3

    def conj(w: ComplexMatrix, m: ComplexMatrix) -> ComplexMatrix:
        return w @ m @ w.conj().T

    return [
        s0,
        conj(u, s0),
        conj(v @ u, s0),
        conj(v, s0),
        s4,
        conj(u, s4),
        conj(u @ v, s4),
        conj(v, s4),
    ]


def sigma_ensemble() -> Ensemble:
    """The eight operators as an equiprobable ensemble on Alice's qutrit."""
    states = [DensityOperator(s) for s in sigma_operators()]
    return Ensemble.uniform((3,), states, tuple(domino_subsets().subsets), "domino-sigma")


def match_permutation(ops: Sequence[ComplexMatrix], targets: Sequence[ComplexMatrix], tol: float) -> list[int] | None:
    """Index ``perm`` with ``ops[i] ~ targets[perm[i]]``, or None if the sets differ."""
    perm = []
    used: set[int] = set()
    for op in ops:
        hit = None
        for j, t in enumerate(targets):
            if j not in used and np.max(np.abs(op - t)) <= tol:
                hit = j
                break
        if hit is None:
            return None
        used.add(hit)
        perm.append(hit)
    return perm


# --- effective operators for guess functions ----------------------------------------


@dataclass(frozen=True, eq=False)
class GuessOperator:
    guess: tuple[int, ...]
    operator: ComplexMatrix


def effective_guess_operators(
    ensemble: Ensemble,
    classical_party: str,
    n_rows: int | None = None,
    class_of: Callable[[int, int], str | int] | None = None,
    basis: ComplexMatrix | None = None,
    tol: float = CERTIFY_TOL,
) -> list[GuessOperator]:
    """Effective operators on the quantum party for every guess function.

    The classical party measures in ``basis`` (columns; default
    computational) and reports outcome ``b``. A guess function ``g`` picks
    row ``g(b)``; ``class_of(b, g(b))`` names the ensemble state then
    guessed (default: the row index itself). The returned operator is
    ``A_g = sum_b p_c <b| rho_c |b>`` with ``c = class_of(b, g(b))``.
    Functions are enumerated lexicographically.
    """
    if len(ensemble.dims) != 2:
        raise DimensionError("effective guess operators need a bipartite ensemble")
    d_a, d_b = ensemble.dims
    cl = 0 if classical_party == "A" else 1
    d_cl, d_q = (d_a, d_b) if cl == 0 else (d_b, d_a)
    if basis is None:
        basis = np.eye(d_cl, dtype=np.complex128)
    if n_rows is None:
        n_rows = len(ensemble)
    if class_of is None:
        class_of = lambda b, r: r  # noqa: E731

    # blocks[c][b][b'] = <b| rho_c |b'> as an operator on the quantum party
    blocks = []
    for rho in ensemble.matrices():
        t = rho.reshape(d_a, d_b, d_a, d_b)
        if cl == 0:
            t = np.einsum("xi,xjyk,yl->ijlk", basis.conj(), t, basis)
        else:
            t = np.einsum("xi,jxky,yl->ijlk", basis.conj(), t, basis)
        blocks.append(t)
    for c, t in enumerate(blocks):
        for b1 in range(d_cl):
            for b2 in range(d_cl):
                if b1 != b2 and np.max(np.abs(t[b1, :, b2, :])) > tol:
                    raise ValueError(
                        f"state {ensemble.labels[c]} is not diagonal in the classical basis of party {classical_party}"
                    )

    def resolve(b: int, r: int) -> int:
        c = class_of(b, r)
        return ensemble.index(c) if isinstance(c, str) else int(c)

    out = []
    for g in itertools.product(range(n_rows), repeat=d_cl):
        op = np.zeros((d_q, d_q), dtype=np.complex128)
        for b, r in enumerate(g):
            c = resolve(b, r)
            op += ensemble.priors[c] * blocks[c][b, :, b, :]
        out.append(GuessOperator(tuple(g), op))
    return out


def domino_guess_operators() -> list[GuessOperator]:
    """The 27 operators on Alice's side for the row-mixture problem, Bob classical."""
    return effective_guess_operators(domino_row_mixtures(), "B", n_rows=3)


def gv_guess_operators() -> list[GuessOperator]:
    """The 4 operators on Bob's side for the two-qubit set, Alice classical in z."""
    return effective_guess_operators(gv_ensemble(), "A", n_rows=2, class_of=lambda a, r: f"psi_{a}{r}")


def guess_operator_ensemble(ops: Sequence[GuessOperator], dims: tuple[int, ...], name: str) -> tuple[Ensemble, float]:
    """Normalize guess operators into an ensemble plus the objective scale.

    Returns ``(ensemble, scale)`` with ``scale * success(ensemble) = sum_g Tr(A_g pi_g)``.
    """
    traces = np.array([float(np.trace(o.operator).real) for o in ops])
    keep = traces > CONSTRUCTION_TOL
    scale = float(traces[keep].sum())
    states = [DensityOperator.normalized(o.operator) for o, k in zip(ops, keep) if k]
    labels = ["g=" + "".join(map(str, o.guess)) for o, k in zip(ops, keep) if k]
    return Ensemble(dims, tuple(states), traces[keep] / scale, tuple(labels), name), scale


@dataclass(frozen=True, eq=False)
class NamedProblem:
    ensemble: Ensemble
    # Reported objective = scale * ensemble success probability.
    scale: float
    description: str


def named_problems() -> dict[str, NamedProblem]:
    domino_alice, domino_scale = guess_operator_ensemble(domino_guess_operators(), (3,), "domino-rows-alice")
    return {
        "gv": NamedProblem(gv_ensemble(), 1.0, "two-qubit product basis"),
        "twofour": NamedProblem(twofour_ensemble(), 1.0, "2x4 product basis"),
        "domino": NamedProblem(domino_ensemble(), 1.0, "3x3 domino basis"),
        "domino-rows": NamedProblem(domino_row_mixtures(), 1.0, "row mixtures of the domino basis"),
        "gv-bob-subsets": NamedProblem(gv_bob_ensemble(), 1.0, "Bob's pair-assignment problem, two-qubit set"),
        "twofour-alice-bases": NamedProblem(twofour_alice_ensemble(), 1.0, "Alice's basis problem, 2x4 set, A->B"),
        "twofour-bob-upper": NamedProblem(twofour_bob_upper_ensemble(), 1.0, "Bob's pair problem in span{2,3}, 2x4 set, B->A"),
        "domino-sigma": NamedProblem(sigma_ensemble(), 8.0 / 3.0, "eight triple operators on Alice's side"),
        "domino-rows-alice": NamedProblem(domino_alice, domino_scale, "27 guess-function operators on Alice's side"),
    }


CATALOG_NAMES = ("gv", "twofour", "domino", "domino-rows")
