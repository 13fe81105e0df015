"""Local measurement protocols with classical communication.

A protocol is a finite tree. Each internal node is one party measuring its own
subsystem; the outcome selects the child, so the outcome is the classical
message. Leaves name the guessed state.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence, Union

import numpy as np
import numpy.typing as npt

from . import catalog
from .linalg import (
    CERTIFY_TOL,
    ComplexMatrix,
    DimensionError,
    as_matrix,
    embed,
    eig_hermitian,
    frozen,
    hermitian,
    projector,
    sqrtm_psd,
)
from .quantum import Ensemble, Ket

PRUNE_TOL = 1e-14
RNG_NAME = "numpy.random.PCG64"


class ProtocolError(ValueError):
    """A protocol tree violates its structural invariants."""


@dataclass(frozen=True)
class Leaf:
    guess: str


@dataclass(frozen=True, eq=False)
class Node:
    party: str
    effects: tuple[ComplexMatrix, ...]
    children: tuple[Union["Node", Leaf], ...]

    def __post_init__(self) -> None:
        if self.party not in ("A", "B"):
            raise ProtocolError(f"party must be 'A' or 'B', got {self.party!r}")
        effects = tuple(frozen(hermitian(e)) for e in self.effects)
        if len(effects) != len(self.children):
            raise ProtocolError(f"{len(effects)} effects but {len(self.children)} children")
        object.__setattr__(self, "effects", effects)
        object.__setattr__(self, "children", tuple(self.children))

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    @property
    def terminal(self) -> bool:
        return all(isinstance(c, Leaf) for c in self.children)

    def is_projective(self, tol: float = CERTIFY_TOL) -> bool:
        for i, e in enumerate(self.effects):
            if np.linalg.norm(e @ e - e) > tol:
                return False
            for f in self.effects[i + 1 :]:
                if np.linalg.norm(e @ f) > tol:
                    return False
        return True

    def parties_below(self) -> set[str]:
        out: set[str] = set()
        for c in self.children:
            if isinstance(c, Node):
                out.add(c.party)
                out |= c.parties_below()
        return out


Tree = Union[Node, Leaf]


def paths(tree: Tree, prefix: tuple[str, ...] = ()) -> Iterator[tuple[str, ...]]:
    """Party sequences along every root-to-leaf path."""
    if isinstance(tree, Leaf):
        yield prefix
        return
    for c in tree.children:
        yield from paths(c, prefix + (tree.party,))


def alternations(parties: Sequence[str]) -> int:
    return sum(1 for a, b in zip(parties, parties[1:]) if a != b)


@dataclass(frozen=True, eq=False)
class LoccProtocol:
    """A measurement tree with a declared direction of communication.

    ``direction`` is ``"A->B"`` or ``"B->A"`` for one-way protocols and
    ``"two-way"`` otherwise.
    """

    name: str
    dims: tuple[int, int]
    root: Node
    direction: str = "two-way"
    description: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if self.direction not in ("A->B", "B->A", "two-way"):
            raise ProtocolError(f"unknown direction {self.direction!r}")
        self.validate()

    def messages(self) -> int:
        """Classical messages needed: the most party alternations on any path."""
        return max(alternations(p) for p in paths(self.root))

    def nodes(self) -> Iterator[Node]:
        stack: list[Tree] = [self.root]
        while stack:
            n = stack.pop()
            if isinstance(n, Node):
                yield n
                stack.extend(reversed(n.children))

    def leaves(self) -> Iterator[Leaf]:
        stack: list[Tree] = [self.root]
        while stack:
            n = stack.pop()
            if isinstance(n, Leaf):
                yield n
            else:
                stack.extend(reversed(n.children))

    def validate(self, tol: float = CERTIFY_TOL) -> None:
        for node in self.nodes():
            d = self.dims[0 if node.party == "A" else 1]
            if node.dim != d:
                raise ProtocolError(f"party {node.party} measurement of dimension {node.dim}, expected {d}")
            residual = float(np.linalg.norm(sum(node.effects) - np.eye(d)))
            if residual > tol:
                raise ProtocolError(f"party {node.party} effects miss the identity by {residual:.3e}")
            for e in node.effects:
                if eig_hermitian(e).eigenvalues[0] < -tol:
                    raise ProtocolError(f"party {node.party} has a non-positive effect")
            # A general POVM leaves no canonical post-measurement state, unless
            # the measuring party is never touched again below this node.
            if not node.terminal and not node.is_projective(tol) and node.party in node.parties_below():
                raise ProtocolError(
                    f"non-projective measurement by {node.party} is followed by another {node.party} measurement"
                )
        if self.direction != "two-way":
            first, second = self.direction.split("->")
            for p in paths(self.root):
                if alternations(p) > 1 or (alternations(p) == 1 and p[0] != first):
                    raise ProtocolError(f"path {''.join(p)} breaks the declared direction {self.direction}")
                if alternations(p) == 0 and p and p[0] not in (first, second):
                    raise ProtocolError(f"path {''.join(p)} uses an unknown party")


def _kraus(effect: ComplexMatrix, projective: bool) -> ComplexMatrix:
    return effect if projective else sqrtm_psd(effect)


@dataclass(frozen=True)
class Branch:
    outcomes: tuple[int, ...]
    guess: str
    probability: float


def leaf_distribution(protocol: LoccProtocol, state: npt.ArrayLike, prune: float = PRUNE_TOL) -> list[Branch]:
    """Probability of reaching each leaf from ``state``.

    Internal nodes update the state with ``K rho K^dagger / Tr(...)``, where
    ``K`` is the effect itself for projective measurements and its square
    root otherwise. Branches below probability ``prune`` are dropped.
    """
    rho0 = as_matrix(state)
    d = protocol.dims[0] * protocol.dims[1]
    if rho0.shape != (d, d):
        raise DimensionError(f"state of shape {rho0.shape} for protocol dims {protocol.dims}")
    out: list[Branch] = []

    def walk(node: Node, rho: ComplexMatrix, weight: float, path: tuple[int, ...]) -> None:
        projective = node.is_projective()
        for m, (e, child) in enumerate(zip(node.effects, node.children)):
            full = embed(e, protocol.dims, node.party)
            p = float(np.real(np.sum(rho * full.T)))
            if p < prune:
                continue
            if isinstance(child, Leaf):
                out.append(Branch(path + (m,), child.guess, weight * p))
                continue
            k = embed(_kraus(e, projective), protocol.dims, node.party)
            post = k @ rho @ k.conj().T
            post = post / np.trace(post).real
            walk(child, 0.5 * (post + post.conj().T), weight * p, path + (m,))

    walk(protocol.root, rho0, 1.0, ())
    return out


def _check_labels(protocol: LoccProtocol, ensemble: Ensemble) -> None:
    if tuple(ensemble.dims) != protocol.dims:
        raise DimensionError(f"protocol dims {protocol.dims} and ensemble dims {ensemble.dims}")
    for leaf in protocol.leaves():
        if leaf.guess not in ensemble.labels:
            raise ProtocolError(f"leaf guess {leaf.guess!r} is not a state of ensemble {ensemble.name}")


def per_state_success(protocol: LoccProtocol, ensemble: Ensemble) -> npt.NDArray[np.float64]:
    _check_labels(protocol, ensemble)
    out = []
    for label, rho in zip(ensemble.labels, ensemble.matrices()):
        out.append(sum(b.probability for b in leaf_distribution(protocol, rho) if b.guess == label))
    return np.array(out)


def evaluate_exact(protocol: LoccProtocol, ensemble: Ensemble) -> float:
    """Prior-weighted probability that the protocol names the true state."""
    return min(max(float(np.dot(ensemble.priors, per_state_success(protocol, ensemble))), 0.0), 1.0)


@dataclass(frozen=True)
class SampleReport:
    shots: int
    seed: int
    rng: str
    counts: dict[str, int]
    per_state: dict[str, float]
    aggregate: float
    stderr: float

    def to_dict(self) -> dict:
        return {
            "shots": self.shots,
            "seed": self.seed,
            "rng": self.rng,
            "counts": dict(self.counts),
            "per_state": {k: (None if np.isnan(v) else v) for k, v in self.per_state.items()},
            "aggregate": self.aggregate,
            "stderr": self.stderr,
        }


def sample(protocol: LoccProtocol, ensemble: Ensemble, shots: int, seed: int) -> SampleReport:
    """Monte-Carlo run of the protocol.

    True states are drawn from the priors; at each node the outcomes of all
    shots sharing a true state and a history are drawn together from the
    Born probabilities (a multinomial draw), then the conditional state is
    updated as in :func:`leaf_distribution`. The generator is PCG64 seeded
    with ``seed`` and consumed in a fixed depth-first order.

    ``aggregate`` weights the per-state hit frequencies by the priors; states
    that drew no shots are left out and the remaining priors renormalized.
    """
    if shots < 1:
        raise ValueError("shots must be at least 1")
    _check_labels(protocol, ensemble)
    rng = np.random.Generator(np.random.PCG64(seed))
    draws = rng.multinomial(shots, ensemble.priors)

    def walk(node: Node, rho: ComplexMatrix, count: int, label: str) -> int:
        projective = node.is_projective()
        probs = []
        for e in node.effects:
            full = embed(e, protocol.dims, node.party)
            probs.append(max(float(np.real(np.sum(rho * full.T))), 0.0))
        probs = np.array(probs) / sum(probs)
        split = rng.multinomial(count, probs)
        hits = 0
        for m, (n_m, e, child) in enumerate(zip(split, node.effects, node.children)):
            if n_m == 0:
                continue
            if isinstance(child, Leaf):
                hits += int(n_m) if child.guess == label else 0
                continue
            k = embed(_kraus(e, projective), protocol.dims, node.party)
            post = k @ rho @ k.conj().T
            post = post / np.trace(post).real
            hits += walk(child, 0.5 * (post + post.conj().T), int(n_m), label)
        return hits

    counts, per_state = {}, {}
    for label, rho, n in zip(ensemble.labels, ensemble.matrices(), draws):
        counts[label] = int(n)
        per_state[label] = walk(protocol.root, rho, int(n), label) / n if n else float("nan")
    sampled = [i for i, n in enumerate(draws) if n]
    w = ensemble.priors[sampled] / ensemble.priors[sampled].sum()
    f = np.array([per_state[ensemble.labels[i]] for i in sampled])
    n = draws[sampled]
    aggregate = float(np.dot(w, f))
    stderr = float(np.sqrt(np.sum(w**2 * f * (1 - f) / n)))
    return SampleReport(shots, seed, RNG_NAME, counts, per_state, aggregate, stderr)


# --- built-in protocols -----------------------------------------------------------------


def basis_node(party: str, kets: Sequence[Ket | npt.ArrayLike], children: Sequence[Tree]) -> Node:
    vecs = [k.amps if isinstance(k, Ket) else np.asarray(k, dtype=np.complex128) for k in kets]
    return Node(party, tuple(projector(v) for v in vecs), tuple(children))


def leaves(*labels: str) -> tuple[Leaf, ...]:
    return tuple(Leaf(l) for l in labels)


def embed_qubit(k: Ket, dim: int, offset: int) -> Ket:
    """Place a qubit ket on levels ``offset, offset+1`` of a ``dim``-level system."""
    v = np.zeros(dim, dtype=np.complex128)
    v[offset : offset + 2] = k.amps
    return Ket(v)


def gv_forward() -> LoccProtocol:
    z0, z1 = catalog.ket(0, 2), catalog.ket(1, 2)
    xp, xm = catalog.plus(0, 1, 2), catalog.minus(0, 1, 2)
    root = basis_node(
        "A",
        [z0, z1],
        [
            basis_node("B", [z0, z1], leaves("psi_00", "psi_01")),
            basis_node("B", [xp, xm], leaves("psi_10", "psi_11")),
        ],
    )
    return LoccProtocol("gv_forward", (2, 2), root, "A->B", "Alice in z, Bob in z or x by her result")


def gv_backward_breidbart() -> LoccProtocol:
    z0, z1 = catalog.ket(0, 2), catalog.ket(1, 2)
    root = basis_node(
        "B",
        catalog.breidbart_basis(),
        [
            basis_node("A", [z0, z1], leaves("psi_00", "psi_10")),
            basis_node("A", [z0, z1], leaves("psi_01", "psi_11")),
        ],
    )
    return LoccProtocol("gv_backward_breidbart", (2, 2), root, "B->A", "Bob in the Breidbart basis picks S_00 or S_11")


def gv_backward_alternate() -> LoccProtocol:
    z0, z1 = catalog.ket(0, 2), catalog.ket(1, 2)
    root = basis_node(
        "B",
        catalog.antibreidbart_basis(),
        [
            basis_node("A", [z0, z1], leaves("psi_00", "psi_11")),
            basis_node("A", [z0, z1], leaves("psi_01", "psi_10")),
        ],
    )
    return LoccProtocol("gv_backward_alternate", (2, 2), root, "B->A", "Bob in the (z-x) eigenbasis picks S_01 or S_10")


def twofour_two_way() -> LoccProtocol:
    e = [catalog.ket(i, 4) for i in range(4)]
    p01 = np.diag([1, 1, 0, 0]).astype(np.complex128)
    p23 = np.diag([0, 0, 1, 1]).astype(np.complex128)
    a0, a1 = catalog.ket(0, 2), catalog.ket(1, 2)
    ap, am = catalog.plus(0, 1, 2), catalog.minus(0, 1, 2)
    lower = basis_node(
        "A",
        [a0, a1],
        [
            basis_node("B", e, leaves("psi_00", "psi_01", "psi_02", "psi_03")),
            basis_node("B", [catalog.plus(0, 1, 4), catalog.minus(0, 1, 4), e[2], e[3]], leaves("psi_10", "psi_11", "psi_02", "psi_03")),
        ],
    )
    upper = basis_node(
        "A",
        [ap, am],
        [
            basis_node("B", [e[2], e[3], e[0], e[1]], leaves("psi_02", "psi_03", "psi_00", "psi_01")),
            basis_node("B", [catalog.plus(2, 3, 4), catalog.minus(2, 3, 4), e[0], e[1]], leaves("psi_12", "psi_13", "psi_00", "psi_01")),
        ],
    )
    root = Node("B", (p01, p23), (lower, upper))
    return LoccProtocol("twofour_two_way", (2, 4), root, "two-way", "Bob finds the half, Alice measures, Bob finishes")


def twofour_oneway_AB() -> LoccProtocol:
    e = [catalog.ket(i, 4) for i in range(4)]
    x = [catalog.plus(0, 1, 4), catalog.minus(0, 1, 4), catalog.plus(2, 3, 4), catalog.minus(2, 3, 4)]
    root = basis_node(
        "A",
        catalog.breidbart_basis(),
        [
            basis_node("B", e, leaves("psi_00", "psi_01", "psi_02", "psi_03")),
            basis_node("B", x, leaves("psi_10", "psi_11", "psi_12", "psi_13")),
        ],
    )
    return LoccProtocol("twofour_oneway_AB", (2, 4), root, "A->B", "Alice in the Breidbart basis, Bob by her result")


def twofour_oneway_BA() -> LoccProtocol:
    f0, f1 = catalog.breidbart_basis()
    bob = [embed_qubit(f0, 4, 0), embed_qubit(f1, 4, 0), embed_qubit(f0, 4, 2), embed_qubit(f1, 4, 2)]
    a0, a1 = catalog.ket(0, 2), catalog.ket(1, 2)
    ap, am = catalog.plus(0, 1, 2), catalog.minus(0, 1, 2)
    root = basis_node(
        "B",
        bob,
        [
            basis_node("A", [a0, a1], leaves("psi_00", "psi_10")),
            basis_node("A", [a0, a1], leaves("psi_01", "psi_11")),
            basis_node("A", [ap, am], leaves("psi_02", "psi_12")),
            basis_node("A", [ap, am], leaves("psi_03", "psi_13")),
        ],
    )
    return LoccProtocol("twofour_oneway_BA", (2, 4), root, "B->A", "Bob in a Breidbart basis on each half, Alice by his result")


def domino_oneway(povm_effects: Sequence[ComplexMatrix] | None = None) -> LoccProtocol:
    """Alice assigns a triple S_k with the symmetric optimal POVM; Bob resolves it."""
    if povm_effects is None:
        from .optimizer import solve_symmetric_gamma

        povm_effects = solve_symmetric_gamma().povm.effects
    family = catalog.domino_subsets()
    children = []
    for key in family.subsets:
        members = catalog.subset_bob_basis(key, family)
        children.append(basis_node("B", [k for _, k in members], leaves(*[l for l, _ in members])))
    root = Node("A", tuple(povm_effects), tuple(children))
    return LoccProtocol("domino_oneway", (3, 3), root, "A->B", "Alice's eight-outcome POVM, Bob in the triple's basis")


@dataclass(frozen=True)
class BuiltinProtocol:
    protocol: LoccProtocol
    ensemble: str


@lru_cache(maxsize=1)
def builtin_protocols() -> dict[str, BuiltinProtocol]:
    return {
        "gv_forward": BuiltinProtocol(gv_forward(), "gv"),
        "gv_backward_breidbart": BuiltinProtocol(gv_backward_breidbart(), "gv"),
        "gv_backward_alternate": BuiltinProtocol(gv_backward_alternate(), "gv"),
        "twofour_two_way": BuiltinProtocol(twofour_two_way(), "twofour"),
        "twofour_oneway_AB": BuiltinProtocol(twofour_oneway_AB(), "twofour"),
        "twofour_oneway_BA": BuiltinProtocol(twofour_oneway_BA(), "twofour"),
        "domino_oneway": BuiltinProtocol(domino_oneway(), "domino"),
    }


def builtin_ensemble(name: str) -> Ensemble:
    return {"gv": catalog.gv_ensemble, "twofour": catalog.twofour_ensemble, "domino": catalog.domino_ensemble}[name]()

