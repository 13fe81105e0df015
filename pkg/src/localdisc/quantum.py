"""Kets, density operators, ensembles, POVMs and the Born rule."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
import numpy.typing as npt

from .linalg import (
    CERTIFY_TOL,
    CONSTRUCTION_TOL,
    ComplexMatrix,
    DimensionError,
    as_matrix,
    frozen,
    hermitian,
    is_psd,
    projector,
)

KET_RENORM_WINDOW = 1e-6


@dataclass(frozen=True)
class Ket:
    amps: npt.NDArray[np.complex128]

    def __post_init__(self) -> None:
        amps = np.asarray(self.amps, dtype=np.complex128).ravel().copy()
        if amps.size == 0 or not np.all(np.isfinite(amps)):
            raise ValueError("ket amplitudes must be a non-empty finite vector")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > KET_RENORM_WINDOW:
            raise ValueError(f"ket norm {norm:.9f} is not 1 (missing a normalization factor?)")
        object.__setattr__(self, "amps", frozen(amps / norm))

    @property
    def dim(self) -> int:
        return self.amps.size

    @classmethod
    def basis(cls, i: int, dim: int) -> Ket:
        v = np.zeros(dim, dtype=np.complex128)
        v[i] = 1.0
        return cls(v)

    @classmethod
    def superpose(cls, i: int, j: int, dim: int, sign: int = 1) -> Ket:
        """The ket ``(|i> + sign |j>)/sqrt(2)``, written ``|i+j>`` or ``|i-j>``."""
        v = np.zeros(dim, dtype=np.complex128)
        v[i] = 1.0
        v[j] = sign
        return cls(v / np.sqrt(2.0))

    def tensor(self, other: Ket) -> Ket:
        return Ket(np.kron(self.amps, other.amps))

    def inner(self, other: Ket) -> complex:
        """``<self|other>``."""
        return complex(np.vdot(self.amps, other.amps))

    @property
    def matrix(self) -> ComplexMatrix:
        return projector(self.amps)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Ket) and np.array_equal(self.amps, other.amps)

    def __hash__(self) -> int:
        return hash(self.amps.tobytes())


@dataclass(frozen=True, eq=False)
class DensityOperator:
    matrix: ComplexMatrix

    def __post_init__(self) -> None:
        m = hermitian(self.matrix)
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > CERTIFY_TOL:
            raise ValueError(f"density operator trace {tr:.12f} is not 1")
        ok, lam = is_psd(m, CERTIFY_TOL)
        if not ok:
            raise ValueError(f"density operator is not PSD (min eigenvalue {lam:.3e})")
        object.__setattr__(self, "matrix", frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_ket(cls, ket: Ket) -> DensityOperator:
        return cls(ket.matrix)

    @classmethod
    def mixture(cls, kets: Sequence[Ket], weights: Sequence[float] | None = None) -> DensityOperator:
        if weights is None:
            weights = [1.0 / len(kets)] * len(kets)
        return cls(sum(w * k.matrix for w, k in zip(weights, kets)))

    @classmethod
    def normalized(cls, op: npt.ArrayLike) -> DensityOperator:
        m = as_matrix(op)
        return cls(m / np.trace(m).real)


State = Union[Ket, DensityOperator]


def state_matrix(state: State | npt.ArrayLike) -> ComplexMatrix:
    if isinstance(state, (Ket, DensityOperator)):
        return state.matrix
    return as_matrix(state)


@dataclass(frozen=True, eq=False)
class Ensemble:
    """States with prior probabilities over a multipartite space.

    ``labels`` name the states (e.g. ``"psi_01"``) so results can refer to
    them; they default to ``"0", "1", ...``.
    """

    dims: tuple[int, ...]
    states: tuple[State, ...]
    priors: npt.NDArray[np.float64]
    labels: tuple[str, ...] = field(default=())
    name: str = ""

    def __post_init__(self) -> None:
        dims = tuple(int(d) for d in self.dims)
        states = tuple(self.states)
        priors = np.asarray(self.priors, dtype=float).ravel().copy()
        if not states:
            raise ValueError("ensemble needs at least one state")
        if len(priors) != len(states):
            raise ValueError(f"{len(priors)} priors for {len(states)} states")
        if np.any(priors < 0) or abs(priors.sum() - 1.0) > CONSTRUCTION_TOL:
            raise ValueError(f"priors must be non-negative and sum to 1, got sum {priors.sum():.15f}")
        dim = int(np.prod(dims))
        for k, s in enumerate(states):
            if s.dim != dim:
                raise DimensionError(f"state {k} has dimension {s.dim}, expected {dim} from dims {dims}")
        labels = tuple(self.labels) if self.labels else tuple(str(k) for k in range(len(states)))
        if len(labels) != len(states) or len(set(labels)) != len(labels):
            raise ValueError("labels must be unique, one per state")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "priors", frozen(priors))
        object.__setattr__(self, "labels", labels)

    @classmethod
    def uniform(cls, dims: Sequence[int], states: Sequence[State], labels: Sequence[str] = (), name: str = "") -> Ensemble:
        n = len(states)
        return cls(tuple(dims), tuple(states), np.full(n, 1.0 / n), tuple(labels), name)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def __len__(self) -> int:
        return len(self.states)

    def matrices(self) -> list[ComplexMatrix]:
        return [s.matrix for s in self.states]

    def weighted(self) -> list[ComplexMatrix]:
        """The operators ``p_j rho_j``."""
        return [p * s.matrix for p, s in zip(self.priors, self.states)]

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"no state labelled {label!r} in ensemble {self.name or '<unnamed>'}") from None

    def __getitem__(self, label: str) -> State:
        return self.states[self.index(label)]


@dataclass(frozen=True, eq=False)
class Povm:
    """A list of effects.

    Construction only symmetrizes; use :func:`validate_povm` (or
    :meth:`checked`) to test positivity and completeness.
    """

    effects: tuple[ComplexMatrix, ...]

    def __post_init__(self) -> None:
        effects = tuple(frozen(hermitian(e)) for e in self.effects)
        if not effects:
            raise ValueError("POVM needs at least one effect")
        shapes = {e.shape for e in effects}
        if len(shapes) != 1:
            raise DimensionError(f"effects have mixed shapes {sorted(shapes)}")
        object.__setattr__(self, "effects", effects)

    @classmethod
    def from_basis(cls, kets: Sequence[Ket | npt.ArrayLike]) -> Povm:
        return cls(tuple(projector(k.amps if isinstance(k, Ket) else k) for k in kets))

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    def __len__(self) -> int:
        return len(self.effects)

    def __iter__(self):
        return iter(self.effects)

    def __getitem__(self, i: int) -> ComplexMatrix:
        return self.effects[i]

    def checked(self, tol: float = CERTIFY_TOL) -> Povm:
        report = validate_povm(self, tol)
        if not report.passed:
            raise ValueError(
                f"invalid POVM: completeness residual {report.max_completeness_residual:.3e}, "
                f"min effect eigenvalue {report.min_effect_eigenvalue:.3e}"
            )
        return self


@dataclass(frozen=True)
class PovmReport:
    max_completeness_residual: float
    min_effect_eigenvalue: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_completeness_residual <= self.tol and self.min_effect_eigenvalue >= -self.tol


def validate_povm(povm: Povm, tol: float = CERTIFY_TOL) -> PovmReport:
    total = sum(povm.effects)
    residual = float(np.linalg.norm(total - np.eye(povm.dim)))
    lam = min(is_psd(e, tol)[1] for e in povm.effects)
    return PovmReport(residual, float(lam), tol)


def born_probability(state: State | npt.ArrayLike, effect: npt.ArrayLike) -> float:
    """``Tr(rho E)``, clamped to [0, 1]."""
    rho = state_matrix(state)
    e = as_matrix(effect)
    if rho.shape != e.shape:
        raise DimensionError(f"state of shape {rho.shape} and effect of shape {e.shape}")
    # Tr(rho E) = sum_ij rho_ij E_ji
    val = float(np.real(np.sum(rho * e.T)))
    return min(max(val, 0.0), 1.0)


def outcome_distribution(state: State | npt.ArrayLike, povm: Povm) -> npt.NDArray[np.float64]:
    rho = state_matrix(state)
    if rho.shape[0] != povm.dim:
        raise DimensionError(f"state of dimension {rho.shape[0]} and POVM of dimension {povm.dim}")
    return np.array([born_probability(rho, e) for e in povm.effects])
