"""Success probabilities and minimum-error optimality certificates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import numpy.typing as npt

from .linalg import (
    ComplexMatrix,
    DimensionError,
    anti_hermitian_residual,
    as_matrix,
    eig_hermitian,
    trace_norm,
)
from .quantum import Ensemble, Povm, State, state_matrix

DEFAULT_TOL = 1e-9


def _check_dims(ensemble: Ensemble, povm: Povm) -> None:
    if ensemble.dim != povm.dim:
        raise DimensionError(f"ensemble of dimension {ensemble.dim} and POVM of dimension {povm.dim}")


def _resolve_guess(ensemble: Ensemble, povm: Povm, guess: Sequence[int | str] | None) -> list[int]:
    if guess is None:
        if len(povm) != len(ensemble):
            raise ValueError(f"{len(povm)} effects for {len(ensemble)} states; pass an explicit guess map")
        return list(range(len(ensemble)))
    if len(guess) != len(povm):
        raise ValueError(f"guess map has {len(guess)} entries for {len(povm)} effects")
    out = []
    for g in guess:
        idx = ensemble.index(g) if isinstance(g, str) else int(g)
        if not 0 <= idx < len(ensemble):
            raise IndexError(f"guess {g!r} is out of range for {len(ensemble)} states")
        out.append(idx)
    return out


def success_probability(ensemble: Ensemble, povm: Povm, guess: Sequence[int | str] | None = None) -> float:
    """Average probability of naming the true state.

    Outcome ``m`` of ``povm`` is read as a guess of state ``guess[m]``
    (default: outcome ``m`` names state ``m``).
    """
    _check_dims(ensemble, povm)
    idx = _resolve_guess(ensemble, povm, guess)
    mats = ensemble.matrices()
    total = 0.0
    for m, j in enumerate(idx):
        total += ensemble.priors[j] * float(np.real(np.sum(mats[j] * povm.effects[m].T)))
    return min(max(total, 0.0), 1.0)


def subset_success_probability(sigma_ops: Sequence[npt.ArrayLike], povm: Povm) -> float:
    """Success of the eight-triple assignment: ``(8/3) sum_k (1/8) Tr(sigma_k pi_k)``."""
    if len(sigma_ops) != 8 or len(povm) != 8:
        raise ValueError(f"expected 8 operators and 8 effects, got {len(sigma_ops)} and {len(povm)}")
    if any(as_matrix(s).shape != (3, 3) for s in sigma_ops) or povm.dim != 3:
        raise DimensionError("triple operators and effects must act on a qutrit")
    acc = sum(np.trace(as_matrix(s) @ p).real / 8.0 for s, p in zip(sigma_ops, povm.effects))
    return float(8.0 / 3.0 * acc)


def gamma_operator(ensemble: Ensemble, povm: Povm) -> ComplexMatrix:
    """``sum_i p_i rho_i pi_i``. Not symmetrized; it is Hermitian only at an optimum."""
    _check_dims(ensemble, povm)
    _resolve_guess(ensemble, povm, None)
    return sum(w @ e for w, e in zip(ensemble.weighted(), povm.effects))


@dataclass(frozen=True)
class HelstromReport:
    gamma: ComplexMatrix
    gamma_hermiticity_residual: float
    min_eigenvalues: tuple[float, ...]
    max_stationarity_residual: float
    max_pairwise_residual: float
    success: float
    tol: float

    @property
    def passed(self) -> bool:
        return (
            min(self.min_eigenvalues) >= -self.tol
            and self.max_stationarity_residual <= self.tol
            and self.max_pairwise_residual <= self.tol
            and self.gamma_hermiticity_residual <= self.tol
        )

    def to_dict(self) -> dict:
        g = np.asarray(self.gamma)
        return {
            "gamma": [[[float(z.real), float(z.imag)] for z in row] for row in g],
            "gamma_hermiticity_residual": self.gamma_hermiticity_residual,
            "min_eigenvalues": list(self.min_eigenvalues),
            "max_stationarity_residual": self.max_stationarity_residual,
            "max_pairwise_residual": self.max_pairwise_residual,
            "success": self.success,
            "tol": self.tol,
            "pass": self.passed,
        }


def check_helstrom_conditions(ensemble: Ensemble, povm: Povm, tol: float = DEFAULT_TOL) -> HelstromReport:
    """Test a POVM for minimum-error optimality.

    Checks that every ``Gamma - p_j rho_j`` is PSD, that
    ``(Gamma - p_j rho_j) pi_j = 0`` and that
    ``pi_i (p_i rho_i - p_j rho_j) pi_j = 0`` for all ordered pairs
    ``i != j``. One tolerance covers eigenvalue slack and residual norms.
    """
    gamma = gamma_operator(ensemble, povm)
    herm = anti_hermitian_residual(gamma)
    gamma_h = 0.5 * (gamma + gamma.conj().T)
    weighted = ensemble.weighted()
    effects = povm.effects
    mins = tuple(float(eig_hermitian(gamma_h - w, np.inf).eigenvalues[0]) for w in weighted)
    stationarity = max(float(np.linalg.norm((gamma - w) @ e)) for w, e in zip(weighted, effects))
    pairwise = 0.0
    n = len(weighted)
    for i in range(n):
        for j in range(n):
            if i != j:
                r = effects[i] @ (weighted[i] - weighted[j]) @ effects[j]
                pairwise = max(pairwise, float(np.linalg.norm(r)))
    success = float(np.trace(gamma).real)
    return HelstromReport(gamma, herm, mins, stationarity, pairwise, success, tol)


def helstrom_two_state_bound(rho0: State | npt.ArrayLike, rho1: State | npt.ArrayLike, p0: float) -> float:
    """Optimal success for two states: ``(1 + ||p0 rho0 - p1 rho1||_1) / 2``."""
    if not 0.0 <= p0 <= 1.0:
        raise ValueError(f"prior {p0} outside [0, 1]")
    a, b = state_matrix(rho0), state_matrix(rho1)
    if a.shape != b.shape:
        raise DimensionError(f"states of shapes {a.shape} and {b.shape}")
    return 0.5 * (1.0 + trace_norm(p0 * a - (1.0 - p0) * b))


def helstrom_measurement(rho0: State | npt.ArrayLike, rho1: State | npt.ArrayLike, p0: float) -> Povm:
    """Projectors onto the non-negative and negative parts of ``p0 rho0 - p1 rho1``."""
    dec = eig_hermitian(p0 * state_matrix(rho0) - (1.0 - p0) * state_matrix(rho1), np.inf)
    v = dec.eigenvectors
    pos = dec.eigenvalues >= 0
    return Povm((v[:, pos] @ v[:, pos].conj().T, v[:, ~pos] @ v[:, ~pos].conj().T))
