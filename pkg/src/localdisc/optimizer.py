"""Optimal measurements: an iterative solver, a qubit grid oracle, and the
symmetric construction for Alice's side of the domino problem.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import numpy.typing as npt

from . import catalog
from .helstrom import (
    DEFAULT_TOL,
    HelstromReport,
    check_helstrom_conditions,
    helstrom_measurement,
    helstrom_two_state_bound,
)
from .linalg import (
    CERTIFY_TOL,
    ComplexMatrix,
    DimensionError,
    eig_hermitian,
    frozen,
    inv_sqrtm_pd,
    projector,
    zero_eigenvector,
)
from .quantum import Ensemble, Povm

logger = logging.getLogger(__name__)

# Guess operators carry weight 1/3 per triple operator while Gamma carries 1/8,
# so the guess-function test uses Gamma' = (8/3) Gamma.
GUESS_SCALE = 8.0 / 3.0


# --- iterative solver -------------------------------------------------------------


@dataclass
class OptimizerTrace:
    iterations: int = 0
    successes: list[float] = field(default_factory=list)
    report: HelstromReport | None = None
    converged: bool = False
    stalled: bool = False

    @property
    def success(self) -> float:
        return self.successes[-1]

    def is_monotone(self, slack: float = 1e-12) -> bool:
        s = np.asarray(self.successes)
        return bool(np.all(np.diff(s) >= -slack))


OBJECTIVE_NOISE = 1e-14


def uniform_povm(n: int, dim: int) -> Povm:
    return Povm(tuple(np.eye(dim, dtype=np.complex128) / n for _ in range(n)))


def random_povm(n: int, dim: int, seed: int | np.random.Generator) -> Povm:
    """Full-rank random effects, normalized to sum to the identity."""
    rng = np.random.default_rng(seed)
    raw = []
    for _ in range(n):
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        raw.append(g @ g.conj().T)
    t = inv_sqrtm_pd(sum(raw))
    return Povm(tuple(t @ r @ t for r in raw))


def _step(weighted: Sequence[ComplexMatrix], effects: Sequence[ComplexMatrix], shift: float) -> list[ComplexMatrix]:
    eye = np.eye(weighted[0].shape[0])
    xs = []
    for w, e in zip(weighted, effects):
        a = w + shift * eye
        x = a @ e @ a
        xs.append(0.5 * (x + x.conj().T))
    t = inv_sqrtm_pd(sum(xs))
    out = []
    for x in xs:
        y = t @ x @ t
        out.append(0.5 * (y + y.conj().T))
    return out


def _objective(weighted: Sequence[ComplexMatrix], effects: Sequence[ComplexMatrix]) -> float:
    return float(sum(np.real(np.sum(w * e.T)) for w, e in zip(weighted, effects)))


def iterate_min_error(
    ensemble: Ensemble,
    init: Povm | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = 5000,
    seed: int | None = None,
    check_every: int = 10,
) -> tuple[Povm, OptimizerTrace]:
    """Maximize the success probability by a damped fixed-point iteration.

    Each step maps ``pi_j -> T^{-1/2} X_j T^{-1/2}`` with
    ``X_j = A_j pi_j A_j``, ``A_j = p_j rho_j + mu I`` and ``T = sum_j X_j``.
    The shift ``mu`` starts at 0 and grows until the step does not lower the
    success probability, so the recorded sequence never decreases beyond
    rounding (``OBJECTIVE_NOISE``). Fixed points satisfy the Helstrom
    conditions; iteration stops once they hold to ``tol``, once no step
    improves the objective, or at ``max_iter``.

    The starting POVM is ``init``, else random effects drawn from ``seed``,
    else ``I/n`` for every effect.
    """
    n, dim = len(ensemble), ensemble.dim
    if init is None:
        init = random_povm(n, dim, seed) if seed is not None else uniform_povm(n, dim)
    if len(init) != n or init.dim != dim:
        raise DimensionError(f"initial POVM has {len(init)} effects of dimension {init.dim}; need {n} of {dim}")
    if min(float(eig_hermitian(e).eigenvalues[0]) for e in init.effects) <= 0:
        raise ValueError("initial POVM effects must be strictly positive")
    init.checked()

    weighted = ensemble.weighted()
    scale = max(float(np.linalg.norm(w, 2)) for w in weighted)
    effects = list(init.effects)
    trace = OptimizerTrace(successes=[_objective(weighted, effects)])
    shift = 0.0
    for it in range(1, max_iter + 1):
        while True:
            cand = _step(weighted, effects, shift)
            value = _objective(weighted, cand)
            # Near the optimum the objective is flat to rounding; don't read that as a stall.
            if value >= trace.successes[-1] - OBJECTIVE_NOISE:
                break
            shift = max(4.0 * shift, 1e-3 * scale)
            if shift > 1e8 * scale:
                trace.stalled = True
                break
        if trace.stalled:
            break
        effects = cand
        trace.successes.append(value)
        trace.iterations = it
        shift = 0.5 * shift if shift > 1e-12 * scale else 0.0
        if it % check_every == 0:
            report = check_helstrom_conditions(ensemble, Povm(tuple(effects)), tol)
            if report.passed:
                break

    povm = Povm(tuple(effects))
    trace.report = check_helstrom_conditions(ensemble, povm, tol)
    trace.converged = trace.report.passed
    if not trace.converged:
        logger.info("iterative solver stopped after %d steps without meeting tol %.1e", trace.iterations, tol)
    return povm, trace


# --- qubit grid oracle -------------------------------------------------------------


def real_qubit_basis(theta: float) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """``cos t|0> + sin t|1>`` and ``sin t|0> - cos t|1>``; t = pi/8 is the Breidbart basis."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([c, s]), np.array([s, -c])


@dataclass(frozen=True)
class GridResult:
    angle: float
    value: float
    guess: tuple[int, ...]
    per_guess: tuple[tuple[tuple[int, ...], float, float], ...]


def qubit_projective_grid_search(
    ensemble: Ensemble,
    guess_maps: Sequence[Sequence[int | str]] | None = None,
    resolution: int = 7201,
    scale: float = 1.0,
) -> GridResult:
    """Exhaustive scan of real orthonormal qubit bases.

    Angles run over ``resolution`` evenly spaced points in [-pi/2, pi/2],
    which covers every real basis with either outcome order. Each guess map
    sends outcome 0/1 to a state; the reported value is ``scale`` times the
    success probability.
    """
    if ensemble.dim != 2:
        raise DimensionError("grid search is for qubit ensembles")
    if resolution < 8:
        raise ValueError("resolution must be at least 8")
    if guess_maps is None:
        n = len(ensemble)
        guess_maps = [(i, j) for i in range(n) for j in range(n) if i != j]
    angles = np.linspace(-np.pi / 2, np.pi / 2, resolution)
    c, s = np.cos(angles), np.sin(angles)
    # <b0|rho|b0> and <b1|rho|b1> for every angle, vectorized over the grid
    w = ensemble.weighted()
    per_guess = []
    for g in guess_maps:
        idx = [ensemble.index(x) if isinstance(x, str) else int(x) for x in g]
        if len(idx) != 2:
            raise ValueError("qubit guess maps have two entries")
        m0, m1 = w[idx[0]], w[idx[1]]
        v0 = c**2 * m0[0, 0].real + s**2 * m0[1, 1].real + 2 * c * s * m0[0, 1].real
        v1 = s**2 * m1[0, 0].real + c**2 * m1[1, 1].real - 2 * c * s * m1[0, 1].real
        vals = scale * (v0 + v1)
        k = int(np.argmax(vals))
        per_guess.append((tuple(idx), float(angles[k]), float(vals[k])))
    best = max(per_guess, key=lambda r: r[2])
    return GridResult(best[1], best[2], best[0], tuple(per_guess))


# --- symmetric construction for the domino problem ---------------------------------


def symmetric_gamma(p: float, q: float) -> ComplexMatrix:
    """``p(|0><0| + |2><2|) + q|1><1|``, the general operator commuting with U and V."""
    return np.diag([p, q, p]).astype(np.complex128)


def _lambda_min_and_grad(p: float, q: float, sigma: ComplexMatrix) -> tuple[float, npt.NDArray[np.float64]]:
    dec = eig_hermitian(symmetric_gamma(p, q) - sigma / 8.0)
    v = dec.vector(0)
    w = np.abs(v) ** 2
    # First-order eigenvalue perturbation: d(lambda)/dp = |v_0|^2 + |v_2|^2, d/dq = |v_1|^2.
    return float(dec.eigenvalues[0]), np.array([w[0] + w[2], w[1]])


def solve_gamma_parameters(
    start: tuple[float, float] = (0.11, 0.09), tol: float = 1e-15, max_iter: int = 100
) -> tuple[float, float]:
    """Damped Newton on the smallest eigenvalues of ``Gamma - sigma_0/8`` and ``Gamma - sigma_4/8``."""
    sig = catalog.sigma_operators()
    s0, s4 = sig[0], sig[4]
    x = np.array(start, dtype=float)

    def residual(x: npt.NDArray[np.float64]) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
        l0, g0 = _lambda_min_and_grad(x[0], x[1], s0)
        l4, g4 = _lambda_min_and_grad(x[0], x[1], s4)
        return np.array([l0, l4]), np.vstack([g0, g4])

    f, jac = residual(x)
    for _ in range(max_iter):
        if np.max(np.abs(f)) <= tol:
            break
        step = np.linalg.solve(jac, -f)
        t = 1.0
        while t > 1e-6:
            x_new = x + t * step
            f_new, jac_new = residual(x_new)
            if np.linalg.norm(f_new) < np.linalg.norm(f) or np.max(np.abs(f_new)) <= tol:
                break
            t *= 0.5
        else:
            raise RuntimeError(f"Newton line search failed at (p, q) = {tuple(x)}")
        x, f, jac = x_new, f_new, jac_new
    else:
        raise RuntimeError(f"Newton did not converge: residual {np.max(np.abs(f)):.3e}")
    return float(x[0]), float(x[1])


@dataclass(frozen=True, eq=False)
class SymmetricGammaSolution:
    p: float
    q: float
    gamma: ComplexMatrix
    povm: Povm
    weights: npt.NDArray[np.float64]
    kernel_vectors: tuple[npt.NDArray[np.complex128], ...]
    completeness_residual: float

    @property
    def success(self) -> float:
        """``(8/3) Tr(Gamma)``."""
        return GUESS_SCALE * float(np.trace(self.gamma).real)


def build_domino_povm(p: float, q: float, tol: float = CERTIFY_TOL) -> tuple[Povm, npt.NDArray[np.float64], tuple, float]:
    """Weighted kernel projectors of ``Gamma - sigma_k/8``, completed to a POVM.

    Weights are shared within the orbits {0..3} and {4..7} and fitted by
    least squares to ``sum_k w_k |v_k><v_k| = I``; the fit residual must not
    exceed ``tol``. Returns ``(povm, weights, kernel_vectors, residual)``.
    """
    gamma = symmetric_gamma(p, q)
    sig = catalog.sigma_operators()
    kernels = tuple(frozen(zero_eigenvector(gamma - s / 8.0, tol)) for s in sig)
    projs = [projector(v) for v in kernels]
    orbit_sums = [sum(projs[:4]), sum(projs[4:])]

    def realify(m: ComplexMatrix) -> npt.NDArray[np.float64]:
        # A Hermitian 3x3 matrix has 9 independent real parameters.
        iu = np.triu_indices(3)
        iu1 = np.triu_indices(3, 1)
        return np.concatenate([m[iu].real, m[iu1].imag])

    a = np.column_stack([realify(m) for m in orbit_sums])
    b = realify(np.eye(3, dtype=np.complex128))
    (w_a, w_b), *_ = np.linalg.lstsq(a, b, rcond=None)
    weights = np.array([w_a] * 4 + [w_b] * 4)
    effects = tuple(w * pr for w, pr in zip(weights, projs))
    residual = float(np.linalg.norm(sum(effects) - np.eye(3)))
    if residual > tol or np.any(weights < 0):
        raise RuntimeError(f"no non-negative orbit weights complete the POVM (residual {residual:.3e}, weights {weights})")
    return Povm(effects), frozen(weights), kernels, residual


def solve_symmetric_gamma(tol: float = CERTIFY_TOL) -> SymmetricGammaSolution:
    """Optimal measurement for assigning Alice's state to one of the eight triples.

    ``Gamma`` is restricted to the form invariant under U and V; ``p`` and
    ``q`` are fixed by requiring ``Gamma - sigma_0/8`` and
    ``Gamma - sigma_4/8`` to be singular on the PSD branch.
    """
    p, q = solve_gamma_parameters()
    gamma = frozen(symmetric_gamma(p, q))
    for k, s in enumerate(catalog.sigma_operators()):
        vals = eig_hermitian(gamma - s / 8.0).eigenvalues
        if vals[0] < -tol or abs(vals[0]) > tol or vals[1] <= tol:
            raise RuntimeError(f"Gamma - sigma_{k}/8 is not rank-two PSD: eigenvalues {vals}")
    povm, weights, kernels, residual = build_domino_povm(p, q, tol)
    return SymmetricGammaSolution(p, q, gamma, povm, weights, kernels, residual)


@dataclass(frozen=True)
class GuessFunctionReport:
    guesses: tuple[tuple[int, ...], ...]
    min_eigenvalues: tuple[float, ...]
    kernel_hits: tuple[tuple[int, ...], ...]
    expected_hits: tuple[tuple[int, ...], ...]
    psd_tol: float
    kernel_tol: float
    positive_margin: float

    @property
    def psd_failures(self) -> int:
        return sum(lam < -self.psd_tol for lam in self.min_eigenvalues)

    @property
    def strictly_positive(self) -> int:
        return sum(lam > self.positive_margin for lam in self.min_eigenvalues)

    @property
    def passed(self) -> bool:
        return (
            self.psd_failures == 0
            and sorted(self.kernel_hits) == sorted(self.expected_hits)
            and self.strictly_positive == len(self.guesses) - len(self.expected_hits)
        )


def verify_guess_function_optimality(
    gamma: ComplexMatrix,
    guess_ops: Sequence[catalog.GuessOperator] | None = None,
    psd_tol: float = CERTIFY_TOL,
    kernel_tol: float = 1e-8,
    positive_margin: float = 1e-6,
) -> GuessFunctionReport:
    """Check ``(8/3) Gamma - A_g`` over all guess functions.

    Every operator must be PSD; exactly the guess functions of the eight
    triples may be singular, the rest must stay clear of zero by
    ``positive_margin``.
    """
    guess_ops = guess_ops if guess_ops is not None else catalog.domino_guess_operators()
    scaled = GUESS_SCALE * np.asarray(gamma)
    mins = tuple(float(eig_hermitian(scaled - g.operator).eigenvalues[0]) for g in guess_ops)
    hits = tuple(g.guess for g, lam in zip(guess_ops, mins) if abs(lam) <= kernel_tol)
    return GuessFunctionReport(
        tuple(g.guess for g in guess_ops),
        mins,
        hits,
        tuple(catalog.DOMINO_SUBSET_GUESS.values()),
        psd_tol,
        kernel_tol,
        positive_margin,
    )


# --- one-way bounds ---------------------------------------------------------------


@dataclass(frozen=True)
class BoundAnalysis:
    name: str
    description: str
    helstrom: float
    iterative: float
    converged: bool


def _binary_bounds(ens: Ensemble, tol: float) -> tuple[float, float, bool]:
    exact = helstrom_two_state_bound(ens.states[0], ens.states[1], float(ens.priors[0]))
    _, trace = iterate_min_error(ens, tol=tol)
    return exact, trace.success, trace.converged


def oneway_bound_analyses(tol: float = DEFAULT_TOL) -> dict[str, BoundAnalysis]:
    """Upper bounds on one-way success obtained by reduction to simpler problems.

    Binary reductions are evaluated twice: by the two-state trace-norm
    formula and by the iterative solver. The domino bound comes from the
    symmetric construction (both entries then hold the symmetric value and
    the iterative optimum of the eight-operator problem respectively).
    """
    out: dict[str, BoundAnalysis] = {}
    h, it, ok = _binary_bounds(catalog.gv_bob_ensemble(), tol)
    out["gv_backward"] = BoundAnalysis(
        "gv_backward", "two-qubit set, Bob to Alice: Bob assigns S_00 vs S_11", h, it, ok
    )
    h, it, ok = _binary_bounds(catalog.twofour_alice_ensemble(), tol)
    out["twofour_AB"] = BoundAnalysis(
        "twofour_AB", "2x4 set, Alice to Bob: Alice separates {|0>,|0+1>} from {|1>,|0-1>}", h, it, ok
    )
    h0, it0, ok0 = _binary_bounds(catalog.gv_bob_ensemble(), tol)
    h1, it1, ok1 = _binary_bounds(catalog.twofour_bob_upper_ensemble(), tol)
    out["twofour_BA"] = BoundAnalysis(
        "twofour_BA",
        "2x4 set, Bob to Alice: Bob learns the half, then solves the two-qubit pair problem within it",
        0.5 * (h0 + h1),
        0.5 * (it0 + it1),
        ok0 and ok1,
    )
    sol = solve_symmetric_gamma()
    problems = catalog.named_problems()
    sigma = problems["domino-sigma"]
    _, trace = iterate_min_error(sigma.ensemble, tol=tol)
    out["domino_oneway"] = BoundAnalysis(
        "domino_oneway",
        "domino basis, Alice to Bob: Alice assigns one of the eight triples",
        sol.success,
        sigma.scale * trace.success,
        trace.converged,
    )
    return out


def breidbart_povm() -> Povm:
    return Povm.from_basis(catalog.breidbart_basis())


def binary_optimum(ens: Ensemble) -> Povm:
    return helstrom_measurement(ens.states[0], ens.states[1], float(ens.priors[0]))

