"""Synthesis of correction measurements that unlearn measurement back-action.

Given a branch operator K with unequal singular values (a measurement that
gained information), one can append a two-outcome filter whose success
branch makes the cumulative operator proportional to a unitary again. Two
schemes are provided:

* single-shot "equalize everything now" filtering (:func:`procrustean_plan`),
  succeeding with the squared minimum singular value of K and leaving a
  dead (rank-deficient) failure branch;
* repeated partial filtering (:func:`partial_filter_iterate`), which peels
  off a unitary-proportional component each round and leaves a full-rank
  residual that can be retried, converging to the same total probability.

The total success probability of *any* correction strategy is bounded by
the squared minimum singular value (:func:`success_bound`);
:func:`verify_bound_bruteforce` is the stochastic witness of that claim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import linalg
from .errors import CompletenessError, DomainError, UnrecoverableBranchError
from .povm import COMPLETENESS_TOL, KrausOperator, Povm, complement_kraus, unitary_witness
from .rng import ginibre, random_unitary

__all__ = [
    "BoundReport",
    "FilterStep",
    "FilterTrace",
    "OracleReport",
    "RecoveryPlan",
    "binary_recovery_probability",
    "multi_outcome_recovery_probability",
    "partial_filter_iterate",
    "partial_filter_limit",
    "partial_filter_step",
    "procrustean_plan",
    "success_bound",
    "verify_bound_bruteforce",
]

RANK_DEFICIENCY_TOL = 1e-12


@dataclass(frozen=True)
class RecoveryPlan:
    """Two-outcome correction filter for a given branch operator.

    ``success_kraus @ target`` is proportional to a unitary; the failure
    operator completes the pair to a POVM and (for a genuinely corrective
    plan) carries at least one vanishing singular value.
    """

    success_kraus: KrausOperator
    failure_kraus: KrausOperator
    success_probability: float
    residual_failure_kraus_singular_values: tuple[float, ...]

    def as_povm(self) -> Povm:
        return Povm([self.success_kraus, self.failure_kraus])

    def to_json(self) -> dict:
        from .povm import matrix_to_json

        return {
            "success_kraus": matrix_to_json(self.success_kraus.matrix),
            "failure_kraus": matrix_to_json(self.failure_kraus.matrix),
            "success_probability": self.success_probability,
            "residual_failure_kraus_singular_values": list(
                self.residual_failure_kraus_singular_values
            ),
        }


def success_bound(k: KrausOperator) -> float:
    """Upper bound on total correction success: squared min singular value.

    The POVM elements of any complete correction set applied after K sum to
    K^dag K; the unitary-proportional (successful) branches contribute a
    multiple of the identity, and positivity of what remains caps that
    multiple at the smallest eigenvalue of K^dag K.
    """
    s = linalg.singular_values(k.matrix)
    return float(s[-1] ** 2)


def procrustean_plan(k: KrausOperator) -> RecoveryPlan:
    """Single-shot filter equalizing all singular values of K at once.

    Writing K = U diag(s) V^dag, the success operator is
    U diag(s_min / s) U^dag, so the cumulative operator becomes
    s_min * U V^dag: unitary evolution with state-independent probability
    s_min**2, which saturates :func:`success_bound`. The failure operator
    annihilates the direction(s) of minimal singular value, so a failed
    branch is permanently dead.
    """
    res = linalg.svd(k.matrix)
    s = res.singular_values
    if s[-1] <= RANK_DEFICIENCY_TOL:
        raise UnrecoverableBranchError(
            f"operator {k.label!r} is rank deficient (min singular value {s[-1]:.3g}); "
            "the branch has a non-trivial nullspace and cannot be corrected"
        )
    u = res.left_unitary
    q_min = float(s[-1])
    success = (u * (q_min / s)) @ u.conj().T
    success_op = KrausOperator(success, label=f"recover({k.label})")
    failure_op = complement_kraus(success_op, label=f"discard({k.label})")
    residual = linalg.singular_values(failure_op.matrix)
    return RecoveryPlan(
        success_kraus=success_op,
        failure_kraus=failure_op,
        success_probability=q_min**2,
        residual_failure_kraus_singular_values=tuple(float(x) for x in residual),
    )


@dataclass(frozen=True)
class BoundReport:
    """Maximum recoverable probability for a (multi-outcome) measurement."""

    per_outcome_min_prob: tuple[float, ...]
    total_recoverable: float
    visibility: Optional[float]  # binary case: q_max^2 - q_min^2 of outcome 0

    def to_json(self) -> dict:
        return {
            "per_outcome_min_prob": list(self.per_outcome_min_prob),
            "total_recoverable": self.total_recoverable,
            "visibility": self.visibility,
        }


def binary_recovery_probability(k0: KrausOperator, k1: KrausOperator) -> BoundReport:
    """Maximum recovery probability after a two-outcome measurement.

    Equals one minus the visibility of the first operator: completeness
    forces (min sv of K1)^2 = 1 - (max sv of K0)^2, so the two per-outcome
    minima sum to 1 - (q_max^2 - q_min^2).
    """
    residual = Povm([k0, k1]).completeness_residual()
    if residual > COMPLETENESS_TOL:
        raise CompletenessError(
            f"pair is not complete (residual {residual:.6g} > {COMPLETENESS_TOL:.3g})"
        )
    s0 = linalg.singular_values(k0.matrix)
    s1 = linalg.singular_values(k1.matrix)
    minima = (float(s0[-1] ** 2), float(s1[-1] ** 2))
    return BoundReport(
        per_outcome_min_prob=minima,
        total_recoverable=minima[0] + minima[1],
        visibility=float(s0[0] ** 2 - s0[-1] ** 2),
    )


def multi_outcome_recovery_probability(p: Povm) -> BoundReport:
    """Sum over outcomes of the squared minimum singular values."""
    minima = tuple(
        float(linalg.singular_values(k.matrix)[-1] ** 2) for k in p.kraus_ops
    )
    s0 = linalg.singular_values(p[0].matrix)
    visibility = float(s0[0] ** 2 - s0[-1] ** 2) if len(p) == 2 else None
    return BoundReport(
        per_outcome_min_prob=minima,
        total_recoverable=float(sum(minima)),
        visibility=visibility,
    )


# ---------------------------------------------------------------------------
# Partial filtering: scalar recursion for a qubit branch diag(a, b)
# ---------------------------------------------------------------------------


def _check_ab(a: float, b: float) -> None:
    slack = 1e-12
    if not (-slack <= b <= a <= 1.0 + slack):
        raise DomainError(f"need 0 <= b <= a <= 1, got a={a!r}, b={b!r}")


def partial_filter_step(a: float, b: float) -> tuple[float, float, float]:
    """One round of partial filtering on the residual diag(a, b).

    Applying the swap-like filter diag(b, a) succeeds (cumulative ab * I)
    with probability (a*b)**2 and otherwise leaves diag(a', b') with
    a' = a*sqrt(1-b^2), b' = b*sqrt(1-a^2). The gap a^2 - b^2 is invariant.
    """
    _check_ab(a, b)
    step = (a * b) ** 2
    a_next = a * math.sqrt(max(0.0, 1.0 - b * b))
    b_next = b * math.sqrt(max(0.0, 1.0 - a * a))
    return step, a_next, b_next


def partial_filter_limit(a: float, b: float) -> float:
    """Closed-form limit of the total two-branch success: 1 - (a^2 - b^2)."""
    _check_ab(a, b)
    return 1.0 - (a * a - b * b)


@dataclass(frozen=True)
class FilterStep:
    a: float
    b: float
    step_success_probability: float  # (a*b)**2


@dataclass(frozen=True)
class FilterTrace:
    """Record of an iterated partial-filtering run (both initial branches)."""

    steps: tuple[FilterStep, ...]
    cumulative_success: float
    residual: tuple[float, float]  # (a_limit, b_limit) of the primary branch
    iterations_used: int
    converged: bool

    def to_json(self) -> dict:
        return {
            "steps": [
                {"j": j, "a": st.a, "b": st.b, "step_p": st.step_success_probability}
                for j, st in enumerate(self.steps)
            ],
            "cumulative_success": self.cumulative_success,
            "residual": list(self.residual),
            "iterations_used": self.iterations_used,
            "converged": self.converged,
        }

    def csv_rows(self) -> list[tuple[int, float, float, float, float]]:
        """(j, a_j, b_j, step_p, running cumulative over both branches)."""
        if not self.steps:
            return []
        # replay the complementary branch alongside the recorded primary one
        c = math.sqrt(max(0.0, 1.0 - self.steps[0].a ** 2))
        d = math.sqrt(max(0.0, 1.0 - self.steps[0].b ** 2))
        rows = []
        cum = 0.0
        for j, st in enumerate(self.steps):
            p1, d, c = partial_filter_step(d, c)
            cum += st.step_success_probability + p1
            rows.append((j, st.a, st.b, st.step_success_probability, cum))
        return rows


def partial_filter_iterate(
    a: float, b: float, max_iter: int = 200, tol: float = 1e-8
) -> FilterTrace:
    """Iterate partial filtering on both branches of {diag(a,b), complement}.

    The complementary branch starts at (c, d) = (sqrt(1-a^2), sqrt(1-b^2))
    and obeys the same recursion; after the first step it mirrors the
    primary branch (c_j = b_j, d_j = a_j). Iteration stops when both
    residual off-diagonal amplitudes drop below ``tol`` or after
    ``max_iter`` rounds; the accumulated success probability approaches
    1 - (a^2 - b^2).
    """
    _check_ab(a, b)
    if max_iter < 1:
        raise DomainError("max_iter must be >= 1")
    a_j, b_j = float(a), float(b)
    c_j = math.sqrt(max(0.0, 1.0 - a_j * a_j))
    d_j = math.sqrt(max(0.0, 1.0 - b_j * b_j))
    steps: list[FilterStep] = []
    cumulative = 0.0
    converged = False
    iterations = 0
    for _ in range(max_iter):
        if b_j < tol and c_j < tol:
            converged = True
            break
        p0, a_next, b_next = partial_filter_step(a_j, b_j)
        p1, d_next, c_next = partial_filter_step(d_j, c_j)  # d >= c mirrors a >= b
        steps.append(FilterStep(a_j, b_j, p0))
        cumulative += p0 + p1
        a_j, b_j = a_next, b_next
        c_j, d_j = c_next, d_next
        iterations += 1
    else:
        converged = b_j < tol and c_j < tol
    return FilterTrace(
        steps=tuple(steps),
        cumulative_success=cumulative,
        residual=(a_j, b_j),
        iterations_used=iterations,
        converged=converged,
    )


# ---------------------------------------------------------------------------
# Brute-force witness for the success bound
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleReport:
    bound: float
    max_observed: float
    trials: int
    unitary_branches_seen: int
    grid_t: tuple[float, ...]
    grid_success: tuple[float, ...]
    grid_max: float
    grid_argmax_t: float
    passed: bool

    def to_json(self) -> dict:
        return {
            "bound": self.bound,
            "max_observed": self.max_observed,
            "trials": self.trials,
            "unitary_branches_seen": self.unitary_branches_seen,
            "grid_t": list(self.grid_t),
            "grid_success": list(self.grid_success),
            "grid_max": self.grid_max,
            "grid_argmax_t": self.grid_argmax_t,
            "passed": self.passed,
        }


def _complete_random_set(
    remainder: np.ndarray, n: int, rng: np.random.Generator
) -> list[np.ndarray]:
    """Split a PSD remainder R into n random operators with sum F_i^dag F_i = R."""
    dim = remainder.shape[0]
    root = linalg.hermitian_sqrt((remainder + remainder.conj().T) / 2, tol=1e-8)
    gs = [ginibre(dim, rng) for _ in range(n)]
    gram = sum(g.conj().T @ g for g in gs)
    w, v = np.linalg.eigh((gram + gram.conj().T) / 2)
    inv_root = (v * (1.0 / np.sqrt(np.clip(w, 1e-30, None)))) @ v.conj().T
    return [g @ inv_root @ root for g in gs]


def _sample_strategy(
    k: KrausOperator, rng: np.random.Generator
) -> list[np.ndarray]:
    """One random complete correction set with 2-4 outcomes.

    Half the trials are unstructured (random contractions completed to a
    POVM); the other half embed a scaled, unitarily rotated equalizing
    filter so unitary-proportional cumulative branches actually occur and
    the bound is probed from below.
    """
    dim = k.dim
    n_outcomes = int(rng.integers(2, 5))
    if rng.random() < 0.5:
        return _complete_random_set(np.eye(dim), n_outcomes, rng)
    res = linalg.svd(k.matrix)
    s = res.singular_values
    u = res.left_unitary
    t = float(rng.uniform(0.0, s[-1]))
    first = random_unitary(dim, rng) @ (u * (t / s)) @ u.conj().T
    remainder = np.eye(dim) - first.conj().T @ first
    rest = _complete_random_set(remainder, n_outcomes - 1, rng)
    return [first, *rest]


def verify_bound_bruteforce(
    k: KrausOperator,
    trials: int,
    rng: np.random.Generator,
    witness_tol: float = 1e-7,
) -> OracleReport:
    """Numerically witness that no correction strategy beats the bound.

    Samples ``trials`` random complete correction POVMs, classifies the
    cumulative branches that are proportional to a unitary, and sums their
    state-independent probabilities; the maximum over trials must not
    exceed :func:`success_bound` + 1e-9. Additionally sweeps the aligned
    one-parameter family t * diag(1/s_k) over t in (0, s_min] and checks
    the supremum sits at t = s_min.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    bound = success_bound(k)
    km = k.matrix
    max_observed = 0.0
    unitary_branches = 0
    for _ in range(trials):
        total = 0.0
        for f in _sample_strategy(k, rng):
            sv = np.linalg.svd(f @ km, compute_uv=False)
            if sv[0] - sv[-1] <= witness_tol:
                total += float(sv[0] * sv[-1])
                unitary_branches += 1
        max_observed = max(max_observed, total)

    res = linalg.svd(km)
    s = res.singular_values
    u = res.left_unitary
    grid_t = np.linspace(s[-1] / 50.0, s[-1], 50)
    grid_success = []
    for t in grid_t:
        f = KrausOperator((u * (t / s)) @ u.conj().T, label=f"t={t:.3g}")
        w = unitary_witness(KrausOperator(f.matrix @ km), tol=1e-9)
        grid_success.append(w.scale**2 if w is not None else 0.0)
    grid_success = np.array(grid_success)
    i_max = int(np.argmax(grid_success))
    passed = (
        max_observed <= bound + 1e-9
        and grid_success.max() <= bound + 1e-9
        and i_max == len(grid_t) - 1
    )
    return OracleReport(
        bound=bound,
        max_observed=max_observed,
        trials=trials,
        unitary_branches_seen=unitary_branches,
        grid_t=tuple(float(t) for t in grid_t),
        grid_success=tuple(float(p) for p in grid_success),
        grid_max=float(grid_success.max()),
        grid_argmax_t=float(grid_t[i_max]),
        passed=passed,
    )
