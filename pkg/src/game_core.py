"""
Finite-game core for the Dual Curriculum Design laboratory.

This module provides:
- PayoffGame / DualGameSpec / Profile: exact student x teacher games
- Regret, worst-case regret and teacher utilities
- Dual-game utilities and per-player Nash gaps (exploitability)
- A certified zero-sum solver (LP via scipy, or optimistic multiplicative weights)
- The regret counterexample game and its equilibrium profile
- Numerical checks of the dual-game approximation bounds and the regret guarantees they imply
- A small text format for payoff matrices
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import linprog

from src.errors import InvalidInputError, PreconditionError, SolverError

logger = logging.getLogger(__name__)

SIMPLEX_ATOL = 1e-12


# ============================================================================
# DOMAIN TYPES
# ============================================================================

def _as_distribution(probs, name: str) -> np.ndarray:
    arr = np.asarray(probs, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidInputError(f"{name} must be a non-empty vector")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} has negative or non-finite entries")
    if abs(arr.sum() - 1.0) > SIMPLEX_ATOL:
        raise InvalidInputError(f"{name} sums to {arr.sum():.15f}, expected 1")
    return arr


def normalize_weights(weights) -> np.ndarray:
    """Clip tiny negatives from a solver and renormalize onto the simplex."""
    w = np.clip(np.asarray(weights, dtype=float), 0.0, None)
    total = w.sum()
    if total <= 0:
        raise InvalidInputError("weights sum to zero")
    return w / total


@dataclass(frozen=True, eq=False)
class MixedStudent:
    """Mixed strategy over the student's policies."""
    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _as_distribution(self.probs, "student"))

    @classmethod
    def pure(cls, num_policies: int, index: int) -> "MixedStudent":
        probs = np.zeros(num_policies)
        probs[index] = 1.0
        return cls(probs)

    @classmethod
    def from_weights(cls, weights) -> "MixedStudent":
        return cls(normalize_weights(weights))

    @property
    def size(self) -> int:
        return self.probs.size


@dataclass(frozen=True, eq=False)
class MixedTeacher:
    """Mixed strategy over level parameters."""
    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _as_distribution(self.probs, "teacher"))

    @classmethod
    def pure(cls, num_params: int, index: int) -> "MixedTeacher":
        probs = np.zeros(num_params)
        probs[index] = 1.0
        return cls(probs)

    @classmethod
    def uniform(cls, num_params: int) -> "MixedTeacher":
        return cls(np.full(num_params, 1.0 / num_params))

    @classmethod
    def from_weights(cls, weights) -> "MixedTeacher":
        return cls(normalize_weights(weights))

    @property
    def size(self) -> int:
        return self.probs.size


@dataclass(frozen=True, eq=False)
class PayoffGame:
    """
    Student x parameter value matrix, values[i][j] = V^{theta_j}(pi_i).

    Every entry must lie in [lower_bound, upper_bound].
    """
    values: np.ndarray
    lower_bound: float
    upper_bound: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] == 0 or values.shape[1] == 0:
            raise InvalidInputError("values must be a non-empty matrix")
        if self.lower_bound > self.upper_bound:
            raise InvalidInputError(
                f"lower bound {self.lower_bound} exceeds upper bound {self.upper_bound}"
            )
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("values must be finite")
        if values.min() < self.lower_bound or values.max() > self.upper_bound:
            raise InvalidInputError(
                f"payoffs outside [{self.lower_bound}, {self.upper_bound}]"
            )
        object.__setattr__(self, "values", values)

    @property
    def num_policies(self) -> int:
        return self.values.shape[0]

    @property
    def num_params(self) -> int:
        return self.values.shape[1]

    def shifted(self, constant: float) -> "PayoffGame":
        """Same game with every payoff (and both bounds) moved by `constant`."""
        return PayoffGame(
            self.values + constant, self.lower_bound + constant, self.upper_bound + constant
        )


class ObjectiveKind(str, Enum):
    REGRET = "Regret"
    UNIFORM = "Uniform"


@dataclass(frozen=True)
class TeacherObjective:
    """Teacher utility: regret of the student, or a constant C (random teacher)."""
    kind: ObjectiveKind = ObjectiveKind.REGRET
    constant: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ObjectiveKind(self.kind))


@dataclass(frozen=True)
class DualGameSpec:
    """Base game plus two teacher objectives; teacher 1 plays with probability p."""
    base: PayoffGame
    teacher1: TeacherObjective
    teacher2: TeacherObjective
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise InvalidInputError(f"p must lie in [0, 1], got {self.p}")


@dataclass(frozen=True, eq=False)
class Profile:
    """Strategy triple (student, teacher 1, teacher 2) of the dual game."""
    student: MixedStudent
    teacher1: MixedTeacher
    teacher2: MixedTeacher

    def combined_teacher(self, p: float) -> np.ndarray:
        return p * self.teacher1.probs + (1.0 - p) * self.teacher2.probs


class BaseGame(str, Enum):
    """Which base game a dual-game equilibrium is projected onto."""
    JOINT = "Joint"
    TEACHER1 = "Teacher1"
    TEACHER2 = "Teacher2"


class BoundCheck(NamedTuple):
    bound: float
    measured: float
    ok: bool


@dataclass
class ZeroSumSolution:
    """Row player minimizes x^T M y, column player maximizes it."""
    row: np.ndarray
    col: np.ndarray
    value: float
    exploitability: float
    iterations: int = 0
    method: str = "lp"


# ============================================================================
# VALIDATION HELPERS
# ============================================================================

def _check_student(game: PayoffGame, student: MixedStudent):
    if student.size != game.num_policies:
        raise InvalidInputError(
            f"student has {student.size} entries, game has {game.num_policies} policies"
        )


def _check_teacher(game: PayoffGame, teacher: MixedTeacher):
    if teacher.size != game.num_params:
        raise InvalidInputError(
            f"teacher has {teacher.size} entries, game has {game.num_params} parameters"
        )


def _check_profile(spec: DualGameSpec, profile: Profile):
    _check_student(spec.base, profile.student)
    _check_teacher(spec.base, profile.teacher1)
    _check_teacher(spec.base, profile.teacher2)


# ============================================================================
# REGRET AND UTILITIES
# ============================================================================

def regret_matrix(game: PayoffGame) -> np.ndarray:
    """M[i][j] = max_k V(k, j) - V(i, j). Entrywise nonnegative."""
    return game.values.max(axis=0, keepdims=True) - game.values


def regret(game: PayoffGame, student: MixedStudent, param_index: int) -> float:
    """
    Regret of a (mixed) student on one parameter against the best policy.

    Args:
        game: Base game
        student: Student mixture
        param_index: Column index j

    Returns:
        max_i V^{theta_j}(pi_i) - V^{theta_j}(student)
    """
    _check_student(game, student)
    if not 0 <= param_index < game.num_params:
        raise InvalidInputError(f"param_index {param_index} out of range")
    return float(student.probs @ regret_matrix(game)[:, param_index])


def worst_case_regret(game: PayoffGame, student: MixedStudent) -> Tuple[float, int]:
    """Maximum regret over all parameters, with its argmax (lowest index on ties)."""
    _check_student(game, student)
    per_param = student.probs @ regret_matrix(game)
    index = int(np.argmax(per_param))
    return float(per_param[index]), index


def objective_matrix(obj: TeacherObjective, game: PayoffGame) -> np.ndarray:
    """Teacher payoff on the pure (policy, parameter) grid."""
    if obj.kind == ObjectiveKind.UNIFORM:
        return np.full(game.values.shape, float(obj.constant))
    return regret_matrix(game)


def teacher_utility(
    obj: TeacherObjective, game: PayoffGame, student: MixedStudent, teacher: MixedTeacher
) -> float:
    """Expected teacher utility under both mixtures."""
    _check_student(game, student)
    _check_teacher(game, teacher)
    if obj.kind == ObjectiveKind.UNIFORM:
        return float(obj.constant)
    return float(student.probs @ regret_matrix(game) @ teacher.probs)


def student_utility(game: PayoffGame, student: MixedStudent, teacher_probs: np.ndarray) -> float:
    return float(student.probs @ game.values @ teacher_probs)


def dual_utilities(spec: DualGameSpec, profile: Profile) -> Tuple[float, float, float]:
    """
    Utilities of the dual curriculum game.

    Returns:
        (U_s, U1_t, U2_t) with U_s = p U_s(pi, theta1) + (1-p) U_s(pi, theta2),
        U1_t = p U1(pi, theta1) and U2_t = (1-p) U2(pi, theta2)
    """
    _check_profile(spec, profile)
    game, p = spec.base, spec.p
    u_s = (
        p * student_utility(game, profile.student, profile.teacher1.probs)
        + (1.0 - p) * student_utility(game, profile.student, profile.teacher2.probs)
    )
    u_1 = p * teacher_utility(spec.teacher1, game, profile.student, profile.teacher1)
    u_2 = (1.0 - p) * teacher_utility(spec.teacher2, game, profile.student, profile.teacher2)
    return u_s, u_1, u_2


def nash_gap(spec: DualGameSpec, profile: Profile) -> Tuple[float, float, float]:
    """
    Per-player exploitability of a dual-game profile.

    Each gap is the best-response utility minus the current utility for that
    player with the other two held fixed, measured in dual-game utilities.
    Pure best responses suffice because utilities are linear in each
    player's own mixture.
    """
    _check_profile(spec, profile)
    game, p = spec.base, spec.p
    s = profile.student.probs

    per_policy = game.values @ profile.combined_teacher(p)
    student_gap = per_policy.max() - s @ per_policy

    u1 = s @ objective_matrix(spec.teacher1, game)
    gap1 = p * (u1.max() - u1 @ profile.teacher1.probs)

    u2 = s @ objective_matrix(spec.teacher2, game)
    gap2 = (1.0 - p) * (u2.max() - u2 @ profile.teacher2.probs)

    return float(max(student_gap, 0.0)), float(max(gap1, 0.0)), float(max(gap2, 0.0))


def is_certified(spec: DualGameSpec, profile: Profile, certify_eps: float) -> bool:
    return max(nash_gap(spec, profile)) <= certify_eps


# ============================================================================
# ZERO-SUM SOLVING
# ============================================================================

def exploitability_zero_sum(matrix: np.ndarray, row: np.ndarray, col: np.ndarray) -> float:
    """Duality gap of (row, col) when the row player minimizes x^T M y."""
    return float((row @ matrix).max() - (matrix @ col).min())


_HIGHS_OPTIONS = {
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
}


def _solve_lp(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    n_rows, n_cols = matrix.shape

    # row player: min z  s.t.  (x^T M)_j <= z, sum x = 1
    c = np.zeros(n_rows + 1)
    c[-1] = 1.0
    a_ub = np.hstack([matrix.T, -np.ones((n_cols, 1))])
    a_eq = np.hstack([np.ones((1, n_rows)), np.zeros((1, 1))])
    bounds = [(0, None)] * n_rows + [(None, None)]
    res_row = linprog(c, A_ub=a_ub, b_ub=np.zeros(n_cols), A_eq=a_eq, b_eq=[1.0],
                      bounds=bounds, method="highs", options=_HIGHS_OPTIONS)

    # column player: max w  s.t.  (M y)_i >= w, sum y = 1
    c = np.zeros(n_cols + 1)
    c[-1] = -1.0
    a_ub = np.hstack([-matrix, np.ones((n_rows, 1))])
    a_eq = np.hstack([np.ones((1, n_cols)), np.zeros((1, 1))])
    bounds = [(0, None)] * n_cols + [(None, None)]
    res_col = linprog(c, A_ub=a_ub, b_ub=np.zeros(n_rows), A_eq=a_eq, b_eq=[1.0],
                      bounds=bounds, method="highs", options=_HIGHS_OPTIONS)

    if res_row.status != 0 or res_col.status != 0:
        raise SolverError(
            f"linprog failed: {res_row.message} / {res_col.message}", float("inf")
        )
    return normalize_weights(res_row.x[:n_rows]), normalize_weights(res_col.x[:n_cols])


def _solve_optimistic_hedge(
    matrix: np.ndarray, tolerance: float, max_iters: int, eta: float = 0.1, check_every: int = 100
) -> Tuple[np.ndarray, np.ndarray, int, float]:
    n_rows, n_cols = matrix.shape
    spread = float(matrix.max() - matrix.min())
    scaled = (matrix - matrix.min()) / spread if spread > 0 else np.zeros_like(matrix)

    log_x = np.zeros(n_rows)
    log_y = np.zeros(n_cols)
    prev_loss = np.zeros(n_rows)
    prev_gain = np.zeros(n_cols)
    cum_loss = np.zeros(n_rows)
    cum_gain = np.zeros(n_cols)
    sum_x = np.zeros(n_rows)
    sum_y = np.zeros(n_cols)
    exploit = float("inf")

    for it in range(1, max_iters + 1):
        # optimistic step: predict next payoff with the last observed one
        log_x = -eta * (cum_loss + prev_loss)
        log_y = eta * (cum_gain + prev_gain)
        x = np.exp(log_x - log_x.max())
        x /= x.sum()
        y = np.exp(log_y - log_y.max())
        y /= y.sum()

        loss = scaled @ y
        gain = x @ scaled
        cum_loss += loss
        cum_gain += gain
        prev_loss, prev_gain = loss, gain
        sum_x += x
        sum_y += y

        if it % check_every == 0 or it == max_iters:
            exploit = exploitability_zero_sum(matrix, sum_x / it, sum_y / it)
            if exploit <= tolerance:
                return sum_x / it, sum_y / it, it, exploit

    return sum_x / max_iters, sum_y / max_iters, max_iters, exploit


def solve_zero_sum(
    matrix: np.ndarray,
    tolerance: float = 1e-9,
    method: str = "lp",
    max_iters: int = 10**6,
) -> ZeroSumSolution:
    """
    Solve a zero-sum matrix game where the row player minimizes x^T M y.

    Args:
        matrix: Payoff matrix paid by the row player
        tolerance: Required exploitability certificate
        method: 'lp' (HiGHS linear program) or 'mwu' (optimistic multiplicative weights)
        max_iters: Iteration cap for 'mwu'

    Returns:
        ZeroSumSolution with value = max_j (x^T M)_j, the row player's guarantee

    Raises:
        SolverError: if the certificate exceeds the tolerance
    """
    matrix = np.asarray(matrix, dtype=float)
    if tolerance <= 0:
        raise InvalidInputError("tolerance must be positive")

    iterations = 0
    if method == "lp":
        row, col = _solve_lp(matrix)
        exploit = exploitability_zero_sum(matrix, row, col)
    elif method == "mwu":
        row, col, iterations, exploit = _solve_optimistic_hedge(matrix, tolerance, max_iters)
    else:
        raise InvalidInputError(f"unknown solver method '{method}'")

    if exploit > tolerance:
        raise SolverError(f"{method} solver did not reach tolerance {tolerance:.1e}", exploit)
    if exploit > 0.5 * tolerance:
        logger.warning("zero-sum %s solve is near tolerance: exploitability=%.2e tolerance=%.1e",
                       method, exploit, tolerance)

    value = float((row @ matrix).max())
    logger.debug("zero-sum %s solve: value=%.9f exploitability=%.2e", method, value, exploit)
    return ZeroSumSolution(row=row, col=col, value=value, exploitability=exploit,
                           iterations=iterations, method=method)


def minimax_regret_solve(
    game: PayoffGame, tolerance: float = 1e-9, method: str = "lp", max_iters: int = 10**6
) -> Tuple[float, MixedStudent]:
    """
    Minimax regret value R* and a student attaining it.

    Solved as the zero-sum game on the regret matrix; the returned student's
    worst-case regret is within `tolerance` of R*.
    """
    solution = solve_zero_sum(regret_matrix(game), tolerance, method, max_iters)
    student = MixedStudent.from_weights(solution.row)
    r_star, _ = worst_case_regret(game, student)
    return r_star, student


# ============================================================================
# REGRET COUNTEREXAMPLE
# ============================================================================

def build_table1_game(B: float = 1.0, p: float = 0.5, eps: float = 0.1, n: int = 2) -> PayoffGame:
    """
    Four policies over n+1 parameters where uniform-teacher value favours
    high-regret policies.

    pi_0 and pi_1 are specialists on theta_0 / theta_1 (value B); pi_2 and pi_3
    trade some of that for value Bp/2 + eps on the filler parameters
    theta_2..theta_n.
    """
    if B <= 0:
        raise InvalidInputError(f"B must be positive, got {B}")
    if not 0.0 < p < 1.0:
        raise InvalidInputError(f"p must lie in (0, 1), got {p}")
    if not 0.0 < eps < B * (1.0 - p) / 2.0:
        raise InvalidInputError(f"eps must lie in (0, B(1-p)/2) = (0, {B * (1 - p) / 2}), got {eps}")
    if n < 2:
        raise InvalidInputError(f"n must be at least 2, got {n}")

    values = np.zeros((4, n + 1))
    values[0, 0] = B
    values[1, 1] = B
    values[2, 0] = B * p + 2 * eps
    values[3, 1] = B * p + 2 * eps
    values[2:, 2:] = B * p / 2 + eps
    return PayoffGame(values, 0.0, B)


def counterexample_profile(B: float = 1.0, p: float = 0.5, eps: float = 0.1, n: int = 2) -> Profile:
    """Equilibrium of the counterexample's dual game with a regret and a random teacher."""
    game = build_table1_game(B, p, eps, n)
    filler = np.zeros(game.num_params)
    filler[2:] = 1.0 / (n - 1)
    return Profile(
        student=MixedStudent(np.array([0.0, 0.0, 0.5, 0.5])),
        teacher1=MixedTeacher(np.concatenate([[0.5, 0.5], np.zeros(n - 1)])),
        teacher2=MixedTeacher(filler),
    )


def counterexample_spec(B: float = 1.0, p: float = 0.5, eps: float = 0.1, n: int = 2) -> DualGameSpec:
    return DualGameSpec(
        base=build_table1_game(B, p, eps, n),
        teacher1=TeacherObjective(ObjectiveKind.REGRET),
        teacher2=TeacherObjective(ObjectiveKind.UNIFORM),
        p=p,
    )


# ============================================================================
# EQUILIBRIA OF THE DUAL GAME
# ============================================================================

def best_response_equilibrium(
    spec: DualGameSpec,
    start: Tuple[int, int, int],
    max_iters: int = 100,
    tol: float = 1e-12,
) -> Optional[Profile]:
    """
    Alternating pure best responses from a pure start (student, theta1, theta2).

    A player keeps its action while it is still a best response; otherwise it
    switches to the lowest-index best response. Returns the pure profile once
    nobody moves, or None if the iteration cycles past `max_iters`.
    """
    game, p = spec.base, spec.p
    u1 = objective_matrix(spec.teacher1, game)
    u2 = objective_matrix(spec.teacher2, game)
    i, j1, j2 = start

    for _ in range(max_iters):
        changed = False

        per_policy = p * game.values[:, j1] + (1.0 - p) * game.values[:, j2]
        if per_policy[i] < per_policy.max() - tol:
            i = int(np.argmax(per_policy))
            changed = True
        if u1[i, j1] < u1[i].max() - tol:
            j1 = int(np.argmax(u1[i]))
            changed = True
        if u2[i, j2] < u2[i].max() - tol:
            j2 = int(np.argmax(u2[i]))
            changed = True

        if not changed:
            return Profile(
                MixedStudent.pure(game.num_policies, i),
                MixedTeacher.pure(game.num_params, j1),
                MixedTeacher.pure(game.num_params, j2),
            )
    return None


def _free_teacher(num_params: int, rng: Optional[np.random.Generator]) -> MixedTeacher:
    if rng is None:
        return MixedTeacher.uniform(num_params)
    return MixedTeacher.from_weights(rng.dirichlet(np.ones(num_params)))


def solve_dual_equilibrium(
    spec: DualGameSpec, rng: Optional[np.random.Generator] = None, tolerance: float = 1e-9
) -> Profile:
    """
    Mixed equilibrium of the dual game by strategic zero-sum reduction.

    Teacher utilities are separable and a random teacher is indifferent over
    its strategies, so once every random teacher's strategy is fixed the
    student faces the regret teachers in a game that is strategically
    zero-sum; that game is solved exactly by LP. Random teachers get a
    uniform strategy, or a Dirichlet draw when `rng` is given.
    """
    game, p = spec.base, spec.p
    values, regrets = game.values, regret_matrix(game)
    kind1, kind2 = spec.teacher1.kind, spec.teacher2.kind

    if kind1 == ObjectiveKind.REGRET and kind2 == ObjectiveKind.REGRET:
        solution = solve_zero_sum(regrets, tolerance)
        teacher = MixedTeacher.from_weights(solution.col)
        return Profile(MixedStudent.from_weights(solution.row), teacher, teacher)

    if kind1 == ObjectiveKind.REGRET:
        fixed = _free_teacher(game.num_params, rng)
        loss = p * regrets - (1.0 - p) * (values @ fixed.probs)[:, None]
        solution = solve_zero_sum(loss, tolerance)
        return Profile(MixedStudent.from_weights(solution.row),
                       MixedTeacher.from_weights(solution.col), fixed)

    if kind2 == ObjectiveKind.REGRET:
        fixed = _free_teacher(game.num_params, rng)
        loss = (1.0 - p) * regrets - p * (values @ fixed.probs)[:, None]
        solution = solve_zero_sum(loss, tolerance)
        return Profile(MixedStudent.from_weights(solution.row), fixed,
                       MixedTeacher.from_weights(solution.col))

    teacher1 = _free_teacher(game.num_params, rng)
    teacher2 = _free_teacher(game.num_params, rng)
    per_policy = values @ (p * teacher1.probs + (1.0 - p) * teacher2.probs)
    return Profile(MixedStudent.pure(game.num_policies, int(np.argmax(per_policy))),
                   teacher1, teacher2)


# ============================================================================
# BOUND CHECKS
# ============================================================================

def objective_difference(spec: DualGameSpec) -> float:
    """B: largest pointwise |U1 - U2| over the pure (policy, parameter) grid."""
    diff = objective_matrix(spec.teacher1, spec.base) - objective_matrix(spec.teacher2, spec.base)
    return float(np.abs(diff).max())


def _require_certified(spec: DualGameSpec, profile: Profile, certify_eps: float):
    gaps = nash_gap(spec, profile)
    if max(gaps) > certify_eps:
        raise PreconditionError(
            f"profile is not a {certify_eps:.1e}-equilibrium of the dual game (gaps {gaps})"
        )


def theorem1_bound_check(
    spec: DualGameSpec, profile: Profile, which: BaseGame, certify_eps: float = 1e-8
) -> BoundCheck:
    """
    Project a certified dual-game equilibrium onto a base game and compare
    its exploitability with the approximation bound.

    The combined teacher p*theta1 + (1-p)*theta2 plays against the student
    in the base game whose teacher objective is the joint p*U1 + (1-p)*U2,
    U1 alone, or U2 alone; bounds are 2Bp(1-p), 2B(1-p) and 2Bp.

    Raises:
        PreconditionError: if the profile is not a certify_eps equilibrium
    """
    _require_certified(spec, profile, certify_eps)
    which = BaseGame(which)
    game, p = spec.base, spec.p
    b = objective_difference(spec)
    u1 = objective_matrix(spec.teacher1, game)
    u2 = objective_matrix(spec.teacher2, game)

    if which == BaseGame.JOINT:
        teacher_payoff, bound = p * u1 + (1.0 - p) * u2, 2 * b * p * (1.0 - p)
    elif which == BaseGame.TEACHER1:
        teacher_payoff, bound = u1, 2 * b * (1.0 - p)
    else:
        teacher_payoff, bound = u2, 2 * b * p

    s = profile.student.probs
    combined = profile.combined_teacher(p)
    per_policy = game.values @ combined
    student_gap = per_policy.max() - s @ per_policy
    per_param = s @ teacher_payoff
    teacher_gap = per_param.max() - per_param @ combined

    measured = float(max(student_gap, teacher_gap, 0.0))
    ok = measured <= bound + 2 * certify_eps + 1e-9
    return BoundCheck(float(bound), measured, bool(ok))


def excess_regret_check(
    spec: DualGameSpec, profile: Profile, certify_eps: float = 1e-8, tolerance: float = 1e-9
) -> BoundCheck:
    """Excess worst-case regret of a regret/random equilibrium vs 2(B+ - B-)(1-p)."""
    if spec.teacher1.kind != ObjectiveKind.REGRET or spec.teacher2.kind != ObjectiveKind.UNIFORM:
        raise PreconditionError("needs a regret teacher 1 and a random teacher 2")
    _require_certified(spec, profile, certify_eps)
    r_star, _ = minimax_regret_solve(spec.base, tolerance)
    measured = worst_case_regret(spec.base, profile.student)[0] - r_star
    bound = 2 * (spec.base.upper_bound - spec.base.lower_bound) * (1.0 - spec.p)
    ok = measured <= bound + 3 * certify_eps + tolerance + 1e-9
    return BoundCheck(float(bound), float(measured), bool(ok))


def regret_pair_check(
    spec: DualGameSpec, profile: Profile, certify_eps: float = 1e-8, tolerance: float = 1e-9
) -> BoundCheck:
    """With two regret teachers the equilibrium student is minimax regret.

    Returns (R*, worst-case regret of the student, ok).
    """
    if spec.teacher1.kind != ObjectiveKind.REGRET or spec.teacher2.kind != ObjectiveKind.REGRET:
        raise PreconditionError("needs two regret teachers")
    _require_certified(spec, profile, certify_eps)
    r_star, _ = minimax_regret_solve(spec.base, tolerance)
    measured = worst_case_regret(spec.base, profile.student)[0]
    ok = abs(measured - r_star) <= 1e-6 + 3 * certify_eps + tolerance
    return BoundCheck(float(r_star), float(measured), bool(ok))


# ============================================================================
# RANDOM GAMES, TEXT FORMAT, VERIFICATION SUITE
# ============================================================================

def random_game(
    rng: np.random.Generator, num_policies: int, num_params: int,
    low: float = 0.0, high: float = 1.0,
) -> PayoffGame:
    return PayoffGame(rng.uniform(low, high, size=(num_policies, num_params)), low, high)


def dump_game(game: PayoffGame) -> str:
    """Header 'num_policies num_params B- B+' then one row per policy."""
    lines = [f"{game.num_policies} {game.num_params} {game.lower_bound!r} {game.upper_bound!r}"]
    for row in game.values:
        lines.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def load_game(text: str) -> PayoffGame:
    lines = [line for line in text.strip().splitlines() if line.strip()]
    if not lines:
        raise InvalidInputError("empty game text")
    header = lines[0].split()
    if len(header) != 4:
        raise InvalidInputError("line 1: expected 'num_policies num_params B- B+'")
    try:
        num_policies, num_params = int(header[0]), int(header[1])
        lower, upper = float(header[2]), float(header[3])
    except ValueError as e:
        raise InvalidInputError(f"line 1: {e}") from e
    if len(lines) - 1 != num_policies:
        raise InvalidInputError(f"expected {num_policies} payoff rows, found {len(lines) - 1}")

    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            row = [float(tok) for tok in line.split()]
        except ValueError as e:
            raise InvalidInputError(f"line {lineno}: {e}") from e
        if len(row) != num_params:
            raise InvalidInputError(f"line {lineno}: expected {num_params} payoffs, got {len(row)}")
        rows.append(row)
    return PayoffGame(np.array(rows), lower, upper)


P_GRID = [round(0.1 * k, 1) for k in range(1, 10)]
_KIND_PAIRS = [
    (ObjectiveKind.REGRET, ObjectiveKind.UNIFORM),
    (ObjectiveKind.UNIFORM, ObjectiveKind.REGRET),
    (ObjectiveKind.REGRET, ObjectiveKind.REGRET),
    (ObjectiveKind.UNIFORM, ObjectiveKind.UNIFORM),
]


def candidate_equilibria(
    spec: DualGameSpec, rng: np.random.Generator, num_starts: int = 3, certify_eps: float = 1e-8
) -> List[Profile]:
    """Certified equilibria from best-response restarts plus the LP reduction."""
    game = spec.base
    found = []
    for _ in range(num_starts):
        start = (int(rng.integers(game.num_policies)), int(rng.integers(game.num_params)),
                 int(rng.integers(game.num_params)))
        profile = best_response_equilibrium(spec, start)
        if profile is not None and is_certified(spec, profile, certify_eps):
            found.append(profile)
    profile = solve_dual_equilibrium(spec, rng)
    if is_certified(spec, profile, certify_eps):
        found.append(profile)
    return found


def bound_sweep(
    num_games: int = 500, seed: int = 0, max_size: int = 5, certify_eps: float = 1e-8
) -> dict:
    """Random games x p grid x objective pairs; counts certified profiles and failures."""
    root = np.random.SeedSequence(seed)
    checked = failures = 0
    worst_slack = -np.inf
    for k, child in enumerate(root.spawn(num_games)):
        rng = np.random.default_rng(child)
        game = random_game(rng, int(rng.integers(1, max_size + 1)), int(rng.integers(1, max_size + 1)))
        kind1, kind2 = _KIND_PAIRS[k % len(_KIND_PAIRS)]
        spec = DualGameSpec(game, TeacherObjective(kind1), TeacherObjective(kind2), P_GRID[k % len(P_GRID)])
        for profile in candidate_equilibria(spec, rng, certify_eps=certify_eps):
            for which in BaseGame:
                check = theorem1_bound_check(spec, profile, which, certify_eps)
                checked += 1
                worst_slack = max(worst_slack, check.measured - check.bound)
                if not check.ok:
                    failures += 1
                    logger.warning("bound violated: game %d %s %s", k, which.value, check)
    return {"checked": checked, "failures": failures, "worst_slack": float(worst_slack)}


def regret_pair_sweep(
    num_games: int = 20, seed: int = 1, max_size: int = 5, certify_eps: float = 1e-8
) -> dict:
    root = np.random.SeedSequence(seed)
    checked = failures = 0
    for k, child in enumerate(root.spawn(num_games)):
        rng = np.random.default_rng(child)
        game = random_game(rng, int(rng.integers(2, max_size + 1)), int(rng.integers(2, max_size + 1)))
        spec = DualGameSpec(game, TeacherObjective(ObjectiveKind.REGRET),
                            TeacherObjective(ObjectiveKind.REGRET), P_GRID[k % len(P_GRID)])
        for profile in candidate_equilibria(spec, rng, certify_eps=certify_eps):
            checked += 1
            if not regret_pair_check(spec, profile, certify_eps).ok:
                failures += 1
    return {"checked": checked, "failures": failures}


def verify_game_suite(
    B: float = 1.0, p: float = 0.5, eps: float = 0.1, n: int = 2,
    num_random: int = 500, num_regret_pair: int = 20, seed: int = 0,
) -> pd.DataFrame:
    """
    The game-core acceptance checks as a table.

    Returns:
        DataFrame with columns check, bound, measured, ok
    """
    spec = counterexample_spec(B, p, eps, n)
    profile = counterexample_profile(B, p, eps, n)
    rows = []

    gaps = nash_gap(spec, profile)
    rows.append(("counterexample_nash_gap", 1e-9, max(gaps), max(gaps) <= 1e-9))

    wcr, _ = worst_case_regret(spec.base, profile.student)
    expected_wcr = B / 2 + B * (1 - p) / 2 - eps
    rows.append(("counterexample_worst_case_regret", expected_wcr, wcr, abs(wcr - expected_wcr) <= 1e-9))

    r_star, _ = minimax_regret_solve(spec.base)
    rows.append(("counterexample_minimax_regret", B / 2, r_star, abs(r_star - B / 2) <= 1e-6))

    expected_gap = B * (1 - p) / 2 - eps
    rows.append(("counterexample_regret_gap", expected_gap, wcr - r_star,
                 abs((wcr - r_star) - expected_gap) <= 1e-6))

    for which in BaseGame:
        check = theorem1_bound_check(spec, profile, which, 1e-9)
        rows.append((f"counterexample_bound_{which.value.lower()}", check.bound, check.measured, check.ok))

    check = excess_regret_check(spec, profile, 1e-9)
    rows.append(("counterexample_excess_regret", check.bound, check.measured, check.ok))

    if num_random > 0:
        sweep = bound_sweep(num_random, seed)
        rows.append(("bound_sweep_failures", 0, sweep["failures"],
                     sweep["failures"] == 0 and sweep["checked"] > 0))
    if num_regret_pair > 0:
        sweep = regret_pair_sweep(num_regret_pair, seed + 1)
        rows.append(("regret_pair_sweep_failures", 0, sweep["failures"],
                     sweep["failures"] == 0 and sweep["checked"] > 0))

    return pd.DataFrame(rows, columns=["check", "bound", "measured", "ok"])


def analyze_game(game: PayoffGame, p: float = 0.5, certify_eps: float = 1e-8,
                 seed: int = 0) -> pd.DataFrame:
    """Bound checks for a user-supplied game under every pair of teacher objectives."""
    rng = np.random.default_rng(seed)
    r_star, student = minimax_regret_solve(game)
    rows = [("minimax_regret", r_star, worst_case_regret(game, student)[0], True)]
    for kind1, kind2 in _KIND_PAIRS:
        spec = DualGameSpec(game, TeacherObjective(kind1), TeacherObjective(kind2), p)
        profile = solve_dual_equilibrium(spec, rng)
        label = f"{kind1.value.lower()}_{kind2.value.lower()}"
        for which in BaseGame:
            check = theorem1_bound_check(spec, profile, which, certify_eps)
            rows.append((f"bound_{label}_{which.value.lower()}", check.bound, check.measured, check.ok))
        if kind1 == kind2 == ObjectiveKind.REGRET:
            check = regret_pair_check(spec, profile, certify_eps)
            rows.append(("regret_pair", check.bound, check.measured, check.ok))
        elif kind1 == ObjectiveKind.REGRET and kind2 == ObjectiveKind.UNIFORM:
            check = excess_regret_check(spec, profile, certify_eps)
            rows.append(("excess_regret", check.bound, check.measured, check.ok))
    return pd.DataFrame(rows, columns=["check", "bound", "measured", "ok"])


if __name__ == "__main__":
    print("=== DUAL GAME CHECKS ===\n")
    print(verify_game_suite(num_random=50, num_regret_pair=5).to_string(index=False))
