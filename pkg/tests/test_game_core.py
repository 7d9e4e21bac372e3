"""
Unit tests for the finite dual curriculum game
"""

import logging
import pytest
import sys
from pathlib import Path

import numpy as np

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.errors import InvalidInputError, PreconditionError, SolverError
from src.game_core import (
    BaseGame,
    DualGameSpec,
    MixedStudent,
    MixedTeacher,
    ObjectiveKind,
    PayoffGame,
    Profile,
    TeacherObjective,
    analyze_game,
    best_response_equilibrium,
    build_table1_game,
    counterexample_profile,
    excess_regret_check,
    regret_pair_check,
    dual_utilities,
    dump_game,
    exploitability_zero_sum,
    is_certified,
    load_game,
    minimax_regret_solve,
    nash_gap,
    objective_difference,
    random_game,
    regret,
    regret_matrix,
    solve_dual_equilibrium,
    solve_zero_sum,
    counterexample_spec,
    theorem1_bound_check,
    verify_game_suite,
    worst_case_regret,
)


@pytest.fixture
def counterexample():
    return counterexample_spec(), counterexample_profile()


@pytest.fixture
def rng():
    return np.random.default_rng(7)


# ============================================================================
# TYPES
# ============================================================================

class TestTypes:
    """Test strategy and game validation."""

    def test_mixed_student_rejects_non_distribution(self):
        with pytest.raises(InvalidInputError):
            MixedStudent(np.array([0.5, 0.6]))
        with pytest.raises(InvalidInputError):
            MixedStudent(np.array([1.5, -0.5]))

    def test_pure_and_uniform(self):
        assert MixedStudent.pure(3, 1).probs.tolist() == [0.0, 1.0, 0.0]
        assert MixedTeacher.uniform(4).probs == pytest.approx([0.25] * 4)

    def test_payoff_game_bounds_enforced(self):
        with pytest.raises(InvalidInputError):
            PayoffGame(np.array([[0.0, 2.0]]), 0.0, 1.0)
        with pytest.raises(InvalidInputError):
            PayoffGame(np.array([[0.5]]), 1.0, 0.0)

    def test_dual_spec_rejects_bad_p(self):
        game = build_table1_game()
        with pytest.raises(InvalidInputError):
            DualGameSpec(game, TeacherObjective(), TeacherObjective(), 1.5)

    def test_size_mismatch_is_invalid(self):
        game = build_table1_game()
        with pytest.raises(InvalidInputError):
            worst_case_regret(game, MixedStudent.pure(2, 0))


# ============================================================================
# REGRET
# ============================================================================

class TestRegret:
    """Test regret of pure and mixed students."""

    def test_regret_matrix_nonnegative_with_zero_column_minimum(self, rng):
        game = random_game(rng, 4, 5)
        m = regret_matrix(game)
        assert (m >= 0).all()
        assert m.min(axis=0) == pytest.approx(np.zeros(5))

    def test_counterexample_regret_values(self):
        game = build_table1_game()
        student = MixedStudent(np.array([0.0, 0.0, 0.5, 0.5]))
        assert regret(game, student, 0) == pytest.approx(0.65)
        assert regret(game, student, 2) == pytest.approx(0.0)

    def test_worst_case_regret_breaks_ties_low(self):
        game = build_table1_game()
        value, index = worst_case_regret(game, MixedStudent(np.array([0.0, 0.0, 0.5, 0.5])))
        assert value == pytest.approx(0.65)
        assert index == 0

    def test_regret_is_shift_invariant(self, rng):
        game = random_game(rng, 3, 4)
        student = MixedStudent.from_weights(rng.random(3))
        assert worst_case_regret(game.shifted(5.0), student)[0] == pytest.approx(
            worst_case_regret(game, student)[0]
        )

    def test_regret_stays_within_payoff_range(self, rng):
        for _ in range(1000):
            low = float(rng.uniform(-2.0, 1.0))
            high = low + float(rng.uniform(0.1, 3.0))
            game = random_game(rng, int(rng.integers(1, 6)), int(rng.integers(1, 6)), low, high)
            student = MixedStudent.from_weights(rng.random(game.num_policies))
            per_param = [regret(game, student, j) for j in range(game.num_params)]
            assert min(per_param) >= 0.0
            assert max(per_param) <= high - low + 1e-12

    @pytest.mark.parametrize("offset", [-3.0, 0.25, 10.0])
    def test_minimax_regret_is_translation_invariant(self, rng, offset):
        for _ in range(10):
            game = random_game(rng, 4, 5)
            r_star, _ = minimax_regret_solve(game)
            shifted_r_star, _ = minimax_regret_solve(game.shifted(offset))
            assert shifted_r_star == pytest.approx(r_star, abs=1e-8)

    def test_param_index_out_of_range(self):
        game = build_table1_game()
        with pytest.raises(InvalidInputError):
            regret(game, MixedStudent.pure(4, 0), 3)


# ============================================================================
# ZERO-SUM SOLVER
# ============================================================================

class TestZeroSum:
    """Test the LP and optimistic multiplicative-weights solvers."""

    def test_matching_pennies_value(self):
        solution = solve_zero_sum(np.array([[1.0, 0.0], [0.0, 1.0]]))
        assert solution.value == pytest.approx(0.5)
        assert solution.row == pytest.approx([0.5, 0.5])
        assert solution.exploitability <= 1e-9

    def test_lp_certificate_on_random_games(self, rng):
        for _ in range(10):
            matrix = rng.uniform(-1, 1, size=(4, 6))
            solution = solve_zero_sum(matrix)
            assert exploitability_zero_sum(matrix, solution.row, solution.col) <= 1e-9

    def test_mwu_reaches_loose_tolerance(self):
        matrix = np.array([[1.0, 0.0], [0.0, 2.0]])
        solution = solve_zero_sum(matrix, tolerance=1e-3, method="mwu", max_iters=200_000)
        assert solution.value == pytest.approx(2.0 / 3.0, abs=1e-3)
        assert solution.iterations > 0

    def test_mwu_iteration_cap_raises(self):
        with pytest.raises(SolverError) as exc:
            solve_zero_sum(np.array([[1.0, 0.0], [0.0, 2.0]]), tolerance=1e-12,
                           method="mwu", max_iters=1)
        assert exc.value.exploitability > 0

    def test_warns_near_tolerance(self, monkeypatch, caplog):
        delta = 4e-4
        monkeypatch.setattr("src.game_core._solve_lp",
                            lambda matrix: (np.array([0.5 + delta, 0.5 - delta]), np.array([0.5, 0.5])))
        with caplog.at_level(logging.WARNING, logger="src.game_core"):
            solution = solve_zero_sum(np.array([[1.0, -1.0], [-1.0, 1.0]]), tolerance=1e-3)
        assert solution.exploitability == pytest.approx(2 * delta)
        assert "near tolerance" in caplog.text

    def test_exact_solve_does_not_warn(self, caplog):
        with caplog.at_level(logging.WARNING, logger="src.game_core"):
            solve_zero_sum(np.array([[1.0, -1.0], [-1.0, 1.0]]), tolerance=1e-6)
        assert "near tolerance" not in caplog.text

    def test_unknown_method(self):
        with pytest.raises(InvalidInputError):
            solve_zero_sum(np.eye(2), method="simplex")

    def test_minimax_regret_of_counterexample(self):
        r_star, student = minimax_regret_solve(build_table1_game())
        assert r_star == pytest.approx(0.5, abs=1e-6)
        assert worst_case_regret(build_table1_game(), student)[0] == pytest.approx(r_star)


# ============================================================================
# DUAL GAME
# ============================================================================

class TestDualGame:
    """Test utilities, Nash gaps and equilibrium finders."""

    def test_counterexample_profile_is_equilibrium(self, counterexample):
        spec, profile = counterexample
        assert max(nash_gap(spec, profile)) <= 1e-9

    def test_dual_utilities_scale_by_p(self, counterexample):
        spec, profile = counterexample
        u_s, u_1, u_2 = dual_utilities(spec, profile)
        assert u_s == pytest.approx(0.35)
        assert u_1 == pytest.approx(0.5 * 0.65)
        assert u_2 == pytest.approx(0.0)

    def test_deviation_has_positive_gap(self, counterexample):
        spec, profile = counterexample
        moved = Profile(MixedStudent.pure(4, 0), profile.teacher1, profile.teacher2)
        assert nash_gap(spec, moved)[0] > 0

    @pytest.mark.parametrize("kind1,kind2", [
        (ObjectiveKind.REGRET, ObjectiveKind.UNIFORM),
        (ObjectiveKind.UNIFORM, ObjectiveKind.REGRET),
        (ObjectiveKind.REGRET, ObjectiveKind.REGRET),
        (ObjectiveKind.UNIFORM, ObjectiveKind.UNIFORM),
    ])
    def test_solve_dual_equilibrium_is_certified(self, rng, kind1, kind2):
        for p in (0.2, 0.5, 0.8):
            spec = DualGameSpec(random_game(rng, 4, 3), TeacherObjective(kind1),
                                TeacherObjective(kind2), p)
            assert is_certified(spec, solve_dual_equilibrium(spec, rng), 1e-8)

    def test_best_response_result_is_certified_or_none(self, rng):
        spec = DualGameSpec(random_game(rng, 3, 3), TeacherObjective(ObjectiveKind.REGRET),
                            TeacherObjective(ObjectiveKind.UNIFORM), 0.5)
        for start in [(0, 0, 0), (1, 2, 0), (2, 1, 1)]:
            profile = best_response_equilibrium(spec, start)
            assert profile is None or is_certified(spec, profile, 1e-12)


# ============================================================================
# BOUND CHECKS
# ============================================================================

class TestBounds:
    """Test the approximation bounds on the counterexample and random games."""

    def test_objective_difference(self, counterexample):
        spec, _ = counterexample
        assert objective_difference(spec) == pytest.approx(1.0)

    def test_counterexample_bounds(self, counterexample):
        spec, profile = counterexample
        joint = theorem1_bound_check(spec, profile, BaseGame.JOINT)
        assert joint.bound == pytest.approx(0.5)
        assert joint.measured == pytest.approx(0.1625)
        assert joint.ok

        first = theorem1_bound_check(spec, profile, BaseGame.TEACHER1)
        assert first.measured == pytest.approx(0.325)
        assert first.bound == pytest.approx(1.0)

        second = theorem1_bound_check(spec, profile, "Teacher2")
        assert second.measured == pytest.approx(0.0)
        assert second.ok

    def test_counterexample_excess_regret(self, counterexample):
        spec, profile = counterexample
        check = excess_regret_check(spec, profile)
        assert check.measured == pytest.approx(0.15, abs=1e-6)
        assert check.bound == pytest.approx(1.0)
        assert check.ok

    def test_uncertified_profile_rejected(self, counterexample):
        spec, profile = counterexample
        bad = Profile(MixedStudent.pure(4, 0), profile.teacher1, profile.teacher2)
        with pytest.raises(PreconditionError):
            theorem1_bound_check(spec, bad, BaseGame.JOINT)

    def test_objective_preconditions(self, counterexample):
        spec, profile = counterexample
        with pytest.raises(PreconditionError):
            regret_pair_check(spec, profile)
        regret_pair = DualGameSpec(spec.base, TeacherObjective(), TeacherObjective(), spec.p)
        with pytest.raises(PreconditionError):
            excess_regret_check(regret_pair, profile)

    def test_regret_pair_on_random_games(self, rng):
        for p in (0.3, 0.7):
            spec = DualGameSpec(random_game(rng, 4, 4), TeacherObjective(),
                                TeacherObjective(), p)
            check = regret_pair_check(spec, solve_dual_equilibrium(spec))
            assert check.ok
            assert check.measured == pytest.approx(check.bound, abs=1e-6)

    def test_counterexample_gap_grows_as_p_shrinks(self):
        gaps = []
        for p in (0.2, 0.5, 0.8):
            spec, profile = counterexample_spec(p=p, eps=0.05), counterexample_profile(p=p, eps=0.05)
            gaps.append(excess_regret_check(spec, profile).measured)
        assert gaps[0] > gaps[1] > gaps[2]

    def test_counterexample_rejects_out_of_range_eps(self):
        with pytest.raises(InvalidInputError):
            build_table1_game(B=1.0, p=0.5, eps=0.3)


# ============================================================================
# TEXT FORMAT AND SUITES
# ============================================================================

class TestGameText:
    """Test the payoff-matrix text format."""

    def test_dump_and_load(self, rng):
        game = random_game(rng, 2, 3)
        loaded = load_game(dump_game(game))
        assert np.array_equal(loaded.values, game.values)
        assert loaded.upper_bound == game.upper_bound

    def test_load_reports_line(self):
        with pytest.raises(InvalidInputError, match="line 3"):
            load_game("2 2 0 1\n0.1 0.2\n0.3\n")
        with pytest.raises(InvalidInputError):
            load_game("")


class TestSuites:
    """Test the tabulated verification runs."""

    def test_verify_game_suite_small(self):
        table = verify_game_suite(num_random=20, num_regret_pair=3, seed=3)
        assert list(table.columns) == ["check", "bound", "measured", "ok"]
        assert table["ok"].all()
        assert "counterexample_regret_gap" in set(table["check"])

    def test_analyze_game(self, rng):
        table = analyze_game(random_game(rng, 3, 4), p=0.4)
        assert table["ok"].all()
        assert (table["check"] == "regret_pair").sum() == 1

    @pytest.mark.slow
    def test_verify_game_suite_full(self):
        table = verify_game_suite()
        assert table["ok"].all()


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
