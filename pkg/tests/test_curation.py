"""
Unit tests for prioritized level replay
"""

import pytest
import sys
from pathlib import Path

import numpy as np

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.agent import GaeConfig, PolicyTable, ValueTable, collect_trajectory
from src.curation import (
    BufferEntry,
    Decision,
    MaxMcVariant,
    Prioritization,
    ReplayConfig,
    LevelBuffer,
    load_buffer,
    replay_distribution,
    sample_decision,
    sample_replay,
    save_buffer,
    score_max_mc,
    score_positive_value_loss,
    score_true_regret,
    update_buffer,
)
from src.errors import InvalidInputError
from src.maze import EnvConfig, MazeLevel, RolloutMode, Trajectory, decode_level


def make_level(goal: int) -> MazeLevel:
    return MazeLevel(3, 3, frozenset(), 0, 0, goal, 0)


@pytest.fixture
def levels():
    return [make_level(goal) for goal in range(1, 9)]


@pytest.fixture
def short_traj():
    return Trajectory(states=[0, 4, 8], actions=[2, 2], rewards=[0.0, 1.0],
                      values=[0.5, 0.2], terminal_reached=True)


def filled_buffer(levels, scores, timestamps, capacity=None):
    buffer = LevelBuffer(capacity or len(scores))
    config = ReplayConfig()
    for level, score, ts in zip(levels, scores, timestamps):
        update_buffer(buffer, level, score, ts, config)
    return buffer


# ============================================================================
# SCORING
# ============================================================================

class TestScoring:
    """Test the level scoring functions."""

    def test_positive_value_loss(self, short_traj):
        score = score_positive_value_loss(short_traj, GaeConfig(gamma=0.9, gae_lambda=0.5))
        assert score == pytest.approx((0.04 + 0.8) / 2)

    def test_max_mc_variants(self, short_traj):
        assert score_max_mc(short_traj, 1.0) == pytest.approx(0.65)
        assert score_max_mc(short_traj, 1.0, MaxMcVariant.S0) == pytest.approx(0.5)

    @pytest.mark.parametrize("gamma", [1.0, 0.9])
    def test_positive_value_loss_vanishes_with_exact_values(self, gamma):
        corridor = decode_level("6 3 10\n#####.\nA....G\n#####.\ndir: E\n")
        env = EnvConfig(max_steps=100)
        policy, values = PolicyTable(), ValueTable()
        for t in range(5):
            state = corridor.start_state + 4 * t
            policy.set_row(state, [0.0, 0.0, 5.0])
            values.set(state, gamma ** (4 - t) * (1 - 5 / env.max_steps))
        traj = collect_trajectory(policy, values, corridor, env, RolloutMode.TRAIN, greedy=True)
        assert traj.terminal_reached
        score = score_positive_value_loss(traj, GaeConfig(gamma=gamma, gae_lambda=0.95))
        assert score == pytest.approx(0.0, abs=1e-9)

    def test_max_mc_corridor_fixture(self):
        traj = Trajectory([24, 28, 32, 36, 40, 44], [2] * 5, [0.0, 0.0, 0.0, 0.0, 0.95],
                          [0.1, 0.2, 0.3, 0.4, 0.5], terminal_reached=True)
        assert score_max_mc(traj, 0.95) == pytest.approx(0.65, abs=1e-12)
        assert score_max_mc(traj, 0.95, MaxMcVariant.S0) == pytest.approx(0.85, abs=1e-12)
        assert score_max_mc(traj, 0.5, MaxMcVariant.PER_STEP) == pytest.approx(0.2, abs=1e-12)

    def test_max_mc_can_be_negative(self, short_traj):
        assert score_max_mc(short_traj, 0.0) < 0

    def test_true_regret(self):
        corridor = decode_level("6 3 10\n#####.\nA....G\n#####.\ndir: E\n")
        traj = Trajectory([24, 27], [0], [0.0], [0.0], terminal_reached=False)
        assert score_true_regret(corridor, traj, EnvConfig(max_steps=100)) == pytest.approx(0.95)

    def test_empty_trajectory(self):
        empty = Trajectory([0], [], [], [], terminal_reached=False)
        with pytest.raises(InvalidInputError):
            score_max_mc(empty, 1.0)


# ============================================================================
# REPLAY DISTRIBUTION
# ============================================================================

class TestReplayDistribution:
    """Test P_replay = (1 - rho) P_S + rho P_C."""

    def test_rank_weights(self, levels):
        buffer = filled_buffer(levels, [3.0, 1.0, 2.0], [5, 5, 5])
        config = ReplayConfig(temperature=1.0, staleness_coef=0.0)
        assert replay_distribution(buffer, config, 5) == pytest.approx([6 / 11, 2 / 11, 3 / 11])

    def test_rank_ties_favour_earlier_entry(self, levels):
        buffer = filled_buffer(levels, [1.0, 1.0], [0, 0])
        probs = replay_distribution(buffer, ReplayConfig(staleness_coef=0.0), 0)
        assert probs[0] > probs[1]

    def test_staleness_weights(self, levels):
        buffer = filled_buffer(levels, [1.0, 1.0, 1.0], [0, 2, 4])
        probs = replay_distribution(buffer, ReplayConfig(staleness_coef=1.0), 4)
        assert probs == pytest.approx([4 / 6, 2 / 6, 0.0])

    def test_fresh_buffer_staleness_is_uniform(self, levels):
        buffer = filled_buffer(levels, [1.0, 1.0], [3, 3])
        probs = replay_distribution(buffer, ReplayConfig(staleness_coef=1.0), 3)
        assert probs == pytest.approx([0.5, 0.5])

    def test_proportional_all_zero_is_uniform(self, levels):
        buffer = filled_buffer(levels, [0.0, -1.0, 0.0], [1, 1, 1])
        config = ReplayConfig(prioritization=Prioritization.PROPORTIONAL, staleness_coef=0.0)
        assert replay_distribution(buffer, config, 1) == pytest.approx([1 / 3] * 3)

    def test_proportional_uses_clamped_scores(self, levels):
        buffer = filled_buffer(levels, [2.0, -1.0, 1.0], [1, 1, 1])
        config = ReplayConfig(prioritization="Proportional", temperature=1.0, staleness_coef=0.0)
        assert replay_distribution(buffer, config, 1) == pytest.approx([2 / 3, 0.0, 1 / 3])

    @pytest.mark.parametrize("scale,offset", [(3.7, -12.5), (0.01, 4.0)])
    def test_rank_ignores_affine_rescaling(self, levels, scale, offset):
        rng = np.random.default_rng(8)
        scores = rng.normal(size=len(levels))
        timestamps = rng.integers(0, 20, size=len(levels)).tolist()
        config = ReplayConfig(temperature=0.4, staleness_coef=0.3)
        plain = filled_buffer(levels, scores.tolist(), timestamps)
        rescaled = filled_buffer(levels, (scale * scores + offset).tolist(), timestamps)
        assert replay_distribution(rescaled, config, 25) == pytest.approx(
            replay_distribution(plain, config, 25), abs=1e-12)

    def test_rank_is_uniform_at_high_temperature(self, levels):
        buffer = filled_buffer(levels, [float(k) for k in range(len(levels))], [0] * len(levels))
        config = ReplayConfig(temperature=1e6, staleness_coef=0.0)
        probs = replay_distribution(buffer, config, 0)
        assert probs == pytest.approx([1 / len(levels)] * len(levels), abs=1e-6)

    def test_empty_buffer(self):
        with pytest.raises(InvalidInputError):
            replay_distribution(LevelBuffer(4), ReplayConfig())

    def test_sample_replay_returns_buffer_level(self, levels):
        buffer = filled_buffer(levels, [1.0, 2.0, 3.0], [0, 1, 2])
        rng = np.random.default_rng(0)
        for _ in range(20):
            assert buffer.find(sample_replay(buffer, ReplayConfig(), 3, rng)) is not None


# ============================================================================
# BUFFER UPDATES
# ============================================================================

class TestUpdateBuffer:
    """Test insertion, refresh and eviction."""

    def test_refresh_in_place(self, levels):
        buffer = filled_buffer(levels, [1.0, 2.0], [0, 1])
        assert update_buffer(buffer, levels[0], 5.0, 7, ReplayConfig(), episode_return=0.4)
        assert len(buffer) == 2
        assert buffer.entries[0].score == 5.0
        assert buffer.entries[0].timestamp == 7
        assert buffer.max_return(levels[0]) == 0.4

    def test_max_return_only_grows(self, levels):
        buffer = LevelBuffer(2)
        update_buffer(buffer, levels[0], 1.0, 0, ReplayConfig(), episode_return=0.8)
        update_buffer(buffer, levels[0], 1.0, 1, ReplayConfig(), episode_return=0.3)
        assert buffer.max_return(levels[0]) == 0.8
        assert buffer.max_return(levels[5]) == 0.0

    def test_full_buffer_evicts_lowest_probability(self, levels):
        config = ReplayConfig(staleness_coef=0.0)
        buffer = filled_buffer(levels, [3.0, 1.0, 2.0], [0, 0, 0])
        assert update_buffer(buffer, levels[3], 1.5, 1, config)
        assert buffer.find(levels[1]) is None
        assert buffer.find(levels[3]) == 1
        assert len(buffer) == 3

    def test_full_buffer_keeps_better_levels(self, levels):
        config = ReplayConfig(staleness_coef=0.0)
        buffer = filled_buffer(levels, [3.0, 1.0, 2.0], [0, 0, 0])
        assert not update_buffer(buffer, levels[3], 0.5, 1, config)
        assert buffer.find(levels[3]) is None
        assert buffer.episode_count == 1

    def test_non_finite_score(self, levels):
        with pytest.raises(InvalidInputError):
            update_buffer(LevelBuffer(2), levels[0], float("nan"), 0, ReplayConfig())

    def test_capacity_must_be_positive(self):
        with pytest.raises(InvalidInputError):
            LevelBuffer(0)

    def test_duplicate_entries_rejected(self, levels):
        entries = [BufferEntry(levels[0], 1.0, 0), BufferEntry(levels[1], 0.5, 1), BufferEntry(levels[0], 2.0, 2)]
        with pytest.raises(InvalidInputError, match="duplicate"):
            LevelBuffer(4, entries)


def random_operations(num_ops: int, seed: int):
    rng = np.random.default_rng(seed)
    pool = [MazeLevel(4, 4, frozenset(), 0, 0, goal, 0) for goal in range(1, 16)]
    config = ReplayConfig(temperature=float(rng.uniform(0.1, 1.0)),
                          staleness_coef=float(rng.uniform(0.0, 1.0)),
                          prioritization=list(Prioritization)[int(rng.integers(2))])
    buffer = LevelBuffer(int(rng.integers(1, 8)))
    for c in range(num_ops):
        level = pool[int(rng.integers(len(pool)))]
        score = float(rng.normal())
        before = [(e.level, e.score) for e in buffer.entries]
        probs_before = replay_distribution(buffer, config, c) if buffer.entries else None
        present = buffer.find(level) is not None
        kept = update_buffer(buffer, level, score, c, config)

        assert len(buffer) <= buffer.capacity
        assert len({e.level for e in buffer.entries}) == len(buffer)
        probs = replay_distribution(buffer, config, c)
        assert (probs >= 0).all()
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)

        if present or len(before) < buffer.capacity:
            assert kept
        elif kept:
            victim = int(np.argmin(probs_before))
            assert before[victim][1] < score
            assert buffer.entries[victim].level == level
        else:
            assert before[int(np.argmin(probs_before))][1] >= score
            assert [(e.level, e.score) for e in buffer.entries] == before


class TestBufferProperties:
    """Randomized operation sequences and sampling frequencies."""

    @pytest.mark.parametrize("seed", range(5))
    def test_random_operations_keep_invariants(self, seed):
        random_operations(400, seed)

    def test_sampling_frequencies(self, levels):
        buffer = filled_buffer(levels, [3.0, 1.0, 2.0], [5, 5, 5])
        config = ReplayConfig(temperature=1.0, staleness_coef=0.0)
        rng = np.random.default_rng(11)
        draws = [buffer.find(sample_replay(buffer, config, 5, rng)) for _ in range(100_000)]
        freqs = np.bincount(draws, minlength=3) / len(draws)
        assert freqs == pytest.approx([6 / 11, 2 / 11, 3 / 11], abs=0.01)

    @pytest.mark.slow
    def test_long_random_operations(self):
        for seed in range(25):
            random_operations(4_000, 100 + seed)


class TestDecisions:
    """Test the generate/replay coin."""

    def test_extremes(self):
        rng = np.random.default_rng(0)
        assert all(sample_decision(0.0, rng) == Decision.GENERATE for _ in range(50))
        assert all(sample_decision(1.0, rng) == Decision.REPLAY for _ in range(50))

    def test_out_of_range(self):
        with pytest.raises(InvalidInputError):
            sample_decision(1.2, np.random.default_rng(0))

    def test_config_validation(self):
        with pytest.raises(InvalidInputError):
            ReplayConfig(temperature=0.0)
        with pytest.raises(ValueError):
            ReplayConfig(scoring="Loudness")


class TestSnapshots:
    """Test JSONL buffer snapshots."""

    def test_save_and_load(self, tmp_path, levels):
        buffer = filled_buffer(levels, [0.5, 0.25], [3, 4], capacity=5)
        path = tmp_path / "buffers" / "plr.jsonl"
        save_buffer(buffer, path)
        loaded = load_buffer(path)
        assert loaded.capacity == 5
        assert loaded.episode_count == 4
        assert loaded.levels() == buffer.levels()
        assert loaded.scores().tolist() == [0.5, 0.25]
        assert loaded.find(levels[1]) == 1

    def test_duplicate_levels_in_snapshot(self, tmp_path, levels):
        path = tmp_path / "plr.jsonl"
        save_buffer(filled_buffer(levels, [0.5, 0.25], [3, 4], capacity=5), path)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines + [lines[1]]) + "\n")
        with pytest.raises(InvalidInputError, match="duplicate"):
            load_buffer(path)

    def test_bad_schema(self, tmp_path):
        path = tmp_path / "old.jsonl"
        path.write_text('{"capacity": 2, "episode_count": 0, "schema_version": 99}\n')
        with pytest.raises(InvalidInputError):
            load_buffer(path)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
