import math
from dataclasses import replace

import numpy as np
import pytest

from bellcert.error import ConfigError, SinkFailureError
from bellcert.finite_stats import count_wins
from bellcert.simulator.block import (
    TrialBlock,
    correlators_from_counts,
    outcome_counts,
    s_from_counts,
    tally_from_counts,
)
from bellcert.simulator.model import ExperimentConfig, NoiseModel
from bellcert.simulator.rng import input_bit_stream, input_bits, outcome_uniforms, trial_words
from bellcert.simulator.trial_simulator import (
    CollectingSink,
    NullSink,
    confusion_matrix,
    expected_s,
    ideal_prob_table,
    offset_at,
    simulate,
)

TSIRELSON = 2.0 * math.sqrt(2.0)
LAB_NOISE = NoiseModel(
    bell_fidelity=0.859,
    readout_eg_a=0.004,
    readout_ge_a=0.007,
    readout_eg_b=0.010,
    readout_ge_b=0.018,
)


def _sigma(s: float, n: int) -> float:
    p = (4.0 + s) / 8.0
    return 8.0 * math.sqrt(p * (1.0 - p) / n)


class _FailingSink(NullSink):
    def __init__(self, fail_after: int) -> None:
        self.calls = 0
        self.fail_after = fail_after

    def consume(self, block: TrialBlock) -> None:
        if self.calls == self.fail_after:
            raise OSError("disk full")
        self.calls += 1


def test_noise_model_validation():
    with pytest.raises(ConfigError):
        NoiseModel(bell_fidelity=0.2)
    with pytest.raises(ConfigError):
        NoiseModel(readout_eg_a=0.5)
    with pytest.raises(ConfigError):
        NoiseModel(alpha_a=4.0)
    with pytest.raises(ConfigError):
        NoiseModel(drift_period=0)


def test_noise_model_defaults_to_optimal_offset():
    assert NoiseModel().theta_offset == pytest.approx(math.pi / 4.0)
    assert LAB_NOISE.readout_fidelity_a == pytest.approx(0.989)
    assert LAB_NOISE.readout_fidelity_b == pytest.approx(0.972)


def test_experiment_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(n_trials=100, block_size=30, seed=1)
    with pytest.raises(ConfigError):
        ExperimentConfig(n_trials=100, block_size=50, seed=1, report_size=20)
    with pytest.raises(ConfigError):
        ExperimentConfig(n_trials=100, block_size=50, seed=-1)
    with pytest.raises(ConfigError):
        ExperimentConfig(n_trials=0, block_size=1, seed=1)
    config = ExperimentConfig(n_trials=100, block_size=50, seed=1)
    assert config.report_size == 50
    assert config.n_blocks == 2


def test_header_carries_noise():
    header = ExperimentConfig(n_trials=4, block_size=2, seed=9, noise=LAB_NOISE).header()
    assert header["seed"] == 9
    assert header["bell_fidelity"] == 0.859
    assert header["report_size"] == 2


def test_trial_words_are_addressable():
    full = trial_words(123, 0, 15)
    assert np.array_equal(trial_words(123, 10, 5), full[10:])
    assert not np.array_equal(trial_words(124, 0, 15), full)


def test_input_bits_are_balanced():
    words = trial_words(5, 0, 1 << 16)
    for node in (0, 1):
        assert abs(input_bits(words, node).mean() - 0.5) < 0.01
    u = outcome_uniforms(words)
    assert u.min() >= 0.0
    assert u.max() < 1.0


def test_input_bit_stream():
    words = trial_words(77, 0, 40)
    assert input_bit_stream(77, 31, 0) == input_bits(words, 0)[31]
    assert input_bit_stream(77, 31, 1) == input_bits(words, 1)[31]
    with pytest.raises(ValueError):
        input_bit_stream(77, 0, 2)


def test_tally_from_counts_matches_win_rule():
    rng = np.random.default_rng(8)
    x, y, a, b = rng.integers(0, 2, size=(4, 500))
    tally = tally_from_counts(outcome_counts(x, y, a, b))
    assert tally.n == 500
    assert tally.c == count_wins(x, y, a, b)


def test_correlators_of_missing_settings_are_zero():
    counts = outcome_counts([0, 0], [0, 0], [0, 1], [0, 1])
    e = correlators_from_counts(counts)
    assert e[0, 0] == 1.0
    assert e[1, 1] == 0.0


def test_confusion_matrix_is_column_stochastic():
    c = confusion_matrix(0.01, 0.02)
    assert np.allclose(c.sum(axis=0), 1.0)
    assert c[1, 0] == 0.01
    assert c[0, 1] == 0.02


def test_ideal_model_reaches_tsirelson():
    assert expected_s(NoiseModel()) == pytest.approx(TSIRELSON, abs=1e-12)


def test_werner_model_value():
    assert expected_s(NoiseModel(bell_fidelity=0.859)) == pytest.approx(0.812 * TSIRELSON)


def test_lab_noise_value():
    # readout scales correlators by both readout fidelities and adds the bias product
    werner = 0.812 * TSIRELSON
    bias = 2.0 * (0.007 - 0.004) * (0.018 - 0.010)
    assert expected_s(LAB_NOISE) == pytest.approx(0.989 * 0.972 * werner + bias, abs=1e-12)
    assert expected_s(LAB_NOISE) == pytest.approx(2.2079, abs=1e-4)


def test_offset_controls_chsh_value():
    for theta in (0.0, 0.3, math.pi / 2.0, 2.0):
        noise = NoiseModel(theta_offset=theta)
        assert expected_s(noise) == pytest.approx(TSIRELSON * math.sin(2.0 * theta), abs=1e-12)


def test_prob_tables_are_normalized():
    table = ideal_prob_table(LAB_NOISE, 0)
    assert np.allclose(table.sum(axis=(2, 3)), 1.0)
    assert (table >= 0.0).all()


def test_drift_offset():
    noise = replace(LAB_NOISE, drift_amplitude=0.1, drift_period=400)
    assert offset_at(noise, 0) == pytest.approx(noise.theta_offset)
    assert offset_at(noise, 100) == pytest.approx(noise.theta_offset + 0.1)
    assert offset_at(noise, 300) == pytest.approx(noise.theta_offset - 0.1)
    shifted = replace(LAB_NOISE, theta_offset=noise.theta_offset + 0.1)
    assert np.allclose(ideal_prob_table(noise, 100), ideal_prob_table(shifted, 0))


def test_simulation_is_independent_of_workers():
    config = ExperimentConfig(n_trials=1 << 14, block_size=1 << 11, seed=42, noise=LAB_NOISE)
    serial, threaded = CollectingSink(), CollectingSink()
    first = simulate(config, serial)
    second = simulate(replace(config, workers=3), threaded)
    assert np.array_equal(serial.as_array(), threaded.as_array())
    assert np.array_equal(first.counts, second.counts)
    assert first.block_s == second.block_s


def test_blocks_arrive_in_order():
    config = ExperimentConfig(n_trials=1 << 12, block_size=1 << 9, seed=3, workers=4)
    sink = CollectingSink()
    simulate(config, sink)
    assert [block.start for block in sink.blocks] == list(range(0, 1 << 12, 1 << 9))
    assert np.array_equal(sink.as_array()[:, 0], np.arange(1 << 12))


def test_simulation_matches_per_trial_randomness():
    config = ExperimentConfig(n_trials=1024, block_size=256, seed=11)
    sink = CollectingSink()
    simulate(config, sink)
    rows = sink.as_array()
    words = trial_words(11, 0, 1024)
    assert np.array_equal(rows[:, 1], input_bits(words, 0))
    assert np.array_equal(rows[:, 2], input_bits(words, 1))


def test_simulated_value_is_within_statistical_error():
    n = 1 << 18
    config = ExperimentConfig(n_trials=n, block_size=1 << 16, seed=20150, noise=LAB_NOISE)
    summary = simulate(config, NullSink())
    assert summary.tally.n == n
    assert summary.expected_s == pytest.approx(expected_s(LAB_NOISE))
    assert abs(summary.s_measured - summary.expected_s) < 4.0 * _sigma(summary.expected_s, n)
    assert abs(summary.s_correlators - summary.expected_s) < 0.05


def test_ideal_simulation_is_near_tsirelson():
    summary = simulate(ExperimentConfig(n_trials=4096, block_size=4096, seed=1), NullSink())
    counts = summary.counts
    assert abs(summary.s_measured - TSIRELSON) < 4.0 * _sigma(TSIRELSON, 4096)
    assert counts.sum() == 4096


def test_report_windows():
    config = ExperimentConfig(
        n_trials=1 << 14, block_size=1 << 12, report_size=1 << 10, seed=2, noise=LAB_NOISE
    )
    summary = simulate(config, NullSink())
    assert len(summary.block_s) == 4
    assert len(summary.report_s) == 16
    assert summary.to_dict()["n"] == 1 << 14


def test_drift_lowers_chsh_value():
    base = ExperimentConfig(n_trials=1 << 16, block_size=1 << 14, seed=9, noise=NoiseModel())
    drifting = replace(
        base, noise=replace(base.noise, drift_amplitude=math.pi / 4.0, drift_period=1 << 14)
    )
    stable = simulate(base, NullSink())
    drifted = simulate(drifting, NullSink())
    # averaging sin(2 theta) over the drift roughly halves S
    assert drifted.s_measured < stable.s_measured - 0.8


def test_recalibration_resets_drift_every_block():
    block, windows = 1 << 16, 8
    config = ExperimentConfig(
        n_trials=16 * block,
        block_size=block,
        report_size=block // windows,
        seed=5,
        noise=NoiseModel(drift_amplitude=math.radians(30.0), drift_period=1 << 18),
    )
    summary = simulate(config, NullSink())
    per_block = np.array(summary.report_s).reshape(16, windows)
    assert np.all(per_block[:, 0] > per_block[:, -1])
    assert per_block[:, 0].mean() > 2.7
    assert per_block[:, -1].mean() < 1.7


@pytest.fixture(scope="module")
def lab_counts():
    config = ExperimentConfig(n_trials=1 << 20, block_size=1 << 18, seed=20150, noise=LAB_NOISE)
    return simulate(config, NullSink()).counts


def test_outcome_frequencies_match_model(lab_counts):
    table = ideal_prob_table(LAB_NOISE, 0)
    per_setting = lab_counts.sum(axis=(2, 3), keepdims=True)
    sigma = np.sqrt(table * (1.0 - table) / per_setting)
    z = (lab_counts / per_setting - table) / sigma
    assert np.max(np.abs(z)) < 4.0


def test_empirical_marginals_are_no_signaling(lab_counts):
    per_setting = lab_counts.sum(axis=(2, 3))
    # P(a = 0 | x, y) and P(b = 0 | x, y)
    marginal_a = lab_counts[:, :, 0, :].sum(axis=2) / per_setting
    marginal_b = lab_counts[:, :, :, 0].sum(axis=2) / per_setting
    for x in (0, 1):
        p = marginal_a[x].mean()
        sigma = math.sqrt(p * (1.0 - p) * (1.0 / per_setting[x, 0] + 1.0 / per_setting[x, 1]))
        assert abs(marginal_a[x, 0] - marginal_a[x, 1]) < 4.0 * sigma
    for y in (0, 1):
        p = marginal_b[:, y].mean()
        sigma = math.sqrt(p * (1.0 - p) * (1.0 / per_setting[0, y] + 1.0 / per_setting[1, y]))
        assert abs(marginal_b[0, y] - marginal_b[1, y]) < 4.0 * sigma


def test_sink_failure_reports_written_trials():
    config = ExperimentConfig(n_trials=4096, block_size=1024, seed=1, workers=2)
    with pytest.raises(SinkFailureError) as excinfo:
        simulate(config, _FailingSink(fail_after=2))
    assert excinfo.value.trials_written == 2048


def test_block_records():
    config = ExperimentConfig(n_trials=8, block_size=8, seed=4)
    sink = CollectingSink()
    simulate(config, sink)
    records = list(sink.blocks[0].records())
    assert [r.index for r in records] == list(range(8))
    assert s_from_counts(np.ones((2, 2, 2, 2))) == 0.0


def test_ideal_model_at_scale():
    n = 1 << 20
    config = ExperimentConfig(n_trials=n, block_size=1 << 17, seed=2015, workers=4)
    summary = simulate(config, NullSink())
    assert abs(summary.s_measured - TSIRELSON) < 4.0 * _sigma(TSIRELSON, n)


def test_maximally_mixed_model_has_no_violation():
    n = 1 << 18
    config = ExperimentConfig(
        n_trials=n, block_size=1 << 16, seed=5, noise=NoiseModel(bell_fidelity=0.25)
    )
    summary = simulate(config, NullSink())
    assert summary.expected_s == pytest.approx(0.0, abs=1e-12)
    assert abs(summary.s_measured) < 4.0 * _sigma(0.0, n)
