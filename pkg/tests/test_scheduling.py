"""Schedule construction, energy accounting, and the cross-strategy properties."""

import numpy as np
import pytest

import oracles
from macfair import (
    Backlog,
    NoiseModel,
    average_rates,
    build_schedule,
    energy_report,
    minicost_schedule,
    minmax_schedule,
    sum_power,
    tdma_schedule,
)

UNIT = NoiseModel(1.0)


def test_average_rates_examples():
    assert np.allclose(average_rates(Backlog([1, 2], 30), 30.0), [1.0, 2.0])
    assert np.allclose(average_rates(Backlog([1, 1, 1, 1], 30), 30.0), np.ones(4))
    assert np.allclose(average_rates(Backlog([0.5], 30), 30.0), [0.5])


def test_average_rates_rejects_bad_period():
    with pytest.raises(ValueError):
        average_rates(Backlog([1.0], 30), 0.0)


def test_minicost_examples():
    sched = minicost_schedule(Backlog([1, 2], 30), 30.0, UNIT)
    assert len(sched.epochs) == 1
    assert np.allclose(sched.epochs[0].powers, [3.0, 60.0])
    report = energy_report(sched)
    assert report.sum_energy == pytest.approx(1890.0, rel=1e-9)
    assert report.max_power == pytest.approx(60.0, rel=1e-9)

    report = energy_report(minicost_schedule(Backlog([1, 1], 30), 30.0, UNIT))
    assert report.sum_energy == pytest.approx(450.0, rel=1e-9)

    report = energy_report(minicost_schedule(Backlog([1.0], 30), 30.0, UNIT))
    assert report.sum_energy == pytest.approx(90.0, rel=1e-9)


def test_minicost_decode_order_descending_gains():
    noise = NoiseModel(1.0, gains=[1.0, 4.0])
    sched = minicost_schedule(Backlog([1, 1], 30), 30.0, noise)
    # high-gain node last on the chain (decoded first) minimizes transmit sum
    assert sched.epochs[0].decode_order == (0, 1)
    other = NoiseModel(1.0, gains=[4.0, 1.0])
    sched2 = minicost_schedule(Backlog([1, 1], 30), 30.0, other)
    assert sched2.epochs[0].decode_order == (1, 0)
    assert float(sched.epochs[0].powers.sum()) == pytest.approx(
        float(sched2.epochs[0].powers.sum()), rel=1e-12)


def test_tdma_examples():
    sched = tdma_schedule(Backlog([1, 2], 30), 30.0, UNIT)
    fractions = [e.duration_fraction for e in sched.epochs]
    assert np.allclose(fractions, [1 / 3, 2 / 3])
    for e in sched.epochs:
        active = np.nonzero(e.powers)[0]
        assert active.size == 1
        assert e.rates[active[0]] == pytest.approx(3.0)
        assert e.powers[active[0]] == pytest.approx(63.0, rel=1e-9)
    report = energy_report(sched)
    assert np.allclose(report.per_node_energy, [630.0, 1260.0], rtol=1e-9)
    assert report.sum_energy == pytest.approx(1890.0, rel=1e-9)
    assert report.max_power == pytest.approx(42.0, rel=1e-9)

    report = energy_report(tdma_schedule(Backlog([1, 1], 30), 30.0, UNIT))
    assert np.allclose(report.per_node_energy, [225.0, 225.0], rtol=1e-9)

    single = tdma_schedule(Backlog([1.0], 30), 30.0, UNIT)
    mini = minicost_schedule(Backlog([1.0], 30), 30.0, UNIT)
    assert np.allclose(energy_report(single).per_node_energy,
                       energy_report(mini).per_node_energy)


def test_tdma_proportional_split_is_energy_optimal():
    for packets in ([1.0, 2.0], [0.4, 1.7], [1.0, 1.0, 2.5]):
        sched = tdma_schedule(Backlog(packets, 30), 30.0, UNIT)
        ours = energy_report(sched).sum_energy
        grid_best = oracles.tdma_grid_best_sum_energy(packets, 30.0, 30.0, 1.0)
        assert ours <= grid_best * (1 + 1e-6)


def test_minmax_schedule_example():
    sched = minmax_schedule(Backlog([1, 2], 30), 30.0, UNIT)
    fractions = sorted(e.duration_fraction for e in sched.epochs)
    assert np.allclose(fractions, [11 / 30, 19 / 30], atol=1e-9)
    assert np.allclose(sched.average_powers(), [31.5, 31.5], atol=1e-8)
    report = energy_report(sched)
    assert np.allclose(report.per_node_energy, [945.0, 945.0], atol=1e-6)
    assert report.max_power == pytest.approx(31.5, rel=1e-9)

    sched = minmax_schedule(Backlog([1, 1], 30), 30.0, UNIT)
    assert np.allclose(sched.average_powers(), [7.5, 7.5], atol=1e-9)

    single = minmax_schedule(Backlog([1.0], 30), 30.0, UNIT)
    assert len(single.epochs) == 1
    assert np.allclose(single.epochs[0].powers, [3.0])


def test_epoch_fractions_form_probability_vector():
    rng = np.random.default_rng(67)
    for _ in range(15):
        n = int(rng.integers(1, 6))
        packets = rng.uniform(0.05, 2.0, n)
        for strategy in ("minmax", "minicost", "tdma"):
            sched = build_schedule(strategy, Backlog(packets, 30), 30.0, UNIT)
            fractions = np.array([e.duration_fraction for e in sched.epochs])
            assert np.all(fractions >= 0.0)
            assert fractions.sum() == pytest.approx(1.0, abs=1e-10)


def test_delivered_bits_exact():
    rng = np.random.default_rng(71)
    for _ in range(15):
        n = int(rng.integers(1, 6))
        packets = rng.uniform(0.05, 2.0, n)
        backlog = Backlog(packets, 30)
        for strategy in ("minmax", "minicost", "tdma"):
            sched = build_schedule(strategy, backlog, 30.0, UNIT)
            assert np.allclose(sched.delivered_bits(), backlog.bits, rtol=1e-6)


def test_sum_energy_identical_across_strategies():
    """Symmetric channel: all three strategies spend the same total energy."""
    rng = np.random.default_rng(73)
    for _ in range(30):
        n = int(rng.integers(2, 6))
        packets = rng.uniform(0.05, 1.0, n)
        noise = NoiseModel(float(rng.choice([1.0, 1e-3])))
        backlog = Backlog(packets, 30)
        rates = average_rates(backlog, 30.0)
        expected = 30.0 * sum_power(rates, noise)
        for strategy in ("minmax", "minicost", "tdma"):
            sched = build_schedule(strategy, backlog, 30.0, noise)
            assert energy_report(sched).sum_energy == pytest.approx(
                expected, rel=1e-9)


def test_minmax_minimizes_normalized_max_power():
    rng = np.random.default_rng(79)
    for _ in range(30):
        n = int(rng.integers(2, 6))
        packets = rng.uniform(0.05, 1.0, n)
        noise = NoiseModel(float(rng.choice([1.0, 1e-3])))
        backlog = Backlog(packets, 30)
        peaks = {s: energy_report(build_schedule(s, backlog, 30.0, noise)).max_power
                 for s in ("minmax", "minicost", "tdma")}
        slack = 1e-9 * (1 + peaks["minmax"])
        assert peaks["minmax"] <= peaks["minicost"] + slack
        assert peaks["minmax"] <= peaks["tdma"] + slack


def test_zero_backlog_nodes_reported_silent():
    sched = minmax_schedule(Backlog([1.0, 0.0, 2.0], 30), 30.0, UNIT)
    for e in sched.epochs:
        assert e.powers[1] == 0.0
        assert e.rates[1] == 0.0
    assert np.allclose(sched.delivered_bits(), [30.0, 0.0, 60.0], atol=1e-9)
    mini = minicost_schedule(Backlog([1.0, 0.0, 2.0], 30), 30.0, UNIT)
    assert mini.epochs[0].powers[1] == 0.0


def test_all_zero_backlog_rejected():
    with pytest.raises(ValueError):
        minicost_schedule(Backlog([0.0, 0.0], 30), 30.0, UNIT)


def test_build_schedule_rejects_unknown_strategy():
    with pytest.raises(ValueError):
        build_schedule("fastest", Backlog([1.0], 30), 30.0, UNIT)
