import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from synclab import simulator as sim
from synclab.network import DirectedNetwork, all_to_all, generate_random, ring
from synclab.potential import IFPotential, log_potential, sync_period, transfer

U4 = IFPotential(4.0)


def sync_rounds(spikes, n, tau):
    return sim.firing_rounds(spikes, n, gap=tau)


# -- synchronous orbit ------------------------------------------------------------

def test_sync_orbit_period_and_coincidence(backend):
    net = generate_random(16, 0.25, -0.2, 4)
    T = sync_period(U4, 0.15, -0.2)
    assert T == pytest.approx(1.1769, abs=5e-5)
    spikes, _ = sim.run(sim.synchronous_state(16, 0.15, 0.5), net, U4, 10 * T)
    assert len(spikes) == 10 * 16
    rounds = sync_rounds(spikes, 16, 0.15)
    assert len(rounds) == 10 and all(r.complete for r in rounds)
    assert max(r.spread for r in rounds) <= 1e-9
    starts = np.array([r.start for r in rounds])
    assert np.allclose(np.diff(starts), T, atol=1e-9, rtol=0)
    rates = sim.firing_rates(spikes, 16)
    assert np.allclose(rates, 1 / T, atol=1e-9)
    assert 1 / T == pytest.approx(0.8497, abs=1e-4)


@given(st.floats(1.5, 8.0), st.floats(0.01, 0.3), st.floats(-1.0, -0.001), st.integers(2, 12))
def test_sync_period_property(I, tau, eps, n):
    U = IFPotential(I)
    assume(float(U.eval(tau)) + eps < 1)
    T = sync_period(U, tau, eps)
    spikes, _ = sim.run(sim.synchronous_state(n, tau, 0.9), all_to_all(n, eps), U, 0.1 + 5 * T)
    starts = np.array([r.start for r in sync_rounds(spikes, n, tau / 2)])
    assert np.allclose(np.diff(starts), T, atol=1e-9, rtol=0)


def test_zero_length_run():
    state = sim.random_state(5, 0.1, 3)
    spikes, end = sim.run(state, ring(5, -0.1), U4, state.t)
    assert len(spikes) == 0 and np.array_equal(end.phases, state.phases)
    with pytest.raises(ValueError):
        sim.run(state, ring(5, -0.1), U4, state.t - 1)


def test_phases_advance_at_unit_rate():
    state = sim.SimulatorState(t=2.0, phases=np.array([0.1, 0.3, -0.4]), tau=0.2)
    _, end = sim.run(state, ring(3, -0.1), U4, 2.5)
    assert np.allclose(end.phases, state.phases + 0.5, atol=1e-15)
    assert end.t == 2.5


def test_step_goes_to_next_event():
    state = sim.SimulatorState(t=0.0, phases=np.array([0.75, 0.2]), tau=0.1)
    s1, fired = sim.step(state, ring(2, -0.2), U4)
    assert fired == [sim.SpikeRecord(0, 0.25)]
    assert s1.t == 0.25 and s1.phases[0] == 0.0 and s1.in_flight == [(pytest.approx(0.35), 0, 1.0)]
    s2, fired = sim.step(s1, ring(2, -0.2), U4)
    assert fired == [] and s2.t == pytest.approx(0.35)
    assert s2.phases[1] == pytest.approx(transfer(U4, 0.55, -0.2)[0], abs=1e-14)


def test_excitatory_supra_threshold_arrival_fires():
    net = DirectedNetwork.from_edges(2, [(0, 1, 0.5), (1, 0, 0.5)], 0.5)
    state = sim.SimulatorState(t=0.0, phases=np.array([0.99, 0.8]), tau=0.05)
    spikes, end = sim.run(state, net, U4, 0.07)
    assert list(spikes) == [sim.SpikeRecord(0, pytest.approx(0.01)),
                            sim.SpikeRecord(1, pytest.approx(0.06))]
    assert end.phases[1] == pytest.approx(0.01, abs=1e-14)


def test_simultaneous_arrivals_equal_sequential_transfer():
    # 0 and 1 fire together and both project onto 2
    W = np.array([[0, 0, -0.3], [0, 0, -0.3], [-0.1, -0.2, 0]])
    net = DirectedNetwork.from_weights(W, -0.3)
    state = sim.SimulatorState(t=0.0, phases=np.array([0.9, 0.9, 0.3]), tau=0.05)
    _, end = sim.run(state, net, U4, 0.1 + 0.05 + 1e-9)
    a = transfer(U4, 0.45, -0.1)[0]
    a = transfer(U4, a, -0.2)[0]
    b = transfer(U4, 0.45, -0.2)[0]
    b = transfer(U4, b, -0.1)[0]
    assert end.phases[2] - 1e-9 == pytest.approx(a, abs=1e-12)
    assert end.phases[2] - 1e-9 == pytest.approx(b, abs=1e-12)


def test_in_flight_bookkeeping(backend):
    net = generate_random(40, 0.2, -1.0, 8)
    state = sim.random_state(40, 0.2, 1)
    emitted = sim.Spikes()
    for t in np.linspace(0.3, 12.0, 40):
        sp, state = sim.run(state, net, U4, t)
        emitted = emitted + sp
        arr = state.arrival
        assert np.all((arr > state.t - 1e-12) & (arr <= state.t + state.tau + 1e-12))
        assert np.all(np.diff(arr) >= 0)
        # one in-flight entry per spike emitted during the last delay
        recent = emitted.window(state.t - state.tau + 1e-12, np.inf)
        assert arr.size == len(recent)
        assert np.all(state.phases <= 1.0)
    assert np.all(np.diff(emitted.times) >= 0)


def test_backends_agree_on_irregular_run(monkeypatch):
    net = generate_random(120, 0.2, -4.8, 21)
    state = sim.random_state(120, 0.035, 5)
    a, sa = sim.run(state, net, U4, 60.0, backend="numba")
    b, sb = sim.run(state, net, U4, 60.0, backend="numpy")
    monkeypatch.setenv("SYNCLAB_DISABLE_NUMBA", "1")
    c, _ = sim.run(state, net, U4, 60.0)
    assert len(a) > 500
    assert np.array_equal(a.neurons, b.neurons) and np.array_equal(a.neurons, c.neurons)
    assert np.allclose(a.times, b.times, atol=1e-12, rtol=0)
    assert np.allclose(sa.phases, sb.phases, atol=1e-10, rtol=0)


def test_numba_backend_requires_if_potential():
    with pytest.raises(ValueError):
        sim.run(sim.random_state(4, 0.1, 0), ring(4, -0.1), log_potential(2.0), 1.0,
                backend="numba")


def test_generic_potential_runs_on_numpy_path():
    U = log_potential(2.0)
    T = sync_period(U, 0.1, -0.1)
    spikes, _ = sim.run(sim.synchronous_state(6, 0.1, 0.5), ring(6, -0.1), U, 5 * T + 0.6)
    starts = np.array([r.start for r in sync_rounds(spikes, 6, 0.05)])
    assert np.allclose(np.diff(starts), T, atol=1e-9, rtol=0)


def test_runaway_inhibition_hits_phase_floor():
    U = IFPotential(1e6)
    state = sim.synchronous_state(2, 0.1, 0.9)
    with pytest.raises(sim.SimulationError, match="phase fell below"):
        sim.run(state, ring(2, -1e4), U, 5.0)


def test_irregular_regime_short_window():
    net = generate_random(400, 0.2, -16.0, 2)
    spikes, _ = sim.run(sim.random_state(400, 0.035, 2), net, U4, 48.0)
    win = spikes.window(40.0, 48.0)
    assert len(win) > 50
    assert len(set(win.neurons.tolist())) < 400      # not a synchronous volley
    rates = sim.firing_rates(spikes, 400, (8.0, 48.0))
    assert np.nanstd(rates) > 0


# -- perturbations and pulses -------------------------------------------------------

def test_perturb_zero_and_uniform_shift():
    net = generate_random(12, 0.3, -0.2, 1)
    T = sync_period(U4, 0.15, -0.2)
    base = sim.synchronous_state(12, 0.15, 0.5)
    assert np.array_equal(sim.perturb(base, np.zeros(12)).phases, base.phases)
    c = 0.01
    shifted = sim.perturb(base, np.full(12, c))
    a, _ = sim.run(base, net, U4, 4 * T)
    b, _ = sim.run(shifted, net, U4, 4 * T)
    assert np.allclose(a.times - b.times, c, atol=1e-12)


def test_perturb_preconditions():
    state = sim.SimulatorState(t=0.0, phases=np.zeros(2), tau=0.1, arrival=np.array([0.05]),
                               source=np.array([0]), gain=np.array([1.0]))
    with pytest.raises(ValueError, match="in flight"):
        sim.perturb(state, np.zeros(2))
    quiet = sim.synchronous_state(3, 0.1, 0.5)
    with pytest.warns(sim.PerturbationWarning):
        sim.perturb(quiet, np.array([0.0, 0.1, 0.05]))
    with pytest.raises(ValueError):
        sim.perturb(quiet, np.zeros(4))
    with pytest.raises(ValueError, match="above threshold"), pytest.warns(sim.PerturbationWarning):
        sim.perturb(quiet, np.array([0.6, 0, 0]))


def test_shift_phases_allows_in_flight():
    state = sim.SimulatorState(t=0.0, phases=np.zeros(2), tau=0.1, arrival=np.array([0.05]),
                               source=np.array([0]), gain=np.array([1.0]))
    assert np.array_equal(sim.shift_phases(state, np.array([0.1, -0.2])).phases, [0.1, -0.2])


def test_external_pulse_synchronises():
    state = sim.random_state(50, 0.14, 9)
    strength = sim.synchronizing_strength(state, U4)
    new, fired = sim.inject_external_pulse(state, U4, strength)
    assert np.all(new.phases == 0.0) and len(fired) == 50
    assert np.all(new.arrival == state.t + 0.14)
    same, fired = sim.inject_external_pulse(state, U4, 0.0)
    assert np.array_equal(same.phases, state.phases) and fired == []


def test_weak_external_pulse_is_a_transfer():
    state = sim.SimulatorState(t=0.0, phases=np.array([0.2, 0.95]), tau=0.1)
    new, fired = sim.inject_external_pulse(state, U4, 0.1)
    assert [r.neuron for r in fired] == [1]
    assert new.phases[0] == pytest.approx(transfer(U4, 0.2, 0.1)[0], abs=1e-14)


def test_two_pulses_enter_sync_orbit():
    net = generate_random(400, 0.2, -16.0, 1)
    tau = 0.14
    T = sync_period(U4, tau, -16.0)
    _, state = sim.run(sim.random_state(400, tau, 3), net, U4, 30.0)
    for t in (30.0, 30.5):
        _, state = sim.run(state, net, U4, t)
        state, _ = sim.inject_external_pulse(state, U4, sim.synchronizing_strength(state, U4))
    spikes, _ = sim.run(state, net, U4, 30.5 + 4.5 * T)
    rounds = sync_rounds(spikes, 400, tau)
    assert len(rounds) == 4 and all(r.complete and r.spread < 1e-9 for r in rounds)


def test_uncoupled_spread_equals_perturbation_spread():
    net = ring(8, -1e-300)
    rng = np.random.default_rng(0)
    delta = rng.uniform(-0.04, 0.04, 8)
    state = sim.perturb(sim.synchronous_state(8, 0.1, 0.5), delta)
    spikes, _ = sim.run(state, net, U4, 0.7)
    assert sim.spike_spread(spikes, 8, 0, gap=0.1) == pytest.approx(np.ptp(delta), abs=1e-12)


# -- statistics ----------------------------------------------------------------------

def train(times, neuron=0):
    t = np.asarray(times, dtype=float)
    return sim.Spikes(t, np.full(t.size, neuron, dtype=np.int64))


def test_rates_and_cv_closed_forms():
    assert sim.firing_rates(train([0, 1, 2, 3]), 1)[0] == 1.0
    assert sim.coefficient_of_variation(train(np.arange(10) * 0.7), 1)[0] == 0.0
    a, b = 0.3, 1.1
    t = np.cumsum([0] + [a, b] * 6)
    assert sim.coefficient_of_variation(train(t), 1)[0] == pytest.approx(abs(a - b) / (a + b), abs=1e-12)


def test_undefined_statistics_are_nan():
    spikes = train([1.0, 2.0]) + train([0.5], neuron=1)
    rates = sim.firing_rates(spikes, 3)
    assert rates[0] == 1.0 and math.isnan(rates[1]) and math.isnan(rates[2])
    cv = sim.coefficient_of_variation(spikes, 3)
    assert np.all(np.isnan(cv))


def test_statistics_window():
    spikes = train([0, 0.1, 0.2, 5, 6, 7, 8])
    assert sim.firing_rates(spikes, 1, (4.0, 9.0))[0] == 1.0


def test_incomplete_round_marked():
    spikes = sim.Spikes(np.array([0.0, 0.01, 5.0, 5.02, 5.03]), np.array([0, 1, 0, 1, 2]))
    rounds = sim.firing_rounds(spikes, 3, gap=0.1)
    assert [r.complete for r in rounds] == [False, True]
    assert math.isnan(rounds[0].spread) and rounds[1].spread == pytest.approx(0.03)


# -- file formats ----------------------------------------------------------------------

def test_spike_csv_roundtrip(tmp_path):
    spikes = sim.Spikes(np.array([0.1234567890123456, 2.0, 1e3 / 3]), np.array([3, 0, 1]))
    path = tmp_path / "s.csv"
    sim.write_spikes_csv(spikes, path, "provenance line")
    lines = path.read_text().splitlines()
    assert lines[0] == "# provenance line" and lines[1] == "time,neuron"
    assert lines[2] == "0.123456789012,3"
    back = sim.read_spikes_csv(path)
    assert np.array_equal(back.neurons, spikes.neurons)
    assert np.allclose(back.times, spikes.times, rtol=1e-11, atol=0)


def test_state_json_roundtrip_resumes_exactly(tmp_path):
    net = generate_random(30, 0.3, -1.0, 3)
    full, _ = sim.run(sim.random_state(30, 0.1, 4), net, U4, 10.0)
    first, mid = sim.run(sim.random_state(30, 0.1, 4), net, U4, 4.0)
    assert mid.arrival.size > 0
    sim.save_state(mid, tmp_path / "state.json")
    loaded = sim.load_state(tmp_path / "state.json")
    assert loaded.to_json() == mid.to_json()
    assert set(__import__("json").loads(mid.to_json())) == {"t", "tau", "phases", "in_flight"}
    rest, _ = sim.run(loaded, net, U4, 10.0)
    both = first + rest
    assert np.array_equal(both.neurons, full.neurons)
    assert np.array_equal(both.times, full.times)
