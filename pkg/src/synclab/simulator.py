"""Exact event-driven evolution of delayed pulse-coupled oscillators.

Between events every phase grows at unit rate, so the next threshold crossing
is known in closed form and no numerical integration is involved. Spikes
travel for a fixed delay ``tau``; because emission times never decrease, the
in-flight spikes form a FIFO ordered by arrival time.

Events closer than ``1e-12`` in time are processed as one simultaneous batch:
first all oscillators at threshold fire and reset, then every spike arriving
in the batch is delivered. Simultaneous inputs to one oscillator are summed
before the transfer is applied, which equals sequential delivery whenever the
result stays below threshold.
"""

from __future__ import annotations

import csv
import json
import sys
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np

from . import _kernels
from .network import DirectedNetwork
from .potential import PotentialFunction, sync_alpha, sync_period


class SimulationError(RuntimeError):
    """Numerical failure during event-driven integration."""


class PerturbationWarning(UserWarning):
    """Perturbation outside the small-perturbation regime (spread >= tau)."""


class SpikeRecord(NamedTuple):
    neuron: int
    time: float


@dataclass
class Spikes:
    """Recorded spike stream, sorted by time."""

    times: np.ndarray = field(default_factory=lambda: np.empty(0))
    neurons: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def __len__(self):
        return self.times.size

    def __iter__(self) -> Iterator[SpikeRecord]:
        for t, i in zip(self.times.tolist(), self.neurons.tolist()):
            yield SpikeRecord(i, t)

    def __add__(self, other: "Spikes") -> "Spikes":
        return Spikes(np.concatenate([self.times, other.times]),
                      np.concatenate([self.neurons, other.neurons]))

    def window(self, t0: float, t1: float) -> "Spikes":
        m = (self.times >= t0) & (self.times < t1)
        return Spikes(self.times[m], self.neurons[m])

    def of(self, neuron: int) -> np.ndarray:
        return self.times[self.neurons == neuron]


@dataclass
class SimulatorState:
    """Clock, phases and spikes in transit.

    ``in_flight`` holds parallel arrays ``(arrival_time, source, gain)``; a
    spike of ``source`` delivers ``gain * eps_ij`` to every postsynaptic
    ``i``. Network spikes carry gain 1.
    """

    t: float
    phases: np.ndarray
    tau: float
    arrival: np.ndarray = field(default_factory=lambda: np.empty(0))
    source: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    gain: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("delay tau must be positive")
        self.phases = np.asarray(self.phases, dtype=float)
        self.arrival = np.asarray(self.arrival, dtype=float)
        self.source = np.asarray(self.source, dtype=np.int64)
        self.gain = np.asarray(self.gain, dtype=float)

    @property
    def n(self) -> int:
        return self.phases.size

    @property
    def in_flight(self) -> list[tuple[float, int, float]]:
        return list(zip(self.arrival.tolist(), self.source.tolist(), self.gain.tolist()))

    def copy(self) -> "SimulatorState":
        return replace(self, phases=self.phases.copy(), arrival=self.arrival.copy(),
                       source=self.source.copy(), gain=self.gain.copy())

    def to_json(self) -> str:
        return json.dumps({
            "t": self.t,
            "tau": self.tau,
            "phases": self.phases.tolist(),
            "in_flight": [[a, s, g] for a, s, g in self.in_flight],
        })

    @classmethod
    def from_json(cls, text: str) -> "SimulatorState":
        doc = json.loads(text)
        fl = doc.get("in_flight", [])
        return cls(
            t=float(doc["t"]),
            phases=np.array(doc["phases"], dtype=float),
            tau=float(doc["tau"]),
            arrival=np.array([e[0] for e in fl], dtype=float),
            source=np.array([e[1] for e in fl], dtype=np.int64),
            gain=np.array([e[2] for e in fl], dtype=float),
        )


def synchronous_state(n: int, tau: float, phase: float = 0.5, t: float = 0.0) -> SimulatorState:
    return SimulatorState(t=t, phases=np.full(n, float(phase)), tau=tau)


def random_state(n: int, tau: float, seed: int, t: float = 0.0) -> SimulatorState:
    rng = np.random.Generator(np.random.PCG64(seed))
    return SimulatorState(t=t, phases=rng.random(n), tau=tau)


def _advance(state, net, U, t_end, max_batches, backend):
    if state.n != net.n:
        raise ValueError(f"state has {state.n} phases but network has {net.n} oscillators")
    new = state.copy()
    phi, t, qa, qs, qg, st, sn, batches, status = _kernels.integrate(
        new.phases, new.t, t_end, new.tau, new.arrival, new.source, new.gain,
        net, U, max_batches, backend=backend)
    if status == _kernels.PHASE_FLOOR:
        raise SimulationError(
            f"phase fell below {_kernels.PHASE_FLOOR_VALUE} at t={t}; runaway inhibition")
    if status == _kernels.BAD_STATE:
        raise SimulationError(f"non-finite phase at t={t}; event queue cannot advance")
    new.phases, new.t = phi, t
    new.arrival, new.source, new.gain = qa, qs, qg
    return new, Spikes(st, sn), batches


def step(state: SimulatorState, net: DirectedNetwork, U: PotentialFunction,
         backend: str = "auto") -> tuple[SimulatorState, list[SpikeRecord]]:
    """Advance to the next event batch and process it."""
    new, spikes, _ = _advance(state, net, U, np.inf, 1, backend)
    return new, list(spikes)


def run(state: SimulatorState, net: DirectedNetwork, U: PotentialFunction, t_end: float,
        backend: str = "auto") -> tuple[Spikes, SimulatorState]:
    """Integrate until ``t_end``; returns spikes with ``time < t_end`` and the final state."""
    if t_end < state.t:
        raise ValueError("t_end lies before the current time")
    new, spikes, _ = _advance(state, net, U, float(t_end), sys.maxsize, backend)
    return spikes, new


def perturb(state: SimulatorState, delta) -> SimulatorState:
    """Shift phases by ``delta``; only allowed while no spike is in transit."""
    delta = np.asarray(delta, dtype=float)
    if delta.shape != state.phases.shape:
        raise ValueError("perturbation has the wrong length")
    if state.arrival.size:
        raise ValueError("cannot perturb while spikes are in flight")
    spread = float(delta.max() - delta.min()) if delta.size else 0.0
    if spread >= state.tau:
        warnings.warn(f"perturbation spread {spread:.4g} >= tau={state.tau}; "
                      "outside the small-perturbation regime", PerturbationWarning, stacklevel=2)
    return shift_phases(state, delta)


def shift_phases(state: SimulatorState, delta) -> SimulatorState:
    """Add ``delta`` to the phases at the current instant, spikes in transit or not."""
    delta = np.asarray(delta, dtype=float)
    if delta.shape != state.phases.shape:
        raise ValueError("perturbation has the wrong length")
    new = state.copy()
    new.phases = new.phases + delta
    if np.any(new.phases > 1.0):
        raise ValueError("perturbation pushes a phase above threshold")
    return new


def inject_external_pulse(state: SimulatorState, U: PotentialFunction,
                          strength: float) -> tuple[SimulatorState, list[SpikeRecord]]:
    """Deliver a pulse of ``strength`` to every oscillator at the current time.

    Oscillators driven to threshold reset and emit network spikes.
    """
    new = state.copy()
    if strength == 0.0:
        return new, []
    u = U.eval(new.phases) + strength
    supra = u >= 1.0
    fired = np.flatnonzero(supra)
    if np.any(~supra):
        new.phases[~supra] = U.inv(u[~supra])
    new.phases[fired] = 0.0
    new.arrival = np.concatenate([new.arrival, np.full(fired.size, new.t + new.tau)])
    new.source = np.concatenate([new.source, fired.astype(np.int64)])
    new.gain = np.concatenate([new.gain, np.ones(fired.size)])
    return new, [SpikeRecord(int(i), new.t) for i in fired]


def synchronizing_strength(state: SimulatorState, U: PotentialFunction, margin: float = 1.0) -> float:
    """Pulse strength that puts every oscillator above threshold."""
    return float(max(1.0 - U.eval(state.phases).min(), 0.0) + margin)


def simulated_period_map(net: DirectedNetwork, U: PotentialFunction, tau: float, delta,
                         backend: str = "auto") -> np.ndarray:
    """One-period perturbation map measured by event simulation.

    The synchronous orbit is perturbed halfway between the arrival of the
    volley and the next threshold crossing, then evolved for one period ``T``;
    the displacement of the phases from the unperturbed phase is returned.
    """
    delta = np.asarray(delta, dtype=float)
    alpha = sync_alpha(U, tau, net.eps_total)
    T = sync_period(U, tau, net.eps_total)
    phase0 = alpha + 0.5 * (1.0 - alpha)
    state = perturb(synchronous_state(net.n, tau, phase0), delta)
    _, end = run(state, net, U, T, backend=backend)
    return end.phases - phase0


# -- statistics ---------------------------------------------------------------

def _isi_per_neuron(spikes: Spikes, n: int, window):
    sel = spikes.window(*window) if window is not None else spikes
    order = np.lexsort((sel.times, sel.neurons))
    nn, tt = sel.neurons[order], sel.times[order]
    bounds = np.searchsorted(nn, np.arange(n + 1))
    return [np.diff(tt[bounds[i]:bounds[i + 1]]) for i in range(n)]


def firing_rates(spikes: Spikes, n: int, window=None) -> np.ndarray:
    """Reciprocal mean inter-spike interval per neuron; NaN below two spikes."""
    out = np.full(n, np.nan)
    for i, isi in enumerate(_isi_per_neuron(spikes, n, window)):
        if isi.size:
            out[i] = 1.0 / isi.mean()
    return out


def coefficient_of_variation(spikes: Spikes, n: int, window=None, min_spikes: int = 3) -> np.ndarray:
    """ISI coefficient of variation, ``sqrt(nu^2 <ISI^2> - 1)``.

    Radicands down to ``-1e-12`` are rounding noise and clamp to 0; neurons
    with fewer than ``min_spikes`` spikes yield NaN.
    """
    out = np.full(n, np.nan)
    for i, isi in enumerate(_isi_per_neuron(spikes, n, window)):
        if isi.size + 1 < max(min_spikes, 2):
            continue
        nu = 1.0 / isi.mean()
        rad = nu * nu * np.mean(isi * isi) - 1.0
        if rad < 0.0:
            if rad < -1e-12:
                continue
            rad = 0.0
        out[i] = np.sqrt(rad)
    return out


@dataclass(frozen=True)
class FiringRound:
    start: float
    end: float
    count: int
    complete: bool

    @property
    def spread(self) -> float:
        return self.end - self.start if self.complete else np.nan


def firing_rounds(spikes: Spikes, n: int, gap: float) -> list[FiringRound]:
    """Split the spike stream at silences longer than ``gap``.

    A round is complete when every neuron fires exactly once in it.
    """
    if len(spikes) == 0:
        return []
    t = spikes.times
    cuts = np.flatnonzero(np.diff(t) > gap) + 1
    edges = np.concatenate([[0], cuts, [t.size]])
    out = []
    for a, b in zip(edges[:-1], edges[1:]):
        who = spikes.neurons[a:b]
        complete = (b - a == n) and np.unique(who).size == n
        out.append(FiringRound(float(t[a]), float(t[b - 1]), int(b - a), bool(complete)))
    return out


def spike_spread(spikes: Spikes, n: int, round_index: int, gap: float) -> float:
    """Max minus min firing time within one round; NaN if the round is incomplete."""
    rounds = firing_rounds(spikes, n, gap)
    return rounds[round_index].spread


# -- file formats -------------------------------------------------------------

def write_spikes_csv(spikes: Spikes, path, header_comment: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if header_comment:
            for line in header_comment.splitlines():
                fh.write(f"# {line}\n")
        fh.write("time,neuron\n")
        for t, i in zip(spikes.times.tolist(), spikes.neurons.tolist()):
            fh.write(f"{t:.12g},{i}\n")


def read_spikes_csv(path) -> Spikes:
    rows = [r for r in csv.reader(line for line in open(path) if not line.startswith("#"))]
    if not rows or rows[0] != ["time", "neuron"]:
        raise ValueError(f"{path}: expected header 'time,neuron'")
    body = rows[1:]
    return Spikes(np.array([float(r[0]) for r in body]),
                  np.array([int(r[1]) for r in body], dtype=np.int64))


def save_state(state: SimulatorState, path) -> None:
    Path(path).write_text(state.to_json())


def load_state(path) -> SimulatorState:
    return SimulatorState.from_json(Path(path).read_text())
