"""Batch experiments: coexistence, switching, spectra, contraction, enumeration.

Each ``run_*`` function takes an :class:`ExperimentConfig`, writes CSV/SVG/JSON
artifacts into ``<out>/<kind>/`` and returns a summary dict. Files are built in
a ``.partial`` directory that is renamed on success and removed on failure.
"""

from __future__ import annotations

import contextlib
import dataclasses
import hashlib
import json
import shutil
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import simulator as sim
from . import stability as stab
from .network import (DirectedNetwork, all_to_all, diameter, generate_random,
                      is_strongly_connected, load_network, ring, save_network)
from .potential import IFPotential, PotentialFunction, log_potential, sync_alpha, sync_period
from .svg import Figure

KINDS = ("coexist", "switch", "spectrum", "contraction", "enumerate", "simulate")
TOPOLOGIES = ("random", "ring", "all-to-all", "hetero-all-to-all", "star")


@dataclass
class ExperimentConfig:
    kind: str = "coexist"
    n: int = 400
    p: float = 0.2
    drive: float = 4.0
    eps: float = -16.0
    tau: float = 0.035
    seed: int = 1
    t_end: float = 600.0
    out: str = "out"
    topology: str = "random"
    network: str | None = None
    periods: int = 200
    trials: int = 10
    pulse_gap: float = 0.5
    warmup: float = 50.0
    small_amp: float = 0.18
    large_amp: float = 0.36
    samples: int = 8
    mode: str = "linear"
    amplitude: float = 0.01
    start: str = "random"
    state: str | None = None
    workers: int = 1
    potential: str = "if"
    curvature: float = 3.0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"unknown topology {self.topology!r}")
        if not self.drive > 1:
            raise ValueError("drive I must exceed 1")
        if not self.tau > 0:
            raise ValueError("delay tau must be positive")
        if self.n < 2:
            raise ValueError("need N >= 2 oscillators")
        if not 0 < self.p <= 1:
            raise ValueError("edge probability must lie in (0, 1]")
        if self.mode not in ("linear", "exact"):
            raise ValueError("mode must be 'linear' or 'exact'")
        if self.potential not in ("if", "log"):
            raise ValueError("potential must be 'if' or 'log'")
        if self.potential == "log" and not self.curvature > 0:
            raise ValueError("log potential needs curvature > 0")
        if self.start not in ("random", "sync"):
            raise ValueError("start must be 'random' or 'sync'")

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        doc = json.loads(text)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    @property
    def hash(self) -> str:
        doc = dataclasses.asdict(self)
        doc.pop("out")
        doc.pop("workers")
        blob = json.dumps(doc, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def header(self) -> str:
        return f"synclab {__version__} kind={self.kind} config_hash={self.hash} seed={self.seed}"


def make_potential(cfg: ExperimentConfig) -> PotentialFunction:
    if cfg.potential == "log":
        return log_potential(cfg.curvature)
    return IFPotential(cfg.drive)


# -- helpers ------------------------------------------------------------------

@contextlib.contextmanager
def _output_dir(cfg: ExperimentConfig, name: str):
    final = Path(cfg.out) / name
    partial = Path(cfg.out) / f"{name}.partial"
    if partial.exists():
        shutil.rmtree(partial)
    partial.mkdir(parents=True)
    try:
        yield partial
    except BaseException:
        shutil.rmtree(partial, ignore_errors=True)
        raise
    if final.exists():
        shutil.rmtree(final)
    partial.rename(final)


def _write_csv(path: Path, header: str, columns: list[str], rows, comment: str):
    with open(path, "w") as fh:
        fh.write(f"# {comment}\n")
        fh.write(f"# {header}\n" if header else "")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return "nan" if np.isnan(v) else f"{float(v):.12g}"
    return str(v)


def _write_json(path: Path, doc):
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(type(v))


def build_network(cfg: ExperimentConfig, seed: int | None = None) -> DirectedNetwork:
    seed = cfg.seed if seed is None else seed
    if cfg.network:
        return load_network(cfg.network)
    if cfg.topology == "ring":
        return ring(cfg.n, cfg.eps)
    if cfg.topology == "all-to-all":
        return all_to_all(cfg.n, cfg.eps)
    if cfg.topology == "hetero-all-to-all":
        return hetero_all_to_all(cfg.n, cfg.eps, seed)
    if cfg.topology == "star":
        return star_chain(cfg.n, cfg.eps)
    return generate_random(cfg.n, cfg.p, cfg.eps, seed)


def hetero_all_to_all(n: int, eps: float, seed: int) -> DirectedNetwork:
    """All-to-all coupling with random positive row shares of ``eps``."""
    rng = np.random.Generator(np.random.PCG64(seed))
    shares = rng.uniform(0.5, 1.5, (n, n))
    np.fill_diagonal(shares, 0.0)
    W = eps * shares / shares.sum(axis=1, keepdims=True)
    edges = [(i, j, W[i, j]) for i in range(n) for j in range(n) if i != j]
    # absorb rounding into the last edge of each row
    fixed = []
    for i in range(n):
        row = [e for e in edges if e[0] == i]
        head = row[:-1]
        last = (row[-1][0], row[-1][1], eps - float(np.sum([w for _, _, w in head])))
        fixed += head + [last]
    return DirectedNetwork.from_edges(n, fixed, eps)


def star_chain(n: int, eps: float) -> DirectedNetwork:
    """Oscillator 0 listens to 1 and 2; every other oscillator listens to one partner.

    ``Pre(0) = {1, 2}``, ``Pre(i) = {0}`` for ``i >= 1``: a single node with
    in-degree 2 and all others with in-degree 1.
    """
    if n < 3:
        raise ValueError("star-chain needs n >= 3")
    edges = [(0, 1, eps / 2), (0, 2, eps / 2)] + [(i, 0, eps) for i in range(1, n)]
    return DirectedNetwork.from_edges(n, edges, eps)


def strongly_connected_random(n: int, p: float, eps: float, seed: int, tries: int = 1000):
    for k in range(tries):
        net = generate_random(n, p, eps, seed * 7919 + k)
        if is_strongly_connected(net):
            return net
    raise ValueError(f"no strongly connected network after {tries} draws (n={n}, p={p})")


def histogram(values_a, values_b, bins: int = 40):
    """Shared 40-bin histogram over the observed range of both samples."""
    both = np.concatenate([values_a[np.isfinite(values_a)], values_b[np.isfinite(values_b)]])
    lo, hi = (float(both.min()), float(both.max())) if both.size else (0.0, 1.0)
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bins + 1)
    ca, _ = np.histogram(values_a[np.isfinite(values_a)], edges)
    cb, _ = np.histogram(values_b[np.isfinite(values_b)], edges)
    return edges, ca, cb


def _nanmean(x):
    x = np.asarray(x, dtype=float)
    return float(np.mean(x[np.isfinite(x)])) if np.isfinite(x).any() else None


def _nanstd(x):
    x = np.asarray(x, dtype=float)
    return float(np.std(x[np.isfinite(x)])) if np.isfinite(x).any() else None


def burn_in(duration: float, period: float) -> float:
    """Transient discarded before statistics: 10% of the run or 20 periods."""
    return max(0.1 * duration, 20.0 * period)


# -- coexistence ----------------------------------------------------------------

def run_coexist(cfg: ExperimentConfig) -> dict:
    U = make_potential(cfg)
    net = build_network(cfg)
    T = sync_period(U, cfg.tau, net.eps_total)
    with _output_dir(cfg, "coexist") as out:
        sync0 = sim.synchronous_state(net.n, cfg.tau, 0.5)
        t_sync = cfg.periods * T + 0.25
        sp_sync, _ = sim.run(sync0, net, U, t_sync)
        rounds = sim.firing_rounds(sp_sync, net.n, gap=cfg.tau)
        spreads = np.array([r.spread for r in rounds])

        irr0 = sim.random_state(net.n, cfg.tau, cfg.seed)
        sp_irr, _ = sim.run(irr0, net, U, cfg.t_end)
        b_sync = burn_in(t_sync, T)
        b_irr = burn_in(cfg.t_end, T)
        w_sync, w_irr = (b_sync, t_sync), (b_irr, cfg.t_end)
        rate_s = sim.firing_rates(sp_sync, net.n, w_sync)
        rate_i = sim.firing_rates(sp_irr, net.n, w_irr)
        cv_s = sim.coefficient_of_variation(sp_sync, net.n, w_sync)
        cv_i = sim.coefficient_of_variation(sp_irr, net.n, w_irr)

        head = cfg.header()
        sim.write_spikes_csv(sp_sync, out / "spikes_sync.csv", head)
        sim.write_spikes_csv(sp_irr, out / "spikes_irregular.csv", head)
        _write_csv(out / "neuron_stats.csv", "", ["neuron", "rate_sync", "rate_irregular",
                                                  "cv_sync", "cv_irregular"],
                   zip(range(net.n), rate_s, rate_i, cv_s, cv_i), head)
        for name, a, b, label in (("rate", rate_s, rate_i, "rate"), ("cv", cv_s, cv_i, "CV")):
            edges, ca, cb = histogram(a, b)
            _write_csv(out / f"hist_{name}.csv", "", ["bin_lo", "bin_hi", "count_sync",
                                                      "count_irregular"],
                       zip(edges[:-1], edges[1:], ca, cb), head)
            fig = Figure((edges[0], edges[-1]), (0, max(ca.max(), cb.max()) * 1.05),
                         title=f"p_{label}", xlabel=label, ylabel="count")
            fig.bars(edges, cb, color="#333333")
            fig.bars(edges, ca, color="#bbbbbb")
            fig.save(out / f"hist_{name}.svg")
        save_network(net, out / "network.json")
        complete = spreads[np.isfinite(spreads)]
        summary = {
            "period": T,
            "sync_rounds": len(rounds),
            "sync_complete_rounds": int(complete.size),
            "sync_max_spread": float(complete.max()) if complete.size else None,
            "sync_mean_cv": _nanmean((cv_s)),
            "irregular_spikes": len(sp_irr),
            "irregular_mean_cv": _nanmean((cv_i)),
            "irregular_rate_mean": _nanmean((rate_i)),
            "irregular_rate_std": _nanstd(rate_i),
            "irregular_silent": int(np.isnan(rate_i).sum()),
            "config_hash": cfg.hash,
        }
        _write_json(out / "summary.json", summary)
    return summary


# -- switching protocol -----------------------------------------------------------

def _resync(now: float, snapshot: sim.SimulatorState, T: float) -> sim.SimulatorState:
    # the synchronous orbit is periodic, so shifting its clock by whole periods is exact
    shift = np.ceil((now - snapshot.t) / T) * T
    new = snapshot.copy()
    new.t = snapshot.t + shift
    new.arrival = new.arrival + shift
    return new


def _to_next_volley(state, net, U, tau):
    """Run until half a delay after the next firing round, when its spikes are in transit."""
    spikes = sim.Spikes()
    while True:
        t_fire = state.t + 1.0 - state.phases.max()
        nxt = state.arrival.min() if state.arrival.size else np.inf
        if nxt <= t_fire:
            sp, state = sim.run(state, net, U, nxt + 0.5 * tau)
            spikes = spikes + sp
            continue
        sp, state = sim.run(state, net, U, t_fire + 0.5 * tau)
        return spikes + sp, state


def switch_trial(cfg: ExperimentConfig, net: DirectedNetwork, trial_seed: int) -> dict:
    """Irregular warm-up, two synchronising pulses, small and large perturbation.

    Random phase perturbations hit the synchronous orbit half a delay after a
    firing round, while the volley is still in transit.
    """
    U = make_potential(cfg)
    tau = cfg.tau
    T = sync_period(U, tau, net.eps_total)
    rng = np.random.Generator(np.random.PCG64(trial_seed))
    markers = []
    warn = []
    if cfg.pulse_gap <= tau:
        msg = f"pulse gap {cfg.pulse_gap} <= tau={tau}: the second pulse cannot collect in-flight spikes"
        warnings.warn(msg, UserWarning, stacklevel=2)
        warn.append(msg)

    state = sim.random_state(net.n, tau, int(rng.integers(2**63)))
    spikes, state = sim.run(state, net, U, cfg.warmup)
    for label in ("pulse1", "pulse2"):
        if label == "pulse2":
            sp, state = sim.run(state, net, U, markers[0][1] + cfg.pulse_gap)
            spikes = spikes + sp
        strength = sim.synchronizing_strength(state, U)
        state, fired = sim.inject_external_pulse(state, U, strength)
        spikes = spikes + sim.Spikes(np.array([r.time for r in fired]),
                                     np.array([r.neuron for r in fired], dtype=np.int64))
        markers.append((label, state.t, strength))

    # three free periods after the in-flight drain of the second pulse
    sp, state = sim.run(state, net, U, markers[1][1] + 3 * T - 0.5 * (1 - tau))
    spikes = spikes + sp
    rounds = sim.firing_rounds(sp, net.n, gap=tau)
    sync_spread = max((r.spread for r in rounds), default=np.nan)
    synchronized = len(rounds) >= 2 and all(r.complete for r in rounds) and sync_spread < 1e-9
    sp, state = _to_next_volley(state, net, U, tau)
    spikes = spikes + sp
    snapshot = state.copy()

    result = {"seed": trial_seed, "synchronized": bool(synchronized),
              "sync_spread": float(sync_spread), "warnings": warn}
    traces = {}
    for label, amp in (("small", cfg.small_amp), ("large", cfg.large_amp)):
        if np.ptp(state.phases) > 1e-9:
            state = _resync(state.t, snapshot, T)
        delta = rng.uniform(-amp, amp, net.n)
        markers.append((label, state.t, amp))
        state = sim.shift_phases(state, delta)
        sp, state = sim.run(state, net, U, state.t + (cfg.periods - 0.5) * T)
        spikes = spikes + sp
        rounds = sim.firing_rounds(sp, net.n, gap=tau)
        spread = np.array([r.spread for r in rounds])
        traces[label] = spread
        ok = np.flatnonzero(np.isfinite(spread) & (spread < 1e-6))
        restored = bool(rounds) and rounds[-1].complete and spread[-1] < 1e-6
        result[f"{label}_restored"] = bool(restored)
        result[f"{label}_rounds_to_restore"] = int(ok[0]) if ok.size and restored else None
        result[f"{label}_final_spread"] = float(spread[-1]) if rounds else float("nan")
        if restored:
            sp, state = _to_next_volley(state, net, U, tau)
            spikes = spikes + sp
    result["escaped"] = not result["large_restored"]
    return {"result": result, "spikes": spikes, "markers": markers, "traces": traces}


def _switch_worker(args):
    cfg, net, seed = args
    return switch_trial(cfg, net, seed)


def run_switch(cfg: ExperimentConfig) -> dict:
    net = build_network(cfg)
    seeds = [cfg.seed * 1000 + k for k in range(cfg.trials)]
    jobs = [(cfg, net, s) for s in seeds]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            trials = list(pool.map(_switch_worker, jobs))
    else:
        trials = [_switch_worker(j) for j in jobs]
    head = cfg.header()
    with _output_dir(cfg, "switch") as out:
        sim.write_spikes_csv(trials[0]["spikes"], out / "raster.csv", head)
        _write_csv(out / "markers.csv", "", ["trial", "event", "time", "strength_or_amplitude"],
                   [(k, m[0], m[1], m[2]) for k, tr in enumerate(trials) for m in tr["markers"]],
                   head)
        rows = []
        for k, tr in enumerate(trials):
            for label, spread in tr["traces"].items():
                rows += [(k, label, r, s) for r, s in enumerate(spread)]
        _write_csv(out / "spread_trace.csv", "", ["trial", "perturbation", "round", "spread"],
                   rows, head)
        tr0 = trials[0]["traces"]["small"]
        finite = np.where(np.isfinite(tr0) & (tr0 > 0), tr0, np.nan)
        if np.any(np.isfinite(finite)):
            logs = np.log10(finite)
            fig = Figure((0, max(len(tr0) - 1, 1)), (np.nanmin(logs) - 0.5, np.nanmax(logs) + 0.5),
                         title="spike-time spread after small perturbation", xlabel="round",
                         ylabel="log10 spread")
            ok = np.isfinite(logs)
            fig.line(np.arange(len(tr0))[ok], logs[ok])
            fig.save(out / "spread_small.svg")
        sp0 = trials[0]["spikes"]
        show = sp0.neurons < 5
        fig = Figure((0, max(sp0.times.max(), 1.0)), (-0.5, 4.5), title="raster (5 oscillators)",
                     xlabel="time", ylabel="neuron")
        fig.scatter(sp0.times[show], sp0.neurons[show], r=1.0)
        for m in trials[0]["markers"]:
            fig.vline(m[1])
        fig.save(out / "raster.svg")
        results = [tr["result"] for tr in trials]
        summary = {
            "trials": len(results),
            "synchronized": sum(r["synchronized"] for r in results),
            "small_restored": sum(r["small_restored"] for r in results),
            "large_escape_fraction": float(np.mean([r["escaped"] for r in results])),
            "per_trial": results,
            "config_hash": cfg.hash,
        }
        _write_json(out / "summary.json", summary)
        _write_json(out / "index.json", {"trials": seeds, "files": sorted(
            p.name for p in out.iterdir())})
    return summary


# -- spectra ----------------------------------------------------------------------

def run_spectrum(cfg: ExperimentConfig) -> dict:
    U = make_potential(cfg)
    net = build_network(cfg)
    sign = net.coupling_sign
    if sign == 0:
        raise stab.StabilityError("spectral bounds are only available for pure-sign coupling")
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    cache = stab.OperatorCache(net, U, cfg.tau)
    head = cfg.header()
    with _output_dir(cfg, "spectrum") as out:
        rows, checks, dots = [], [], []
        for k in range(cfg.samples):
            op = cache.for_delta(rng.uniform(0, 1, net.n))
            ev = stab.spectrum(op)
            g = stab.gershgorin_check(op, sign, ev)
            checks.append(g)
            rows += [(k, float(z.real), float(z.imag)) for z in ev]
            dots.append(ev)
            sig = ";".join("-".join(map(str, r)) for r in op.rank_order.rows)
            with open(out / f"operator_{k:03d}.csv", "w") as fh:
                fh.write(f"# {head}\n# N={op.n} A0={op.A0:.17g} rank_order={sig}\n")
                for r in op.A:
                    fh.write(",".join(f"{v:.17g}" for v in r) + "\n")
        _write_csv(out / "spectrum.csv", "", ["operator_id", "re", "im"], rows, head)
        A0 = checks[0].center
        radius = checks[0].radius
        eps_grid = net.eps_total * np.linspace(1.0, 0.0, 21)[:-1]
        sweep = [(e, stab.operator_diagonal(U, cfg.tau, e), abs(1 - stab.operator_diagonal(U, cfg.tau, e)))
                 for e in eps_grid]
        _write_csv(out / "radius_sweep.csv", "", ["eps", "A0", "radius"], sweep, head)
        ev = np.concatenate(dots)
        lim = max(1.2, A0 + radius + 0.1)
        fig = Figure((-lim, lim), (-lim, lim), title="eigenvalues", xlabel="Re", ylabel="Im",
                     equal=True)
        fig.circle(0.0, 0.0, 1.0, color="black")
        fig.circle(A0, 0.0, radius, color="gray", fill="gray")
        fig.scatter(ev.real, ev.imag, r=2.0)
        fig.save(out / "spectrum.svg")
        summary = {
            "sign": sign,
            "A0": A0,
            "radius": radius,
            "all_contained": all(c.all_contained for c in checks),
            "unit_tangency": all(c.unit_tangency for c in checks),
            "max_excess": max(c.max_excess for c in checks),
            "operators": len(cache),
            "config_hash": cfg.hash,
        }
        if sign < 0 and is_strongly_connected(net):
            per = [stab.perron_simplicity_check(cache.for_delta(rng.uniform(0, 1, net.n)))]
            summary["perron_simple"] = all(p.simple for p in per)
            summary["spectral_gap"] = min(p.gap for p in per)
        _write_json(out / "summary.json", summary)
    return summary


# -- contraction ------------------------------------------------------------------

def run_contraction(cfg: ExperimentConfig) -> dict:
    U = make_potential(cfg)
    if cfg.network or cfg.topology != "random":
        net = build_network(cfg)
    else:
        net = strongly_connected_random(cfg.n, cfg.p, cfg.eps, cfg.seed)
    lc = diameter(net)
    if cfg.topology == "ring" and not cfg.network:
        # maximal plateau: every oscillator but the end of the chain at the maximum
        delta = np.full(net.n, cfg.amplitude)
        delta[-1] = 0.0
    else:
        rng = np.random.Generator(np.random.PCG64(cfg.seed))
        delta = rng.uniform(0.0, cfg.amplitude, net.n)
    trace = stab.contraction_trace(net, U, cfg.tau, delta, cfg.periods, mode=cfg.mode,
                                   until_spread=1e-12)
    head = cfg.header()
    with _output_dir(cfg, "contraction") as out:
        _write_csv(out / "trace.csv", "", ["period", "max_norm", "spread"],
                   zip(range(trace.norms.size), trace.norms, trace.spreads), head)
        fig = Figure((0, max(trace.norms.size - 1, 1)), (0, trace.norms[0] * 1.05),
                     title=f"max-norm (l_c={lc})", xlabel="period", ylabel="max delta")
        fig.line(np.arange(trace.norms.size), trace.norms)
        fig.line(np.arange(trace.spreads.size), trace.spreads, color="gray", dash="4,3")
        fig.save(out / "trace.svg")
        plateau = int(np.argmax(trace.norms < trace.norms[0] * (1 - 1e-12))) if np.any(
            trace.norms < trace.norms[0] * (1 - 1e-12)) else None
        summary = {
            "diameter": lc,
            "periods": int(trace.norms.size - 1),
            "non_increasing": trace.non_increasing(),
            "strict_over_diameter": trace.windows_strict(lc),
            "first_drop_period": plateau,
            "final_spread": float(trace.spreads[-1]),
            "config_hash": cfg.hash,
        }
        _write_json(out / "summary.json", summary)
    return summary


# -- enumeration ----------------------------------------------------------------------

def run_enumerate(cfg: ExperimentConfig) -> dict:
    U = make_potential(cfg)
    net = build_network(cfg)
    rep = stab.enumerate_operators(net, U, cfg.tau)
    head = cfg.header()
    with _output_dir(cfg, "enumerate") as out:
        rows = []
        for k, op in enumerate(rep.operators):
            rows += [(k, float(z.real), float(z.imag)) for z in stab.spectrum(op)]
        _write_csv(out / "spectrum.csv", "", ["operator_id", "re", "im"], rows, head)
        summary = {
            "n": rep.n,
            "orderings": rep.orderings,
            "distinct": rep.distinct,
            "permutation_classes": rep.classes,
            "lower_bound": rep.lower_bound,
            "upper_bound": rep.upper_bound,
            "within_bounds": rep.within_bounds,
            "row_distinct": rep.row_distinct,
            "row_bound": rep.row_bound,
            "config_hash": cfg.hash,
        }
        _write_json(out / "summary.json", summary)
    return summary


# -- plain simulation ---------------------------------------------------------------

def run_simulate(cfg: ExperimentConfig) -> dict:
    U = make_potential(cfg)
    net = build_network(cfg)
    if cfg.state:
        state = sim.load_state(cfg.state)
    elif cfg.start == "sync":
        state = sim.synchronous_state(net.n, cfg.tau)
    else:
        state = sim.random_state(net.n, cfg.tau, cfg.seed)
    spikes, final = sim.run(state, net, U, cfg.t_end)
    with _output_dir(cfg, "simulate") as out:
        sim.write_spikes_csv(spikes, out / "spikes.csv", cfg.header())
        sim.save_state(final, out / "state.json")
        save_network(net, out / "network.json")
        summary = {"spikes": len(spikes), "t": final.t, "in_flight": int(final.arrival.size),
                   "config_hash": cfg.hash}
        _write_json(out / "summary.json", summary)
    return summary


RUNNERS = {
    "coexist": run_coexist,
    "switch": run_switch,
    "spectrum": run_spectrum,
    "contraction": run_contraction,
    "enumerate": run_enumerate,
    "simulate": run_simulate,
}
