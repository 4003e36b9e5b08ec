"""Seeded disorder ensembles and their statistics.

Realization ``i`` depends only on ``(master_seed, i)``. Workers may run in
any order or in separate processes; results are merged by index before any
reduction, so summaries are bit-identical for every ``parallel`` setting.
"""

from __future__ import annotations

import enum
import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial

import numpy as np

from . import quantum
from .lattice import Circulation, LatticeKind, LatticeSpec, build_hamiltonian, sample_disorder
from .rng import STREAM_PRIMARY, STREAM_SECOND_CHAIN, STREAM_SWEEP, derive_seed
from .transport import (
    Channel,
    FrequencyGrid,
    InputEnvelope,
    group_delay,
    intensity_profile,
    reflection,
    solve_steady_state,
    transmission,
    transmission_db,
)

log = logging.getLogger(__name__)

CONFIDENCE_PERCENTILES = (17.5, 82.5)
HISTOGRAM_BINS = 50


class Observable(str, enum.Enum):
    TRANSMISSION = "transmission"
    REFLECTION = "reflection"
    PROFILE = "profile"
    DELAY = "delay"
    HOM = "hom"
    NOON_COINCIDENCE = "noon_coincidence"
    NOON_PURITY = "noon_purity"
    NOON_ENTROPY = "noon_entropy"


ALL_OBSERVABLES = frozenset(Observable)
QUANTUM_OBSERVABLES = frozenset(
    {Observable.HOM, Observable.NOON_COINCIDENCE, Observable.NOON_PURITY, Observable.NOON_ENTROPY}
)


class EnsembleFailure(RuntimeError):
    """Too many realizations hit a singular solve."""

    def __init__(self, message, excluded):
        super().__init__(message)
        self.excluded = excluded


def default_tau_grid(sigma: float = 0.5, count: int = 101) -> np.ndarray:
    return np.linspace(-10 / sigma, 10 / sigma, count)


@dataclass(frozen=True)
class EnsembleSpec:
    lattice: LatticeSpec
    realizations: int = 500
    master_seed: int = 0
    grid: FrequencyGrid = field(default_factory=FrequencyGrid.symmetric)
    envelope_sigma: float = 0.5
    tau_c_grid: np.ndarray | None = None
    observables: frozenset = ALL_OBSERVABLES
    photon_numbers: tuple = tuple(range(1, 11))
    parallel: int = 1
    method: str = "banded"
    keep_records: bool = False
    max_failure_fraction: float = 0.01

    def __post_init__(self):
        if int(self.realizations) != self.realizations or self.realizations < 1:
            raise ValueError(f"realizations must be >= 1, got {self.realizations!r}")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        if self.parallel < 1:
            raise ValueError(f"parallel must be >= 1, got {self.parallel}")
        obs = frozenset(Observable(o) for o in self.observables)
        object.__setattr__(self, "observables", obs)
        tau = default_tau_grid(self.envelope_sigma) if self.tau_c_grid is None else self.tau_c_grid
        tau = np.array(tau, dtype=float)
        if obs & QUANTUM_OBSERVABLES and tau.size == 0:
            raise ValueError("tau_c_grid must be non-empty for delay-dependent quantum observables")
        object.__setattr__(self, "tau_c_grid", tau)
        if any(int(n) != n or n < 1 for n in self.photon_numbers):
            raise ValueError("photon_numbers must be positive integers")
        object.__setattr__(self, "photon_numbers", tuple(int(n) for n in self.photon_numbers))

    @property
    def envelope(self) -> InputEnvelope:
        return InputEnvelope.gaussian(self.grid, self.envelope_sigma)

    def replace(self, **changes) -> "EnsembleSpec":
        return replace(self, **changes)


@dataclass
class RealizationResult:
    index: int
    seeds: tuple
    failed: bool
    transmission: np.ndarray | None = None  # (2, n_omega), one row per channel
    reflection: np.ndarray | None = None
    profile: np.ndarray | None = None  # channel 1, omega = 0, per ring
    delay: np.ndarray | None = None  # (2, n_omega), NaN where invalid
    hom: np.ndarray | None = None
    min_hom: float = np.nan
    min_hom_grid: float = np.nan
    min_hom_tau: float = np.nan
    noon_coincidence: np.ndarray | None = None
    noon_purity: np.ndarray | None = None
    entropy: np.ndarray | None = None  # per photon number, nats


def realization_hamiltonians(lattice: LatticeSpec, master_seed: int, index: int):
    """Hamiltonians for channel 1 and channel 2 of realization ``index``.

    An H-CROW carries both channels in one disordered structure; regular
    CROWs use two independent chains.
    """
    seed = derive_seed(master_seed, index, STREAM_PRIMARY)
    d1 = sample_disorder(lattice, seed)
    if lattice.kind is LatticeKind.HCROW:
        h1 = build_hamiltonian(lattice, Circulation.CCW, d1)
        h2 = build_hamiltonian(lattice, Circulation.CW, d1)
        return (h1, h2), (seed,)
    seed2 = derive_seed(master_seed, index, STREAM_SECOND_CHAIN)
    d2 = sample_disorder(lattice, seed2)
    h1 = build_hamiltonian(lattice, Circulation.CCW, d1)
    h2 = build_hamiltonian(lattice, Circulation.CCW, d2)
    return (h1, h2), (seed, seed2)


def simulate_realization(spec: EnsembleSpec, index: int) -> RealizationResult:
    (h1, h2), seeds = realization_hamiltonians(spec.lattice, spec.master_seed, index)
    obs = spec.observables
    fs = [
        solve_steady_state(h, spec.lattice, spec.grid, ch, method=spec.method)
        for h, ch in ((h1, Channel.CHANNEL1), (h2, Channel.CHANNEL2))
    ]
    res = RealizationResult(index, seeds, failed=any(f.num_failed for f in fs))
    if res.failed:
        return res
    if Observable.TRANSMISSION in obs:
        res.transmission = np.stack([transmission(f) for f in fs])
    if Observable.REFLECTION in obs:
        res.reflection = np.stack([reflection(f) for f in fs])
    if Observable.PROFILE in obs:
        res.profile = intensity_profile(fs[0], 0.0)
    if Observable.DELAY in obs:
        res.delay = np.stack([group_delay(f).tau for f in fs])
    if obs & QUANTUM_OBSERVABLES:
        env = spec.envelope.amplitudes
        ports = quantum.PortPair(spec.grid.omega, fs[0].p_out * env, fs[1].p_out * env)
        taus = spec.tau_c_grid
        if Observable.HOM in obs:
            res.hom = quantum.hom_curve(ports, taus)
            res.min_hom, res.min_hom_tau = quantum.min_hom_coincidence(ports, taus)
            res.min_hom_grid = float(np.min(res.hom))
        if Observable.NOON_COINCIDENCE in obs:
            res.noon_coincidence = quantum.noon_coincidence_curve(ports, taus)
        if Observable.NOON_PURITY in obs:
            res.noon_purity = quantum.noon_purity_curve(ports, taus)
        if Observable.NOON_ENTROPY in obs:
            res.entropy = np.array([quantum.entanglement_entropy(ports, n) for n in spec.photon_numbers])
    return res


@dataclass(frozen=True)
class Band:
    """Pointwise ensemble statistics; ``lower``/``upper`` bound the central 65%.

    The band always brackets ``median``. It need not bracket ``mean`` when the
    distribution is strongly skewed (linear transmission of a localized chain).
    """

    mean: np.ndarray
    std: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    count: np.ndarray
    median: np.ndarray

    @property
    def sem(self) -> np.ndarray:
        return self.std / np.sqrt(np.maximum(self.count, 1))


def band_of(samples) -> Band:
    """Statistics along axis 0, ignoring NaN entries."""
    x = np.asarray(samples, dtype=float)
    count = np.sum(np.isfinite(x), axis=0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        mean = np.nanmean(x, axis=0)
        std = np.nanstd(x, axis=0, ddof=1) if x.shape[0] > 1 else np.zeros_like(mean)
        lo, med, hi = np.nanpercentile(x, (CONFIDENCE_PERCENTILES[0], 50.0, CONFIDENCE_PERCENTILES[1]), axis=0)
    return Band(mean, np.nan_to_num(std), lo, hi, count, med)


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray

    @property
    def probability(self) -> np.ndarray:
        total = self.counts.sum()
        return self.counts / total if total else self.counts.astype(float)

    @property
    def density(self) -> np.ndarray:
        return self.probability / np.diff(self.edges)

    @property
    def mode_bin(self) -> int:
        return int(np.argmax(self.counts))


def histogram_of(values, value_range=None, bins: int = HISTOGRAM_BINS) -> Histogram:
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if value_range is None:
        value_range = (float(v.min()), float(v.max())) if v.size else (0.0, 1.0)
        if value_range[0] == value_range[1]:
            value_range = (value_range[0] - 0.5, value_range[1] + 0.5)
    counts, edges = np.histogram(v, bins=bins, range=value_range)
    return Histogram(edges, counts)


@dataclass
class EnsembleSummary:
    spec: EnsembleSpec
    per_omega: dict = field(default_factory=dict)
    per_site: dict = field(default_factory=dict)
    per_tau: dict = field(default_factory=dict)
    per_photon_number: dict = field(default_factory=dict)
    scalars: dict = field(default_factory=dict)
    histograms: dict = field(default_factory=dict)
    excluded: list = field(default_factory=list)
    delay_excluded: np.ndarray | None = None
    records: list | None = None


def _run_all(spec: EnsembleSpec) -> list:
    work = partial(simulate_realization, spec)
    indices = range(spec.realizations)
    if spec.parallel == 1 or spec.realizations == 1:
        return [work(i) for i in indices]
    chunk = max(1, spec.realizations // (4 * spec.parallel))
    with ProcessPoolExecutor(max_workers=spec.parallel) as pool:
        return list(pool.map(work, indices, chunksize=chunk))


def run_ensemble(spec: EnsembleSpec) -> EnsembleSummary:
    results = sorted(_run_all(spec), key=lambda r: r.index)
    excluded = [r.index for r in results if r.failed]
    if len(excluded) > spec.max_failure_fraction * spec.realizations:
        raise EnsembleFailure(
            f"{len(excluded)} of {spec.realizations} realizations failed "
            f"(budget {spec.max_failure_fraction:.0%})",
            excluded,
        )
    if excluded:
        log.warning("excluding %d realizations with singular solves", len(excluded))
    good = [r for r in results if not r.failed]
    summary = summarize(spec, good)
    summary.excluded = excluded
    summary.scalars["excluded_realizations"] = len(excluded)
    if spec.keep_records:
        summary.records = results
    return summary


def summarize(spec: EnsembleSpec, results: list) -> EnsembleSummary:
    s = EnsembleSummary(spec)
    if not results:
        return s
    i0 = spec.grid.zero_index
    obs = spec.observables

    def pooled(attr):
        # (realizations, 2, n) -> (2 * realizations, n), channel 1 rows first per realization
        return np.concatenate([getattr(r, attr) for r in results], axis=0)

    if Observable.TRANSMISSION in obs:
        t = pooled("transmission")
        tdb = transmission_db(t)
        s.per_omega["transmission"] = band_of(t)
        s.per_omega["transmission_db"] = band_of(tdb)
        db0 = s.per_omega["transmission_db"]
        s.scalars.update(
            T0_db_mean=float(db0.mean[i0]),
            T0_db_sem=float(db0.sem[i0]),
            T0_db_lower=float(db0.lower[i0]),
            T0_db_upper=float(db0.upper[i0]),
            T0_mean=float(s.per_omega["transmission"].mean[i0]),
            T0_linear_mean_db=float(transmission_db(s.per_omega["transmission"].mean[i0])),
        )
    if Observable.REFLECTION in obs:
        s.per_omega["reflection"] = band_of(pooled("reflection"))
    if Observable.PROFILE in obs:
        s.per_site["profile"] = band_of(np.stack([r.profile for r in results]))
    if Observable.DELAY in obs:
        d = pooled("delay")
        s.per_omega["delay"] = band_of(d)
        s.delay_excluded = np.sum(~np.isfinite(d), axis=0)
        tau0 = d[:, i0]
        valid = tau0[np.isfinite(tau0)]
        s.scalars.update(
            tau0_mean=float(np.mean(valid)) if valid.size else np.nan,
            tau0_var=float(np.var(valid, ddof=1)) if valid.size > 1 else np.nan,
            tau_rms=float(np.sqrt(np.mean(valid**2))) if valid.size else np.nan,
            tau0_excluded=int(tau0.size - valid.size),
        )
        s.histograms["delay_tau0"] = histogram_of(valid)
    if Observable.HOM in obs:
        s.per_tau["hom"] = band_of(np.stack([r.hom for r in results]))
        mins = np.array([r.min_hom for r in results])
        mb = band_of(mins[:, None])
        s.scalars.update(
            min_hom_mean=float(mb.mean[0]),
            min_hom_std=float(mb.std[0]),
            min_hom_lower=float(mb.lower[0]),
            min_hom_upper=float(mb.upper[0]),
            min_hom_grid_mean=float(np.mean([r.min_hom_grid for r in results])),
            min_of_mean_hom=float(np.min(s.per_tau["hom"].mean)),
        )
    tau0_idx = int(np.argmin(np.abs(spec.tau_c_grid))) if spec.tau_c_grid.size else None
    if Observable.NOON_COINCIDENCE in obs:
        c = np.stack([r.noon_coincidence for r in results])
        s.per_tau["noon_coincidence"] = band_of(c)
        s.histograms["noon_coincidence_tau0"] = histogram_of(c[:, tau0_idx], (0.0, 1.0))
        s.scalars["noon_coincidence_tau0_mean"] = float(np.mean(c[:, tau0_idx]))
    if Observable.NOON_PURITY in obs:
        p = np.stack([r.noon_purity for r in results])
        pb = band_of(p)
        s.per_tau["noon_purity"] = pb
        s.scalars.update(
            purity_tau0_mean=float(pb.mean[tau0_idx]),
            purity_tau0_lower=float(pb.lower[tau0_idx]),
            purity_tau0_upper=float(pb.upper[tau0_idx]),
        )
    if Observable.NOON_ENTROPY in obs:
        e = np.exp(np.stack([r.entropy for r in results]))
        s.per_photon_number["exp_entropy"] = band_of(e)
        if 2 in spec.photon_numbers:
            s.scalars["exp_entropy_N2_mean"] = float(
                s.per_photon_number["exp_entropy"].mean[spec.photon_numbers.index(2)]
            )
    s.scalars["realizations_used"] = len(results)
    return s


@dataclass(frozen=True)
class SweepRow:
    value: float
    mean: float
    lower: float
    upper: float
    std: float
    extra: float  # linear-mean dB for disorder sweeps, min of the mean curve for length sweeps
    excluded: int


def _sweep_seed(spec: EnsembleSpec, j: int) -> int:
    return derive_seed(spec.master_seed, j, STREAM_SWEEP)


def disorder_sweep(spec: EnsembleSpec, u_values) -> list[SweepRow]:
    """Ensemble-mean T(omega=0) in dB for each disorder strength."""
    rows = []
    for j, u in enumerate(u_values):
        if u < 0:
            raise ValueError(f"disorder strengths must be >= 0, got {u}")
        sub = spec.replace(
            lattice=spec.lattice.replace(disorder_std=float(u)),
            master_seed=_sweep_seed(spec, j),
            observables=frozenset({Observable.TRANSMISSION}),
            keep_records=False,
        )
        sm = run_ensemble(sub)
        sc = sm.scalars
        i0 = spec.grid.zero_index
        rows.append(
            SweepRow(
                float(u),
                sc["T0_db_mean"],
                sc["T0_db_lower"],
                sc["T0_db_upper"],
                float(sm.per_omega["transmission_db"].std[i0]),
                sc["T0_linear_mean_db"],
                len(sm.excluded),
            )
        )
    return rows


def length_sweep(spec: EnsembleSpec, lengths) -> list[SweepRow]:
    """Mean minimum HOM coincidence for each lattice length."""
    rows = []
    for j, n in enumerate(lengths):
        if int(n) != n or n < 2:
            raise ValueError(f"lengths must be integers >= 2, got {n}")
        sub = spec.replace(
            lattice=spec.lattice.replace(num_cells=int(n)),
            master_seed=_sweep_seed(spec, j),
            observables=frozenset({Observable.HOM}),
            keep_records=False,
        )
        sm = run_ensemble(sub)
        sc = sm.scalars
        rows.append(
            SweepRow(
                float(n),
                sc["min_hom_mean"],
                sc["min_hom_lower"],
                sc["min_hom_upper"],
                sc["min_hom_std"],
                sc["min_of_mean_hom"],
                len(sm.excluded),
            )
        )
    return rows
