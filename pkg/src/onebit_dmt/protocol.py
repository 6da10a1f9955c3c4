"""One-bit CSI deferral protocol and its Monte Carlo simulation.

At stage ``i`` the receiver reports whether the fresh block is in outage for
the stage threshold. A bad report defers the message to the next coherence
interval; a good one (or reaching the deadline ``D``) triggers transmission
at power ``rho**g_i``. The error of a transmission is stood in for by the
per-realization random-coding bound, which is what the achievability
arguments average.

Batches are split into chunks of :data:`onebit_dmt.rng.CHUNK_SIZE` trials;
chunk ``c`` draws from ``rng.stream(seed, c)``, and per-chunk sums are merged
in chunk order so results are bitwise reproducible for any worker count.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from onebit_dmt import analytic, rng as rngmod
from onebit_dmt.channel import (
    AntennaConfig,
    SnrPoint,
    error_bound_from_info,
    mutual_info,
    sample_channel,
)
from onebit_dmt.errors import DomainError, EstimationError, StageCapExceeded
from onebit_dmt.outage import (
    ThresholdSpec,
    outage_prob_mc,
    outage_prob_rank1,
    threshold_value,
)

logger = logging.getLogger(__name__)

DEFAULT_STAGE_CAP = 10**6
# trials for estimating stage outage probabilities of the printed schedule when
# no closed form exists
SCHEDULE_MC_TRIALS = 100_000


class PowerMode(enum.Enum):
    SHORT_TERM = "short"
    LONG_TERM_PRINTED = "printed"
    LONG_TERM_EXPONENT = "exponent"

    @property
    def long_term(self) -> bool:
        return self is not PowerMode.SHORT_TERM


@dataclass(frozen=True)
class SchemeConfig:
    """Code blocklength ``l``, deadline ``D`` (``None`` = unbounded), target ``r``."""

    l: int
    D: int | None
    r: float
    power_mode: PowerMode = PowerMode.SHORT_TERM
    printed_f_i: bool = False
    printed_alpha: bool = False
    stage_cap: int = DEFAULT_STAGE_CAP

    def __post_init__(self):
        if self.l < 1:
            raise DomainError(f"blocklength must be >= 1, got {self.l}")
        if self.D is not None and (int(self.D) != self.D or self.D < 1):
            raise DomainError(f"deadline must be a positive integer or None, got {self.D!r}")
        if self.r < 0:
            raise DomainError(f"multiplexing gain must be >= 0, got {self.r}")
        if self.D is None and self.power_mode.long_term:
            raise DomainError("long-term power control needs a finite deadline")

    @property
    def unbounded(self) -> bool:
        return self.D is None

    @property
    def label(self) -> str:
        if self.D is None:
            return "unbounded"
        return f"{self.power_mode.value}_D{self.D}"


@dataclass(frozen=True)
class ProtocolState:
    """Deferral state machine: current stage plus the per-stage plan."""

    deadline: int | None
    schedule: tuple[float, ...]
    thresholds: tuple[ThresholdSpec, ...]
    stage: int = 1

    def __post_init__(self):
        if self.deadline is not None:
            if not (1 <= self.stage <= self.deadline):
                raise ValueError(f"stage {self.stage} outside [1, {self.deadline}]")
            if len(self.schedule) != self.deadline or len(self.thresholds) != self.deadline:
                raise ValueError("schedule and thresholds need one entry per stage")

    def _at(self, seq):
        return seq[min(self.stage, len(seq)) - 1]

    @property
    def threshold(self) -> ThresholdSpec:
        return self._at(self.thresholds)

    @property
    def power_exponent(self) -> float:
        return self._at(self.schedule)

    @property
    def forced(self) -> bool:
        return self.deadline is not None and self.stage == self.deadline

    def defer(self) -> "ProtocolState":
        if self.forced:
            raise RuntimeError("cannot defer past the deadline")
        return dataclasses.replace(self, stage=self.stage + 1)


def stage_threshold_exponent(config: AntennaConfig, scheme: SchemeConfig) -> float:
    """Threshold exponent shared by all bounded-deadline stages."""
    if scheme.printed_f_i and scheme.power_mode.long_term:
        f = analytic.printed_f_i(config, scheme.l, scheme.D, scheme.r, scheme.printed_alpha)
        clamped = min(max(f, 0.0), float(config.min_mn))
        if clamped != f:
            logger.warning("printed stage threshold %.4g clamped to %.4g", f, clamped)
        return clamped
    return analytic.f_threshold(config, scheme.l, scheme.D, scheme.r)


def _stage_outage_prob(config, spec, snr, seed, stage) -> float:
    if config.min_mn == 1:
        return outage_prob_rank1(config.max_mn, snr, spec).value
    aux = rngmod.stream(seed, stage, purpose=1)
    return outage_prob_mc(config, spec, snr, SCHEDULE_MC_TRIALS, aux).value


def build_protocol(
    config: AntennaConfig, scheme: SchemeConfig, snr: SnrPoint, seed: int = 0
) -> ProtocolState:
    """Thresholds and power schedule for ``scheme`` at ``snr``, positioned at stage 1.

    ``seed`` only matters for the printed schedule on channels without a
    closed-form outage probability.
    """
    if scheme.r > config.min_mn:
        raise DomainError(f"r={scheme.r} exceeds min(M,N)={config.min_mn}")
    if scheme.unbounded:
        spec = ThresholdSpec.unbounded(config)
        threshold_value(spec, snr)  # domain check up front
        return ProtocolState(None, (1.0,), (spec,))
    D = scheme.D
    f = stage_threshold_exponent(config, scheme)
    mode = scheme.power_mode
    if mode is PowerMode.SHORT_TERM:
        schedule = [1.0] * D
        return ProtocolState(D, tuple(schedule), tuple(ThresholdSpec.short_term(config, f) for _ in range(D)))
    if mode is PowerMode.LONG_TERM_EXPONENT:
        schedule = analytic.power_schedule_exponent(config, scheme.l, D, scheme.r, f)
    else:
        probs: list[float] = []
        g = 1.0
        for j in range(1, D):
            spec = ThresholdSpec.long_term_stage(config, j, f, g)
            probs.append(_stage_outage_prob(config, spec, snr, seed, j))
            g = 1.0 + sum(probs)
        schedule = analytic.power_schedule_printed(D, probs)
    specs = tuple(ThresholdSpec.long_term_stage(config, i + 1, f, g) for i, g in enumerate(schedule))
    return ProtocolState(D, tuple(schedule), specs)


@dataclass(frozen=True)
class TrialOutcome:
    delay_T: int
    transmitted_stage: int
    power_exponent_used: float
    error_bound: float
    forced: bool
    # (mutual information, outage flag) per visited stage, when requested
    trace: tuple[tuple[float, bool], ...] | None = None


def run_trial(
    config: AntennaConfig,
    scheme: SchemeConfig,
    snr: SnrPoint,
    rng: np.random.Generator,
    protocol: ProtocolState | None = None,
    trace: bool = False,
) -> TrialOutcome:
    """Simulate one message from first report to transmission."""
    state = protocol if protocol is not None else build_protocol(config, scheme, snr)
    steps = []
    while True:
        H = sample_channel(config, rng, 1)
        g = state.power_exponent
        info = float(mutual_info(H, snr, g)[0])
        bad = (not state.forced) and info <= threshold_value(state.threshold, snr)
        steps.append((info, bad))
        if not bad:
            break
        if scheme.unbounded and state.stage >= scheme.stage_cap:
            raise StageCapExceeded(scheme.stage_cap, snr.rho)
        state = state.defer()
    eb = error_bound_from_info(info, snr.log_rho, scheme.r, scheme.l)
    return TrialOutcome(
        delay_T=scheme.l * state.stage,
        transmitted_stage=state.stage,
        power_exponent_used=g,
        error_bound=eb,
        forced=state.forced,
        trace=tuple(steps) if trace else None,
    )


def simulate_chunk(
    config: AntennaConfig,
    scheme: SchemeConfig,
    snr: SnrPoint,
    protocol: ProtocolState,
    rng: np.random.Generator,
    n: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized equivalent of ``n`` calls to :func:`run_trial` sharing ``rng``.

    Returns per-trial transmitted stages and error bounds. Each stage draws
    blocks only for trials still waiting, so ``n = 1`` consumes the
    generator exactly like :func:`run_trial`.
    """
    stages = np.zeros(n, dtype=np.int64)
    bounds = np.empty(n, dtype=np.float64)
    active = np.arange(n)
    state = protocol
    while True:
        H = sample_channel(config, rng, active.size)
        info = np.atleast_1d(mutual_info(H, snr, state.power_exponent))
        if state.forced:
            bad = np.zeros(active.size, dtype=bool)
        else:
            bad = info <= threshold_value(state.threshold, snr)
        tx = ~bad
        idx = active[tx]
        stages[idx] = state.stage
        bounds[idx] = error_bound_from_info(info[tx], snr.log_rho, scheme.r, scheme.l)
        active = active[bad]
        if active.size == 0:
            return stages, bounds
        if scheme.unbounded and state.stage >= scheme.stage_cap:
            raise StageCapExceeded(scheme.stage_cap, snr.rho)
        state = state.defer()


@dataclass(frozen=True)
class _ChunkStats:
    n: int
    sum_eb: float
    sum_eb2: float
    sum_stage: int
    sum_power: float
    hist: dict[int, int]


def _chunk_job(args) -> _ChunkStats:
    config, scheme, snr, protocol, seed, index, n = args
    stages, bounds = simulate_chunk(config, scheme, snr, protocol, rngmod.stream(seed, index), n)
    schedule = np.asarray(protocol.schedule)
    g_used = schedule[np.minimum(stages, len(schedule)) - 1]
    power = np.exp((g_used - 1.0) * snr.log_rho)
    values, counts = np.unique(stages, return_counts=True)
    return _ChunkStats(
        n=n,
        sum_eb=float(np.sum(bounds)),
        sum_eb2=float(np.sum(bounds * bounds)),
        sum_stage=int(np.sum(stages)),
        sum_power=float(np.sum(power)),
        hist={int(v): int(c) for v, c in zip(values, counts)},
    )


@dataclass(frozen=True)
class SimSummary:
    """Monte Carlo aggregate for one scheme at one SNR point.

    ``delay_histogram`` maps transmitted stage to trial count;
    ``avg_power_linear`` is the sample mean of ``rho**g_used / rho``.
    """

    snr: SnrPoint
    trials: int
    l: int
    r: float
    deadline: int | None
    power_mode: PowerMode
    schedule: tuple[float, ...]
    mean_error_bound: float
    error_bound_stderr: float
    mean_delay: float
    delay_histogram: dict[int, int] = field(default_factory=dict)
    avg_power_linear: float = 1.0

    @property
    def empirical_rate_exponent(self) -> float:
        return empirical_multiplexing(self)

    def reach_probability(self, stage: int) -> float:
        """Fraction of trials that reached ``stage`` (deferred at all earlier stages)."""
        return sum(c for s, c in self.delay_histogram.items() if s >= stage) / self.trials


def _merge(parts: list[_ChunkStats]) -> _ChunkStats:
    hist: Counter = Counter()
    n = 0
    s_eb = s_eb2 = s_pw = 0.0
    s_st = 0
    for p in parts:  # fixed order
        n += p.n
        s_eb += p.sum_eb
        s_eb2 += p.sum_eb2
        s_st += p.sum_stage
        s_pw += p.sum_power
        hist.update(p.hist)
    return _ChunkStats(n, s_eb, s_eb2, s_st, s_pw, dict(sorted(hist.items())))


def run_batch(
    config: AntennaConfig,
    scheme: SchemeConfig,
    snr: SnrPoint,
    trials: int,
    seed: int,
    workers: int = 1,
    protocol: ProtocolState | None = None,
) -> SimSummary:
    """Simulate ``trials`` independent messages and aggregate them."""
    if protocol is None:
        protocol = build_protocol(config, scheme, snr, seed)
    jobs = [
        (config, scheme, snr, protocol, seed, i, n)
        for i, n in enumerate(rngmod.chunk_sizes(trials))
    ]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_chunk_job, jobs))
    else:
        parts = [_chunk_job(j) for j in jobs]
    tot = _merge(parts)
    mean = tot.sum_eb / tot.n
    if tot.n > 1:
        var = max(tot.sum_eb2 / tot.n - mean * mean, 0.0) * tot.n / (tot.n - 1)
        se = math.sqrt(var / tot.n)
    else:
        se = 0.0
    return SimSummary(
        snr=snr,
        trials=tot.n,
        l=scheme.l,
        r=scheme.r,
        deadline=scheme.D,
        power_mode=scheme.power_mode,
        schedule=protocol.schedule,
        mean_error_bound=mean,
        error_bound_stderr=se,
        mean_delay=scheme.l * tot.sum_stage / tot.n,
        delay_histogram=tot.hist,
        avg_power_linear=tot.sum_power / tot.n,
    )


def simulate_outcomes(
    config: AntennaConfig, scheme: SchemeConfig, snr: SnrPoint, trials: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per-trial (stage, error bound) arrays in trial order, same streams as :func:`run_batch`."""
    protocol = build_protocol(config, scheme, snr, seed)
    parts = [
        simulate_chunk(config, scheme, snr, protocol, rngmod.stream(seed, i), n)
        for i, n in enumerate(rngmod.chunk_sizes(trials))
    ]
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def no_csi_error_bounds(
    config: AntennaConfig, l: int, r: float, snr: SnrPoint, trials: int, seed: int
) -> np.ndarray:
    """Error bounds of a transmitter without CSI: one block per message, full rate."""
    out = []
    for i, n in enumerate(rngmod.chunk_sizes(trials)):
        H = sample_channel(config, rngmod.stream(seed, i), n)
        out.append(np.atleast_1d(error_bound_from_info(mutual_info(H, snr), snr.log_rho, r, l)))
    return np.concatenate(out)


def empirical_multiplexing(summary: SimSummary, r: float | None = None, l: int | None = None) -> float:
    """Realized multiplexing gain ``r l / E[T]``, accounting for deferrals."""
    r = summary.r if r is None else r
    l = summary.l if l is None else l
    if summary.mean_delay <= 0:
        raise DomainError("mean delay must be positive")
    return r * l / summary.mean_delay


@dataclass(frozen=True)
class SlopeEstimate:
    slope: float
    stderr: float
    intercept: float
    snr_points: tuple[float, ...]
    excluded: tuple[tuple[float, str], ...] = ()


def fit_slope(rhos, values) -> SlopeEstimate:
    """OLS of ``-log(value)`` on ``log(rho)``; the slope estimates the diversity order."""
    rhos = np.asarray(rhos, dtype=float)
    values = np.asarray(values, dtype=float)
    if rhos.size < 3:
        raise EstimationError(f"need >= 3 points for a slope, got {rhos.size}")
    if np.any(values <= 0):
        raise EstimationError("values must be positive")
    x = np.log(rhos)
    y = -np.log(values)
    fit = stats.linregress(x, y)
    return SlopeEstimate(float(fit.slope), float(fit.stderr), float(fit.intercept), tuple(rhos.tolist()))


def estimate_diversity(
    summaries: list[SimSummary], max_rel_stderr: float = 0.25, floor: float | None = None
) -> SlopeEstimate:
    """Diversity slope over an SNR sweep.

    A point is dropped when its mean error bound is zero, when its relative
    standard error exceeds ``max_rel_stderr``, or when it falls below
    ``floor`` (if given).
    """
    keep, dropped = [], []
    for s in sorted(summaries, key=lambda s: s.snr.rho):
        m = s.mean_error_bound
        if m <= 0:
            dropped.append((s.snr.rho, "zero mean error bound"))
        elif s.error_bound_stderr > max_rel_stderr * m:
            dropped.append((s.snr.rho, f"relative stderr {s.error_bound_stderr / m:.2g} too large"))
        elif floor is not None and m <= floor:
            dropped.append((s.snr.rho, f"below floor {floor:g}"))
        else:
            keep.append(s)
    for rho, why in dropped:
        logger.warning("slope fit drops rho=%g: %s", rho, why)
    est = fit_slope([s.snr.rho for s in keep], [s.mean_error_bound for s in keep])
    return dataclasses.replace(est, excluded=tuple(dropped))


@dataclass(frozen=True)
class AuditRow:
    rho: float
    avg_power_linear: float
    stage_contributions: tuple[float, ...]
    passed: bool


@dataclass(frozen=True)
class AuditReport:
    budget: float
    power_mode: PowerMode
    rows: tuple[AuditRow, ...]

    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)


def audit_power(summaries: list[SimSummary], scheme: SchemeConfig, budget: float = 2.0) -> AuditReport:
    """Check empirical average power against ``budget`` times the unit budget.

    Stage contributions are ``rho**(g_i - 1) * Pr(reach stage i)`` with the
    reach probability taken from the delay histogram; under the exponent
    schedule each must stay below the budget as well.
    """
    rows = []
    for s in summaries:
        contrib = tuple(
            math.exp((g - 1.0) * s.snr.log_rho) * s.reach_probability(i)
            for i, g in enumerate(s.schedule, start=1)
        )
        ok = s.avg_power_linear <= budget
        if scheme.power_mode is PowerMode.LONG_TERM_EXPONENT:
            ok = ok and all(c <= budget for c in contrib)
        rows.append(AuditRow(s.snr.rho, s.avg_power_linear, contrib, ok))
    return AuditReport(budget, scheme.power_mode, tuple(rows))
