"""Threshold events for the one-bit feedback and their probabilities.

The receiver reports a bad block when ``log det(I + rho**g H^H H)`` is at or
below a threshold. For rank-one channels (``N = 1`` or ``M = 1``) the squared
channel norm is Gamma(max(M, N), 1) and the probability is a regularized
incomplete gamma; otherwise it is estimated by sampling.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from onebit_dmt.channel import AntennaConfig, SnrPoint, mutual_info, sample_channel
from onebit_dmt.errors import DomainError
from onebit_dmt.special import gammainc_lower


class ThresholdKind(enum.Enum):
    UNBOUNDED = "unbounded"
    SHORT_TERM = "short_term"
    LONG_TERM_STAGE = "long_term_stage"


@dataclass(frozen=True)
class ThresholdSpec:
    """Threshold ``f log rho + c * min(M,N) * log log rho`` tested at power ``rho**g``."""

    kind: ThresholdKind
    exponent_f: float
    loglog_correction: float = 0.0
    g: float = 1.0
    min_mn: int = 1
    stage: int | None = None

    def __post_init__(self):
        if not (0 <= self.exponent_f <= self.min_mn):
            raise DomainError(f"threshold exponent {self.exponent_f} outside [0, {self.min_mn}]")
        if self.g < 1:
            raise DomainError(f"power exponent must be >= 1, got {self.g}")
        if self.kind is ThresholdKind.UNBOUNDED and self.loglog_correction > 0:
            raise DomainError("unbounded threshold correction must be <= 0")

    @classmethod
    def unbounded(cls, config: AntennaConfig) -> "ThresholdSpec":
        """``min(M,N) (log rho - 2 log log rho)``."""
        return cls(ThresholdKind.UNBOUNDED, float(config.min_mn), -2.0, 1.0, config.min_mn)

    @classmethod
    def short_term(cls, config: AntennaConfig, f: float) -> "ThresholdSpec":
        return cls(ThresholdKind.SHORT_TERM, f, 0.0, 1.0, config.min_mn)

    @classmethod
    def long_term_stage(cls, config: AntennaConfig, stage: int, f: float, g: float) -> "ThresholdSpec":
        return cls(ThresholdKind.LONG_TERM_STAGE, f, 0.0, g, config.min_mn, stage)


def threshold_value(spec: ThresholdSpec, snr: SnrPoint) -> float:
    """Threshold on the mutual information, in nats."""
    L = snr.log_rho
    if spec.loglog_correction == 0.0:
        return spec.exponent_f * L
    if L <= 1.0:
        raise DomainError(f"log log rho needs rho > e, got rho={snr.rho:g}")
    return spec.exponent_f * L + spec.loglog_correction * spec.min_mn * math.log(L)


def is_outage(H: np.ndarray, spec: ThresholdSpec, snr: SnrPoint):
    """True where the block fails the threshold; equality counts as outage."""
    out = np.asarray(mutual_info(H, snr, spec.g)) <= threshold_value(spec, snr)
    return bool(out) if out.ndim == 0 else out


class Method(enum.Enum):
    CLOSED_FORM = "closed_form"
    MONTE_CARLO = "monte_carlo"


@dataclass(frozen=True)
class OutageProbability:
    value: float
    stderr: float
    method: Method
    trials: int = 0

    def __float__(self):
        return self.value


def outage_prob_rank1(m: int, snr: SnrPoint, spec: ThresholdSpec) -> OutageProbability:
    """Exact outage probability for a rank-one channel with ``m = max(M, N)``.

    ``P_gamma(m, t)`` with ``t = (exp(threshold) - 1) / rho**g``.
    """
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    if spec.min_mn != 1:
        raise DomainError("closed form applies to rank-one channels only")
    thr = threshold_value(spec, snr)
    if thr <= 0:
        return OutageProbability(0.0, 0.0, Method.CLOSED_FORM)
    t = math.expm1(thr) * math.exp(-spec.g * snr.log_rho)
    return OutageProbability(gammainc_lower(m, t), 0.0, Method.CLOSED_FORM)


def binomial_stderr(count: int, trials: int) -> float:
    """Binomial standard error using ``(count + 1/2) / (trials + 1)`` as the rate.

    The half-count keeps the error strictly positive when no or all trials hit.
    """
    p = (count + 0.5) / (trials + 1.0)
    return math.sqrt(p * (1.0 - p) / trials)


def outage_prob_mc(
    config: AntennaConfig,
    spec: ThresholdSpec,
    snr: SnrPoint,
    trials: int,
    rng: np.random.Generator,
    batch: int = 65_536,
) -> OutageProbability:
    """Fraction of sampled channels in outage, with its binomial standard error."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    thr = threshold_value(spec, snr)
    hits = 0
    left = trials
    while left:
        n = min(batch, left)
        H = sample_channel(config, rng, n)
        hits += int(np.count_nonzero(mutual_info(H, snr, spec.g) <= thr))
        left -= n
    return OutageProbability(hits / trials, binomial_stderr(hits, trials), Method.MONTE_CARLO, trials)
