"""Closed-form diversity-multiplexing(-delay) curves and lower bounds.

Diversity values are exponents (dimensionless); ``r`` is the multiplexing
gain and ``D`` the deadline in coherence intervals. ``D = math.inf`` is
accepted where the closed form has a finite limit.
"""

from __future__ import annotations

import math
import warnings
from bisect import bisect_right
from dataclasses import dataclass

from onebit_dmt.channel import AntennaConfig
from onebit_dmt.errors import DomainError, FormulaDomainError, PreconditionError


class NegativeBoundWarning(UserWarning):
    """The long-term bound as printed evaluates below zero."""


@dataclass(frozen=True)
class DmtCurve:
    """Piecewise-linear diversity curve given by its vertices ``(r, d)``."""

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self):
        rs = [v[0] for v in self.vertices]
        ds = [v[1] for v in self.vertices]
        if len(rs) < 2 or rs[0] != 0:
            raise ValueError("curve needs >= 2 vertices starting at r=0")
        if any(b <= a for a, b in zip(rs, rs[1:])):
            raise ValueError("vertex r values must be strictly increasing")
        if any(b > a for a, b in zip(ds, ds[1:])):
            raise ValueError("d must be nonincreasing in r")
        if ds[-1] != 0:
            raise ValueError("last vertex must have d=0")

    @property
    def r_max(self) -> float:
        return self.vertices[-1][0]

    def __call__(self, r: float) -> float:
        return eval_curve(self, r)


def dmt_no_csi(config: AntennaConfig) -> DmtCurve:
    """No-CSI optimal tradeoff: vertices ``(k, (M-k)(N-k))`` for ``k = 0..min(M,N)``."""
    M, N = config.M, config.N
    return DmtCurve(tuple((k, (M - k) * (N - k)) for k in range(config.min_mn + 1)))


def eval_curve(curve: DmtCurve, r: float) -> float:
    """Linear interpolation between vertices, exact at the vertices."""
    if not (0 <= r <= curve.r_max):
        raise DomainError(f"r={r} outside curve domain [0, {curve.r_max}]")
    rs = [v[0] for v in curve.vertices]
    i = bisect_right(rs, r) - 1
    r0, d0 = curve.vertices[i]
    if r == r0:
        return d0
    r1, d1 = curve.vertices[i + 1]
    return d0 + (d1 - d0) * (r - r0) / (r1 - r0)


def segment(config: AntennaConfig, r: float, printed_alpha: bool = False) -> tuple[int, float, float]:
    """Segment index ``k`` and coefficients with ``d(r) = alpha_k - r * beta_k``.

    On an integer ``r`` the segment to the right is used, except at
    ``r = min(M, N)``. By default ``alpha_k`` is fixed by the vertices,
    ``alpha_k = d(k) + k * beta_k``; ``printed_alpha`` returns the
    ``MN - 2k(M+N) + 3k^2 - k`` variant, which does not pass through them.
    """
    M, N, m = config.M, config.N, config.min_mn
    if not (0 <= r <= m):
        raise DomainError(f"r={r} outside [0, {m}]")
    k = min(max(math.floor(r) + 1, 1), m)
    beta = M + N - 2 * k + 1
    if printed_alpha:
        alpha = M * N - 2 * k * (M + N) + 3 * k * k - k
    else:
        alpha = (M - k) * (N - k) + k * beta
    return k, alpha, beta


def _check_r(config: AntennaConfig, r: float) -> None:
    if not (0 <= r <= config.min_mn):
        raise DomainError(f"r={r} outside [0, {config.min_mn}]")


def _check_D(D) -> None:
    if not (D == math.inf or (int(D) == D and D >= 1)):
        raise DomainError(f"deadline must be a positive integer or inf, got {D!r}")


def theorem1_bound(config: AntennaConfig, l: int, r: float) -> float:
    """Unbounded-delay diversity lower bound ``l (min(M,N) - r)``."""
    _check_r(config, r)
    return l * (config.min_mn - r)


def f_threshold(config: AntennaConfig, l: int, D, r: float) -> float:
    """Threshold exponent ``f(r, D)`` of the short-term deferral event.

    ``r + [d(r) + (D-1) M_eq (min - r)] / [l + (D-1) M_eq]``; tends to
    ``min(M, N)`` as ``D`` grows.
    """
    _check_r(config, r)
    _check_D(D)
    if D == math.inf:
        return float(config.min_mn)
    d = eval_curve(dmt_no_csi(config), r)
    w = (D - 1) * config.m_eq
    return r + (d + w * (config.min_mn - r)) / (l + w)


def theorem2_bound(config: AntennaConfig, l: int, D, r: float) -> float:
    """Short-term power diversity lower bound ``l (f(r, D) - r)``; requires ``l >= M + N``."""
    if l < config.M + config.N:
        raise PreconditionError(f"bound holds for l >= M+N = {config.M + config.N}, got l={l}")
    _check_r(config, r)
    _check_D(D)
    if D == math.inf:
        return theorem1_bound(config, l, r)
    d = eval_curve(dmt_no_csi(config), r)
    w = (D - 1) * config.m_eq
    return l * (d + w * (config.min_mn - r)) / (l + w)


def exmp2_variant(M: int, l: int, D, r: float) -> float:
    """Single-receive-antenna short-term bound exactly as printed: ``l(MD-1)(1-r)/(l+M(D-1))``.

    Differs from :func:`theorem2_bound` at ``N = 1``, whose numerator is ``MD``.
    """
    if not (0 <= r <= 1):
        raise DomainError(f"r={r} outside [0, 1]")
    _check_D(D)
    if D == math.inf:
        return l * (1 - r)
    return l * (M * D - 1) * (1 - r) / (l + M * (D - 1))


def _geometric_excess(m_eq: int, D: int) -> int:
    """``sum_{i=1}^{D} m_eq**i - D`` as an exact integer."""
    if m_eq == 1:
        return 0
    return (m_eq ** (D + 1) - m_eq) // (m_eq - 1) - D


def d_eq(config: AntennaConfig, D: int) -> float:
    """Equivalent delay of the power-controlled scheme.

    ``D(D+1)/2`` when ``M == N``, else ``(sum_i M_eq**i - D) / (M - 1) - 1``.
    """
    _check_D(D)
    if D == math.inf:
        return math.inf
    if config.M == config.N:
        return D * (D + 1) / 2
    if config.M == 1:
        raise FormulaDomainError("D_eq has a 1/(M-1) factor and is undefined for M=1, N!=1")
    return _geometric_excess(config.m_eq, D) / (config.M - 1) - 1


def theorem3_bound(
    config: AntennaConfig, l: int, D, r: float, printed_alpha: bool = False
) -> float:
    """Long-term power diversity lower bound, returned raw (may be negative).

    ``l / (l + D_eq M_eq) * (min M_eq D_eq + alpha_k - (D_eq + beta_k) r)``.
    A :class:`NegativeBoundWarning` is issued when the value is below zero;
    callers comparing bounds should clamp.
    """
    _check_r(config, r)
    De = d_eq(config, D)
    if De == math.inf:
        # limit of the printed expression as D_eq grows
        return l * (config.min_mn * config.m_eq - r) / config.m_eq
    _, alpha, beta = segment(config, r, printed_alpha)
    me = config.m_eq
    val = l / (l + De * me) * (config.min_mn * me * De + alpha - (De + beta) * r)
    if val < 0:
        warnings.warn(
            f"long-term bound is negative ({val:.4g}) at r={r}, D={D}",
            NegativeBoundWarning,
            stacklevel=2,
        )
    return val


def _s_factor(M: int, D) -> float:
    if M == 1:
        raise FormulaDomainError("the N=1 long-term bound has a 1/(M-1) factor; M must be >= 2")
    if D == math.inf:
        return math.inf
    try:
        return M * _geometric_excess(M, D) / (M - 1)
    except OverflowError:
        return math.inf


def exmp1_variant(M: int, l: int, D, r: float) -> float:
    """Single-receive-antenna long-term bound: ``l S / (l + S - M) * (1 - r)``.

    ``S = M/(M-1) * (sum_{i=1}^{D} M**i - D)``.
    """
    if not (0 <= r <= 1):
        raise DomainError(f"r={r} outside [0, 1]")
    _check_D(D)
    S = _s_factor(M, D)
    if S == math.inf:
        return l * (1 - r)
    return l * S / (l + S - M) * (1 - r)


def printed_f_i(config: AntennaConfig, l: int, D: int, r: float, printed_alpha: bool = False) -> float:
    """Long-term stage threshold exponent as printed (no dependence on the stage index).

    Returned raw; for typical parameters it is negative.
    """
    _check_r(config, r)
    _check_D(D)
    if config.M == 1:
        raise FormulaDomainError("printed stage threshold has a 1/(M-1) factor; M must be >= 2")
    _, alpha, beta = segment(config, r, printed_alpha)
    S = config.M * _geometric_excess(config.m_eq, D) / (config.M - 1)
    return ((l - beta) * r - S - alpha) / (l + S * (1 + alpha))


def outage_exponent(config: AntennaConfig, f: float, g: float = 1.0) -> float:
    """SNR exponent of ``Pr(log det(I + rho**g H^H H) <= f log rho)``, i.e. ``g * d(f / g)``."""
    if g < 1:
        raise DomainError(f"power exponent must be >= 1, got {g}")
    return g * eval_curve(dmt_no_csi(config), f / g)


def power_schedule_printed(D: int, outage_probs) -> list[float]:
    """``g_1 = 1`` and ``g_i = 1 + sum_{j<i} Pr(O_j)``."""
    _check_D(D)
    probs = list(outage_probs)
    if len(probs) < D - 1:
        raise ValueError(f"need >= {D - 1} outage probabilities, got {len(probs)}")
    if any(not (0 <= p <= 1) for p in probs):
        raise ValueError("outage probabilities must lie in [0, 1]")
    g = [1.0]
    acc = 1.0
    for p in probs[: D - 1]:
        acc += p
        g.append(acc)
    return g


def power_schedule_exponent(
    config: AntennaConfig, l: int, D: int, r: float, f: float | None = None
) -> list[float]:
    """Exponent-domain power schedule keeping each stage's budget share at ``O(rho)``.

    ``g_1 = 1`` and ``g_{i+1} = 1 + sum_{j<=i} d_j`` with ``d_j`` the outage
    exponent of stage ``j``'s threshold event at power ``rho**g_j``, so that
    ``rho**g_i * rho**(-sum_{j<i} d_j) = rho``. The threshold exponent
    defaults to :func:`f_threshold`.
    """
    _check_D(D)
    if D == math.inf:
        raise DomainError("exponent schedule needs a finite deadline")
    if f is None:
        f = f_threshold(config, l, D, r)
    g = [1.0]
    acc = 0.0
    for _ in range(D - 1):
        acc += outage_exponent(config, f, g[-1])
        g.append(1.0 + acc)
    return g


@dataclass(frozen=True)
class DelayRequirement:
    epsilon: float
    required_D: int
    power_control: bool
    exact: float


def delay_for_epsilon(l: int, M: int, epsilon: float, power_control: bool) -> DelayRequirement:
    """Deadline reaching ``(1 - epsilon)`` of the unbounded-delay diversity at ``N = 1``.

    ``l / (epsilon M)`` without power control, ``log_M(l / (epsilon M))`` with
    it; rounded up to whole coherence intervals, at least 1.
    """
    if not (0 < epsilon < 1):
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    x = l / (epsilon * M)
    if power_control:
        if M < 2:
            raise FormulaDomainError("log base M is undefined for M=1")
        x = math.log(x) / math.log(M)
    # guard against 100.00000000000001-style round-up
    D = max(1, math.ceil(x - 1e-9))
    return DelayRequirement(epsilon, D, power_control, x)
