"""Block-Rayleigh MIMO channel: sampling, log-det mutual information, random-coding bound.

A channel realization is a plain complex ``ndarray`` of shape ``(N, M)``;
batched functions accept any leading shape ``(..., N, M)``. Logs are natural
throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from onebit_dmt.errors import DomainError, InvalidInputError

_HALF_SQRT = math.sqrt(0.5)


@dataclass(frozen=True)
class AntennaConfig:
    """``M`` transmit and ``N`` receive antennas."""

    M: int
    N: int

    def __post_init__(self):
        for name in ("M", "N"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")

    @property
    def m_eq(self) -> int:
        return abs(self.M - self.N) + 1

    @property
    def min_mn(self) -> int:
        return min(self.M, self.N)

    @property
    def max_mn(self) -> int:
        return max(self.M, self.N)


@dataclass(frozen=True)
class SnrPoint:
    """Linear average transmit power ``rho`` together with ``log(rho)``."""

    rho: float

    def __post_init__(self):
        if not (self.rho > 0 and math.isfinite(self.rho)):
            raise DomainError(f"rho must be positive and finite, got {self.rho!r}")

    @property
    def log_rho(self) -> float:
        return math.log(self.rho)

    @property
    def db(self) -> float:
        return 10.0 * math.log10(self.rho)

    @classmethod
    def from_db(cls, db: float) -> "SnrPoint":
        return cls(10.0 ** (db / 10.0))

    @classmethod
    def from_log(cls, log_rho: float) -> "SnrPoint":
        return cls(math.exp(log_rho))


def sample_channel(
    config: AntennaConfig, rng: np.random.Generator, size: int | None = None
) -> np.ndarray:
    """Draw i.i.d. CN(0, 1) fading matrices of shape ``(N, M)`` or ``(size, N, M)``.

    Real and imaginary parts are drawn as one ``standard_normal`` call with a
    trailing axis of 2, so a batch of ``k`` draws consumes the generator the
    same way as ``k`` consecutive single draws.
    """
    shape = (config.N, config.M) if size is None else (size, config.N, config.M)
    z = rng.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * _HALF_SQRT


def _check_finite(H: np.ndarray) -> np.ndarray:
    H = np.asarray(H)
    if H.ndim < 2:
        raise InvalidInputError(f"channel must have shape (..., N, M), got {H.shape}")
    if not np.all(np.isfinite(H)):
        raise InvalidInputError("channel matrix has non-finite entries")
    return H


def mutual_info(H: np.ndarray, snr: SnrPoint, g: float = 1.0, gram: str = "auto"):
    """``log det(I + rho**g * H^H H)`` in nats, for one matrix or a batch.

    ``gram`` picks the Gram matrix that gets factorized: ``"rx"`` uses the
    ``N x N`` form ``H H^H``, ``"tx"`` the ``M x M`` form ``H^H H`` and
    ``"auto"`` the smaller of the two. Rank-one channels use ``log1p`` of the
    squared Frobenius norm directly. Forcing the larger Gram on a
    rank-deficient channel costs accuracy once ``rho**g`` exceeds ~1e8.
    """
    if g < 1:
        raise DomainError(f"power exponent must be >= 1, got {g}")
    H = _check_finite(H)
    N, M = H.shape[-2:]
    scale = math.exp(g * snr.log_rho)
    if gram == "auto" and min(N, M) == 1:
        out = np.log1p(scale * np.sum(np.abs(H) ** 2, axis=(-2, -1)))
    else:
        if gram == "auto":
            gram = "tx" if M <= N else "rx"
        Hh = np.conj(np.swapaxes(H, -1, -2))
        if gram == "tx":
            G = Hh @ H
        elif gram == "rx":
            G = H @ Hh
        else:
            raise ValueError(f"unknown gram form {gram!r}")
        k = G.shape[-1]
        A = np.eye(k) + scale * G
        L = np.linalg.cholesky(A)
        diag = np.real(np.diagonal(L, axis1=-2, axis2=-1))
        out = 2.0 * np.sum(np.log(diag), axis=-1)
    # Cholesky round-off can leave -1e-16 for H = 0.
    out = np.maximum(out, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def error_bound_from_info(info, log_rho: float, r: float, l: int):
    """``min(1, rho**(r l) * exp(-l * info))`` evaluated in the log domain."""
    log_b = l * (r * log_rho - np.asarray(info, dtype=float))
    out = np.exp(np.minimum(log_b, 0.0))
    return float(out) if np.ndim(out) == 0 else out


def random_coding_error_bound(
    H: np.ndarray, snr: SnrPoint, g: float, r: float, l: int, min_mn: int | None = None
):
    """Per-realization random-coding bound on ML error, saturated at 1.

    This is ``rho**(r l) / det(I + rho**g H^H H)**l``; its expectation over
    the admissible channels upper-bounds the average error probability.
    """
    H = _check_finite(H)
    if min_mn is None:
        min_mn = min(H.shape[-2:])
    if not (0 <= r <= min_mn):
        raise DomainError(f"multiplexing gain r={r} outside [0, {min_mn}]")
    if l < 1:
        raise DomainError(f"blocklength must be >= 1, got {l}")
    return error_bound_from_info(mutual_info(H, snr, g), snr.log_rho, r, l)
