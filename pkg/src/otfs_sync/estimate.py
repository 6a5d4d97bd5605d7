"""Common result type for all timing estimators."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SyncEstimate:
    """A wrapped timing-offset estimate and its delay/time decomposition.

    ``theta_hat`` lies in ``[0, M*N)`` and always equals
    ``theta_d_hat + M * theta_t_hat``.  ``ambiguous`` marks estimates where
    the decision statistic was completely flat and the lowest-index
    tie-break was returned.
    """

    method: str
    theta_hat: int
    theta_d_hat: int
    theta_t_hat: int
    ambiguous: bool = False


def combine_offset(theta_d: int, theta_t: int, M: int) -> int:
    return theta_d + M * theta_t


def decompose_offset(theta_wrapped: int, M: int) -> tuple[int, int]:
    """Split a wrapped offset into (delay part, time part)."""
    return theta_wrapped % M, theta_wrapped // M
