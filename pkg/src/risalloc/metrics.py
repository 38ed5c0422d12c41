"""Allocation masking, effective channels, SINR, rates, and fairness objectives.

This module is the single source of truth for the objective: the block
optimizer, the exhaustive search, and the network training loss all call
into the same functions here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet

RATE_FLOOR = 1e-12  # keeps log/power utilities finite when a user gets nothing

_FEAS_EPS = 1e-9  # slack for float noise out of the projection


@dataclass
class PhaseConfig:
    """Per-element reflection phases, radians in [0, pi]."""

    theta: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float).reshape(-1)

    def validate(self) -> "PhaseConfig":
        if np.any(self.theta < -_FEAS_EPS) or np.any(self.theta > np.pi + _FEAS_EPS):
            raise ValueError("phases must lie in [0, pi]")
        return self


@dataclass
class Allocation:
    """Per-user element shares.

    xi is (K, L) in the default column granularity: entry (k, c) is user k's
    share of surface column c, and each column's shares sum to at most 1.
    granularity="element" switches to a full (K, L^2) mask. mode is
    "relaxed" (shares in [0, 1]) or "binary" (shares in {0, 1}).
    """

    xi: np.ndarray
    mode: str = "relaxed"
    granularity: str = "column"

    def __post_init__(self):
        self.xi = np.asarray(self.xi, dtype=float)
        if self.xi.ndim != 2:
            raise ValueError("xi must be 2-D (users x columns)")
        if self.mode not in ("relaxed", "binary"):
            raise ValueError(f"unknown allocation mode {self.mode!r}")
        if self.granularity not in ("column", "element"):
            raise ValueError(f"unknown allocation granularity {self.granularity!r}")

    def validate(self) -> "Allocation":
        if np.any(self.xi < -_FEAS_EPS) or np.any(self.xi > 1.0 + _FEAS_EPS):
            raise ValueError("allocation entries must lie in [0, 1]")
        if self.granularity == "column" and np.any(self.xi.sum(axis=0) > 1.0 + _FEAS_EPS):
            raise ValueError("column shares must sum to at most 1")
        if self.mode == "binary":
            if not np.all((self.xi == 0.0) | (self.xi == 1.0)):
                raise ValueError("binary allocation entries must be 0 or 1")
        return self

    @property
    def num_users(self) -> int:
        return int(self.xi.shape[0])


@dataclass
class Beamformers:
    """Transmit beam matrix, row k aimed at user k; ||w_k||^2 = P_t / K."""

    w: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=complex)

    def validate(self, tx_power_watts: float) -> "Beamformers":
        target = tx_power_watts / self.w.shape[0]
        norms = np.sum(np.abs(self.w) ** 2, axis=1)
        if not np.allclose(norms, target, rtol=1e-9, atol=0):
            raise ValueError("each beam must carry exactly P_t / K")
        return self


def expand_columns(xi) -> np.ndarray:
    """Spread column shares onto elements: (K, L) -> (K, L*L).

    Element l belongs to column l // L, so each column's share repeats over
    L consecutive element indices: row [1, 0] with L = 2 becomes [1, 1, 0, 0].
    Accepts a single row as well.
    """
    arr = np.asarray(xi, dtype=float)
    reps = arr.shape[-1]
    return np.repeat(arr, reps, axis=arr.ndim - 1)


def _element_mask(xi) -> np.ndarray:
    """(K, L^2) element mask from an Allocation or a raw column-share array."""
    if isinstance(xi, Allocation):
        return xi.xi if xi.granularity == "element" else expand_columns(xi.xi)
    return expand_columns(np.asarray(xi, dtype=float))


def _theta_vector(theta) -> np.ndarray:
    return theta.theta if isinstance(theta, PhaseConfig) else np.asarray(theta, dtype=float).reshape(-1)


def _beam_matrix(w) -> np.ndarray:
    return w.w if isinstance(w, Beamformers) else np.asarray(w, dtype=complex)


def effective_channels(ch: ChannelSet, theta, xi) -> np.ndarray:
    """All effective rows at once: (K, N) matrix with row k =
    g_ris[k] * (mask_k * exp(j theta)) @ h_rb + h_direct[k]."""
    mask = _element_mask(xi)
    phase = np.exp(1j * _theta_vector(theta))
    return (ch.g_ris * (mask * phase[None, :])) @ ch.h_rb + ch.h_direct


def effective_channel(ch: ChannelSet, theta, xi, k: int) -> np.ndarray:
    """Effective downlink row seen by user k, shape (N,)."""
    if not 0 <= k < ch.num_users:
        raise IndexError(f"user index {k} out of range")
    mask = _element_mask(xi)
    phase = np.exp(1j * _theta_vector(theta))
    return (ch.g_ris[k] * (mask[k] * phase)) @ ch.h_rb + ch.h_direct[k]


def sinr(ch: ChannelSet, theta, xi, w, k: int, noise_linear: float) -> float:
    """|e_k w_k|^2 over (sum_{i != k} |e_k w_i|^2 + noise).

    Interference flows through user k's own effective channel hit by the
    other users' beams.
    """
    if noise_linear < 0:
        raise ValueError("noise power must be non-negative")
    e = effective_channel(ch, theta, xi, k)
    p = np.abs(_beam_matrix(w) @ e) ** 2
    return float(p[k] / (p.sum() - p[k] + noise_linear))


def user_rates(ch: ChannelSet, theta, xi, w, noise_linear: float) -> np.ndarray:
    """Normalized per-user rates (1/K) log2(1 + SINR_k) for all users at once."""
    if noise_linear < 0:
        raise ValueError("noise power must be non-negative")
    E = effective_channels(ch, theta, xi)
    S = E @ _beam_matrix(w).T  # S[k, i] = e_k . w_i
    P = np.abs(S) ** 2
    num = np.diag(P)
    den = P.sum(axis=1) - num + noise_linear
    return np.log2(1.0 + num / den) / ch.num_users


def rate(ch: ChannelSet, theta, xi, w, k: int, noise_linear: float,
         num_users: int | None = None) -> float:
    """User k's rate, normalized by the sharing factor (defaults to K)."""
    K = ch.num_users if num_users is None else num_users
    return float(np.log2(1.0 + sinr(ch, theta, xi, w, k, noise_linear)) / K)


def alpha_utility(r, alpha: float):
    """Fairness utility of a rate: r^(1-alpha)/(1-alpha), natural log at alpha=1.

    Rates are floored at RATE_FLOOR first so the value stays finite.
    Vectorizes over arrays.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    r = np.maximum(np.asarray(r, dtype=float), RATE_FLOOR)
    if alpha == 1.0:
        out = np.log(r)
    else:
        out = r ** (1.0 - alpha) / (1.0 - alpha)
    return float(out) if out.ndim == 0 else out


def sum_utility(ch: ChannelSet, theta, xi, w, alpha: float, noise_linear: float) -> float:
    """Total fairness utility over users; the objective every solver shares."""
    rates = user_rates(ch, theta, xi, w, noise_linear)
    return float(np.sum(alpha_utility(rates, alpha)))


def alpha_mean_throughput(rates, alpha: float, bandwidth: float) -> float:
    """Generalized (power) mean of the per-user throughputs B * R_k.

    Order 1 - alpha; the alpha = 1 case is the geometric mean. Computed in
    log space so extreme alpha stays stable.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    t = bandwidth * np.maximum(np.asarray(rates, dtype=float).reshape(-1), RATE_FLOOR)
    logs = np.log(t)
    if alpha == 1.0:
        return float(np.exp(logs.mean()))
    scaled = (1.0 - alpha) * logs
    peak = scaled.max()
    mean_log = peak + np.log(np.mean(np.exp(scaled - peak)))
    return float(np.exp(mean_log / (1.0 - alpha)))
