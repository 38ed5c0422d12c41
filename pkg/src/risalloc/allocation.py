"""Feasibility projection, binarization, baseline allocations, and MRT beams."""

from __future__ import annotations

import numpy as np

from .channel import ChannelSet
from .metrics import Allocation, Beamformers


def _simplex_project(v: np.ndarray):
    """Euclidean projection of one column onto {z >= 0, sum z = 1}."""
    srt = np.sort(v)[::-1]
    css = np.cumsum(srt) - 1.0
    ks = np.arange(1, v.size + 1)
    rho = np.nonzero(srt - css / ks > 0)[0][-1]
    tau = css[rho] / (rho + 1.0)
    z = np.maximum(v - tau, 0.0)
    return z, z > 0


def _project_columns(x: np.ndarray):
    """Column-wise projection onto {z in [0,1]^K : sum z <= 1}.

    Because the entries are non-negative and each column sums to at most 1,
    the box bound is implied, so the set is the solid unit simplex. Returns
    (projection, per-column simplex flag, active-entry mask); the last two
    feed the vector-Jacobian product used during training.
    """
    x = np.asarray(x, dtype=float)
    clipped = np.clip(x, 0.0, None)
    out = clipped.copy()
    active = x > 0.0
    on_simplex = clipped.sum(axis=0) > 1.0
    for c in np.nonzero(on_simplex)[0]:
        out[:, c], active[:, c] = _simplex_project(x[:, c])
    return out, on_simplex, active


def project_feasible(xi_raw) -> Allocation:
    """Nearest feasible relaxed allocation, column by column."""
    arr = xi_raw.xi if isinstance(xi_raw, Allocation) else np.asarray(xi_raw, dtype=float)
    if arr.ndim != 2:
        raise ValueError("expected a 2-D users-by-columns array")
    proj, _, _ = _project_columns(arr)
    return Allocation(proj, mode="relaxed")


def project_feasible_with_vjp(xi_raw: np.ndarray):
    """Projection plus a pullback for gradients.

    Returns (projected array, vjp) where vjp maps an upstream gradient at
    the projected point to a gradient at the raw input: identity on active
    entries for untouched columns, and mean-subtraction over the active set
    for columns that landed on the simplex face.
    """
    x = np.asarray(xi_raw, dtype=float)
    proj, on_simplex, active = _project_columns(x)

    def vjp(upstream: np.ndarray) -> np.ndarray:
        g = np.where(active, np.asarray(upstream, dtype=float), 0.0)
        cols = np.nonzero(on_simplex)[0]
        if cols.size:
            counts = active[:, cols].sum(axis=0)
            means = g[:, cols].sum(axis=0) / counts
            g[:, cols] = np.where(active[:, cols], g[:, cols] - means[None, :], 0.0)
        return g

    return proj, vjp


def binarize(xi, threshold: float = 0.5) -> Allocation:
    """Round relaxed column shares to a hard assignment.

    Each column goes entirely to its largest share when that share reaches
    the threshold, otherwise it stays unassigned. Ties break toward the
    smallest user index.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie strictly inside (0, 1)")
    arr = xi.xi if isinstance(xi, Allocation) else np.asarray(xi, dtype=float)
    out = np.zeros_like(arr)
    winners = np.argmax(arr, axis=0)
    cols = np.arange(arr.shape[1])
    taken = cols[arr[winners, cols] >= threshold]
    out[winners[taken], taken] = 1.0
    return Allocation(out, mode="binary")


def uniform_contiguous(num_users: int, num_columns: int) -> Allocation:
    """Baseline: floor(L/K) consecutive columns per user, leftovers off."""
    if num_users < 1 or num_columns < 1:
        raise ValueError("user and column counts must be >= 1")
    if num_users > num_columns:
        raise ValueError("more users than columns; the contiguous split is undefined")
    share = num_columns // num_users
    xi = np.zeros((num_users, num_columns))
    for k in range(num_users):
        xi[k, k * share:(k + 1) * share] = 1.0
    return Allocation(xi, mode="binary")


def mrt_beamformers(ch: ChannelSet, tx_power_watts: float) -> Beamformers:
    """Matched beams: w_k = sqrt(P_t/K) conj(h_k)/||h_k||, fixed thereafter."""
    if tx_power_watts <= 0:
        raise ValueError("transmit power must be positive")
    norms = np.linalg.norm(ch.h_direct, axis=1)
    if np.any(norms == 0):
        raise ValueError("a user has a zero direct channel; matched beams are undefined")
    scale = np.sqrt(tx_power_watts / ch.num_users)
    return Beamformers(scale * np.conj(ch.h_direct) / norms[:, None])
