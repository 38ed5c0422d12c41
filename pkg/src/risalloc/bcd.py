"""Alternating projected-gradient ascent over phases and allocation shares.

Each outer iteration sweeps the phase block, then the share block (unless a
fixed allocation was supplied), taking a handful of gradient steps per block
with a halving line search that never accepts a decrease, so the objective
trace is monotone up to float noise.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from .allocation import _project_columns
from .channel import ChannelSet
from .metrics import (RATE_FLOOR, Allocation, PhaseConfig, _beam_matrix,
                      _element_mask, _theta_vector, alpha_utility)

_LN2 = float(np.log(2.0))


@dataclass
class BcdOptions:
    max_outer_iters: int = 200
    inner_steps_per_block: int = 10
    step_size: float = 0.1
    tol: float = 1e-5
    seed: int = 0

    def validate(self) -> "BcdOptions":
        if self.max_outer_iters < 1 or self.inner_steps_per_block < 1:
            raise ValueError("iteration counts must be >= 1")
        if self.step_size <= 0 or self.tol <= 0:
            raise ValueError("step_size and tol must be positive")
        return self


@dataclass
class BcdTrace:
    """Objective after every outer iteration (index 0 = starting point)
    and the wall-clock seconds each iteration took."""

    objectives: list = field(default_factory=list)
    seconds: list = field(default_factory=list)

    def to_csv(self, path):
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["iteration", "objective", "seconds"])
            for i, (obj, sec) in enumerate(zip(self.objectives, self.seconds)):
                writer.writerow([i, repr(float(obj)), repr(float(sec))])


def _objective_terms(ch, theta_vec, mask, w_mat, alpha, noise_linear):
    """Shared forward pass: effective rows, beam couplings, SINR pieces."""
    phase = np.exp(1j * theta_vec)
    E = (ch.g_ris * (mask * phase[None, :])) @ ch.h_rb + ch.h_direct
    S = E @ w_mat.T
    P = np.abs(S) ** 2
    num = np.diagonal(P).copy()
    den = P.sum(axis=1) - num + noise_linear
    sig = num / den
    rates = np.log2(1.0 + sig) / ch.num_users
    return phase, S, num, den, sig, rates


def objective_value_and_gradients(ch: ChannelSet, theta, xi, w, alpha: float,
                                  noise_linear: float):
    """Objective plus exact gradients wrt phases and shares.

    The rate floor is a constant region: users pinned at the floor
    contribute zero gradient. An all-zero allocation therefore zeroes the
    phase gradient exactly.
    """
    if noise_linear <= 0:
        raise ValueError("gradients need a strictly positive noise power")
    theta_vec = _theta_vector(theta)
    alloc = xi if isinstance(xi, Allocation) else Allocation(np.asarray(xi, dtype=float))
    mask = _element_mask(alloc)
    w_mat = _beam_matrix(w)
    K = ch.num_users

    phase, S, num, den, sig, rates = _objective_terms(ch, theta_vec, mask, w_mat, alpha, noise_linear)
    value = float(np.sum(alpha_utility(rates, alpha)))

    floored = np.maximum(rates, RATE_FLOOR)
    du_drate = np.where(rates > RATE_FLOOR, floored ** (-alpha), 0.0)
    drate_dsinr = 1.0 / (K * _LN2 * (1.0 + sig))
    q = du_drate * drate_dsinr / den

    # dU/d|S_ki|^2: q_k on the diagonal, -q_k * SINR_k off it
    G = -q[:, None] * sig[:, None] * np.ones((K, K))
    np.fill_diagonal(G, q)

    A = G * np.conj(S)
    B = w_mat @ ch.h_rb.T                      # B[i, l] = (h_rb w_i)_l
    C = ch.g_ris * phase[None, :] * (A @ B)    # (K, L2)

    dtheta = -2.0 * np.imag((mask * C).sum(axis=0))
    if alloc.granularity == "element":
        dxi = 2.0 * np.real(C)
    else:
        Kx, L = alloc.xi.shape
        dxi = 2.0 * np.real(C).reshape(Kx, L, L).sum(axis=2)
    return value, dtheta, dxi


def objective_gradients(ch: ChannelSet, theta, xi, w, alpha: float,
                        noise_linear: float):
    """Gradients of the fairness objective wrt (phases, shares)."""
    _, dtheta, dxi = objective_value_and_gradients(ch, theta, xi, w, alpha, noise_linear)
    return dtheta, dxi


def _line_ascend(x, grad, project, evaluate, f_x, step0):
    """One projected step, halving until the objective does not decrease."""
    s = step0
    for _ in range(30):
        cand = project(x + s * grad)
        f_c = evaluate(cand)
        if f_c >= f_x:
            return cand, f_c
        s *= 0.5
    return x, f_x


def bcd_optimize(ch: ChannelSet, w, alpha: float, noise_linear: float,
                 options: BcdOptions | None = None,
                 fixed_alloc: Allocation | None = None):
    """Block ascent from a seeded start.

    Phases start uniform over [0, pi], shares at the 1/K interior point.
    Passing fixed_alloc pins the allocation and optimizes phases only (the
    classic fixed-split baseline). Returns (PhaseConfig, Allocation, BcdTrace).
    """
    opts = (options or BcdOptions()).validate()
    rng = np.random.default_rng(opts.seed)
    K = ch.num_users
    L2 = ch.num_elements
    L = int(round(np.sqrt(L2)))
    if L * L != L2:
        raise ValueError("the surface must be square for column shares")

    theta = rng.uniform(0.0, np.pi, size=L2)
    if fixed_alloc is None:
        xi = np.full((K, L), 1.0 / K)
        granularity = "column"
    else:
        fixed_alloc.validate()
        xi = np.array(fixed_alloc.xi, dtype=float)
        granularity = fixed_alloc.granularity

    def wrap(arr):
        return Allocation(arr, mode="relaxed", granularity=granularity)

    def value_of(th, xa):
        v, _, _ = objective_value_and_gradients(ch, th, wrap(xa), w, alpha, noise_linear)
        return v

    obj = value_of(theta, xi)
    if not np.isfinite(obj):
        raise RuntimeError("objective is not finite at the starting point")
    trace = BcdTrace(objectives=[obj], seconds=[0.0])

    for outer in range(1, opts.max_outer_iters + 1):
        tic = time.perf_counter()

        for _ in range(opts.inner_steps_per_block):
            _, dtheta, _ = objective_value_and_gradients(ch, theta, wrap(xi), w, alpha, noise_linear)
            theta, obj = _line_ascend(
                theta, dtheta, lambda t: np.clip(t, 0.0, np.pi),
                lambda t: value_of(t, xi), obj, opts.step_size)

        if fixed_alloc is None:
            for _ in range(opts.inner_steps_per_block):
                _, _, dxi = objective_value_and_gradients(ch, theta, wrap(xi), w, alpha, noise_linear)
                xi, obj = _line_ascend(
                    xi, dxi, lambda x: _project_columns(x)[0],
                    lambda x: value_of(theta, x), obj, opts.step_size)

        trace.objectives.append(obj)
        trace.seconds.append(time.perf_counter() - tic)
        if not np.isfinite(obj):
            raise RuntimeError(f"objective became non-finite at outer iteration {outer}")
        prev = trace.objectives[-2]
        if abs(obj - prev) <= opts.tol * max(1.0, abs(prev)):
            break

    return PhaseConfig(theta), wrap(xi), trace


def bcd_complexity_estimate(num_users: int, num_columns: int) -> int:
    """Dominant per-iteration operation count: K^2 L^2 + K L^2."""
    if num_users < 1 or num_columns < 1:
        raise ValueError("counts must be >= 1")
    return num_users * num_users * num_columns * num_columns + num_users * num_columns * num_columns
