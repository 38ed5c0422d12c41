"""Exhaustive assignment-and-phase search for tiny verification instances.

Tractable only for toy sizes by design: the evaluation count is checked
against a budget up front and the search refuses to start when it would
exceed it. Surfaces with more than four elements share one phase per column
to keep the grid enumerable.
"""

from __future__ import annotations

import itertools

import numpy as np

from .channel import ChannelSet
from .metrics import Allocation, PhaseConfig, sum_utility


class BudgetExceededError(RuntimeError):
    """The requested enumeration is larger than the allowed budget."""

    def __init__(self, evaluations: int, budget: int):
        super().__init__(
            f"exhaustive search needs {evaluations} evaluations, over the budget of {budget}")
        self.evaluations = evaluations
        self.budget = budget


def enumeration_count(num_users: int, num_columns: int, num_elements: int,
                      nu: int, include_off: bool = True) -> int:
    """Configurations the search would visit (exact integer)."""
    slots = num_elements if num_elements <= 4 else num_columns
    return (num_users + bool(include_off)) ** num_columns * nu ** slots


def brute_force(ch: ChannelSet, w, alpha: float, noise_linear: float, nu: int,
                include_off: bool = True, budget: int = 10_000_000):
    """Grid-search every hard assignment and quantized phase combination.

    Phases come from nu evenly spaced levels spanning [0, pi] (nu = 1 pins
    them at 0). Ties resolve to the first configuration in enumeration
    order, i.e. the lexicographically smallest with "off" sorting last.
    Returns (PhaseConfig, Allocation, utility).
    """
    if nu < 1:
        raise ValueError("nu must be >= 1")
    K = ch.num_users
    L2 = ch.num_elements
    L = int(round(np.sqrt(L2)))
    if L * L != L2:
        raise ValueError("the surface must be square for column assignments")

    count = enumeration_count(K, L, L2, nu, include_off)
    if count > budget:
        raise BudgetExceededError(count, budget)

    per_element = L2 <= 4
    slots = L2 if per_element else L
    grid = np.array([0.0]) if nu == 1 else np.linspace(0.0, np.pi, nu)
    choices = list(range(K)) + ([K] if include_off else [])  # K = "off", sorts last

    best_utility = None
    best_theta = None
    best_alloc = None
    for assign in itertools.product(choices, repeat=L):
        xi = np.zeros((K, L))
        for c, a in enumerate(assign):
            if a < K:
                xi[a, c] = 1.0
        alloc = Allocation(xi, mode="binary")
        for phases in itertools.product(grid, repeat=slots):
            theta = np.asarray(phases) if per_element else np.repeat(phases, L)
            u = sum_utility(ch, theta, alloc, w, alpha, noise_linear)
            if best_utility is None or u > best_utility:
                best_utility = u
                best_theta = theta
                best_alloc = alloc
    return PhaseConfig(best_theta), best_alloc, float(best_utility)
