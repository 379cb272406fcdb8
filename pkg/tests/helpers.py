"""Shared oracles for the test suite.

Everything in here is deliberately written against the raw definitions,
not against the package's closed forms, so tests can compare two
independent computational routes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from multipool import model
from multipool.design import PoolingMatrix


def independent_irreducibility(modulus: tuple[int, ...], p: int) -> bool:
    """Irreducibility by exhaustive factor pairing.

    A monic polynomial of degree a factors iff it equals g * h with
    1 <= deg g <= a // 2 and deg h = a - deg g, both monic.  Enumerates
    every such pair and multiplies with numpy's convolution, which shares
    no code with the package's trial-division test.
    """
    a = len(modulus) - 1
    if a == 1:
        return True
    target = np.asarray(modulus, dtype=np.int64)
    for d in range(1, a // 2 + 1):
        for g_low in itertools.product(range(p), repeat=d):
            g = np.asarray(list(g_low) + [1], dtype=np.int64)
            for h_low in itertools.product(range(p), repeat=a - d):
                h = np.asarray(list(h_low) + [1], dtype=np.int64)
                product = np.convolve(g, h) % p
                if np.array_equal(product, target):
                    return False
    return True


def all_states(n: int) -> np.ndarray:
    """Every binary infection vector of length n, as a (2**n, n) array."""
    states = np.array(list(itertools.product([0, 1], repeat=n)), dtype=np.uint8)
    return states


def state_weights(states: np.ndarray, rho: float) -> np.ndarray:
    infected = states.sum(axis=1)
    n = states.shape[1]
    return rho ** infected * (1.0 - rho) ** (n - infected)


def decode_states(matrix: PoolingMatrix, states: np.ndarray, m: int, nc: int) -> np.ndarray:
    """Noiseless pipeline applied to a stack of states: loads, exact pool
    results, threshold decode."""
    loads = model.pool_loads(matrix, states)
    y = (loads > 0).astype(np.uint8)
    counts = model.positive_pool_counts(matrix, y)
    return (counts >= m - nc).astype(np.uint8)


@dataclass(frozen=True)
class ExactStats:
    per_item_sensitivity: np.ndarray
    per_item_specificity: np.ndarray
    expected_positives: float
    expected_false_positives: float
    var_positives: float
    var_false_positives: float


def exact_noiseless_stats(matrix: PoolingMatrix, rho: float, m: int, nc: int = 0) -> ExactStats:
    """Exact statistics by probability-weighted enumeration of all 2**n
    infection states under exact tests."""
    states = all_states(matrix.n)
    weights = state_weights(states, rho)
    z = decode_states(matrix, states, m, nc)
    positives = z.sum(axis=1)
    false_positives = ((1 - states) * z).sum(axis=1)
    e_pos = float(weights @ positives)
    e_fp = float(weights @ false_positives)
    var_pos = float(weights @ (positives - e_pos) ** 2)
    var_fp = float(weights @ (false_positives - e_fp) ** 2)
    sens = (weights[:, None] * (states * z)).sum(axis=0) / rho
    spec = (weights[:, None] * ((1 - states) * (1 - z))).sum(axis=0) / (1.0 - rho)
    return ExactStats(
        per_item_sensitivity=sens,
        per_item_specificity=spec,
        expected_positives=e_pos,
        expected_false_positives=e_fp,
        var_positives=var_pos,
        var_false_positives=var_fp,
    )


def exact_pivotal_probability(
    matrix: PoolingMatrix, rho: float, m: int, item: int, other: int
) -> float:
    """P(raising ``other`` from healthy to infected flips ``item`` from a
    negative decode to a positive one), noiseless, nc = 0, by enumeration.

    The event depends only on the remaining items, so enumerating full
    states and toggling ``other`` marginalizes it out exactly.
    """
    states = all_states(matrix.n)
    weights = state_weights(states, rho)
    low = states.copy()
    low[:, other] = 0
    high = states.copy()
    high[:, other] = 1
    z_low = decode_states(matrix, low, m, nc=0)[:, item]
    z_high = decode_states(matrix, high, m, nc=0)[:, item]
    flipped = (z_low == 0) & (z_high == 1)
    return float(weights @ flipped)


FANO_POOLS = (
    (0, 1, 2),
    (0, 3, 4),
    (0, 5, 6),
    (1, 3, 5),
    (1, 4, 6),
    (2, 3, 6),
    (2, 4, 5),
)


def fano_matrix() -> PoolingMatrix:
    """The 7-point, 7-line plane: pool size 3, multiplicity 3, n = 7."""
    return PoolingMatrix.from_pools(7, FANO_POOLS)
