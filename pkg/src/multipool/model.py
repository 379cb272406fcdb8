"""Forward model for pooled screening.

Covers one round end to end: sample who is infected, accumulate pool
loads through a pooling matrix, corrupt the pool results with false
positives and false negatives, and decode item statuses by thresholding
positive-pool counts.

Randomness is drawn from numpy Generators seeded through
:class:`SeedSpec`, which derives an independent stream from a master
seed and a stream id.  Equal (master_seed, stream_id) pairs reproduce
draws bit for bit regardless of what other streams ran before or
concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import PoolingMatrix
from .errors import DomainError


@dataclass(frozen=True)
class NoiseModel:
    """Per-pool error rates: false positive p_fp, false negative p_fn.

    A pool carrying k infected samples tests negative with probability
    (1 - p_fp) * p_fn ** k, with 0 ** 0 = 1, and pools err independently
    given their loads.
    """

    p_fp: float
    p_fn: float

    def __post_init__(self):
        for name, value in (("p_fp", self.p_fp), ("p_fn", self.p_fn)):
            if not 0.0 <= value <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {value}")

    @property
    def noiseless(self) -> bool:
        return self.p_fp == 0.0 and self.p_fn == 0.0


NOISELESS = NoiseModel(0.0, 0.0)


@dataclass(frozen=True)
class SeedSpec:
    """Addresses one independent random stream under a master seed."""

    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed < 2 ** 64:
            raise DomainError("master_seed must be a 64-bit unsigned integer")
        if self.stream_id < 0:
            raise DomainError("stream_id must be non-negative")

    def rng(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id,))
        return np.random.default_rng(seq)


def _as_rng(seed: "SeedSpec | np.random.Generator") -> np.random.Generator:
    if isinstance(seed, SeedSpec):
        return seed.rng()
    return seed


@dataclass
class InfectionState:
    """Binary infection vector plus the prevalence it was drawn at."""

    x: np.ndarray
    rho: float


@dataclass
class PoolResults:
    y: np.ndarray


@dataclass
class DecodedResults:
    z: np.ndarray
    nc: int


@dataclass(frozen=True)
class Tally:
    """Counts for one decoded round."""

    positives: int
    false_positives: int
    false_negatives: int
    true_positives: int
    true_negatives: int


def sample_infections(n: int, rho: float, seed: "SeedSpec | np.random.Generator") -> InfectionState:
    if n < 1:
        raise DomainError(f"item count must be positive, got {n}")
    if not 0.0 <= rho <= 1.0:
        raise DomainError(f"prevalence must lie in [0, 1], got {rho}")
    rng = _as_rng(seed)
    x = (rng.random(n) < rho).astype(np.uint8)
    return InfectionState(x=x, rho=rho)


def pool_loads(matrix: PoolingMatrix, state: "InfectionState | np.ndarray") -> np.ndarray:
    """Number of infected items per pool; accepts (..., n) stacked states."""
    x = state.x if isinstance(state, InfectionState) else np.asarray(state)
    if x.shape[-1] != matrix.n:
        raise DomainError(f"state has {x.shape[-1]} items, matrix expects {matrix.n}")
    pools = matrix.pools_array
    if pools is not None:
        return x[..., pools].sum(axis=-1, dtype=np.int32)
    columns = [x[..., list(pool)].sum(axis=-1, dtype=np.int32) for pool in matrix.pools]
    return np.stack(columns, axis=-1)


def negative_probabilities(loads: np.ndarray, noise: NoiseModel) -> np.ndarray:
    """P(pool tests negative | load k) = (1 - p_fp) * p_fn ** k."""
    loads = np.asarray(loads)
    if loads.size and loads.min() < 0:
        raise DomainError("pool loads must be non-negative")
    # numpy evaluates 0.0 ** 0 as 1.0, which is the convention wanted here.
    return (1.0 - noise.p_fp) * np.power(noise.p_fn, loads)


def sample_pool_results(
    loads: np.ndarray, noise: NoiseModel, seed: "SeedSpec | np.random.Generator"
) -> PoolResults:
    rng = _as_rng(seed)
    p_negative = negative_probabilities(loads, noise)
    y = (rng.random(p_negative.shape) >= p_negative).astype(np.uint8)
    return PoolResults(y=y)


def positive_pool_counts(matrix: PoolingMatrix, y: np.ndarray) -> np.ndarray:
    """Per item, how many of its pools tested positive; accepts (..., t)."""
    y = np.asarray(y)
    if y.shape[-1] != matrix.t:
        raise DomainError(f"results cover {y.shape[-1]} pools, matrix has {matrix.t}")
    membership = matrix.membership_array
    if membership is not None:
        return y[..., membership].sum(axis=-1, dtype=np.int32)
    columns = [y[..., list(row)].sum(axis=-1, dtype=np.int32) for row in matrix.item_membership]
    return np.stack(columns, axis=-1)


def decode_ncomp(
    matrix: PoolingMatrix, results: "PoolResults | np.ndarray", nc: int
) -> DecodedResults:
    """Flag an item positive when at most nc of its pools tested negative."""
    m = matrix.multiplicity
    if m is None:
        raise DomainError("decoding requires a constant number of pools per item")
    if not 0 <= nc <= m:
        raise DomainError(f"nc must lie in [0, {m}], got {nc}")
    y = results.y if isinstance(results, PoolResults) else np.asarray(results)
    counts = positive_pool_counts(matrix, y)
    z = (counts >= m - nc).astype(np.uint8)
    return DecodedResults(z=z, nc=nc)


def tally(state: InfectionState, decoded: DecodedResults) -> Tally:
    x = np.asarray(state.x)
    z = np.asarray(decoded.z)
    if x.shape != z.shape:
        raise DomainError(f"state shape {x.shape} does not match decode shape {z.shape}")
    x = x.astype(bool)
    z = z.astype(bool)
    true_positives = int(np.count_nonzero(x & z))
    false_positives = int(np.count_nonzero(~x & z))
    false_negatives = int(np.count_nonzero(x & ~z))
    true_negatives = int(np.count_nonzero(~x & ~z))
    return Tally(
        positives=true_positives + false_positives,
        false_positives=false_positives,
        false_negatives=false_negatives,
        true_positives=true_positives,
        true_negatives=true_negatives,
    )
