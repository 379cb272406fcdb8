"""Forward model: infection sampling, pool loads, noise, decoding."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multipool import model
from multipool.design import MultipoolParams, PoolingMatrix, build_multipool
from multipool.errors import DomainError
from multipool.model import (
    NOISELESS,
    InfectionState,
    NoiseModel,
    SeedSpec,
    decode_ncomp,
    negative_probabilities,
    pool_loads,
    positive_pool_counts,
    sample_infections,
    sample_pool_results,
    tally,
)


def test_noise_model_validation():
    assert NOISELESS.noiseless
    assert not NoiseModel(0.0, 0.5).noiseless
    with pytest.raises(DomainError):
        NoiseModel(-0.01, 0.0)
    with pytest.raises(DomainError):
        NoiseModel(0.0, 1.5)


def test_seed_spec_reproduces_streams():
    first = SeedSpec(7, stream_id=3).rng().random(16)
    second = SeedSpec(7, stream_id=3).rng().random(16)
    other = SeedSpec(7, stream_id=4).rng().random(16)
    assert np.array_equal(first, second)
    assert not np.array_equal(first, other)


def test_seed_spec_validation():
    with pytest.raises(DomainError):
        SeedSpec(-1)
    with pytest.raises(DomainError):
        SeedSpec(2 ** 64)
    with pytest.raises(DomainError):
        SeedSpec(0, stream_id=-1)


def test_sample_infections_degenerate_prevalences():
    zeros = sample_infections(64, 0.0, SeedSpec(1))
    ones = sample_infections(64, 1.0, SeedSpec(1))
    assert zeros.x.sum() == 0
    assert ones.x.sum() == 64
    assert zeros.rho == 0.0 and ones.rho == 1.0


def test_sample_infections_hits_the_prevalence():
    n, rho = 10_000, 0.05
    state = sample_infections(n, rho, SeedSpec(20240601))
    count = int(state.x.sum())
    sigma = (n * rho * (1 - rho)) ** 0.5
    assert abs(count - n * rho) < 3 * sigma


def test_sample_infections_validation():
    with pytest.raises(DomainError):
        sample_infections(0, 0.5, SeedSpec(0))
    with pytest.raises(DomainError):
        sample_infections(10, -0.1, SeedSpec(0))
    with pytest.raises(DomainError):
        sample_infections(10, 1.0001, SeedSpec(0))


def test_pool_loads_hand_example():
    matrix = build_multipool(MultipoolParams(2, 2))
    x = np.array([1, 0, 0, 1], dtype=np.uint8)
    assert pool_loads(matrix, x).tolist() == [1, 1, 2, 0]
    state = InfectionState(x=x, rho=0.5)
    assert pool_loads(matrix, state).tolist() == [1, 1, 2, 0]


def test_pool_loads_stacked_states_match_single_rows():
    matrix = build_multipool(MultipoolParams(4, 3))
    rng = np.random.default_rng(5)
    batch = (rng.random((10, matrix.n)) < 0.3).astype(np.uint8)
    stacked = pool_loads(matrix, batch)
    assert stacked.shape == (10, matrix.t)
    for row, loads in zip(batch, stacked):
        assert np.array_equal(pool_loads(matrix, row), loads)


def test_pool_loads_rejects_wrong_width():
    matrix = build_multipool(MultipoolParams(2, 2))
    with pytest.raises(DomainError):
        pool_loads(matrix, np.zeros(5, dtype=np.uint8))


def test_negative_probabilities_closed_form():
    loads = np.array([0, 1, 2, 5])
    noiseless = negative_probabilities(loads, NOISELESS)
    assert noiseless.tolist() == [1.0, 0.0, 0.0, 0.0]
    certain_alarm = negative_probabilities(loads, NoiseModel(1.0, 0.3))
    assert certain_alarm.tolist() == [0.0, 0.0, 0.0, 0.0]
    noisy = negative_probabilities(loads, NoiseModel(0.05, 0.1))
    assert noisy[0] == pytest.approx(0.95)
    assert noisy[2] == pytest.approx(0.95 * 0.01)
    with pytest.raises(DomainError):
        negative_probabilities(np.array([-1]), NOISELESS)


def test_sample_pool_results_frequency():
    noise = NoiseModel(0.02, 0.1)
    loads = np.ones(20_000, dtype=np.int32)
    results = sample_pool_results(loads, noise, SeedSpec(77))
    p_positive = 1.0 - 0.98 * 0.1
    rate = results.y.mean()
    sigma = (p_positive * (1 - p_positive) / loads.size) ** 0.5
    assert abs(rate - p_positive) < 3 * sigma


def test_noiseless_results_are_deterministic():
    matrix = build_multipool(MultipoolParams(3, 3))
    x = np.array([1, 0, 0, 0, 1, 0, 0, 0, 0], dtype=np.uint8)
    loads = pool_loads(matrix, x)
    results = sample_pool_results(loads, NOISELESS, SeedSpec(0))
    assert np.array_equal(results.y, (loads > 0).astype(np.uint8))


def test_single_infected_item_is_recovered_exactly():
    matrix = build_multipool(MultipoolParams(3, 3))
    x = np.zeros(9, dtype=np.uint8)
    x[0] = 1
    y = (pool_loads(matrix, x) > 0).astype(np.uint8)
    decoded = decode_ncomp(matrix, y, nc=0)
    assert decoded.z.tolist() == x.tolist()


def test_decode_extremes():
    matrix = build_multipool(MultipoolParams(3, 3))
    silent = np.zeros(matrix.t, dtype=np.uint8)
    assert decode_ncomp(matrix, silent, nc=0).z.sum() == 0
    # nc = m drops the threshold to zero positive pools, flagging everyone.
    assert decode_ncomp(matrix, silent, nc=3).z.sum() == matrix.n


def test_decode_validation():
    matrix = build_multipool(MultipoolParams(3, 3))
    with pytest.raises(DomainError):
        decode_ncomp(matrix, np.zeros(matrix.t, dtype=np.uint8), nc=-1)
    with pytest.raises(DomainError):
        decode_ncomp(matrix, np.zeros(matrix.t, dtype=np.uint8), nc=4)
    ragged = PoolingMatrix.from_pools(4, [(0, 1), (1, 2)])
    with pytest.raises(DomainError):
        decode_ncomp(ragged, np.zeros(2, dtype=np.uint8), nc=0)
    with pytest.raises(DomainError):
        positive_pool_counts(matrix, np.zeros(5, dtype=np.uint8))


def test_tally_hand_case_and_identities():
    state = InfectionState(x=np.array([1, 1, 0, 0], dtype=np.uint8), rho=0.5)
    decoded = model.DecodedResults(z=np.array([1, 0, 1, 0], dtype=np.uint8), nc=0)
    t = tally(state, decoded)
    assert (t.true_positives, t.false_negatives, t.false_positives, t.true_negatives) == (1, 1, 1, 1)
    assert t.positives == t.true_positives + t.false_positives
    with pytest.raises(DomainError):
        tally(state, model.DecodedResults(z=np.zeros(5, dtype=np.uint8), nc=0))


def test_noiseless_comp_never_misses_an_infected_item():
    rng = np.random.default_rng(1234)
    for q, m in [(3, 2), (4, 3), (5, 4)]:
        matrix = build_multipool(MultipoolParams(q, m))
        for _ in range(50):
            x = (rng.random(matrix.n) < 0.2).astype(np.uint8)
            y = (pool_loads(matrix, x) > 0).astype(np.uint8)
            decoded = decode_ncomp(matrix, y, nc=0)
            assert np.all(decoded.z >= x)
            counts = tally(InfectionState(x=x, rho=0.2), decoded)
            assert counts.false_negatives == 0
            assert counts.true_positives == int(x.sum())


_DECODER_CASES = [(2, 2), (3, 2), (3, 4), (4, 5), (5, 3)]


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), params=st.sampled_from(_DECODER_CASES))
def test_decoder_is_monotone_in_nc_and_results(seed, params):
    q, m = params
    matrix = build_multipool(MultipoolParams(q, m))
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, size=matrix.t, dtype=np.uint8)
    flags = [decode_ncomp(matrix, y, nc).z for nc in range(m + 1)]
    for narrow, wide in zip(flags, flags[1:]):
        assert np.all(narrow <= wide)
    negatives = np.flatnonzero(y == 0)
    if negatives.size:
        raised = y.copy()
        raised[negatives[rng.integers(negatives.size)]] = 1
        for nc in range(m + 1):
            assert np.all(decode_ncomp(matrix, y, nc).z <= decode_ncomp(matrix, raised, nc).z)
