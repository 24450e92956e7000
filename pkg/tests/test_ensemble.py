import math

import numpy as np
import pytest

from percolation_rmt import streams
from percolation_rmt.ensemble import (
    EnsembleParams,
    MemoryCapExceeded,
    dump_matrix,
    load_matrix,
    mean_square_entry,
    sample_matrix,
    wigner_reference,
)
from percolation_rmt.entries import make_distribution
from percolation_rmt.kernels import eval_kernel, make_kernel
from percolation_rmt.spectra import eigenvalues, esd_moment, ks_distance
from oracles import binomial_halfwidth

GAUSS = make_distribution("gaussian", 1.0)
EXP1 = make_kernel("exponential", 1.0)


def test_symmetry_is_exact():
    m = sample_matrix(EnsembleParams(60, 8.0, EXP1, GAUSS, seed=3))
    assert np.array_equal(m.values, m.values.T)


def test_band_kernel_zero_outside_support():
    m = sample_matrix(EnsembleParams(150, 16.0, make_kernel("band"), GAUSS, seed=1))
    H = m.values
    assert m.entry(-100, 0) == 0.0
    lags = np.abs(np.subtract.outer(np.arange(301), np.arange(301)))
    assert np.all(H[lags >= 8] == 0.0)


def test_nonzero_entries_are_scaled_draws():
    p = EnsembleParams(20, 4.0, EXP1, GAUSS, seed=8)
    m = sample_matrix(p, replica=2)
    key = streams.StreamKey(8, 2)
    for i, j in [(-20, -20), (-3, 5), (0, 1), (7, 20)]:
        val = m.entry(i, j)
        if val != 0.0:
            a = GAUSS.transform(
                streams.uniforms_2d(key, streams.ENTRY_A, np.array([i]), np.array([j])),
                streams.uniforms_2d(key, streams.ENTRY_B, np.array([i]), np.array([j])),
            )[0]
            assert val == a / 2.0


def test_reproducible_and_replica_dependent():
    p = EnsembleParams(40, 6.0, EXP1, GAUSS, seed=21)
    assert np.array_equal(sample_matrix(p, 1).values, sample_matrix(p, 1).values)
    assert not np.array_equal(sample_matrix(p, 1).values, sample_matrix(p, 2).values)


def test_entries_independent_of_matrix_size():
    # An entry depends only on (seed, replica, i, j), not on n.
    small = sample_matrix(EnsembleParams(10, 5.0, EXP1, GAUSS, seed=4))
    big = sample_matrix(EnsembleParams(300, 5.0, EXP1, GAUSS, seed=4))
    assert np.array_equal(small.values, big.values[290:311, 290:311])


def test_lag_profile_matches_kernel():
    n, b = 2000, 64.0
    m = sample_matrix(EnsembleParams(n, b, EXP1, GAUSS, seed=2))
    H = m.values
    N = 2 * n + 1
    for k in (0, 1, 10, 32, 64, 128, 256):
        d = np.diagonal(H, k)
        frac = np.count_nonzero(d) / d.size
        p = eval_kernel(EXP1, k / b)
        assert abs(frac - p) <= binomial_halfwidth(p, N - k)


def test_mean_square_entry_expectation():
    p = EnsembleParams(60, 10.0, EXP1, GAUSS, seed=17)
    vals = [float(np.sum(sample_matrix(p, r).values ** 2)) / p.N for r in range(100)]
    se = np.std(vals, ddof=1) / math.sqrt(len(vals))
    assert abs(np.mean(vals) - mean_square_entry(p)) <= 3 * se


def test_params_validation():
    with pytest.raises(ValueError):
        EnsembleParams(3, 8.0, EXP1, GAUSS)
    with pytest.raises(ValueError):
        EnsembleParams(3, 0.0, EXP1, GAUSS)
    with pytest.raises(ValueError):
        EnsembleParams(-1, 1.0, EXP1, GAUSS)


def test_memory_cap():
    with pytest.raises(MemoryCapExceeded):
        sample_matrix(EnsembleParams(1000, 8.0, EXP1, GAUSS), memory_cap=1024)
    with pytest.raises(MemoryCapExceeded):
        wigner_reference(1000, GAUSS, memory_cap=1024)


def test_wigner_reference_basics():
    one = wigner_reference(0, GAUSS, seed=5)
    assert one.values.shape == (1, 1)
    m = wigner_reference(30, GAUSS, seed=5)
    N = 61
    a = GAUSS.transform(
        streams.uniforms_2d(streams.StreamKey(5), streams.ENTRY_A, np.arange(-30, 31), np.arange(-30, 31)),
        streams.uniforms_2d(streams.StreamKey(5), streams.ENTRY_B, np.arange(-30, 31), np.arange(-30, 31)),
    )
    assert np.trace(m.values) == pytest.approx(a.sum() / math.sqrt(N), rel=1e-14)
    assert np.count_nonzero(m.values) == N * N
    assert np.array_equal(m.values, m.values.T)


def test_wigner_reference_semicircle():
    s = eigenvalues(wigner_reference(1000, GAUSS, seed=0))
    assert ks_distance(s, 1.0) <= 0.03


def test_second_spectral_moment_matches_frobenius():
    m = sample_matrix(EnsembleParams(200, 12.0, make_kernel("gaussian"), make_distribution("uniform", 2.0), seed=9))
    s = eigenvalues(m)
    assert esd_moment(s, 2) == pytest.approx(float(np.sum(m.values**2)) / m.N, abs=1e-10)


def test_dump_round_trip(tmp_path):
    m = sample_matrix(EnsembleParams(15, 4.0, EXP1, make_distribution("twopoint", 1.0, p=0.3), seed=2))
    path = tmp_path / "h.txt"
    dump_matrix(m, path)
    first = path.read_text().splitlines()[0].split()
    assert len(first) == 3 and int(first[0]) <= int(first[1])
    back = load_matrix(path, 15)
    assert np.array_equal(back.values, m.values)
