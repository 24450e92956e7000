import numpy as np

from percolation_rmt import streams


def test_uniforms_in_open_unit_interval():
    u = streams.uniforms_1d(streams.StreamKey(0), 0, np.arange(100_000))
    assert u.min() > 0 and u.max() < 1
    assert abs(u.mean() - 0.5) < 4 * np.sqrt(1 / 12 / u.size)


def test_entry_is_reproducible_in_isolation():
    key = streams.StreamKey(42, 3)
    i = np.arange(-5, 6)[:, None]
    j = np.arange(-5, 6)[None, :]
    block = streams.uniforms_2d(key, streams.MASK, i, j)
    single = streams.uniforms_2d(key, streams.MASK, np.array([2]), np.array([-4]))
    assert block[7, 1] == single[0]


def test_streams_differ_by_channel_replica_seed():
    idx = np.arange(1000)
    a = streams.uniforms_1d(streams.StreamKey(1, 0), 0, idx)
    assert not np.array_equal(a, streams.uniforms_1d(streams.StreamKey(1, 0), 1, idx))
    assert not np.array_equal(a, streams.uniforms_1d(streams.StreamKey(1, 1), 0, idx))
    assert not np.array_equal(a, streams.uniforms_1d(streams.StreamKey(2, 0), 0, idx))
    assert abs(np.corrcoef(a, streams.uniforms_1d(streams.StreamKey(1, 1), 0, idx))[0, 1]) < 0.15


def test_split_keys_are_distinct():
    k = streams.StreamKey(9)
    seeds = {k.split(r).channel_key(0) for r in range(100)}
    assert len(seeds) == 100
