import numpy as np
import pytest
from scipy import stats

from cutofflab.rng import Purpose, RngStream, batch_normal, batch_uniform, philox4x64


def test_philox_matches_numpy_known_answer():
    # numpy's Philox increments the counter before each block, so its first two
    # blocks are our counters 1 and 2 under the same key
    key = np.array([5, 7], dtype=np.uint64)
    ref = np.random.Philox(key=key).random_raw(8).astype(np.uint64)
    ctr = np.zeros((2, 4), dtype=np.uint64)
    ctr[0, 0], ctr[1, 0] = 1, 2
    ours = philox4x64(ctr, np.broadcast_to(key, (2, 2))).reshape(-1)
    np.testing.assert_array_equal(ours, ref)


def test_uniforms_open_interval_and_shape():
    u = batch_uniform(1, np.arange(50), 7, step=3)
    assert u.shape == (50, 7)
    assert np.all((u > 0) & (u < 1))


def test_rows_depend_only_on_stream_id():
    full = batch_normal(9, np.arange(100), 3, step=5, purpose=Purpose.LMC)
    part = batch_normal(9, np.arange(40, 60), 3, step=5, purpose=Purpose.LMC)
    np.testing.assert_array_equal(full[40:60], part)
    single = RngStream(9, 42).normal(3, step=5, purpose=Purpose.LMC)
    np.testing.assert_array_equal(full[42], single)


@pytest.mark.parametrize("field", ["step", "purpose", "round"])
def test_counter_fields_give_distinct_streams(field):
    base = dict(step=0, purpose=Purpose.GENERIC, round=0)
    other = dict(base, **{field: 1})
    a = batch_uniform(3, [0], 16, **base)
    b = batch_uniform(3, [0], 16, **other)
    assert not np.array_equal(a, b)


def test_normals_pass_ks_test():
    z = batch_normal(2024, np.arange(20000), 1).ravel()
    assert stats.kstest(z, "norm").pvalue > 1e-3


def test_stream_validation_and_spawn():
    with pytest.raises(ValueError):
        RngStream(-1)
    s = RngStream(5, 1).spawn(8)
    assert s == RngStream(5, 8)
