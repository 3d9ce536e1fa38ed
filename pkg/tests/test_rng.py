import math

import numpy as np
import pytest
from scipy import stats

from yukawa_mc.rng import (
    RngStream,
    derive_seed,
    exponential_variate,
    gaussian_vector,
    philox4x32,
    uniform_sphere_point,
)

# Known-answer vectors for Philox4x32-10 from the Random123 distribution.
KAT = [
    ((0, 0, 0, 0), (0, 0), (0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8)),
    ((0xFFFFFFFF,) * 4, (0xFFFFFFFF,) * 2, (0x408F276D, 0x41C83B0E, 0xA20BC7C6, 0x6D5451FD)),
    (
        (0x243F6A88, 0x85A308D3, 0x13198A2E, 0x03707344),
        (0xA4093822, 0x299F31D0),
        (0xD16CFE09, 0x94FDCCEB, 0x5001E420, 0x24126EA1),
    ),
]


@pytest.mark.parametrize("ctr, key, expected", KAT)
def test_philox_known_answers(ctr, key, expected):
    words = [np.uint64(v) for v in ctr + key]
    assert tuple(int(v) for v in philox4x32(*words)) == expected


def test_same_stream_is_deterministic():
    a = gaussian_vector(RngStream(1, 1), 2, 1.0)
    b = gaussian_vector(RngStream(1, 1), 2, 1.0)
    assert np.array_equal(a, b)


def test_streams_differ():
    a = RngStream(1, 1).uniform(8)
    b = RngStream(1, 2).uniform(8)
    c = RngStream(2, 1).uniform(8)
    assert not np.array_equal(a, b) and not np.array_equal(a, c)


def test_counter_advances():
    r = RngStream(5)
    first, second = r.uniform(3), r.uniform(3)
    assert not np.array_equal(first, second)
    whole = RngStream(5).uniform(4)
    assert np.array_equal(first[:2], whole[:2])


def test_spawn_is_deterministic_and_distinct():
    r = RngStream(9)
    assert r.spawn(3).seed == RngStream(9).spawn(3).seed
    assert r.spawn(3).seed != r.spawn(4).seed != r.seed
    assert derive_seed(9, 3) == r.spawn(3).seed


def test_seed_range():
    with pytest.raises(ValueError):
        RngStream(-1)
    with pytest.raises(ValueError):
        RngStream(0, 2**64)


def test_uniform_open_interval_and_law():
    u = RngStream(3).uniform(200_000)
    assert u.min() > 0.0 and u.max() < 1.0
    assert stats.kstest(u, "uniform").pvalue > 1e-3


def test_stream_independence():
    a = np.concatenate([RngStream(11, i).uniform(4) for i in range(20_000)])
    b = np.concatenate([RngStream(11, i + 1).uniform(4) for i in range(20_000)])
    assert abs(np.corrcoef(a, b)[0, 1]) < 4.0 / math.sqrt(a.size)


def test_gaussian_moments():
    z = gaussian_vector(RngStream(2), 2, 1.0, size=1_000_000)
    assert np.all(np.abs(z.mean(axis=0)) < 4e-3)
    v = gaussian_vector(RngStream(4), 1, 2.0, size=1_000_000)
    assert abs(v.var() / 2.0 - 1.0) < 0.02


def test_gaussian_law():
    z = RngStream(6).normal(100_000)
    assert stats.kstest(z, "norm").pvalue > 1e-3


def test_gaussian_errors():
    with pytest.raises(ValueError):
        gaussian_vector(RngStream(0), 2, 0.0)
    with pytest.raises(ValueError):
        gaussian_vector(RngStream(0), 0, 1.0)


def test_sphere_point_norm():
    c = np.array([1.0, -2.0, 0.5])
    pts = uniform_sphere_point(RngStream(1), c, 0.7, size=1000)
    assert np.allclose(np.linalg.norm(pts - c, axis=1), 0.7, rtol=0, atol=1e-12)
    single = uniform_sphere_point(RngStream(1), c, 0.7)
    assert single.shape == (3,)


def test_sphere_quadrant_fraction():
    pts = uniform_sphere_point(RngStream(8), [0.0, 0.0], 1.0, size=1_000_000)
    ang = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2 * math.pi)
    assert abs(np.mean(ang < math.pi / 2) - 0.25) < 0.002


def test_sphere_mean_3d():
    pts = uniform_sphere_point(RngStream(10), [0.0, 0.0, 0.0], 2.0, size=1_000_000)
    assert np.all(np.abs(pts.mean(axis=0)) < 4 * 2.0 * 1e-3)


def test_sphere_radius_error():
    with pytest.raises(ValueError):
        uniform_sphere_point(RngStream(0), [0.0, 0.0], 0.0)


def test_exponential():
    y = exponential_variate(RngStream(12), 0.5, size=1_000_000)
    assert abs(y.mean() - 2.0) < 0.008
    assert abs(np.mean(y > 1.0) - math.exp(-0.5)) < 0.002
    assert isinstance(exponential_variate(RngStream(1), 1.0), float)
    with pytest.raises(ValueError):
        exponential_variate(RngStream(1), 0.0)
