import math

import numpy as np
import pytest

from fockspread import rmt


@pytest.mark.parametrize("d", [2, 4, 8, 16])
def test_haar_unitary(d, rng):
    u = rmt.sample_haar(d, rng)
    assert np.max(np.abs(u.conj().T @ u - np.eye(d))) < 1e-12
    stack = rmt.sample_haar(d, rng, size=5)
    assert stack.shape == (5, d, d)
    assert np.max(np.abs(np.einsum("kji,kjl->kil", stack.conj(), stack) - np.eye(d))) < 1e-12


def test_haar_rejects_small_d(rng):
    with pytest.raises(ValueError):
        rmt.sample_haar(1, rng)


def test_haar_first_moment():
    u = rmt.sample_haar(4, rmt.stream_rng(7), size=100_000)
    x = np.abs(u[:, 0, 0]) ** 2
    se = x.std(ddof=1) / math.sqrt(x.size)
    assert abs(x.mean() - 0.25) < 3 * se


def test_haar_eigenphases_flat():
    u = rmt.sample_haar(8, rmt.stream_rng(11), size=10_000)
    phases = np.angle(np.linalg.eigvals(u)).ravel()
    counts, _ = np.histogram(phases, bins=16, range=(-math.pi, math.pi))
    expected = phases.size / 16
    # eigenphases repel within a matrix, so multinomial variance is an upper bound
    assert np.all(np.abs(counts - expected) < 4 * math.sqrt(expected))


def test_closed_form_examples():
    assert rmt.haar_moment_closed(8, 2) == pytest.approx(2 / 72, rel=1e-15)
    assert rmt.haar_moment_closed(8, 3) == pytest.approx(6 / 720, rel=1e-15)
    assert rmt.haar_moment_closed(8, 1) == pytest.approx(1 / 8, rel=1e-15)
    assert rmt.haar_moment_closed(2**20, 4) == pytest.approx(24 / math.prod(2**20 + k for k in range(4)), rel=1e-13)
    with pytest.raises(ValueError):
        rmt.haar_moment_closed(8, 0)


@pytest.mark.parametrize("d,q", [(2, 1), (4, 5), (1000, 8)])
def test_rising_factorial(d, q):
    assert rmt.log_rising_factorial(d, q) == pytest.approx(math.lgamma(d + q) - math.lgamma(d), rel=1e-13)


def test_mc_moment_d8_q2():
    est = rmt.mc_moment(8, 2, 100_000, 0)
    assert abs(est.z_score(rmt.haar_moment_closed(8, 2))) < 3


def test_mc_moment_q1():
    est = rmt.mc_moment(8, 1, 20_000, 4)
    assert abs(est.mean - 1 / 8) < 3 * est.std_error


def test_mc_moment_vector_independence():
    d = 8
    a1, b1 = np.eye(d)[0], np.eye(d)[3]
    a2 = np.ones(d)
    b2 = np.exp(1j * np.arange(d))
    e1 = rmt.mc_moment(d, 2, 50_000, 21, a1, b1)
    e2 = rmt.mc_moment(d, 2, 50_000, 22, a2, b2)
    assert abs(e1.mean - e2.mean) < 3 * math.hypot(e1.std_error, e2.std_error)


def test_mc_moment_error_scaling():
    errs = [rmt.mc_moment(8, 2, n, 5).std_error for n in (1_000, 10_000, 100_000)]
    for small, large in zip(errs, errs[1:]):
        assert small / large == pytest.approx(math.sqrt(10), rel=0.25)


def test_mc_moment_min_samples():
    with pytest.raises(ValueError):
        rmt.mc_moment(8, 2, 999, 0)


def test_mc_moment_deterministic_for_int_seed():
    assert rmt.mc_moment(4, 3, 9000, 12) == rmt.mc_moment(4, 3, 9000, 12)
    assert rmt.mc_moment(4, 3, 9000, 12).mean != rmt.mc_moment(4, 3, 9000, 13).mean


def test_gate_sampling_deterministic_and_distinct():
    a = rmt.sample_gate_u4(rmt.stream_rng(3, 1))
    b = rmt.sample_gate_u4(rmt.stream_rng(3, 1))
    c = rmt.sample_gate_u4(rmt.stream_rng(3, 2))
    np.testing.assert_array_equal(a, b)
    assert np.max(np.abs(a - c)) > 1e-3
    assert rmt.sample_gate_u2(rmt.stream_rng(0)).shape == (2, 2)
