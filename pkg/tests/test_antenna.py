import math

import numpy as np
import pytest

from mmwsim import antenna as ant
from mmwsim.channel import Cluster, ClusterSet, SubPath

from oracles import double_loop_gain

RNG = np.random.default_rng(2024)


def random_angles(n):
    az = RNG.uniform(0, 2 * np.pi, n)
    el = RNG.uniform(-np.pi / 2, np.pi / 2, n)
    return az, el


def single_path(power, phase, aoa_az, aoa_el, aod_az, aod_el):
    return ClusterSet(
        clusters=(Cluster(subpaths=(SubPath(power, phase, aoa_az, aoa_el, aod_az, aod_el),)),)
    )


def test_geometry_from_element_count():
    g = ant.UpaGeometry.from_element_count(64)
    assert (g.rows, g.cols, g.n) == (8, 8, 64)
    with pytest.raises(ValueError):
        ant.UpaGeometry.from_element_count(63)


def test_broadside_is_uniform():
    g = ant.UpaGeometry.from_element_count(16)
    w = ant.steering_vector(g, 0.0, 0.0)
    assert np.allclose(w, np.full(16, 0.25))


def test_unit_norm_random_angles():
    g = ant.UpaGeometry.from_element_count(64)
    for az, el in zip(*random_angles(100)):
        assert abs(np.linalg.norm(ant.steering_vector(g, az, el)) - 1.0) < 1e-12


def test_self_alignment_inner_product():
    g = ant.UpaGeometry.from_element_count(64)
    for az, el in zip(*random_angles(20)):
        w = ant.steering_vector(g, az, el)
        assert abs(abs(np.vdot(w, w)) - 1.0) < 1e-12


def test_signature_inner_matches_explicit_dot():
    for n in (16, 64, 256):
        g = ant.UpaGeometry.from_element_count(n)
        az_a, el_a = random_angles(50)
        az_b, el_b = random_angles(50)
        closed = ant.signature_inner(g, az_a, el_a, az_b, el_b)
        for i in range(50):
            a = ant.spatial_signature(g, az_a[i], el_a[i])
            b = ant.spatial_signature(g, az_b[i], el_b[i])
            assert abs(closed[i] - np.vdot(a, b)) < 1e-9 * n


def test_signature_inner_coincident_angles():
    g = ant.UpaGeometry.from_element_count(64)
    az, el = random_angles(10)
    vals = ant.signature_inner(g, az, el, az, el)
    assert np.allclose(vals, 64.0, atol=1e-9)


def test_gain_matched_unit_outer_product_is_one():
    g_rx = ant.UpaGeometry.from_element_count(16)
    g_tx = ant.UpaGeometry.from_element_count(64)
    u_rx = ant.steering_vector(g_rx, 1.0, 0.2)
    u_tx = ant.steering_vector(g_tx, -0.7, -0.1)
    H = np.outer(u_rx, np.conj(u_tx))
    gain = ant.beamforming_gain(H, w_tx=u_tx, w_rx=np.conj(u_rx))
    assert abs(gain - 1.0) < 1e-12


def test_gain_zero_matrix():
    assert ant.beamforming_gain(np.zeros((4, 9)), np.ones(9) / 3, np.ones(4) / 2) == 0.0


def test_gain_matches_double_loop():
    rng = np.random.default_rng(5)
    for _ in range(50):
        n_rx, n_tx = rng.choice([4, 9, 16]), rng.choice([4, 16, 25])
        H = rng.standard_normal((n_rx, n_tx)) + 1j * rng.standard_normal((n_rx, n_tx))
        w_tx = rng.standard_normal(n_tx) + 1j * rng.standard_normal(n_tx)
        w_rx = rng.standard_normal(n_rx) + 1j * rng.standard_normal(n_rx)
        fast = ant.beamforming_gain(H, w_tx, w_rx)
        slow = double_loop_gain(H, w_tx, w_rx)
        assert abs(fast - slow) <= 1e-10 * max(1.0, abs(slow))


def test_gain_dimension_mismatch():
    with pytest.raises(ValueError):
        ant.beamforming_gain(np.zeros((4, 9)), np.ones(8), np.ones(4))
    with pytest.raises(ValueError):
        ant.beamforming_gain(np.zeros((4, 9)), np.ones(9), np.ones(5))


def test_max_aligned_gain_values():
    assert abs(ant.max_aligned_gain_db(64, 16) - 10 * math.log10(1024)) < 1e-12
    assert round(ant.max_aligned_gain_db(64, 16), 2) == 30.10
    assert round(ant.max_aligned_gain_db(256, 64), 2) == 42.14
    assert ant.max_aligned_gain_db(1, 1) == 0.0
    with pytest.raises(ValueError):
        ant.max_aligned_gain_db(0, 4)


def test_align_single_path_points_at_it():
    g_rx = ant.UpaGeometry.from_element_count(16)
    g_tx = ant.UpaGeometry.from_element_count(64)
    cs = single_path(1.0, 0.3, 0.5, 0.1, -1.2, -0.2)
    w_tx, w_rx = ant.align_to_strongest_path(cs, g_tx, g_rx)
    assert np.allclose(w_tx, ant.steering_vector(g_tx, -1.2, -0.2))
    assert np.allclose(w_rx, np.conj(ant.steering_vector(g_rx, 0.5, 0.1)))


def test_align_picks_dominant_path():
    g = ant.UpaGeometry.from_element_count(16)
    strong = SubPath(0.7, 0.0, 0.1, 0.0, 0.2, 0.0)
    weak = SubPath(0.3, 0.0, 1.1, 0.0, 1.2, 0.0)
    cs = ClusterSet(clusters=(Cluster((weak, strong)),))
    w_tx, _ = ant.align_to_strongest_path(cs, g, g)
    assert np.allclose(w_tx, ant.steering_vector(g, 0.2, 0.0))


def test_align_tie_takes_first_index():
    g = ant.UpaGeometry.from_element_count(16)
    first = SubPath(0.5, 0.0, 0.1, 0.0, 0.2, 0.0)
    second = SubPath(0.5, 0.0, 1.1, 0.0, 1.2, 0.0)
    cs = ClusterSet(clusters=(Cluster((first,)), Cluster((second,))))
    w_tx, _ = ant.align_to_strongest_path(cs, g, g)
    assert np.allclose(w_tx, ant.steering_vector(g, 0.2, 0.0))


def test_single_path_matched_gain_achieves_bound():
    from mmwsim.channel import channel_matrix
    from mmwsim.config import default_config

    band = default_config().band("28ghz")
    g_rx = ant.UpaGeometry.from_element_count(band.n_rx)
    g_tx = ant.UpaGeometry.from_element_count(band.n_tx)
    bound = band.n_tx * band.n_rx
    for _ in range(50):
        az = RNG.uniform(0, 2 * np.pi, 2)
        el = RNG.uniform(-np.pi / 4, np.pi / 4, 2)
        cs = single_path(1.0, RNG.uniform(0, 2 * np.pi), az[0], el[0], az[1], el[1])
        H = channel_matrix(cs, band)
        w_tx, w_rx = ant.align_to_strongest_path(cs, g_tx, g_rx)
        gain = ant.beamforming_gain(H, w_tx, w_rx)
        assert abs(gain - bound) < 1e-9 * bound
        assert gain <= bound * (1 + 1e-9)


def test_gain_invariant_to_global_phase():
    rng = np.random.default_rng(11)
    H = rng.standard_normal((4, 9)) + 1j * rng.standard_normal((4, 9))
    w_tx = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    w_rx = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    g0 = ant.beamforming_gain(H, w_tx, w_rx)
    g1 = ant.beamforming_gain(H * np.exp(1j * 1.234), w_tx, w_rx)
    assert abs(g0 - g1) < 1e-9 * g0


def test_dft_grid_orthogonality():
    # 8x8 array, half-wavelength spacing: broadside-symmetric angles whose
    # sine falls on the length-8 DFT grid give orthogonal steering vectors
    g = ant.UpaGeometry.from_element_count(64)
    assert g.spacing == 0.5
    sines = [k / 4.0 for k in range(-3, 4)]  # u = k/(N*spacing), N = 8
    vecs = [ant.steering_vector(g, math.asin(u), 0.0) for u in sines]
    for i in range(len(vecs)):
        for j in range(len(vecs)):
            inner = abs(np.vdot(vecs[i], vecs[j]))
            if i == j:
                assert abs(inner - 1.0) < 1e-12
            else:
                assert inner < 1e-12
