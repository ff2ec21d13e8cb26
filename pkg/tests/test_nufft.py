"""Gaussian-gridding NUFFT: parameter rules, index windows, forward accuracy."""
import math

import numpy as np
import pytest

import oracles
from levyfourier.de_ft import DeFtParams, DeSources, build_sources, splice_plan
from levyfourier.euler_ft import EulerParams
from levyfourier.nufft import (NufftParams, _forward_stacked, _gridded_buffer, build_windows,
                               extend_conjugate, nufft_forward, nufft_params)
from levyfourier.numkit import ComplexSeries, fft_array


def vg_runs(n=128):
    """Both splice runs of the e^{-y} model on the [2, 5] window geometry."""
    euler = EulerParams.from_theorem(n, 2.0, 5.0, 1.0)
    n_gamma = 2 * n
    (run_a, range_a), (run_b, range_b) = splice_plan(n_gamma, euler.h_tilde)
    out = []
    for run, rng in ((run_a, range_a), (run_b, range_b)):
        src = build_sources(lambda y: np.exp(-y), run)
        par = nufft_params(2 * n_gamma, src.points, euler.h_tilde)
        out.append((src, par, rng))
    return euler.h_tilde, n_gamma, out


def test_params_rules():
    points = np.array([0.5, 1.0, 7.0])
    par = nufft_params(512, points, 0.1)
    assert par.tau == pytest.approx(-math.log(1e-10) / math.pi**2, rel=1e-14)
    assert par.a == pytest.approx(2 * math.pi / 512, rel=1e-14)
    assert par.h_check == 1.0
    assert par.l_plus == -par.l_minus + 512 - 1
    assert par.l_plus - (-par.l_minus) + 1 == 512
    with pytest.raises(ValueError):
        nufft_params(512, points, 0.1, epsilon=1e-10, b=10.0)
    with pytest.raises(ValueError):
        nufft_params(512, points, 0.1, epsilon=0.0)
    with pytest.raises(ValueError):
        NufftParams(1e-10, 20.0, 1.0, 0.1, 1.0, 10, 501)


def test_windows_match_brute_force():
    h_tilde, _, runs = vg_runs()
    # the high-band run reproduces the published window-plot geometry
    assert runs[1][0].params.zeta0 == pytest.approx(41.684, abs=2e-3)
    for src, par, _ in runs:
        win = build_windows(src.points, par, h_tilde)
        j_min, j_max = oracles.windows_brute(src.points, par, h_tilde)
        assert np.array_equal(win.j_min, j_min)
        assert np.array_equal(win.j_max, j_max)


def test_windows_monotone_and_contain_inner_sources():
    h_tilde, _, runs = vg_runs()
    for src, par, _ in runs:
        win = build_windows(src.points, par, h_tilde)
        assert np.all(np.diff(win.j_min) >= 0)
        assert np.all(np.diff(win.j_max) >= 0)
        assert np.all(win.j_min <= win.j_max + 1)
        c = h_tilde * src.points / par.a
        j_lo = -(len(c) // 2)
        for pos, l in enumerate(range(-par.l_minus, par.l_plus + 1)):
            # sources strictly inside the truncation circle must be covered;
            # exact boundary ties may fall either way (factor ~e^{-b^2/4tau})
            inside = np.nonzero(np.abs(l * par.h_check - c) <= par.b - 1e-12)[0] + j_lo
            if inside.size:
                assert win.j_min[pos] <= inside.min()
                assert inside.max() <= win.j_max[pos]


def test_windows_single_point_threshold():
    par = NufftParams(1e-10, 20.0, -math.log(1e-10) / math.pi**2, 1.0, 1.0, 25, 40)
    win = build_windows(np.array([0.0]), par, 1.0)
    for pos, l in enumerate(range(-25, 41)):
        if l >= -20:
            assert (win.j_min[pos], win.j_max[pos]) == (0, 0)
        else:
            assert win.j_max[pos] == win.j_min[pos] - 1


def test_windows_reject_unsorted_points():
    par = NufftParams(1e-10, 20.0, -math.log(1e-10) / math.pi**2, 1.0, 1.0, 25, 40)
    with pytest.raises(ValueError):
        build_windows(np.array([1.0, 0.5]), par, 1.0)


def test_forward_zero_weights():
    run = DeFtParams(10.0, 0.05, 16, 16)
    src = DeSources(np.zeros(32), np.linspace(0.1, 3.2, 32), run)
    par = nufft_params(32, src.points, 0.2)
    out = nufft_forward(src, par, 0.2, 16)
    assert np.array_equal(out.values, np.zeros(17))


def test_forward_single_source_is_pure_phase():
    # M = 64 nodes so the covered span [0, L+ - b] holds every c_j; smaller M
    # cannot fit the b = 20 Gaussian window
    run = DeFtParams(10.0, 0.05, 32, 32)
    weights = np.zeros(64)
    weights[20] = 1.0
    points = np.linspace(0.3, 4.8, 64)
    src = DeSources(weights, points, run)
    h_tilde = 0.21
    par = nufft_params(64, points, h_tilde)
    out = nufft_forward(src, par, h_tilde, 32)
    k = np.arange(0, 33)
    exact = np.exp(-1j * k * h_tilde * points[20])
    assert np.max(np.abs(out.values - exact)) <= 10 * par.epsilon


def test_forward_vg_matches_direct_sum():
    h_tilde, n_gamma, runs = vg_runs()
    for src, par, _ in runs:
        fast = nufft_forward(src, par, h_tilde, n_gamma)
        direct = oracles.source_sum_direct(src.weights, src.points, h_tilde, n_gamma)
        assert np.max(np.abs(fast.values - direct)) <= 1e-8


def test_forward_phase_randomized_weights_stay_accurate():
    # magnitudes must keep the double-exponential envelope: sources beyond the
    # node span are dropped by design, which only works when they are tiny
    rng = np.random.default_rng(41)
    h_tilde, n_gamma, runs = vg_runs()
    for src, par, _ in runs:
        w = src.weights * np.exp(1j * rng.uniform(0.0, 2 * np.pi, len(src.weights)))
        rnd = DeSources(w, src.points, src.params)
        fast = nufft_forward(rnd, par, h_tilde, n_gamma)
        direct = oracles.source_sum_direct(w, src.points, h_tilde, n_gamma)
        assert np.max(np.abs(fast.values - direct)) <= 1e-8


def test_forward_wider_window_tradeoff():
    # the node count is pinned at M, so raising b shifts the lattice left and
    # shrinks right-tail coverage; the extra dropped mass here is ~e^{-18}.
    # both settings stay in the contract accuracy class, they are not bitwise
    # related
    h_tilde, n_gamma, runs = vg_runs()
    for src, par, _ in runs:
        wide = nufft_params(2 * n_gamma, src.points, h_tilde, b=40.0)
        out20 = nufft_forward(src, par, h_tilde, n_gamma)
        out40 = nufft_forward(src, wide, h_tilde, n_gamma)
        direct = oracles.source_sum_direct(src.weights, src.points, h_tilde, n_gamma)
        assert np.max(np.abs(out20.values - direct)) <= 1e-8
        assert np.max(np.abs(out40.values - direct)) <= 3e-8
        assert np.max(np.abs(out20.values - out40.values)) <= 3e-8


def test_forward_size_errors():
    run = DeFtParams(10.0, 0.05, 8, 8)
    src = DeSources(np.ones(16), np.linspace(0.3, 4.8, 16), run)
    par = nufft_params(16, src.points, 0.2)
    with pytest.raises(ValueError):
        nufft_forward(src, par, 0.2, 16)


def test_phase_compensated_spectrum_is_m_periodic():
    run = DeFtParams(10.0, 0.05, 8, 8)
    rng = np.random.default_rng(43)
    w = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    src = DeSources(w, np.linspace(0.3, 4.8, 16), run)
    h_tilde, n_gamma = 0.21, 8
    par = nufft_params(16, src.points, h_tilde)
    m = 16
    spec = fft_array(_gridded_buffer(src, par, h_tilde, n_gamma))
    l_lo = -par.l_minus
    for k in range(n_gamma + 1):
        kp = k - n_gamma // 2
        a = np.exp(-2j * np.pi * kp * l_lo / m) * spec[kp % m]
        b = np.exp(-2j * np.pi * (kp + m) * l_lo / m) * spec[(kp + m) % m]
        assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


def test_stacked_forward_matches_composition():
    h_tilde, n_gamma, runs = vg_runs()
    weights = np.stack([runs[0][0].weights, runs[1][0].weights])
    points = np.stack([runs[0][0].points, runs[1][0].points])
    both = _forward_stacked(weights, points, (runs[0][1], runs[1][1]), h_tilde, n_gamma)
    for row, (src, par, _) in enumerate(runs):
        ref = nufft_forward(src, par, h_tilde, n_gamma).values
        assert np.max(np.abs(both[row] - ref)) <= 1e-13 * np.max(np.abs(ref))


def test_extend_conjugate():
    s = extend_conjugate(ComplexSeries(0, [1.0 + 0.0j], 0.5))
    assert s.offset == 0 and np.array_equal(s.values, [1.0 + 0.0j])
    v = np.array([1.0 + 0j, 2.0 + 1j, 3.0 - 2j])
    ext = extend_conjugate(ComplexSeries(0, v, 0.5))
    # mirrored onto k = -N+1..N: 2N values, ready for a length-2N transform
    assert ext.offset == -1 and len(ext) == 4
    assert ext.at(-1) == np.conj(ext.at(1))
    assert ext.at(0) == v[0]
    assert ext.at(2) == v[2]
    with pytest.raises(ValueError):
        extend_conjugate(ComplexSeries(1, v, 0.5))


def test_extend_conjugate_vg_closed_form():
    # splice the two runs, extend, and compare against 1/(1 + i zeta) on both
    # sides of the origin
    h_tilde, n_gamma, runs = vg_runs()
    spliced = np.empty(n_gamma + 1, dtype=complex)
    for src, par, krange in runs:
        out = nufft_forward(src, par, h_tilde, n_gamma)
        spliced[np.asarray(krange)] = out.values[np.asarray(krange)]
    full = extend_conjugate(ComplexSeries(0, spliced, h_tilde))
    zeta = full.indices() * h_tilde
    exact = 1.0 / (1.0 + 1j * zeta)
    assert np.max(np.abs(full.values - exact)) <= 1e-6
