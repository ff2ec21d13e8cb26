"""Step 1 back half: nonuniform FFT by Gaussian gridding.

Evaluates mu_hat_k = sum_j Phi_j e^{-i k h_tilde y_j} for k = 0..N_gamma in
O(M log M): each source is smeared onto a uniform grid through a truncated
Gaussian, one length-M FFT transforms the grid, and division by the Gaussian's
transform undoes the smearing.  Output indices are shifted by floor(N_gamma/2)
before the FFT so the deconvolution factor exp(tau (a k')^2) stays moderate."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .de_ft import DeSources
from .numkit import ComplexSeries, fft_array


@dataclass(frozen=True)
class NufftParams:
    """Gridding constants: target accuracy epsilon, window half-width b,
    Gaussian variance tau = -ln(eps)/pi^2, grid scale a = 2pi/M, node spacing
    h_check, and the outer node range l = -l_minus..l_plus (exactly M nodes)."""

    epsilon: float
    b: float
    tau: float
    a: float
    h_check: float
    l_minus: int
    l_plus: int

    def __post_init__(self):
        if not (0 < self.epsilon < 1):
            raise ValueError("epsilon must be in (0, 1)")
        if self.b < -(2 / math.pi) * math.log(self.epsilon):
            raise ValueError(
                f"b = {self.b} below the admissible minimum "
                f"{-(2 / math.pi) * math.log(self.epsilon):.4f} for epsilon = {self.epsilon}"
            )
        if not math.isclose(self.tau, -math.log(self.epsilon) / math.pi**2, rel_tol=1e-12):
            raise ValueError("tau must equal -ln(epsilon)/pi^2")


def nufft_params(m: int, points: np.ndarray, h_tilde: float,
                 epsilon: float = 1e-10, b: float = 20.0) -> NufftParams:
    """Resolve the gridding constants for M sources at the given points.

    l_minus = b - floor(min_j c_j / h_check) with c_j = h_tilde*y_j/a, and
    l_plus = -l_minus + M - 1, so the outer grid has exactly M nodes.
    """
    tau = -math.log(epsilon) / math.pi**2
    a = 2 * math.pi / m
    h_check = 1.0
    c_min = h_tilde * float(np.min(points)) / a
    l_minus = int(b) - math.floor(c_min / h_check)
    return NufftParams(epsilon, b, tau, a, h_check, l_minus, -l_minus + m - 1)


@dataclass(frozen=True, eq=False)
class IndexWindows:
    """Per-node source windows: j in [j_min(l), j_max(l)] feeds node l, for
    l = l_lo..l_lo+len-1.  Empty windows satisfy j_max(l) = j_min(l) - 1."""

    j_min: np.ndarray
    j_max: np.ndarray
    l_lo: int

    def __post_init__(self):
        jm = np.ascontiguousarray(self.j_min, dtype=np.int64)
        jx = np.ascontiguousarray(self.j_max, dtype=np.int64)
        if len(jm) != len(jx):
            raise ValueError("j_min and j_max must have equal length")
        jm.flags.writeable = False
        jx.flags.writeable = False
        object.__setattr__(self, "j_min", jm)
        object.__setattr__(self, "j_max", jx)


def build_windows(points: np.ndarray, params: NufftParams, h_tilde: float) -> IndexWindows:
    """Window bounds by the two resumable forward scans.

    j_min(l) = max{j : ceil((c_j + b)/h_check) <= l} and
    j_max(l) = max{j : floor((c_j - b)/h_check) <= l}, where c_j = h_tilde*y_j/a.
    Both threshold sequences are nondecreasing because the points are, so each
    bound is one sorted-array rank query, evaluated for every l at once.  When
    no source qualifies, j_min falls back to the lowest index and j_max to one
    below it (the empty-window convention).
    """
    points = np.asarray(points, dtype=float)
    if np.any(np.diff(points) <= 0):
        raise ValueError("points must be strictly increasing")
    c = h_tilde * points / params.a
    t_min = np.ceil((c + params.b) / params.h_check)
    t_max = np.floor((c - params.b) / params.h_check)
    j_lo = -(len(points) // 2)

    l_vals = np.arange(-params.l_minus, params.l_plus + 1)
    hits_min = np.searchsorted(t_min, l_vals, side="right")
    hits_max = np.searchsorted(t_max, l_vals, side="right")
    j_min = j_lo + np.maximum(hits_min - 1, 0)
    j_max = j_lo + hits_max - 1
    return IndexWindows(j_min, j_max, -params.l_minus)


def _gridded_buffer(sources: DeSources, params: NufftParams, h_tilde: float,
                    n_gamma: int) -> np.ndarray:
    """Accumulate the shifted sources onto the M outer nodes.

    Buffer position p holds node l = l_lo + p; the window ranges are expanded
    to flat (l, j) pairs and bincount-summed, which evaluates exactly
    sum_{j in J~(l)} Phi~_j exp(-(l h_check - c_j)^2 / (4 tau)) per node.
    """
    m = len(sources.weights)
    y = sources.points
    c = h_tilde * y / params.a
    k_shift = n_gamma // 2
    w_shifted = sources.weights * np.exp(-1j * k_shift * h_tilde * y)

    win = build_windows(y, params, h_tilde)
    counts = np.maximum(win.j_max - win.j_min + 1, 0)
    total = int(counts.sum())
    l_vals = np.arange(win.l_lo, win.l_lo + len(counts))
    ll = np.repeat(l_vals, counts)
    first = np.repeat(np.cumsum(counts) - counts, counts)
    jj = np.repeat(win.j_min, counts) + (np.arange(total) - first)
    j_lo = -(m // 2)
    sel = jj - j_lo
    gauss = np.exp(-((ll * params.h_check - c[sel]) ** 2) / (4 * params.tau))
    vals = w_shifted[sel] * gauss
    pos = ll - win.l_lo
    buf = np.bincount(pos, weights=vals.real, minlength=m) + 1j * np.bincount(
        pos, weights=vals.imag, minlength=m
    )
    return buf


def nufft_forward(sources: DeSources, params: NufftParams, h_tilde: float,
                  n_gamma: int) -> ComplexSeries:
    """Fast evaluation of the source sum at zeta = k*h_tilde, k = 0..n_gamma.

    Requires M = 2*n_gamma (a power of two).  The outer node sum is one
    length-M FFT: position p of the gridded buffer carries node l = l_lo + p,
    and e^{-i(2pi/M)k'l} = e^{-i(2pi/M)k'l_lo} e^{-i(2pi/M)k'p} since k' is an
    integer, so reading bin (k' mod M) and applying the l_lo phase reproduces
    the sum over the original node range exactly.
    """
    m = len(sources.weights)
    if m != 2 * n_gamma:
        raise ValueError(f"M = {m} must equal 2*n_gamma = {2 * n_gamma}")
    if m & (m - 1):
        raise ValueError(f"M = {m} must be a power of two")
    buf = _gridded_buffer(sources, params, h_tilde, n_gamma)
    spectrum = fft_array(buf)
    k = np.arange(0, n_gamma + 1)
    kp = k - n_gamma // 2
    deconv = math.sqrt(math.pi / params.tau) * np.exp(params.tau * (params.a * kp) ** 2)
    l_lo = -params.l_minus
    phase = np.exp(-2j * np.pi * kp * l_lo / m)
    out = deconv * (params.h_check / (2 * np.pi)) * phase * spectrum[kp % m]
    return ComplexSeries(0, out, h_tilde)


def _forward_stacked(weights: np.ndarray, points: np.ndarray, params_pair,
                     h_tilde: float, n_gamma: int) -> np.ndarray:
    """nufft_forward for two runs at once; returns shape (2, n_gamma + 1).

    weights/points are (2, M) stacks; the runs share (M, tau, a, h_check, b)
    so gridding, accumulation and the FFT run as single combined passes.  Row r
    reproduces nufft_forward on run r element for element.
    """
    m = weights.shape[1]
    if m != 2 * n_gamma:
        raise ValueError(f"M = {m} must equal 2*n_gamma = {2 * n_gamma}")
    if m & (m - 1):
        raise ValueError(f"M = {m} must be a power of two")
    pa, pb = params_pair
    if (pb.tau, pb.a, pb.h_check, pb.b) != (pa.tau, pa.a, pa.h_check, pa.b):
        raise ValueError("stacked runs must share tau, a, h_check and b")
    tau, a, hc = pa.tau, pa.a, pa.h_check
    k_shift = n_gamma // 2
    c = h_tilde * points / a
    w_shifted = weights * np.exp(-1j * k_shift * h_tilde * points)

    t_min = np.ceil((c + pa.b) / hc)
    t_max = np.floor((c - pa.b) / hc)
    counts_rows, node_rows, start_rows = [], [], []
    for r, par in enumerate((pa, pb)):
        l_vals = np.arange(-par.l_minus, par.l_plus + 1)
        j_min = np.maximum(np.searchsorted(t_min[r], l_vals, side="right") - 1, 0)
        j_max = np.searchsorted(t_max[r], l_vals, side="right") - 1
        counts_rows.append(np.maximum(j_max - j_min + 1, 0))
        node_rows.append(l_vals * hc)
        start_rows.append(j_min + r * m)    # flat index into the (2, M) stack
    counts = np.concatenate(counts_rows)
    total = int(counts.sum())
    first = np.cumsum(counts) - counts
    rel = np.arange(total) - np.repeat(first, counts)
    sel = np.repeat(np.concatenate(start_rows), counts) + rel
    node = np.repeat(np.concatenate(node_rows), counts)
    c_flat = c.ravel()
    w_flat = w_shifted.ravel()
    gauss = np.exp(-((node - c_flat[sel]) ** 2) / (4 * tau))
    vals = w_flat[sel] * gauss
    # pairs are emitted node-major, so each node's terms sit contiguously and
    # reduceat sums them in the same order bincount would
    if total:
        buf = np.add.reduceat(vals, np.minimum(first, total - 1))
        buf[counts == 0] = 0.0
    else:
        buf = np.zeros(2 * m, dtype=complex)
    spectrum = np.fft.fft(buf.reshape(2, m), axis=-1)
    kp, deconv, phase = _deconv_cached(n_gamma, tau, a, m,
                                       pa.l_minus, pb.l_minus)
    return deconv * (hc / (2 * np.pi)) * phase * spectrum[:, kp % m]


@lru_cache(maxsize=64)
def _deconv_cached(n_gamma: int, tau: float, a: float, m: int,
                   l_minus_a: int, l_minus_b: int):
    """Gaussian deconvolution and node-offset phase factors (plan constants)."""
    kp = np.arange(0, n_gamma + 1) - n_gamma // 2
    deconv = math.sqrt(math.pi / tau) * np.exp(tau * (a * kp) ** 2)
    l_lo = np.array([[-l_minus_a], [-l_minus_b]])
    phase = np.exp(-2j * np.pi * kp * l_lo / m)
    kp.flags.writeable = False
    deconv.flags.writeable = False
    phase.flags.writeable = False
    return kp, deconv, phase


def extend_conjugate(series: ComplexSeries) -> ComplexSeries:
    """Mirror a k >= 0 series to k = -N_gamma+1..N_gamma via out_{-k} = conj(out_k).

    The k = 0 entry is passed through unchanged.
    """
    if series.offset != 0:
        raise ValueError(f"input must start at k = 0, got offset {series.offset}")
    v = series.values
    full = np.concatenate((np.conj(v[-2:0:-1]), v))
    return ComplexSeries(len(v) - len(full), full, series.spacing)
