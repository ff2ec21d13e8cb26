"""Step 2: sinc-Gauss sampling, the equispaced indefinite-integration formula
built from it, and the kernel-integral table G_r(k).

The interpolant T f(zeta) = sum_k f(k h~) sinc(zeta/h~ - k) exp(-(zeta/h~-k)^2/(2r^2))
integrates term by term into differences of G_r(v) = integral_0^v sinc(eta)
exp(-eta^2/(2r^2)) d eta at integer arguments, so one table of G_r(0..N') plus
an FFT convolution evaluates all N' indefinite integrals in O(N' log N')."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numkit import ComplexSeries, FrftPlan, erf, fft_array


@dataclass(frozen=True)
class SincGaussConfig:
    """Formula half-bandwidth N', grid spacing h~, and Gaussian width r
    (default r = sqrt(N'/pi))."""

    n_prime: int
    h_tilde: float
    r: float = field(default=None)

    def __post_init__(self):
        if self.n_prime < 2:
            raise ValueError("n_prime must be at least 2")
        if not (self.h_tilde > 0 and math.isfinite(self.h_tilde)):
            raise ValueError("h_tilde must be finite and positive")
        if self.r is None:
            object.__setattr__(self, "r", math.sqrt(self.n_prime / math.pi))
        elif not self.r > 0:
            raise ValueError("r must be positive")


@dataclass(frozen=True, eq=False)
class KernelTable:
    """G_r(k) for k = 0..N'; negative arguments go through the odd extension
    G_r(-k) = -G_r(k)."""

    g: np.ndarray
    r: float

    def __post_init__(self):
        g = np.ascontiguousarray(self.g, dtype=float)
        g.flags.writeable = False
        object.__setattr__(self, "g", g)

    @property
    def n_prime(self) -> int:
        return len(self.g) - 1

    def signed(self, k) -> np.ndarray:
        """G_r at signed integer arguments |k| <= n_prime."""
        k = np.asarray(k)
        return np.sign(k) * self.g[np.abs(k)]


def kernel_table(r: float, n_prime: int, m_table: int | None = None) -> KernelTable:
    """Tabulate G_r(k), k = 0..n_prime, from the kernel's Fourier transform.

    F_SG(w) = (1/2)[erf(r(w+pi)/sqrt(2)) - erf(r(w-pi)/sqrt(2))] is the
    transform of sinc*Gauss; the midpoint rule with step h' = 2pi/m_table on
    the inversion integral gives the first differences

      G_r(k+1) - G_r(k) ~ (h'/2pi) sum_{l'=-M+1}^{M} F_SG(l'h') sinc(l'h'/2pi)
                           e^{i l'h'/2} e^{i k l' h'},

    evaluated for all k at once by a fractional FFT with delta = h', then
    prefix-summed from G_r(0) = 0.  m_table defaults to max(4*n_prime, 2^10)
    and must satisfy floor(m_table/2) >= n_prime.
    """
    if m_table is None:
        m_table = max(4 * n_prime, 1024)
    if m_table & (m_table - 1):
        raise ValueError(f"m_table = {m_table} must be a power of two")
    if m_table // 2 < n_prime:
        raise ValueError(f"m_table = {m_table} too small for n_prime = {n_prime}")
    hp = 2 * np.pi / m_table
    w = np.arange(-m_table + 1, m_table + 1) * hp
    f_sg = 0.5 * (erf(r * (w + np.pi) / np.sqrt(2)) - erf(r * (w - np.pi) / np.sqrt(2)))
    coeff = f_sg * np.sinc(w / (2 * np.pi)) * np.exp(1j * w / 2)
    plan = FrftPlan(2 * m_table, hp)
    spectrum = plan.apply(coeff)            # index n = -m_table+1..m_table
    base = m_table - 1                      # position of n = 0
    diffs = (hp / (2 * np.pi)) * spectrum[base : base + n_prime].real
    g = np.concatenate(([0.0], np.cumsum(diffs)))
    return KernelTable(g, r)


def sg_interpolate(samples: ComplexSeries, cfg: SincGaussConfig, zeta: float) -> complex:
    """Sinc-Gauss interpolant at zeta from samples f(k h~).

    Uses the window k = floor(zeta/h~) - N' + 1 .. floor(zeta/h~) + N'; raises
    when the samples do not cover it, naming the missing index range.
    """
    center = math.floor(zeta / cfg.h_tilde)
    lo, hi = center - cfg.n_prime + 1, center + cfg.n_prime
    if lo < samples.offset or hi > samples.last_index:
        miss_lo = f"{lo}..{samples.offset - 1}" if lo < samples.offset else ""
        miss_hi = f"{samples.last_index + 1}..{hi}" if hi > samples.last_index else ""
        missing = ", ".join(s for s in (miss_lo, miss_hi) if s)
        raise ValueError(f"samples cover {samples.offset}..{samples.last_index}; "
                         f"window needs {lo}..{hi} (missing {missing})")
    k = np.arange(lo, hi + 1)
    s = zeta / cfg.h_tilde - k
    window = np.sinc(s) * np.exp(-(s * s) / (2 * cfg.r**2))
    return complex(np.sum(samples.values[lo - samples.offset : hi - samples.offset + 1]
                          * window))


def indefinite_integral(samples: ComplexSeries, cfg: SincGaussConfig,
                        table: KernelTable) -> ComplexSeries:
    """Integrals integral_0^{l h~} f for l = 1..N' from 3N' equispaced samples.

    samples must hold f(l h~) exactly for l = -N'..2N'-1.  Per sample index k,

      out_l = sum_{k=-N'+1}^{N'} h~ f((l-k)h~) G_r(k)
            - sum_{k=-N'+1}^{N'} h~ f(k h~) G_r(-k) + H_{l,N'},

    with H the two-case tail correction.  The first term is a discrete
    convolution: the kernel is zero-extended onto a 4N' circle and one
    forward/inverse FFT pair evaluates every l at once; outputs at l <= 0
    would touch the unavailable quarter of the circle and are discarded.
    H is accumulated with running prefix sums in O(N').
    """
    n = cfg.n_prime
    if len(samples) != 3 * n or samples.offset != -n:
        raise ValueError(
            f"need exactly 3N' = {3 * n} samples at l = {-n}..{2 * n - 1}; "
            f"got {len(samples)} at offset {samples.offset}"
        )
    if table.n_prime != n or table.r != cfg.r:
        raise ValueError(
            f"kernel table (N'={table.n_prime}, r={table.r}) does not match "
            f"config (N'={n}, r={cfg.r})"
        )
    h = cfg.h_tilde
    big = 4 * n
    f = samples.values

    u = np.zeros(big, dtype=complex)
    u[np.arange(-n, 2 * n) % big] = f
    ker = np.zeros(big, dtype=complex)
    k_idx = np.arange(-n + 1, n + 1)
    ker[k_idx % big] = table.signed(k_idx)
    conv = fft_array(fft_array(u) * fft_array(ker), "inverse")
    ell = np.arange(1, n + 1)
    s1 = h * conv[ell]

    s2 = h * np.sum(f[k_idx + n] * table.signed(-k_idx))

    # H_{l,N'}: zero for l = 1; G_r is odd so both tail sums carry +G_r(N')
    tail_hi = np.concatenate(([0.0 + 0j], np.cumsum(f[np.arange(n + 1, 2 * n) + n])))
    tail_lo = np.concatenate(([0.0 + 0j], np.cumsum(f[np.arange(-n + 1, 0) + n])))
    h_corr = table.g[n] * h * (tail_hi[ell - 1] + tail_lo[ell - 1])

    return ComplexSeries(1, s1 - s2 + h_corr, h)


def negative_extension(values: ComplexSeries, kind: str) -> ComplexSeries:
    """Extend a series given at l = 1..N' to l = -N'+1..N' by symmetry.

    kind "conjugate-odd" applies f(-l) = -conj(f(l)) (the symmetry of
    integral_0^eta of a transform with f(-zeta) = conj(f(zeta))); kind "even"
    applies f(-l) = f(l).  Both set the l = 0 value to 0: each kind arises
    here for indefinite integrals from the origin, which vanish there.
    """
    n = len(values)
    if values.offset != 1:
        raise ValueError(f"input must cover l = 1..N' (offset 1), got {values.offset}")
    v = values.values
    if kind == "conjugate-odd":
        head = -np.conj(v[n - 2 :: -1])
    elif kind == "even":
        head = v[n - 2 :: -1]
    else:
        raise ValueError(f"unknown extension kind {kind!r}")
    full = np.concatenate((head, [0.0 + 0j], v))
    return ComplexSeries(-n + 1, full, values.spacing)
