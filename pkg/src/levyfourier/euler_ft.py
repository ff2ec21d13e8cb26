"""Step 3: inverse Fourier transform on x in [x_l, x_u] by the continuous
Euler transform.

The integrand e^{t G(w)} e^{ixw} decays slowly in w; multiplying by the
complementary-error-function weight w_{p,q}(|w|) turns the truncated trapezoid
sum into one with error O(e^{-c sqrt(N)}) uniformly over the target window.
The sum over l = -N+1..N at all outputs x = n h^ is a fractional FFT with
delta = h~ h^."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .numkit import ComplexSeries, erfc, frft


@dataclass(frozen=True)
class EulerParams:
    """Weight shape (p, q), frequency step h~, and target window [x_l, x_u].

    Built by from_theorem; direct construction must satisfy the same coupling
      h~ = sqrt(2 pi d (x_l + x_u) / (x_l^2 N)),
      p  = sqrt(N h~ / x_l),  q = sqrt(x_l N h~ / 4)
    for some admissible (x_l, x_u, d, N).
    """

    n: int
    x_l: float
    x_u: float
    d: float
    h_tilde: float
    p: float
    q: float

    def __post_init__(self):
        if self.n < 2 or self.n & (self.n - 1):
            raise ValueError(f"n = {self.n} must be a power of two >= 2")
        if not (0 < self.x_l < self.x_u):
            raise ValueError("need 0 < x_l < x_u")
        if self.x_l / self.x_u > 0.5:
            raise ValueError("need x_l / x_u <= 1/2")
        if not self.d > 0:
            raise ValueError("d must be positive")
        for name, ref in (("h_tilde", self._h_tilde_ref()),
                          ("p", math.sqrt(self.n * self.h_tilde / self.x_l)
                           if self.h_tilde > 0 else float("nan")),
                          ("q", math.sqrt(self.x_l * self.n * self.h_tilde / 4)
                           if self.h_tilde > 0 else float("nan"))):
            got = getattr(self, name)
            if not (math.isfinite(got) and math.isclose(got, ref, rel_tol=1e-12)):
                raise ValueError(f"{name} = {got} inconsistent with parameters "
                                 f"(expected {ref})")

    def _h_tilde_ref(self) -> float:
        return math.sqrt(2 * math.pi * self.d * (self.x_l + self.x_u)
                         / (self.x_l**2 * self.n))

    @classmethod
    def from_theorem(cls, n: int, x_l: float, x_u: float, d: float = 1.0) -> "EulerParams":
        """Derive (h~, p, q) from (N, x_l, x_u, d)."""
        h_tilde = math.sqrt(2 * math.pi * d * (x_l + x_u) / (x_l**2 * n))
        p = math.sqrt(n * h_tilde / x_l)
        q = math.sqrt(x_l * n * h_tilde / 4)
        return cls(n, x_l, x_u, d, h_tilde, p, q)


def weight(xi, params: EulerParams) -> np.ndarray:
    """Euler weight w(xi) = erfc(xi/p - q) / 2 (xi >= 0)."""
    return 0.5 * erfc(np.asarray(xi, dtype=float) / params.p - params.q)


def inverse_ft(exponent: ComplexSeries, t: float, params: EulerParams,
               h_hat: float) -> ComplexSeries:
    """Density values p(n h^, t), n = -N+1..N, from exponent samples G(l h~).

    exponent must cover l = -N+1..N at spacing params.h_tilde, and h^ N = x_u
    so the grid reaches the right edge of the guaranteed window.  Outputs with
    |n h^| < x_l carry no accuracy guarantee.
    """
    n = params.n
    if len(exponent) != 2 * n or exponent.offset != -n + 1:
        raise ValueError(f"exponent must cover l = {-n + 1}..{n}; got "
                         f"{len(exponent)} values at offset {exponent.offset}")
    if not math.isclose(exponent.spacing, params.h_tilde, rel_tol=1e-12):
        raise ValueError(f"exponent spacing {exponent.spacing} != h~ = {params.h_tilde}")
    if not math.isclose(h_hat * n, params.x_u, rel_tol=1e-12):
        raise ValueError(f"h_hat * N = {h_hat * n} must equal x_u = {params.x_u}")
    if not (math.isfinite(t) and t >= 0):
        raise ValueError("t must be a finite non-negative number")
    ell = np.arange(-n + 1, n + 1)
    with np.errstate(over="ignore"):   # overflow is rejected explicitly below
        amp = np.exp(t * exponent.values)
    if not np.all(np.isfinite(amp)):
        bad = int(ell[~np.isfinite(amp)][0])
        raise ValueError(f"exp(t G) not finite at l = {bad}")
    peak = np.max(np.abs(amp))
    if peak > 1 + 1e-6:
        warnings.warn(f"|exp(t G)| reaches {peak}; exponent has positive real "
                      "part, result is unreliable", RuntimeWarning, stacklevel=2)
    coeff = weight(np.abs(ell) * params.h_tilde, params) * amp
    series = ComplexSeries(-n + 1, coeff, params.h_tilde)
    spectrum = frft(series, params.h_tilde * h_hat)
    vals = (params.h_tilde / (2 * np.pi)) * spectrum.values
    return ComplexSeries(-n + 1, vals, h_hat)
