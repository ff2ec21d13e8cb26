"""Step 1 front half: double-exponential formula for the one-sided Fourier
transform integral_0^inf mu(y) e^{-i zeta y} dy.

The variable change y = P*phi(t) concentrates the integrand so that a
trapezoidal sum over t = j*h converges double-exponentially; the output is a
set of weighted point sources (weights, points) that the nufft module turns
into uniform-frequency samples."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_BETA = 0.25
# |E| beyond this, phi and its companions sit on their asymptotes to < 1e-200
_E_ASYMP = 500.0
# below this |t| the direct quotient loses digits to cancellation; use series
_T_SERIES = 1e-3


def _alpha_for(zeta0: float, h: float) -> float:
    return _BETA / math.sqrt(1 + math.log(1 + math.pi / (zeta0 * h)) / (4 * zeta0 * h))


@dataclass(frozen=True)
class DeFtParams:
    """Tuned constants of one DE-transform run.

    alpha is derived from (zeta0, h); beta is fixed at 0.25.  m_minus + m_plus
    must be a power of two (the downstream FFT length).
    """

    zeta0: float
    h: float
    m_minus: int
    m_plus: int
    beta: float = _BETA
    alpha: float = field(default=None)

    def __post_init__(self):
        if not (self.zeta0 > 0 and self.h > 0):
            raise ValueError("zeta0 and h must be positive")
        m = self.m_minus + self.m_plus
        if self.m_minus <= 0 or self.m_plus <= 0 or (m & (m - 1)) != 0:
            raise ValueError(f"m_minus + m_plus = {m} must be a power of two")
        expected = _alpha_for(self.zeta0, self.h)
        if self.alpha is None:
            object.__setattr__(self, "alpha", expected)
        elif not math.isclose(self.alpha, expected, rel_tol=1e-12):
            raise ValueError(f"alpha {self.alpha} != derived value {expected}")

    @property
    def m(self) -> int:
        return self.m_minus + self.m_plus

    @property
    def point_scale(self) -> float:
        """P = pi / (zeta0 * h), the scale of the source points y_j = P*phi(jh)."""
        return math.pi / (self.zeta0 * self.h)


@dataclass(frozen=True, eq=False)
class DeSources:
    """Weighted point sources of one DE run: weights Phi_j and strictly
    increasing points y_j for j = -m_minus..m_plus-1."""

    weights: np.ndarray
    points: np.ndarray
    params: DeFtParams

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=complex)
        y = np.ascontiguousarray(self.points, dtype=float)
        if len(w) != len(y) or len(w) != self.params.m:
            raise ValueError("weights/points length must equal m_minus + m_plus")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(np.diff(y) <= 0):
            raise ValueError("points must be strictly increasing")
        w.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "points", y)


def phi_parts(t, alpha: float, beta: float):
    """phi(t) = t / (1 - exp(-2t - alpha(1-e^{-t}) - beta(e^t-1))) together
    with phihat(t) = phi(t) - t and the derivative phi'(t).

    Evaluated branch-wise so that both tails stay exact down to underflow:
    with E(t) the exponent above, phi -> t and phihat -> 0 double-exponentially
    as t -> +inf, while phi, phi' -> 0 and phihat -> -t as t -> -inf.
    Returns (phi, phihat, dphi) as arrays of the shape of t.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        E = 2 * t + alpha * (-np.expm1(-t)) + beta * np.expm1(t)
        Ep = 2 + alpha * np.exp(-t) + beta * np.exp(t)
        # on the working band |E| <= 500 both expm1 forms are exact, so
        # t/dd and t/em are stable for either sign of E; only the derivative
        # needs sign-split scaling (dd^2 overflows for E << 0, so the E < 0
        # lane is rewritten with v = e^E < 1 and em in (-1, 0))
        dd = -np.expm1(-E)                   # 1 - e^{-E}
        em = np.expm1(E)                     # e^{E} - 1
        u = np.exp(-E)
        v = np.exp(E)
        tEp = t * Ep
        phi = t / dd
        phihat = t / em
        dphi = np.where(E > 0, (dd - tEp * u) / dd**2,
                        v * (v - 1 - tEp) / em**2)

    hi = E > _E_ASYMP
    lo = E < -_E_ASYMP
    phi[hi], phihat[hi], dphi[hi] = t[hi], 0.0, 1.0
    phi[lo], phihat[lo], dphi[lo] = 0.0, -t[lo], 0.0

    ser = np.abs(t) < _T_SERIES
    if np.any(ser):
        # Taylor coefficients of D(t) = 1 - e^{-E(t)} = c1 t + c2 t^2 + ...
        e1 = 2 + alpha + beta
        e2 = (beta - alpha) / 2
        e3 = (alpha + beta) / 6
        e4 = (beta - alpha) / 24
        c1 = e1
        c2 = e2 - e1**2 / 2
        c3 = e3 - e1 * e2 + e1**3 / 6
        c4 = e4 - e2**2 / 2 - e1 * e3 + e1**2 * e2 / 2 - e1**4 / 24
        ts = t[ser]
        # alpha may carry a broadcast axis (stacked runs); align per element
        c1, c2, c3, c4 = (np.broadcast_to(ci, t.shape)[ser]
                          for ci in (c1, c2, c3, c4))
        w = c1 + ts * (c2 + ts * (c3 + ts * c4))      # D(t)/t
        dw = c2 + ts * (2 * c3 + ts * 3 * c4)
        phi[ser] = 1.0 / w
        phihat[ser] = 1.0 / w - ts
        dphi[ser] = -dw / w**2
    return phi, phihat, dphi


def phi(t, alpha: float, beta: float):
    """The DE variable change phi(t); scalar in, scalar out (arrays pass through)."""
    out = phi_parts(t, alpha, beta)[0]
    return float(out[0]) if np.ndim(t) == 0 else out


def build_sources(mu, params: DeFtParams) -> DeSources:
    """Evaluate the DE weights and points for a density mu on (0, inf).

    weights_j = -(2 pi i / zeta0) mu(y_j) sin((pi/2h) phihat(jh)) phi'(jh)
                * exp((i pi/2h) phihat(jh)),  y_j = (pi/(zeta0 h)) phi(jh).

    Raises on non-finite mu values, naming the offending j and y_j.
    """
    j = np.arange(-params.m_minus, params.m_plus)
    ph, phat, dph = phi_parts(j * params.h, params.alpha, params.beta)
    y = params.point_scale * ph
    mu_vals = np.asarray(mu(y), dtype=float)
    bad = np.flatnonzero(~np.isfinite(mu_vals))
    if bad.size:
        i = bad[0]
        raise ValueError(
            f"mu returned non-finite value {mu_vals[i]} at j={j[i]}, y={y[i]!r}"
        )
    s = (np.pi / (2 * params.h)) * phat
    weights = (-2j * np.pi / params.zeta0) * mu_vals * np.sin(s) * dph * np.exp(1j * s)
    return DeSources(weights, y, params)


def _sources_stacked(mu, params_a: DeFtParams, params_b: DeFtParams):
    """build_sources for two runs sharing (h, m) in one vectorized pass.

    Returns (weights, points) of shape (2, m); row r reproduces
    build_sources(mu, params_r) element for element.
    """
    if params_a.h != params_b.h or params_a.m != params_b.m \
            or params_a.m_minus != params_b.m_minus or params_a.beta != params_b.beta:
        raise ValueError("stacked runs must share h, m_minus/m_plus and beta")
    h = params_a.h
    t = np.broadcast_to(np.arange(-params_a.m_minus, params_a.m_plus) * h, (2, params_a.m))
    alpha = np.array([[params_a.alpha], [params_b.alpha]])
    ph, phat, dph = phi_parts(t, alpha, params_a.beta)
    scale = np.array([[params_a.point_scale], [params_b.point_scale]])
    y = scale * ph
    mu_vals = np.stack([np.asarray(mu(y[0]), dtype=float),
                        np.asarray(mu(y[1]), dtype=float)])
    bad = np.argwhere(~np.isfinite(mu_vals))
    if bad.size:
        r, i = bad[0]
        raise ValueError(f"mu returned non-finite value {mu_vals[r, i]} at "
                         f"j={i - params_a.m_minus}, y={y[r, i]!r}")
    s = (np.pi / (2 * h)) * phat
    zeta0 = np.array([[params_a.zeta0], [params_b.zeta0]])
    weights = (-2j * np.pi / zeta0) * mu_vals * np.sin(s) * dph * np.exp(1j * s)
    return weights, y


def splice_plan(n_gamma: int, h_tilde: float):
    """Two DE runs whose valid frequency windows are stitched together.

    Run A uses zeta0 = N_gamma*h_tilde/15 and covers k = 0..floor(N_gamma/8);
    run B uses zeta0 = N_gamma*h_tilde/1.8 and covers the rest up to N_gamma.
    Both carry h = log(1e3*M)/M and M_minus = M_plus = M/2 with M = 2*N_gamma.
    Returns ((params_a, range_a), (params_b, range_b)).
    """
    if n_gamma < 8:
        raise ValueError("n_gamma must be at least 8")
    m = 2 * n_gamma
    h = math.log(1e3 * m) / m
    split = n_gamma // 8
    run_a = DeFtParams(n_gamma * h_tilde / 15.0, h, m // 2, m // 2)
    run_b = DeFtParams(n_gamma * h_tilde / 1.8, h, m // 2, m // 2)
    return (run_a, range(0, split + 1)), (run_b, range(split + 1, n_gamma + 1))
