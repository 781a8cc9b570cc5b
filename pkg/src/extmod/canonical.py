"""Analytic moduli of the symmetric slit frame.

The exterior of two horizontal collinear slits maps conformally onto the
exterior of two equal vertical slits joined by a horizontal crossbar; the
map is an incomplete-elliptic-integral antiderivative with a zero of the
integrand at 1/lambda.  Fixing the frame geometry (half-width H*alpha,
slit half-height beta) pins the elliptic modulus k through an aspect
equation, and the marked-point height sigma pins a second parameter mu.
The modulus of the marked frame is then K(k/mu)/K'(k/mu), which grows like
(1/pi) log(1/(1-k)) ~ (1/pi) log H.

All solvers work in s = log(1/(1-k)) so that the near-degenerate regime
k -> 1 is uniformly resolved, and track (k, k') jointly to avoid
cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from . import elliptic as el

SCAN_LO = math.log(2.0)
SCAN_HI = 60.0
# Below this k', the difference E(x,k') - (E'/K')F(x,k') is evaluated by its
# k'^2-order asymptote instead of by cancellation-prone subtraction.
_TINY_KP = 1e-6


class BracketError(RuntimeError):
    """No sign change found while scanning for a solver bracket."""


@dataclass(frozen=True)
class SlitParameters:
    """Solved parameter tuple of the slit frame at one stretch factor.

    mu and sigma are None until the marked-point equation has been solved.
    """

    H: float
    alpha: float
    beta: float
    k: float
    k_prime: float
    lam: float
    ell: float
    ell_prime: float
    C: float
    sigma: float | None = None
    mu: float | None = None

    def __post_init__(self):
        if not (0.0 < self.k < 1.0 and 0.0 < self.k_prime < 1.0):
            raise ValueError("k and k' must lie in (0,1)")
        if not (self.k < self.lam < 1.0):
            raise ValueError(f"ordering violated: k={self.k}, lam={self.lam}")
        if self.mu is not None and not (self.lam <= self.mu < 1.0):
            raise ValueError(f"ordering violated: lam={self.lam}, mu={self.mu}")
        if abs(self.ell ** 2 + self.ell_prime ** 2 - 1.0) > 1e-12:
            raise ValueError("ell^2 + ell'^2 != 1")
        if self.C == 0.0:
            raise ValueError("scale C must be nonzero")

    @property
    def one_minus_k(self) -> float:
        """1 - k computed from k' without cancellation."""
        return self.k_prime ** 2 / (1.0 + self.k)

    @property
    def r1(self) -> float:
        """(1 - lambda)/(1 - k)."""
        return (1.0 - self.lam) / self.one_minus_k

    @property
    def r2(self) -> float:
        """(1 - mu)/(1 - k)."""
        if self.mu is None:
            raise ValueError("mu not solved yet")
        return (1.0 - self.mu) / self.one_minus_k


def lambda_from_k(k: float) -> float:
    """The integrand zero 1/lambda: lambda = k sqrt(K'(k)/E'(k))."""
    Kp = el.complete_K_prime(k)
    Ep = el.complete_E_prime(k)
    lam = k * math.sqrt(Kp / Ep)
    if not (k < lam < 1.0):
        raise ValueError(f"lambda = {lam} escaped (k, 1) at k = {k}")
    return lam


def _k_minus_e(kp: float, Kp: float, Ep: float) -> float:
    """K(k') - E(k'), switching to the difference series for small k'."""
    if kp < 0.05:
        return el._k_minus_e_series_raw(kp)
    return Kp - Ep


def _ell_pair(kp: float, Kp: float, KmE: float):
    """(ell, ell') from the stable quotient forms.

    ell'^2 = (K' - E')/(k'^2 K') and ell^2 = 1 - ell'^2; both tend to 1/2
    as k' -> 0.
    """
    lp2 = KmE / (kp * kp * Kp)
    lp2 = min(max(lp2, 0.0), 1.0)
    return math.sqrt(1.0 - lp2), math.sqrt(lp2)


def _second_relation(x: float, kp: float, Kp: float, KmE: float) -> float:
    """E(x, k') - (E'/K') F(x, k'), stable down to k' = 0.

    Direct subtraction loses ~k'^-2 digits, so for tiny k' the difference
    is assembled from the binomial series:
        (KmE/K') F(x,k') - sum_{n>=1} c_n (2n/(2n-1)) k'^(2n) I_{2n}(x),
    whose two parts stay comparable (the limit is (KmE/K')(I0 - 2 I2)).
    """
    if kp >= _TINY_KP:
        Ep = Kp - KmE
        return el.incomplete_E(x, kp) - (Ep / Kp) * el.incomplete_F(x, kp)
    if x == 0.0:
        return 0.0
    # three series terms are ample below the switchover
    vals = el._i2n_table(3, x)
    F = vals[0]
    tail = 0.0
    c = 1.0
    kpow = 1.0
    for n in range(1, 4):
        c *= (2 * n - 1) / (2 * n)
        kpow *= kp * kp
        F += c * kpow * vals[n]
        tail += c * (2.0 * n / (2 * n - 1)) * kpow * vals[n]
    return (KmE / Kp) * F - tail


def _core(kp: float):
    """All aspect-equation ingredients as functions of k' alone."""
    k2 = (1.0 - kp) * (1.0 + kp)
    k = math.sqrt(k2)
    K = el.complete_K_pair(k, kp)
    E = el.complete_E_pair(k, kp)
    Kp = el.complete_K_pair(kp, k)
    Ep = el.complete_E_pair(kp, k)
    KmE = _k_minus_e(kp, Kp, Ep)
    ell, ellp = _ell_pair(kp, Kp, KmE)
    lam = k * math.sqrt(Kp / (Kp - KmE))
    # numerator of the aspect: E(k) - (1 - k^2/lam^2) K(k), with
    # k^2/lam^2 = E'/K'.
    num = E - K * KmE / Kp
    den = _second_relation(ellp, kp, Kp, KmE)
    return dict(k=k, k2=k2, kp=kp, K=K, E=E, Kp=Kp, Ep=Ep, KmE=KmE,
                ell=ell, ellp=ellp, lam=lam, num=num, den=den)


def aspect_of_modulus(kp: float) -> float:
    """The frame aspect H*alpha/beta produced by a given complement k'."""
    c = _core(kp)
    return c["num"] / c["den"]


def _kp_from_s(s: float) -> float:
    e = math.exp(-s)
    return math.sqrt(e * (2.0 - e))


def solve_modulus_for_aspect(H: float, alpha: float, beta: float,
                             scan_points: int = 121) -> SlitParameters:
    """Solve the aspect equation for k at stretch H and geometry (alpha, beta).

    Scans s = log(1/(1-k)) over [log 2, 60] for a bracket and polishes with
    a bracketed secant/bisection solver; raises BracketError if the target
    aspect is outside the scanned range.
    """
    if H <= 0 or alpha <= 0 or beta <= 0:
        raise ValueError("H, alpha, beta must be positive")
    target = math.log(H * alpha / beta)

    def g(s: float) -> float:
        return math.log(aspect_of_modulus(_kp_from_s(s))) - target

    grid = np.linspace(SCAN_LO, SCAN_HI, scan_points)
    g_prev = g(grid[0])
    s_root = None
    if g_prev == 0.0:
        s_root = grid[0]
    elif g_prev > 0.0:
        raise BracketError(
            f"aspect {H * alpha / beta:.6g} below the scanned range "
            f"(s in [{SCAN_LO:.3f}, {SCAN_HI:.1f}], g({SCAN_LO:.3f}) = "
            f"{g_prev:.3g} > 0)")
    else:
        for i in range(1, len(grid)):
            g_next = g(grid[i])
            if g_next >= 0.0:
                s_root = brentq(g, grid[i - 1], grid[i],
                                xtol=1e-13, rtol=1e-15)
                break
            g_prev = g_next
        if s_root is None:
            raise BracketError(
                f"aspect {H * alpha / beta:.6g} not bracketed on "
                f"s in [{SCAN_LO:.3f}, {SCAN_HI:.1f}] "
                f"(g stays below 0, last = {g_prev:.3g})")

    kp = _kp_from_s(s_root)
    c = _core(kp)
    resid = abs(c["num"] / c["den"] / (H * alpha / beta) - 1.0)
    if resid > 1e-10:
        raise RuntimeError(f"aspect residual {resid:.3e} above 1e-10")
    C = H * alpha * c["k2"] / c["num"]
    return SlitParameters(H=H, alpha=alpha, beta=beta, k=c["k"], k_prime=kp,
                          lam=c["lam"], ell=c["ell"], ell_prime=c["ellp"], C=C)


def slit_map_value(w: float, p: SlitParameters) -> complex:
    """The straightening map on [0, 1]: (C/k^2)[E(w,k) - (1-k^2/lam^2)F(w,k)].

    Real on [0, 1]; its value at 1 is the frame half-width H*alpha.
    """
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"w = {w} outside [0, 1]")
    k, kp = p.k, p.k_prime
    Kp = el.complete_K_pair(kp, k)
    Ep = el.complete_E_pair(kp, k)
    KmE = _k_minus_e(kp, Kp, Ep)
    if w == 0.0:
        return 0.0 + 0.0j
    val = (p.C / (k * k)) * (el.incomplete_E(w, k)
                             - (KmE / Kp) * el.incomplete_F(w, k))
    return complex(val, 0.0)


def height_on_slit(t: float, p: SlitParameters) -> float:
    """Height above the slit base of the image of t in [1, 1/lambda].

    Follows the pattern of the half-width relation with lambda replaced by
    1/t: height = (C/k^2)[E(s', k') - (k^2/lam^2) F(s', k')] with
    s' = sqrt(1 - (k^2/k'^2)(t^2 - 1)); equals 0 at t = 1 and beta at
    t = 1/lambda.
    """
    inv_lam = 1.0 / p.lam
    if not (1.0 <= t <= inv_lam):
        raise ValueError(f"t = {t} outside [1, 1/lambda] = [1, {inv_lam}]")
    k, kp = p.k, p.k_prime
    k2 = k * k
    sp2 = 1.0 - (k2 / (kp * kp)) * (t * t - 1.0)
    sp = math.sqrt(min(max(sp2, 0.0), 1.0))
    Kp = el.complete_K_pair(kp, k)
    Ep = el.complete_E_pair(kp, k)
    KmE = _k_minus_e(kp, Kp, Ep)
    return (p.C / k2) * _second_relation(sp, kp, Kp, KmE)


def solve_mu_for_sigma(p: SlitParameters, sigma: float) -> SlitParameters:
    """Find mu in (lambda, 1) whose slit image sits at height sigma.

    Solves height(1/mu) = sigma; at sigma = beta the answer is the slit tip
    preimage mu = lambda.
    """
    if not (0.0 < sigma <= p.beta):
        raise ValueError(f"sigma = {sigma} outside (0, beta = {p.beta}]")
    gap_top = 1.0 / p.lam - 1.0
    if sigma == p.beta or sigma >= p.beta * (1.0 - 1e-15):
        return replace(p, sigma=sigma, mu=p.lam)

    def f(u: float) -> float:
        return height_on_slit(1.0 + math.exp(u), p) - sigma

    u_hi = math.log(gap_top)
    u_lo = u_hi - 45.0
    f_hi = p.beta - sigma  # height at the tip
    if f(u_lo) > 0.0:
        raise BracketError(
            f"sigma = {sigma} not bracketed on the slit (heights "
            f"[{f(u_lo) + sigma:.3e}, {p.beta}])")
    assert f_hi > 0.0
    u_root = brentq(f, u_lo, u_hi, xtol=1e-14, rtol=1e-15)
    t = 1.0 + math.exp(u_root)
    resid = abs(height_on_slit(t, p) / sigma - 1.0)
    if resid > 1e-10:
        raise RuntimeError(f"height residual {resid:.3e} above 1e-10")
    return replace(p, sigma=sigma, mu=1.0 / t)


def modulus_symmetric_frame(p: SlitParameters) -> float:
    """K(k/mu)/K'(k/mu), the modulus of the marked symmetric frame."""
    if p.mu is None:
        raise ValueError("mu not solved yet")
    # 1 - k/mu = (mu - k)/mu with mu - k = (1-k) - (1-mu), free of
    # catastrophic cancellation since both gaps stay comparable.
    mu_minus_k = p.one_minus_k - (1.0 - p.mu)
    mc = mu_minus_k / p.mu
    m = p.k / p.mu
    mprime = math.sqrt(mc * (1.0 + m))
    K = el.complete_K_pair(m, mprime)
    Kprime = el.complete_K(mprime)
    return K / Kprime


def log_asymptote(p: SlitParameters) -> float:
    """(1/pi) log(1/(1-k)), the closed-form asymptotic proxy."""
    return math.log(1.0 / p.one_minus_k) / math.pi


def delta_ratios(H_list, alpha: float, beta: float, sigma: float):
    """Per-H gap ratios r1 = (1-lambda)/(1-k), r2 = (1-mu)/(1-k)."""
    out = []
    for H in H_list:
        p = solve_mu_for_sigma(solve_modulus_for_aspect(H, alpha, beta), sigma)
        out.append((p.r1, p.r2))
    return out


def zeta_by_contour(t: float, p: SlitParameters, rise: float = 0.75) -> complex:
    """Quadrature oracle for the slit map at t > 1.

    Integrates C (1/lam^2 - tau^2)/sqrt((1-tau^2)(1-k^2 tau^2)) along the
    rectangle 0 -> i*rise -> t + i*rise -> t, which stays in the upper
    half-plane where the principal-branch square roots continue the real
    integrand analytically.
    """
    k, lam, C = p.k, p.lam, p.C

    def f(tau: complex) -> complex:
        root = (np.sqrt(1.0 - tau) * np.sqrt(1.0 + tau)
                * np.sqrt(1.0 - k * tau) * np.sqrt(1.0 + k * tau))
        return (1.0 / lam ** 2 - tau * tau) / root

    legs = [(0.0, 1j * rise), (1j * rise, t + 1j * rise), (t + 1j * rise, t)]
    total = 0.0 + 0.0j
    for a, b in legs:
        val, _ = quad(lambda s, a=a, b=b: f(a + (b - a) * s) * (b - a),
                      0.0, 1.0, epsabs=1e-12, epsrel=1e-12, limit=400,
                      complex_func=True)
        total += val
    return C * total
