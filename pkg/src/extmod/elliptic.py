"""Real elliptic integrals of the first and second kinds.

Reference values for K(k) and E(k) come from the arithmetic-geometric mean
iteration, which converges quadratically and is accurate to machine
precision on the whole open interval 0 < k < 1.  Incomplete integrals are
evaluated through Carlson symmetric forms (duplication algorithm).  The
binomial-series expansions (small modulus, large modulus, and the
incomplete-integral series built on the I_{2n} recursion) are provided as
independent cross-checks; an adaptive-quadrature oracle based on the
sine substitution is exposed for validation.

Conventions: k is the modulus, k' = sqrt(1 - k^2) the complementary
modulus, K'(k) = K(k'), E'(k) = E(k').
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from scipy.integrate import quad

# Moduli closer to the endpoints than this are clamped (with a warning)
# instead of rejected; root finders probe extreme parameter values.
DEGENERATE_CLAMP = 1e-12

# Series are restricted to regimes where the term ratio is <= 0.25.
SMALL_K_CUTOFF = 0.5
LARGE_KPRIME_CUTOFF = 0.5


class EllipticDomainError(ValueError):
    """Argument outside the domain of an elliptic-integral routine."""


class SeriesConvergenceError(RuntimeError):
    """A truncated series failed to meet its tail tolerance."""


@dataclass(frozen=True)
class EllipticModulusPair:
    """A modulus k and its complement k', both strictly inside (0, 1)."""

    k: float
    k_prime: float

    def __post_init__(self):
        if not (0.0 < self.k < 1.0 and 0.0 < self.k_prime < 1.0):
            raise EllipticDomainError(
                f"modulus pair ({self.k}, {self.k_prime}) not inside (0,1)")
        resid = abs(self.k * self.k + self.k_prime * self.k_prime - 1.0)
        if resid > 8.0 * math.ulp(1.0):
            raise EllipticDomainError(
                f"k^2 + k'^2 - 1 = {resid:.3e} exceeds ulp-scale tolerance")

    @classmethod
    def from_k(cls, k: float) -> "EllipticModulusPair":
        k = _validated_modulus(k)
        return cls(k, complementary_modulus(k))

    @classmethod
    def from_k_prime(cls, k_prime: float) -> "EllipticModulusPair":
        k_prime = _validated_modulus(k_prime)
        return cls(complementary_modulus(k_prime), k_prime)


@dataclass(frozen=True)
class SeriesTruncation:
    """Truncation policy for the series expansions."""

    max_terms: int = 64
    tail_tolerance: float = 1e-14

    def __post_init__(self):
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")
        if not self.tail_tolerance > 0.0:
            raise ValueError("tail_tolerance must be positive")


def _validated_modulus(k: float) -> float:
    """Check k is in (0,1); clamp near-degenerate values with a warning."""
    k = float(k)
    if math.isnan(k) or k <= 0.0 or k >= 1.0:
        raise EllipticDomainError(f"modulus {k!r} outside the open interval (0,1)")
    if k < DEGENERATE_CLAMP:
        warnings.warn(
            f"modulus {k:.3e} clamped to {DEGENERATE_CLAMP:.0e}", RuntimeWarning)
        return DEGENERATE_CLAMP
    return k


def complementary_modulus(k: float) -> float:
    """k' = sqrt((1-k)(1+k)), written to avoid cancellation near k = 1."""
    return math.sqrt((1.0 - k) * (1.0 + k))


def _agm_with_sum(a: float, b: float, c0_sq: float):
    """AGM(a, b) together with sum(2^(n-1) c_n^2) starting from c_0^2.

    The running sum is the correction series that turns K into E.
    """
    csum = 0.5 * c0_sq
    pow2 = 0.5
    for _ in range(64):
        c = 0.5 * (a - b)
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        pow2 *= 2.0
        csum += pow2 * c * c
        if abs(c) <= 0.5 * math.ulp(a):
            break
    return a, csum


def _complete_K_from_kp(kp: float) -> float:
    agm, _ = _agm_with_sum(1.0, kp, 0.0)
    return 0.5 * math.pi / agm


def _complete_E_from_pair(k: float, kp: float) -> float:
    agm, csum = _agm_with_sum(1.0, kp, k * k)
    K = 0.5 * math.pi / agm
    return K * (1.0 - csum)


def complete_K(k: float) -> float:
    """Complete elliptic integral of the first kind, K(k) = F(1, k)."""
    k = _validated_modulus(k)
    return _complete_K_from_kp(complementary_modulus(k))


def complete_E(k: float) -> float:
    """Complete elliptic integral of the second kind, E(k) = E(1, k)."""
    k = _validated_modulus(k)
    return _complete_E_from_pair(k, complementary_modulus(k))


def complete_K_from_complement(k_prime: float) -> float:
    """K evaluated from the complementary modulus, for k known via k'.

    Equals complete_K(sqrt(1 - k_prime^2)) but keeps full precision when
    k' is tiny (k indistinguishable from 1 in double precision).
    """
    k_prime = _validated_modulus(k_prime)
    return _complete_K_from_kp(k_prime)


def complete_K_pair(k: float, k_prime: float) -> float:
    """K for a jointly tracked (k, k') pair; stable when k rounds to 1."""
    return _complete_K_from_kp(k_prime)


def complete_E_pair(k: float, k_prime: float) -> float:
    """E for a jointly tracked (k, k') pair; stable when k rounds to 1."""
    return _complete_E_from_pair(k, k_prime)


def complete_K_prime(k: float) -> float:
    """K'(k) = K(k')."""
    k = _validated_modulus(k)
    return _complete_K_from_kp(k)


def complete_E_prime(k: float) -> float:
    """E'(k) = E(k')."""
    k = _validated_modulus(k)
    kp = complementary_modulus(k)
    return _complete_E_from_pair(kp, k)


def _carlson_rf(x: float, y: float, z: float) -> float:
    """Carlson symmetric integral R_F by duplication; args >= 0, one may be 0."""
    for _ in range(200):
        lam = math.sqrt(x) * math.sqrt(y) + math.sqrt(y) * math.sqrt(z) \
            + math.sqrt(z) * math.sqrt(x)
        x, y, z = 0.25 * (x + lam), 0.25 * (y + lam), 0.25 * (z + lam)
        mu = (x + y + z) / 3.0
        if max(abs(x - mu), abs(y - mu), abs(z - mu)) <= 1e-9 * mu:
            break
    X = 1.0 - x / mu
    Y = 1.0 - y / mu
    Z = -(X + Y)
    e2 = X * Y - Z * Z
    e3 = X * Y * Z
    return (1.0 + (e2 * (e2 / 24.0 - 0.1 - 3.0 * e3 / 44.0) + e3 / 14.0)) \
        / math.sqrt(mu)


def _carlson_rd(x: float, y: float, z: float) -> float:
    """Carlson symmetric integral R_D by duplication; z > 0 required."""
    acc = 0.0
    fac = 1.0
    for _ in range(200):
        lam = math.sqrt(x) * math.sqrt(y) + math.sqrt(y) * math.sqrt(z) \
            + math.sqrt(z) * math.sqrt(x)
        acc += fac / (math.sqrt(z) * (z + lam))
        fac *= 0.25
        x, y, z = 0.25 * (x + lam), 0.25 * (y + lam), 0.25 * (z + lam)
        mu = (x + y + 3.0 * z) / 5.0
        if max(abs(x - mu), abs(y - mu), abs(z - mu)) <= 1e-9 * mu:
            break
    X = (mu - x) / mu
    Y = (mu - y) / mu
    Z = -(X + Y) / 3.0
    e2 = X * Y - 6.0 * Z * Z
    e3 = (3.0 * X * Y - 8.0 * Z * Z) * Z
    e4 = 3.0 * (X * Y - Z * Z) * Z * Z
    e5 = X * Y * Z * Z * Z
    series = (1.0 - 3.0 * e2 / 14.0 + e3 / 6.0 + 9.0 * e2 * e2 / 88.0
              - 3.0 * e4 / 22.0 - 9.0 * e2 * e3 / 52.0 + 3.0 * e5 / 26.0)
    return 3.0 * acc + fac * series / (mu * math.sqrt(mu))


def _validated_argument(x: float) -> float:
    x = float(x)
    if math.isnan(x) or x < 0.0 or x > 1.0:
        raise EllipticDomainError(f"argument {x!r} outside [0, 1]")
    return x


def incomplete_F(x: float, k: float) -> float:
    """F(x, k) = integral of 1/sqrt((1-t^2)(1-k^2 t^2)) over t in [0, x]."""
    x = _validated_argument(x)
    k = _validated_modulus(k)
    if x == 0.0:
        return 0.0
    return x * _carlson_rf((1.0 - x) * (1.0 + x), 1.0 - (k * x) ** 2, 1.0)


def incomplete_E(x: float, k: float) -> float:
    """E(x, k) = integral of sqrt((1-k^2 t^2)/(1-t^2)) over t in [0, x]."""
    x = _validated_argument(x)
    k = _validated_modulus(k)
    if x == 0.0:
        return 0.0
    p = (1.0 - x) * (1.0 + x)
    q = 1.0 - (k * x) ** 2
    return x * _carlson_rf(p, q, 1.0) \
        - (k * k * x ** 3 / 3.0) * _carlson_rd(p, q, 1.0)


def i2n(n: int, x: float) -> float:
    """I_{2n}(x) = integral of t^(2n)/sqrt(1-t^2), via the stable recursion.

    I_0(x) = arcsin x and
    I_{2n}(x) = (2n-1)/(2n) * I_{2(n-1)}(x) - x^(2n-1) sqrt(1-x^2)/(2n).
    """
    if n < 0 or int(n) != n:
        raise EllipticDomainError(f"order {n!r} must be a nonnegative integer")
    x = _validated_argument(x)
    return _i2n_table(int(n), x)[-1]


def _i2n_table(nmax: int, x: float):
    """I_0, I_2, ..., I_{2 nmax} as a list."""
    root = math.sqrt((1.0 - x) * (1.0 + x))
    vals = [math.asin(x)]
    xpow = x  # x^(2n-1) for n = 1
    for m in range(1, nmax + 1):
        vals.append(((2 * m - 1) * vals[-1] - xpow * root) / (2 * m))
        xpow *= x * x
    return vals


def _binomial_central(n: int) -> float:
    """(2n)! / (2^(2n) n!^2), the normalized central binomial coefficient."""
    c = 1.0
    for m in range(n):
        c *= (2 * m + 1) / (2 * m + 2)
    return c


def _series_sum(terms, trunc: SeriesTruncation, ratio_bound: float) -> float:
    """Sum a term generator with a geometric tail bound.

    ratio_bound must dominate |t_{n+1}/t_n| for all n; the tail after the
    last term t is bounded by |t| * r / (1 - r).
    """
    total = 0.0
    last = math.inf
    for i, t in enumerate(terms):
        total += t
        last = t
        if i + 1 >= trunc.max_terms:
            break
        tail = abs(last) * ratio_bound / (1.0 - ratio_bound)
        if tail <= trunc.tail_tolerance * abs(total):
            return total
    tail = abs(last) * ratio_bound / (1.0 - ratio_bound)
    if tail <= trunc.tail_tolerance * abs(total):
        return total
    raise SeriesConvergenceError(
        f"tail bound {tail:.3e} above tolerance after {trunc.max_terms} terms")


def series_F(x: float, k: float, trunc: SeriesTruncation = SeriesTruncation()) -> float:
    """Binomial series for F(x, k): sum of c_n k^(2n) I_{2n}(x)."""
    x = _validated_argument(x)
    k = _validated_modulus(k)
    if k > SMALL_K_CUTOFF:
        raise EllipticDomainError(
            f"series restricted to k <= {SMALL_K_CUTOFF}, got {k}")
    if x == 0.0:
        return 0.0
    table = _i2n_table(trunc.max_terms - 1, x)

    def terms():
        c = 1.0
        kpow = 1.0
        for n, Iv in enumerate(table):
            yield c * kpow * Iv
            c *= (2 * n + 1) / (2 * n + 2)
            kpow *= k * k

    return _series_sum(terms(), trunc, k * k)


def series_E(x: float, k: float, trunc: SeriesTruncation = SeriesTruncation()) -> float:
    """Binomial series for E(x, k): -sum of c_n k^(2n) I_{2n}(x)/(2n-1)."""
    x = _validated_argument(x)
    k = _validated_modulus(k)
    if k > SMALL_K_CUTOFF:
        raise EllipticDomainError(
            f"series restricted to k <= {SMALL_K_CUTOFF}, got {k}")
    if x == 0.0:
        return 0.0
    table = _i2n_table(trunc.max_terms - 1, x)

    def terms():
        c = 1.0
        kpow = 1.0
        for n, Iv in enumerate(table):
            yield -c * kpow * Iv / (2 * n - 1)
            c *= (2 * n + 1) / (2 * n + 2)
            kpow *= k * k

    return _series_sum(terms(), trunc, k * k)


def complete_K_small_series(k: float,
                            trunc: SeriesTruncation = SeriesTruncation()) -> float:
    """Small-modulus series (pi/2) sum of c_n^2 k^(2n)."""
    k = _validated_modulus(k)
    if k > SMALL_K_CUTOFF:
        raise EllipticDomainError(
            f"series restricted to k <= {SMALL_K_CUTOFF}, got {k}")

    def terms():
        c = 1.0
        kpow = 1.0
        n = 0
        while True:
            yield 0.5 * math.pi * c * c * kpow
            c *= (2 * n + 1) / (2 * n + 2)
            kpow *= k * k
            n += 1

    return _series_sum(terms(), trunc, k * k)


def complete_E_small_series(k: float,
                            trunc: SeriesTruncation = SeriesTruncation()) -> float:
    """Small-modulus series -(pi/2) sum of c_n^2 k^(2n)/(2n-1)."""
    k = _validated_modulus(k)
    if k > SMALL_K_CUTOFF:
        raise EllipticDomainError(
            f"series restricted to k <= {SMALL_K_CUTOFF}, got {k}")

    def terms():
        c = 1.0
        kpow = 1.0
        n = 0
        while True:
            yield -0.5 * math.pi * c * c * kpow / (2 * n - 1)
            c *= (2 * n + 1) / (2 * n + 2)
            kpow *= k * k
            n += 1

    return _series_sum(terms(), trunc, k * k)


def _k_minus_e_series_raw(k: float) -> float:
    """Unvalidated core of complete_K_minus_E_small; k may be denormal-tiny."""
    total = 0.0
    c = 1.0
    kpow = 1.0
    for n in range(1, 64):
        c *= (2 * n - 1) / (2 * n)
        kpow *= k * k
        t = 0.5 * math.pi * c * c * (2.0 * n / (2 * n - 1)) * kpow
        total += t
        if t <= 1e-17 * total:
            break
    return total


def complete_K_minus_E_small(k: float,
                             trunc: SeriesTruncation = SeriesTruncation()) -> float:
    """K(k) - E(k) for small k, by the all-positive difference series.

    Equals (pi/2) sum over n >= 1 of c_n^2 (2n/(2n-1)) k^(2n); avoids the
    catastrophic cancellation of subtracting two AGM values when k -> 0,
    where the difference is ~ (pi/4) k^2.
    """
    k = _validated_modulus(k)
    if k > SMALL_K_CUTOFF:
        raise EllipticDomainError(
            f"series restricted to k <= {SMALL_K_CUTOFF}, got {k}")

    def terms():
        n = 1
        c = 0.5
        kpow = k * k
        while True:
            yield 0.5 * math.pi * c * c * (2.0 * n / (2 * n - 1)) * kpow
            c *= (2 * n + 1) / (2 * n + 2)
            kpow *= k * k
            n += 1

    return _series_sum(terms(), trunc, k * k)


def _harmonic_weight(n: int) -> float:
    """d_n = sum over m = 1..n of 1/(m(2m-1))."""
    return sum(1.0 / (m * (2 * m - 1)) for m in range(1, n + 1))


def complete_K_large_series(k: float,
                            trunc: SeriesTruncation = SeriesTruncation()) -> float:
    """Large-modulus expansion (2/pi) K'(k) ln(4/k') minus the double sum."""
    k = _validated_modulus(k)
    kp = complementary_modulus(k)
    if kp > LARGE_KPRIME_CUTOFF:
        raise EllipticDomainError(
            f"series restricted to k' <= {LARGE_KPRIME_CUTOFF}, got k' = {kp}")
    lead = (2.0 / math.pi) * _complete_K_from_kp(k) * math.log(4.0 / kp)

    def terms():
        n = 1
        c = 0.5  # c_1
        kppow = kp * kp
        while True:
            yield -c * c * _harmonic_weight(n) * kppow
            c *= (2 * n + 1) / (2 * n + 2)
            kppow *= kp * kp
            n += 1

    return lead + _series_sum(terms(), trunc, kp * kp)


def complete_E_large_series(k: float,
                            trunc: SeriesTruncation = SeriesTruncation()) -> float:
    """Large-modulus expansion of E(k) in powers of k' with a log prefactor."""
    k = _validated_modulus(k)
    kp = complementary_modulus(k)
    if kp > LARGE_KPRIME_CUTOFF:
        raise EllipticDomainError(
            f"series restricted to k' <= {LARGE_KPRIME_CUTOFF}, got k' = {kp}")
    Kp = _complete_K_from_kp(k)
    Ep = _complete_E_from_pair(kp, k)
    lead = (2.0 / math.pi) * (Kp - Ep) * math.log(4.0 / kp)

    def terms():
        # n = 0 term of the squared-coefficient sum: 1/(2*0-1)^2 = 1.
        yield 1.0
        n = 1
        c = 0.5
        kppow = kp * kp
        while True:
            yield c * c * kppow * (
                1.0 / (2 * n - 1) ** 2
                - (2.0 * n / (2 * n - 1)) * _harmonic_weight(n))
            c *= (2 * n + 1) / (2 * n + 2)
            kppow *= kp * kp
            n += 1

    return lead + _series_sum(terms(), trunc, kp * kp)


def quadrature_F(x: float, k: float) -> float:
    """Adaptive-quadrature oracle for F(x, k) via t = sin(theta)."""
    x = _validated_argument(x)
    k = _validated_modulus(k)
    phi = math.asin(x)
    val, _ = quad(lambda t: 1.0 / math.sqrt(1.0 - (k * math.sin(t)) ** 2),
                  0.0, phi, epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def quadrature_E(x: float, k: float) -> float:
    """Adaptive-quadrature oracle for E(x, k) via t = sin(theta)."""
    x = _validated_argument(x)
    k = _validated_modulus(k)
    phi = math.asin(x)
    val, _ = quad(lambda t: math.sqrt(1.0 - (k * math.sin(t)) ** 2),
                  0.0, phi, epsabs=1e-13, epsrel=1e-13, limit=200)
    return val
