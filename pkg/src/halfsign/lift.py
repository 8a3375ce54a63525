"""Shimura lift coefficients and the exact coefficient identity they satisfy.

For a Hecke eigenform with coefficients c(m) (so a(m) = c(m) / m^{k/4 - 1/2})
and lift coefficients A(m) of weight k - 1 and level 2, clearing the
normalization in

    a(t n^2) = a(t) sum_{m | n} chi_t(n/m) mu(n/m) n^{-1/2} A(m) / m^{k/2 - 3/2}

by the factor (t n^2)^{k/4 - 1/2} = t^{k/4 - 1/2} n^{k/2 - 1} gives the
integral identity checked here:

    c(t n^2) = c(t) sum_{m | n} chi_t(n/m) mu(n/m) (n/m)^{(k-3)/2} A(m).

chi_t is the real character n -> ((-1)^{(k-1)/2} t / n) on odd n and 0 on
even n; with the plain Kronecker value at 2 the identity fails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

from .arith import divisors, factorize, is_squarefree, kronecker, mobius, primes_up_to, squarefree_upto
from .context import DomainError, MissingEigenvalueError, NeedsMoreCoefficients, ValidationError
from .qspace import HalfIntegralForm, hecke_T_p2


def chi_t(t: int, n: int, k: int, even: str = "zero") -> int:
    """chi_t(n) = ((-1)^{(k-1)/2} t / n); ``even="kronecker"`` keeps the Kronecker value at even n."""
    if t < 1 or not is_squarefree(t):
        raise DomainError(f"chi_t needs square-free t >= 1, got {t}")
    if n % 2 == 0 and even == "zero":
        return 0
    sign = -1 if ((k - 1) // 2) % 2 else 1
    return kronecker(sign * t, n)


@dataclass
class LiftCoefficients:
    """A(0..M) of the weight k-1, level 2 form attached to a weight k/2 eigenform (A(0) = 0)."""

    k: int
    M: int
    A: list
    eigenvalues: dict[int, Fraction] = field(default_factory=dict)

    def __getitem__(self, m: int):
        if m > self.M:
            raise NeedsMoreCoefficients(m, self.M, "lift table")
        return self.A[m]

    @property
    def a2(self):
        return self.A[2] if self.M >= 2 else None


def extend_eigenvalues(form: HalfIntegralForm, pmax: int) -> dict[int, Fraction]:
    """Read lam_p for odd p <= pmax off the table, checking the eigen-property on the valid range."""
    n0 = form.first_index
    out = dict(form.eigenvalues)
    for p in primes_up_to(pmax):
        if p == 2 or p in out:
            continue
        if p * p * n0 > form.N:
            break
        img = hecke_T_p2(form.c, p, form.k)
        lam = Fraction(img[n0], form.c[n0])
        if any(img[n] * 1 != lam * form.c[n] for n in range(len(img))):
            raise ValidationError(f"table is not a T({p}^2) eigenvector")
        out[p] = lam
    return out


def determine_a2(form: HalfIntegralForm) -> Fraction:
    """A(2) from the identity at (t, n) = (t0, 2) with t0 the first square-free index with c(t0) != 0.

    Since chi_t(2) = 0 the identity reads c(4 t0) = c(t0) A(2).
    """
    for t in squarefree_upto(form.N // 4):
        if form.c[t]:
            return Fraction(form.c[4 * t], form.c[t])
    raise NeedsMoreCoefficients(4, form.N // 4, "table for determining A(2)")


def lift_from_eigenvalues(form: HalfIntegralForm, M: int, a2=None) -> LiftCoefficients:
    """A(p) = lam_p for odd p, prime powers by the Hecke recursion, A(2^j) = A(2)^j, multiplicative."""
    k = form.k
    eig = form.eigenvalues
    a2 = determine_a2(form) if a2 is None else Fraction(a2)
    A: list = [0] * (M + 1)
    if M >= 1:
        A[1] = 1
    w = k - 2
    prime_power: dict[int, list] = {}
    for p in primes_up_to(M):
        if p == 2:
            seq = [Fraction(1)]
            while 2 ** len(seq) <= M:
                seq.append(seq[-1] * a2)
        else:
            if p not in eig:
                raise MissingEigenvalueError(p)
            lam = Fraction(eig[p])
            seq = [Fraction(1), lam]
            while p ** len(seq) <= M:
                seq.append(lam * seq[-1] - p**w * seq[-2])
        prime_power[p] = seq
    for m in range(2, M + 1):
        v = Fraction(1)
        for p, e in factorize(m).items():
            v *= prime_power[p][e]
        A[m] = int(v) if v.denominator == 1 else v
    used = {p: Fraction(eig[p]) for p in prime_power if p != 2}
    used[2] = a2
    return LiftCoefficients(k, M, A, used)


@dataclass(frozen=True)
class PrebResult:
    t: int
    n: int
    lhs: int
    rhs: Fraction
    ok: bool


def preb_rhs(form: HalfIntegralForm, lift: LiftCoefficients, t: int, n: int) -> Fraction:
    e = (form.k - 3) // 2
    total = Fraction(0)
    for m in divisors(n):
        q = n // m
        mu = mobius(q)
        if mu:
            x = chi_t(t, q, form.k)
            if x:
                total += x * mu * q**e * Fraction(lift[m])
    return form.c[t] * total


def verify_preb(form: HalfIntegralForm, lift: LiftCoefficients, t: int, n: int) -> PrebResult:
    """Exact check of c(t n^2) = c(t) sum_{m | n} chi_t(n/m) mu(n/m) (n/m)^{(k-3)/2} A(m)."""
    if not is_squarefree(t):
        raise DomainError(f"t = {t} is not square-free")
    if t * n * n > form.N:
        raise NeedsMoreCoefficients(t * n * n, form.N)
    if n > lift.M:
        raise NeedsMoreCoefficients(n, lift.M, "lift table")
    lhs = form.c[t * n * n]
    rhs = preb_rhs(form, lift, t, n)
    return PrebResult(t, n, lhs, rhs, rhs == lhs)


def preb_grid(form: HalfIntegralForm, lift: LiftCoefficients, limit: int) -> list[PrebResult]:
    """verify_preb over every square-free t and n >= 1 with t n^2 <= limit."""
    out = []
    for t in squarefree_upto(limit):
        n = 1
        while t * n * n <= limit:
            out.append(verify_preb(form, lift, t, n))
            n += 1
    return out


@dataclass
class LemmaBoundReport:
    eps: float
    max_ratio: float
    per_n: dict[int, float]
    slope: float
    growing: bool
    excluded_t: list[int]


def lemma_bound_check(form: HalfIntegralForm, T: int, Nmax: int, eps: float) -> LemmaBoundReport:
    """max over square-free t <= T with a(t) != 0 and n <= Nmax of |a(t n^2)| / (|a(t)| n^eps).

    ``growing`` is set when the per-n maxima fitted in log-log have slope above 0.1.
    """
    k = form.k
    w = k / 4 - 0.5
    per_n: dict[int, float] = {}
    excluded = []
    for t in squarefree_upto(T):
        if t > form.N:
            break
        if form.c[t] == 0:
            excluded.append(t)
            continue
        for n in range(1, Nmax + 1):
            if t * n * n > form.N:
                break
            # a(tn^2)/a(t) = c(tn^2) / (c(t) n^{2w})
            r = abs(form.c[t * n * n] / form.c[t]) / n ** (2 * w) / n**eps
            per_n[n] = max(per_n.get(n, 0.0), r)
    xs = [math.log(n) for n in per_n if n > 1 and per_n[n] > 0]
    ys = [math.log(per_n[n]) for n in per_n if n > 1 and per_n[n] > 0]
    slope = 0.0
    if len(xs) >= 2:
        mx, my = sum(xs) / len(xs), sum(ys) / len(ys)
        sxx = sum((x - mx) ** 2 for x in xs)
        slope = sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sxx if sxx else 0.0
    return LemmaBoundReport(eps, max(per_n.values(), default=0.0), per_n, slope, slope > 0.1, excluded)


def deligne_check(lift: LiftCoefficients) -> tuple[bool, int | None]:
    """|A(m)| <= d(m) m^{(k-2)/2} for all m <= M, compared exactly as squares."""
    k = lift.k
    for m in range(1, lift.M + 1):
        d = len(divisors(m))
        a = Fraction(lift.A[m])
        if a * a > d * d * Fraction(m) ** (k - 2):
            return False, m
    return True, None


@dataclass(frozen=True)
class DirichletIdentityReport:
    t: int
    s: float
    lhs: mpmath.mpf
    rhs: mpmath.mpf
    gap: float
    tail_bound: float
    ok: bool


def dirichlet_identity_check(form: HalfIntegralForm, lift: LiftCoefficients, t: int, s=None, dps: int = 30) -> DirichletIdentityReport:
    """Truncated sums of both sides of the Dirichlet-series form of the identity.

    sum_n a(t n^2) n^{-(s-k/2+1)} = a(t) L_chi(s - k/2 + 3/2) L_A(s). Both sides are
    truncated at n0 = floor(sqrt(N/t)); their gap is bounded by the tail of the
    majorant 3 |a(t)| n^{1-(s-k/2+1)}, using |a(t n^2)| <= |a(t)| d(n)^2 and d(n)^2 <= 3n.
    """
    k = form.k
    s = mpmath.mpf(k) / 2 + 2 if s is None else mpmath.mpf(s)
    n0 = math.isqrt(form.N // t)
    n0 = min(n0, lift.M)
    with mpmath.workdps(dps):
        w = mpmath.mpf(k) / 4 - mpmath.mpf(1) / 2
        at = mpmath.mpf(form.c[t]) / mpmath.power(t, w)
        lhs = mpmath.fsum(
            mpmath.mpf(form.c[t * n * n]) / mpmath.power(t * n * n, w) / mpmath.power(n, s - mpmath.mpf(k) / 2 + 1)
            for n in range(1, n0 + 1)
        )
        l1 = mpmath.fsum(chi_t(t, m, k) * mobius(m) / mpmath.power(m, s - mpmath.mpf(k) / 2 + mpmath.mpf(3) / 2) for m in range(1, n0 + 1))
        l2 = mpmath.fsum(mpmath.mpf(Fraction(lift.A[m]).numerator) / Fraction(lift.A[m]).denominator / mpmath.power(m, s) for m in range(1, n0 + 1))
        rhs = at * l1 * l2
        ex = s - mpmath.mpf(k) / 2 + 1 - 1
        # sum_{n > n0} 3 n^{-ex} <= 3 n0^{1-ex} / (ex - 1), doubled for the product's cross terms
        tail = float(2 * 3 * abs(at) * mpmath.power(n0, 1 - ex) / (ex - 1))
        gap = float(abs(lhs - rhs))
    return DirichletIdentityReport(t, float(s), lhs, rhs, gap, tail, gap <= tail)
