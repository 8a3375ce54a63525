"""Twisted Mellin transforms Lambda(f, u/d, s) as entire functions of s.

Lambda(f, q, s) = int_0^oo f(iy + q) y^{s'} dy/y with s' = s + k/4 - 1/2. For
rational q = u/d the matrix identity attached to u/d maps the piece of the
integral below a split height y0 onto the expansion of f at the cusp that u/d
is equivalent to (infinity, 1/2 or 0), giving

    Lambda(f, u/d, s) = U(f, u/d, s, y0) + factor(s) U(f_*, v/d, 1 - s, 1/(D y0)),
    U(g, q, s, y) = sum_mu c_g(mu) e(mu q) (2 pi mu)^{-s'} Gamma(s', 2 pi mu y),

where D = d^2 when d is even and 4 d^2 when d is odd. Both sums converge
geometrically for every complex s. The incomplete gammas are evaluated in Arb
ball arithmetic, so each result carries the ball radius plus an explicit tail
bound for the truncated sums.

Cusp expansions are exact rational series (see ``qspace``); at cusp 1/2 they
live on the lattice (1/4)Z, so exponents are mu = j/lattice.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import flint
import mpmath

from .arith import epsilon_power, euler_phi, kronecker, mobius_apply, ramanujan_sum
from .context import (
    DEFAULT_CONTEXT,
    ConvergenceError,
    DomainError,
    EvalContext,
    NeedsMoreCoefficients,
    ValidationError,
    Approx,
)
from .qspace import ExactSeries, HalfIntegralForm, monomial_combination
from .special import arb_precision, cpow, from_acb, to_acb

FOUR, TWO, ODD = "FourDividesD", "TwoExactlyDividesD", "OddD"
LATTICE = {"inf": 1, "0": 1, "1/2": 4}


# ---------------------------------------------------------------------------
# Cusp expansions


@dataclass
class CuspExpansion:
    """Expansion sum_j c_j e(j z / lattice) of the slash image of f at a cusp."""

    cusp: str
    lattice: int
    series: ExactSeries
    validation_residual: float | None = None

    @property
    def order(self) -> Fraction:
        """Largest exponent covered."""
        return Fraction(self.series.order, self.lattice)

    @property
    def support(self) -> list[Fraction]:
        nums = self.series.numerators()
        return [Fraction(j, self.lattice) for j, c in enumerate(nums) if c]

    def coeff(self, mu) -> Fraction:
        mu = Fraction(mu)
        j = mu * self.lattice
        if j.denominator != 1:
            return Fraction(0)
        return self.series.coeff(int(j))

    def coeffs(self) -> dict[Fraction, mpmath.mpc]:
        return {mu: mpmath.mpc(self.coeff(mu)) for mu in self.support}

    def value(self, z, ctx: EvalContext = DEFAULT_CONTEXT) -> tuple[mpmath.mpc, float]:
        return series_value(self.series, z, ctx)


def series_value(series: ExactSeries, z, ctx: EvalContext = DEFAULT_CONTEXT, bound: tuple[float, float] | None = None):
    """sum_j c_j e(j z / lattice) and a tail bound (when ``bound`` = (C, alpha) is given)."""
    with ctx.workdps():
        z = mpmath.mpc(z)
        if z.imag <= 0:
            raise DomainError("series evaluation needs Im(z) > 0")
        L = series.lattice
        y = float(z.imag)
        # terms beyond J contribute below 10^-working_digits for coefficient growth <= j^4
        need = int((ctx.working_digits * math.log(10) + 40) * L / (2 * math.pi * y)) + 1
        J = min(need, series.order)
        if need > series.order:
            raise NeedsMoreCoefficients(need, series.order, f"expansion for evaluation at Im(z) = {y:.3g}")
        nums = series.numerators()
        w = mpmath.expjpi(2 * z / L)
        total = mpmath.mpc(0)
        for c in reversed(nums[: J + 1]):
            total = total * w + c
        total /= series.den
        tail = 0.0
        if bound is not None:
            C, alpha = bound
            tail = _lattice_tail(C, alpha, 0.0, y, L, J)
        return total, tail


def _slash_value(form: HalfIntegralForm, cusp: str, z, ctx: EvalContext):
    """The slash image at z from the q-expansion at infinity (direct definition)."""
    k = form.k
    inf = form_expansion(form)
    with ctx.workdps():
        z = mpmath.mpc(z)
        if cusp == "0":
            w = -1 / (4 * z)
            factor = cpow(-2j * z, -mpmath.mpf(k) / 2)
        elif cusp == "1/2":
            w = z / (-2 * z + 1)
            factor = cpow(-2 * z + 1, -mpmath.mpf(k) / 2)
        else:
            w, factor = z, mpmath.mpf(1)
        val, _ = series_value(inf.series, w, ctx)
        return factor * val


def form_expansion(form: HalfIntegralForm) -> CuspExpansion:
    """The normalized q-expansion at infinity (c / scale)."""
    ser = ExactSeries(flint.fmpz_poly(form.c), form.scale, form.N)
    return CuspExpansion("inf", 1, ser, 0.0)


def sample_points(count: int = 20) -> list[mpmath.mpc]:
    """Deterministic validation points with 0.35 <= Im z <= 1.0."""
    pts = []
    for i in range(count):
        x = mpmath.mpf(-0.5) + mpmath.mpf(i) / count + mpmath.mpf(1) / 7
        y = mpmath.mpf(0.35) + mpmath.mpf(0.65) * ((i * 7) % count) / count
        pts.append(mpmath.mpc(x, y))
    return pts


def cusp_expansion(form: HalfIntegralForm, cusp: str, ctx: EvalContext = DEFAULT_CONTEXT, order: int | None = None, validate: bool = True) -> CuspExpansion:
    """Exact expansion of ``form`` at ``cusp`` (lattice units up to ``order``), validated pointwise."""
    if cusp == "inf":
        exp = form_expansion(form)
        if order is not None and order < exp.series.order:
            exp = CuspExpansion("inf", 1, exp.series.truncate(order), 0.0)
        return exp
    if cusp not in LATTICE:
        raise DomainError(f"unknown cusp {cusp!r}")
    L = LATTICE[cusp]
    if order is None:
        order = min(form.N, 4000) * L // 1
    coords = [x / form.scale for x in form.coords]
    ser = monomial_combination(coords, form.k, order, cusp)
    exp = CuspExpansion(cusp, L, ser)
    if validate:
        exp.validation_residual = validate_expansion(form, exp, ctx)
        if exp.validation_residual > ctx.tolerance:
            raise ValidationError(f"cusp {cusp} expansion disagrees with the slash definition: {exp.validation_residual:.3g}")
    return exp


def validate_expansion(form: HalfIntegralForm, exp: CuspExpansion, ctx: EvalContext, points: Sequence | None = None) -> float:
    """Max relative gap between the expansion and the direct slash definition."""
    points = sample_points() if points is None else points
    worst = 0.0
    ser = exp.series
    need = int((ctx.working_digits * math.log(10) + 40) * exp.lattice / (2 * math.pi * 0.35)) + 1
    if ser.order < need:
        ser = monomial_combination([x / form.scale for x in form.coords], form.k, need, exp.cusp)
    with ctx.workdps():
        for z in points:
            lhs, _ = series_value(ser, z, ctx)
            rhs = _slash_value(form, exp.cusp, z, ctx)
            gap = abs(lhs - rhs) / max(abs(rhs), mpmath.mpf(10) ** (-ctx.working_digits))
            worst = max(worst, float(gap))
    return worst


def fourier_coefficients(form: HalfIntegralForm, cusp: str, count: int, ctx: EvalContext, y=None, samples: int | None = None) -> list[mpmath.mpc]:
    """Numerical coefficients c_0..c_{count-1} at ``cusp`` by trapezoidal Fourier inversion on a horocycle.

    Independent of the closed-form generator expansions; used to cross-check them.
    """
    L = LATTICE[cusp]
    y = mpmath.mpf(0.5 if y is None else y)
    P = samples or 4 * count + 16
    with ctx.workdps():
        vals = []
        for l in range(P):
            x = mpmath.mpf(L) * l / P
            vals.append(_slash_value(form, cusp, mpmath.mpc(x, y), ctx))
        out = []
        for j in range(count):
            acc = mpmath.fsum(vals[l] * mpmath.expjpi(-2 * mpmath.mpf(j * l) / P) for l in range(P))
            out.append(acc / P * mpmath.exp(2 * mpmath.pi * j * y / L))
        return out


# ---------------------------------------------------------------------------
# Matrix decompositions


def _matmul(A, B):
    return (
        (A[0][0] * B[0][0] + A[0][1] * B[1][0], A[0][0] * B[0][1] + A[0][1] * B[1][1]),
        (A[1][0] * B[0][0] + A[1][1] * B[1][0], A[1][0] * B[0][1] + A[1][1] * B[1][1]),
    )


@dataclass(frozen=True)
class FunctionalEquationCase:
    """Decomposition data for the cusp u/d.

    Even d: uv - de = -1, Lambda(f, u/d, s) = d^{1-2s} (-i)^{k/2} eps_v^k (d/v) Lambda(f_*, v/d, 1-s).
    Odd d:  4uv - de = -1, Lambda(f, u/d, s) = (2d)^{1-2s} eps_d^{-k} (v/d) Lambda(f_0, v/d, 1-s).
    """

    case: str
    u: int
    d: int
    v: int
    e: int
    gamma: tuple
    target_cusp: str

    @property
    def D(self) -> int:
        """The lower piece at height y maps to the partner's upper piece at 1/(D y)."""
        return 4 * self.d * self.d if self.case == ODD else self.d * self.d

    def kappa(self, k: int) -> complex:
        """The root-of-unity part of the factor that depends on v."""
        if self.case == ODD:
            return complex(kronecker(self.v, self.d))
        return complex(epsilon_power(self.v, k)) * kronecker(self.d, self.v)

    def base_factor(self, s, k: int, ctx: EvalContext = DEFAULT_CONTEXT) -> mpmath.mpc:
        with ctx.workdps():
            s = mpmath.mpc(s)
            if self.case == ODD:
                return mpmath.power(2 * self.d, 1 - 2 * s) * complex(epsilon_power(self.d, -k))
            return mpmath.power(self.d, 1 - 2 * s) * cpow(mpmath.mpc(0, -1), mpmath.mpf(k) / 2)

    def factor(self, s, k: int, ctx: EvalContext = DEFAULT_CONTEXT) -> mpmath.mpc:
        with ctx.workdps():
            return self.base_factor(s, k, ctx) * mpmath.mpc(self.kappa(k))

    def _base_factor_acb(self, s: flint.acb, k: int) -> flint.acb:
        if self.case == ODD:
            eps = complex(epsilon_power(self.d, -k))
            return flint.acb(2 * self.d).pow(1 - 2 * s) * flint.acb(eps.real, eps.imag)
        # (-i)^{k/2} = exp(-i pi k / 4) on the principal branch
        sn, cs = flint.arb.sin_cos_pi_fmpq(flint.fmpq(-k, 4))
        return flint.acb(self.d).pow(1 - 2 * s) * flint.acb(cs, sn)

    def identity_holds(self) -> bool:
        """Exact check of the matrix identity and gamma in Gamma_0(4)."""
        u, d, v, e = self.u, self.d, self.v, self.e
        F = Fraction
        T = ((F(1), F(u, d)), (F(0), F(1)))
        Tv = ((F(1), F(v, d)), (F(0), F(1)))
        W = ((F(0), F(-1)), (F(4), F(0)))
        g = tuple(tuple(F(x) for x in row) for row in self.gamma)
        if self.case == ODD:
            left = _matmul(T, ((F(1, d), F(0)), (F(0), F(d))))
            right = _matmul(_matmul(_matmul(g, ((F(0), F(1, 4)), (F(-1), F(0)))), Tv), W)
        else:
            left = _matmul(T, ((F(4, d), F(0)), (F(0), F(d))))
            mid = g if self.case == FOUR else _matmul(g, ((F(1), F(0)), (F(-2), F(1))))
            right = _matmul(_matmul(mid, Tv), W)
        (a, b), (c, dd) = self.gamma
        return left == right and a * dd - b * c == 1 and c % 4 == 0


def decompose_cusp(u: int, d: int) -> FunctionalEquationCase:
    if d < 1:
        raise DomainError(f"d must be positive, got {d}")
    if math.gcd(u, d) != 1:
        raise DomainError(f"gcd({u}, {d}) != 1")
    if d % 2 == 0:
        v = next(v for v in range(1, d + 1) if (u * v + 1) % d == 0)
        e = (u * v + 1) // d
        if d % 4 == 0:
            return FunctionalEquationCase(FOUR, u, d, v, e, ((-u, e), (-d, v)), "inf")
        return FunctionalEquationCase(TWO, u, d, v, e, ((2 * e - u, e), (2 * v - d, v)), "1/2")
    if d == 1:
        v = 0
    else:
        v = next(v for v in range(1, d + 1) if (4 * u * v + 1) % d == 0)
    e = (4 * u * v + 1) // d
    return FunctionalEquationCase(ODD, u, d, v, e, ((e, u), (4 * v, d)), "0")


def partner_cusp(d: int) -> str:
    return "inf" if d % 4 == 0 else ("1/2" if d % 2 == 0 else "0")


# ---------------------------------------------------------------------------
# Tail bounds


def _lattice_tail(C: float, alpha: float, sigma_shift: float, y: float, L: int, J: int, y_power: float = 0.0) -> float:
    """Bound for sum_{j > J} C mu^(alpha - 1) e^{-2 pi mu y}, mu = j / L (times y^y_power)."""
    beta = alpha - 1
    a = 2 * math.pi * y / L
    rho_log = max(beta, 0.0) * math.log1p(1 / (J + 1)) - a
    if rho_log >= 0:
        return math.inf
    mu = (J + 1) / L
    first = math.log(C) + beta * math.log(mu) - 2 * math.pi * mu * y + y_power * math.log(y)
    return math.exp(first) / -math.expm1(rho_log)


def gamma_terms_tail(C: float, alpha: float, sigma_p: float, y: float, L: int, J: int) -> float:
    """Bound for sum_{j > J} |c_j| |(2 pi mu)^{-s'} Gamma(s', 2 pi mu y)| given |c_j| <= C mu^alpha.

    Uses |Gamma(s', x)| <= Gamma(sigma', x) <= 2 x^{sigma'-1} e^{-x} once x >= 2(sigma' - 1), which
    turns each term into (2C / 2 pi) y^{sigma'-1} mu^{alpha-1} e^{-2 pi mu y}.
    """
    x_first = 2 * math.pi * (J + 1) / L * y
    if x_first < 2 * (sigma_p - 1):
        return math.inf
    return _lattice_tail(2 * C / (2 * math.pi), alpha, 0.0, y, L, J, y_power=sigma_p - 1)


def _terms_needed(C, alpha, sigma_p, y, L, tol, J0=8) -> int:
    J = J0
    while gamma_terms_tail(C, alpha, sigma_p, y, L, J) > tol:
        J = int(J * 1.25) + 4
    lo, hi = max(J0, int(J / 1.25) - 4), J
    while lo < hi:
        mid = (lo + hi) // 2
        if gamma_terms_tail(C, alpha, sigma_p, y, L, mid) > tol:
            lo = mid + 1
        else:
            hi = mid
    return hi


# ---------------------------------------------------------------------------
# Evaluator


def _s_key(s) -> tuple:
    s = mpmath.mpc(s)
    return (s.real._mpf_, s.imag._mpf_)


def _height_arb(y) -> flint.arb:
    y = Fraction(y)
    return flint.arb(flint.fmpq(y.numerator, y.denominator))


@dataclass
class _Binned:
    modulus: int
    bins: list  # acb per residue class
    tail: float
    terms: int


class MellinEvaluator:
    """Caches cusp expansions and incomplete-gamma ladders for one form and one context."""

    def __init__(self, form: HalfIntegralForm, ctx: EvalContext = DEFAULT_CONTEXT, validate: bool = True):
        self.form = form
        self.ctx = ctx
        self.k = form.k
        self.shift = Fraction(form.k, 4) - Fraction(1, 2)
        self.alpha = form.k / 4 + 0.25
        self.validate = validate
        self._exp: dict[str, CuspExpansion] = {}
        self._C: dict[str, float] = {}
        self._bins: dict[tuple, _Binned] = {}
        self._roots: dict[int, list] = {}
        self.tol = 10.0 ** (-ctx.working_digits)

    # expansions ----------------------------------------------------------
    def expansion(self, cusp: str, order: int) -> CuspExpansion:
        have = self._exp.get(cusp)
        if have is not None and have.series.order >= order:
            return have
        if cusp == "inf":
            exp = form_expansion(self.form)
            if exp.series.order < order:
                raise NeedsMoreCoefficients(order, exp.series.order, "q-expansion table")
        else:
            new_order = max(order, 2 * (have.series.order if have else 0), 512)
            exp = cusp_expansion(self.form, cusp, self.ctx, order=new_order, validate=self.validate and have is None)
        self._exp[cusp] = exp
        return exp

    def coefficient_bound(self, cusp: str) -> float:
        """C with |c_j| <= C mu^alpha, fitted on the computed range and scaled by tail_safety."""
        if cusp not in self._C:
            L = LATTICE[cusp]
            exp = self.expansion(cusp, min(self.form.N, 2000) * L if cusp != "inf" else min(self.form.N, 2000))
            nums = exp.series.numerators()
            best = 0.0
            for j, c in enumerate(nums):
                if c:
                    best = max(best, abs(c) / exp.series.den / (j / L) ** self.alpha)
            self._C[cusp] = best * self.ctx.tail_safety
        return self._C[cusp]

    # ladders -------------------------------------------------------------
    def roots(self, M: int) -> list:
        r = self._roots.get((M, flint.ctx.prec))
        if r is None:
            r = []
            for j in range(M):
                sn, cs = flint.arb.sin_cos_pi_fmpq(flint.fmpq(2 * j, M))
                r.append(flint.acb(cs, sn))
            self._roots[(M, flint.ctx.prec)] = r
        return r

    def binned(self, cusp: str, s, y, modulus: int) -> _Binned:
        """P_r = sum_{j = r mod modulus} c_j (2 pi mu)^{-s'} Gamma(s', 2 pi mu y), mu = j / L."""
        key = (cusp, _s_key(s), Fraction(y), modulus, self.ctx.bits)
        hit = self._bins.get(key)
        if hit is not None:
            return hit
        L = LATTICE[cusp]
        s = mpmath.mpc(s)
        sigma_p = float(s.real) + float(self.shift)
        C = self.coefficient_bound(cusp)
        J = _terms_needed(C, self.alpha, sigma_p, float(y), L, self.tol)
        limit = self.form.N if cusp == "inf" else None
        if limit is not None and J > limit:
            raise NeedsMoreCoefficients(J, limit, f"q-expansion table for Lambda at height {float(y):.4g}")
        tail = gamma_terms_tail(C, self.alpha, sigma_p, float(y), L, J)
        exp = self.expansion(cusp, J)
        nums = exp.series.numerators()
        den = exp.series.den
        with arb_precision(self.ctx.bits):
            sp = to_acb(s) + flint.acb(flint.arb(flint.fmpq(self.shift.numerator, self.shift.denominator)))
            neg = -sp
            yb = _height_arb(y)
            two_pi_over_L = 2 * flint.arb.pi() / L
            bins = [flint.acb(0)] * modulus
            for j in range(1, J + 1):
                c = nums[j]
                if not c:
                    continue
                lam = two_pi_over_L * j
                g = flint.acb(lam * yb).gamma_upper(sp) * flint.acb(lam).pow(neg)
                r = j % modulus
                bins[r] = bins[r] + g * c
            inv = flint.arb(flint.fmpq(1, den))
            bins = [b * inv for b in bins]
        out = _Binned(modulus, bins, tail, J)
        self._bins[key] = out
        return out

    def twisted(self, b: _Binned, numer: int) -> flint.acb:
        """sum_r P_r e(r numer / modulus)."""
        M = b.modulus
        roots = self.roots(M)
        total = flint.acb(0)
        for r, P in enumerate(b.bins):
            total += P * roots[(r * numer) % M]
        return total

    def upper(self, cusp: str, u: int, d: int, s, y) -> tuple[flint.acb, float]:
        """U(f_cusp, u/d, s, y) with its tail bound."""
        L = LATTICE[cusp]
        b = self.binned(cusp, s, y, L * d)
        return self.twisted(b, u), b.tail

    # Lambda --------------------------------------------------------------
    def default_split(self, d: int) -> Fraction:
        return Fraction(1, 2 * d)

    def lambda_acb(self, u: int, d: int, s, y0=None) -> tuple[flint.acb, float]:
        case = decompose_cusp(u, d)
        y0 = self.default_split(d) if y0 is None else Fraction(y0)
        y1 = 1 / (case.D * y0)
        with self.ctx.workdps(), arb_precision(self.ctx.bits):
            s = mpmath.mpc(s)
            top, t1 = self.upper("inf", u % d, d, s, y0)
            low, t2 = self.upper(case.target_cusp, case.v, d, 1 - s, y1)
            fac = case._base_factor_acb(to_acb(s), self.k) * _unit_acb(case.kappa(self.k))
            val = top + fac * low
            fabs = float(fac.abs_upper())
            return val, t1 + fabs * t2

    def partner_acb(self, u: int, d: int, s, Y=None) -> tuple[flint.acb, float]:
        """Lambda(f_*, v/d, s) for the partner of u/d, split at Y."""
        case = decompose_cusp(u, d)
        Y = Fraction(13, 8) / (case.D * self.default_split(d)) if Y is None else Fraction(Y)
        with self.ctx.workdps(), arb_precision(self.ctx.bits):
            s = mpmath.mpc(s)
            top, t1 = self.upper(case.target_cusp, case.v, d, s, Y)
            low, t2 = self.upper("inf", u % d, d, 1 - s, 1 / (case.D * Y))
            fac = case._base_factor_acb(to_acb(1 - s), self.k) * _unit_acb(case.kappa(self.k))
            inv = 1 / fac
            return top + low * inv, t1 + float(inv.abs_upper()) * t2

    def lambda_entire(self, u: int, d: int, s, y0=None) -> Approx:
        val, tail = self.lambda_acb(u, d, s, y0)
        with self.ctx.workdps():
            v, rad = from_acb(val)
        return Approx(v, rad + tail)

    def lambda_partner(self, u: int, d: int, s, Y=None) -> Approx:
        val, tail = self.partner_acb(u, d, s, Y)
        with self.ctx.workdps():
            v, rad = from_acb(val)
        return Approx(v, rad + tail)

    def class_sum(self, d: int, s, y0=None) -> Approx:
        """sum over u mod d, gcd(u, d) = 1, of Lambda(f, u/d, s).

        The upper pieces collapse through Ramanujan sums c_d(m); the lower pieces
        through K(j) = sum_u kappa(v_u) e(j v_u / (L d)), computed by one DFT.
        """
        y0 = self.default_split(d) if y0 is None else Fraction(y0)
        cusp = partner_cusp(d)
        L = LATTICE[cusp]
        case1 = decompose_cusp(1 if d > 1 else 0, d)
        y1 = 1 / (case1.D * y0)
        with self.ctx.workdps(), arb_precision(self.ctx.bits):
            s = mpmath.mpc(s)
            top_b = self.binned("inf", s, y0, d)
            top = flint.acb(0)
            for r, P in enumerate(top_b.bins):
                cr = ramanujan_sum(d, r if r else d)
                if cr:
                    top += P * cr
            low_b = self.binned(cusp, 1 - s, y1, L * d)
            M = L * d
            weights = [flint.acb(0)] * M
            count = 0
            for u in range(d):
                if math.gcd(u, d) != 1:
                    continue
                case = decompose_cusp(u, d)
                kap = case.kappa(self.k)
                weights[case.v % M] += _unit_acb(kap)
                count += 1
            K = _dft_plus(weights)
            low = flint.acb(0)
            for r, P in enumerate(low_b.bins):
                low += P * K[r]
            base = case1._base_factor_acb(to_acb(s), self.k)
            val = top + base * low
            tail = euler_phi(d) * (top_b.tail + float(base.abs_upper()) * low_b.tail)
        with self.ctx.workdps():
            v, rad = from_acb(val)
        return Approx(v, rad + tail)


def _unit_acb(z: complex) -> flint.acb:
    return flint.acb(int(z.real), int(z.imag))


def _dft_plus(w: list) -> list:
    """K_r = sum_n w_n e(r n / M)."""
    M = len(w)
    if M == 1:
        return list(w)
    out = flint.acb.dft(w, inverse=True)
    return [x * M for x in out]


# ---------------------------------------------------------------------------
# Public functional API


def lambda_entire(form: HalfIntegralForm, u: int, d: int, s, ctx: EvalContext = DEFAULT_CONTEXT, y0=None, evaluator: MellinEvaluator | None = None) -> Approx:
    ev = evaluator or MellinEvaluator(form, ctx)
    return ev.lambda_entire(u, d, s, y0)


def lambda_direct(form: HalfIntegralForm, q, s, ctx: EvalContext = DEFAULT_CONTEXT, margin: float = 0.05) -> Approx:
    """Gamma(s') (2 pi)^{-s'} sum_m c(m) e(m q) / m^{s'} with a certified tail.

    Uses |c(m)| <= C m^{k/4 - 1/4} with C fitted on the table, so the tail bound
    converges for Re(s) > 5/4.
    """
    s = mpmath.mpc(s)
    if float(s.real) <= 1.25 + margin:
        raise ConvergenceError(f"Re(s) = {float(s.real)} is outside the certified region Re(s) > {1.25 + margin}")
    q = Fraction(q)
    k = form.k
    N = form.N
    alpha = k / 4 - 0.25
    C = max(abs(form.c[m]) / form.scale / m**alpha for m in range(1, N + 1) if form.c[m]) * ctx.tail_safety
    with ctx.workdps():
        sp = s + mpmath.mpf(k) / 4 - mpmath.mpf(1) / 2
        # sum_m c(m) e(mq) m^{-s'} via exact roots of unity grouped by residue
        den = q.denominator
        roots = [mpmath.expjpi(2 * mpmath.mpf((r * q.numerator) % den) / den) for r in range(den)]
        acc = [mpmath.mpf(0)] * den
        for m in range(1, N + 1):
            c = form.c[m]
            if c:
                acc[m % den] += c * mpmath.exp(-sp * mpmath.log(m))
        total = mpmath.fsum(a * w for a, w in zip(acc, roots)) / form.scale
        pref = mpmath.gamma(sp) * mpmath.power(2 * mpmath.pi, -sp)
        sigma_tail = float(s.real) + k / 4 - 0.5 - alpha
        tail = C * N ** (1 - sigma_tail) / (sigma_tail - 1)
        err = float(abs(pref)) * tail + float(abs(pref * total)) * 10.0 ** (-ctx.working_digits + 3)
        return Approx(pref * total, err)


@dataclass(frozen=True)
class FunctionalEquationResult:
    u: int
    d: int
    case: str
    s: complex
    lhs: complex
    rhs: complex
    residual: float
    certified_error: float
    digits: int
    seconds: float

    def ok(self, budget: float) -> bool:
        return self.residual < budget


def _residual(lhs: Approx, rhs: Approx, ctx: EvalContext) -> tuple[float, float]:
    floor = mpmath.mpf(10) ** (-ctx.digits)
    with ctx.workdps():
        scale = max(abs(lhs.value), floor)
        res = abs(lhs.value - rhs.value) / scale
        return float(res), float((lhs.error + rhs.error) / scale)


def functional_equation_residual(form: HalfIntegralForm, u: int, d: int, s, ctx: EvalContext = DEFAULT_CONTEXT, evaluator: MellinEvaluator | None = None) -> FunctionalEquationResult:
    """|Lambda(f, u/d, s) - factor(s) Lambda(f_*, v/d, 1-s)| / max(|Lambda(f, u/d, s)|, 10^-digits).

    The two sides use split heights that are not images of each other, so the
    identity is tested rather than reproduced by construction.
    """
    ev = evaluator or MellinEvaluator(form, ctx)
    t0 = time.perf_counter()
    case = decompose_cusp(u, d)
    with ctx.workdps():
        s = mpmath.mpc(s)
        s1 = 1 - s
    lhs = ev.lambda_entire(u, d, s)
    part = ev.lambda_partner(u, d, s1)
    with ctx.workdps():
        fac = case.factor(s, form.k, ctx)
        rhs = Approx(fac * part.value, float(abs(fac)) * part.error)
    res, cert = _residual(lhs, rhs, ctx)
    return FunctionalEquationResult(u, d, case.case, complex(s), complex(lhs.value), complex(rhs.value), res, cert, ctx.digits, time.perf_counter() - t0)


def reduced_fractions(dmax: int, cube_free: bool = True) -> list[tuple[int, int]]:
    from .arith import is_cubefree

    out = []
    for d in range(1, dmax + 1):
        if cube_free and not is_cubefree(d):
            continue
        for u in range(d):
            if math.gcd(u, d) == 1:
                out.append((u, d))
    return out


def funceq_suite(form: HalfIntegralForm, dmax: int, s_grid: Iterable, ctx: EvalContext = DEFAULT_CONTEXT, evaluator: MellinEvaluator | None = None) -> list[FunctionalEquationResult]:
    ev = evaluator or MellinEvaluator(form, ctx)
    out = []
    s_grid = list(s_grid)
    for u, d in reduced_fractions(dmax):
        for s in s_grid:
            out.append(functional_equation_residual(form, u, d, s, ctx, ev))
        if u == d - 1 or d == 1:
            ev._bins.clear()
    return out


def suite_report(results: Sequence[FunctionalEquationResult], budget: float, meta: dict | None = None) -> str:
    rows = []
    for r in results:
        row = asdict(r)
        for key in ("s", "lhs", "rhs"):
            z = row[key]
            row[key] = [z.real, z.imag]
        row["ok"] = r.ok(budget)
        rows.append(row)
    doc = {"meta": meta or {}, "budget": budget, "passed": all(r.ok(budget) for r in results), "cases": rows}
    return json.dumps(doc, indent=1, sort_keys=True)


def split_independence(form: HalfIntegralForm, u: int, d: int, s, ctx: EvalContext = DEFAULT_CONTEXT, factors: Sequence = (Fraction(1, 2), 1, 2), evaluator: MellinEvaluator | None = None) -> float:
    """Max relative spread of Lambda over split heights y0 = f / (2d)."""
    ev = evaluator or MellinEvaluator(form, ctx)
    vals = [ev.lambda_entire(u, d, s, Fraction(f) / (2 * d)).value for f in factors]
    with ctx.workdps():
        ref = max(abs(vals[0]), mpmath.mpf(10) ** (-ctx.digits))
        return float(max(abs(v - vals[0]) for v in vals) / ref)


@dataclass
class DecayProfile:
    sigma: float
    rows: list  # (tau, |Lambda|, envelope, ratio)
    envelope_constant: float


def lambda_decay_profile(form: HalfIntegralForm, u: int, d: int, sigma: float, tau_grid: Iterable, ctx: EvalContext = DEFAULT_CONTEXT, eps: float = 0.0, evaluator: MellinEvaluator | None = None) -> DecayProfile:
    """|Lambda(f, u/d, sigma + i tau)| against (1 + |tau|)^{k/4 + eps} e^{-pi |tau| / 2}."""
    ev = evaluator or MellinEvaluator(form, ctx)
    rows = []
    for tau in tau_grid:
        val = ev.lambda_entire(u, d, mpmath.mpc(sigma, tau)).value
        env = (1 + abs(tau)) ** (form.k / 4 + eps) * math.exp(-math.pi * abs(tau) / 2)
        a = float(abs(val))
        rows.append((float(tau), a, env, a / env))
    return DecayProfile(sigma, rows, max(r[3] for r in rows))
