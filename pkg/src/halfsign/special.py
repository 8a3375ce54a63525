"""Complex special functions at arbitrary precision.

``upper_incomplete_gamma`` is implemented here directly: a power series
(through the lower incomplete gamma) for small ``x`` and Legendre's continued
fraction for large ``x``. The hot loops of the Mellin layer call
``gamma_upper_ladder`` instead, which evaluates many terms at once in Arb ball
arithmetic and returns rigorous radii; the test suite cross-checks the two.
"""

from __future__ import annotations

import math

import flint
import mpmath

from .context import DEFAULT_CONTEXT, AlgorithmSelectionError, Approx, DomainError, EvalContext, PoleError

# Continued fraction above this x (plus a margin that grows with |s|); series below.
CF_CROSSOVER = 12.0


def cpow(z, s):
    """Principal power exp(s Log z), Arg z in (-pi, pi]."""
    z = mpmath.mpc(z)
    if z == 0:
        raise DomainError("cpow of zero")
    return mpmath.exp(s * mpmath.log(z))


def _nonpositive_integer(s) -> int | None:
    s = mpmath.mpc(s)
    if s.imag == 0 and s.real <= 0 and s.real == int(s.real):
        return int(-s.real)
    return None


def gamma(s, ctx: EvalContext = DEFAULT_CONTEXT) -> Approx:
    n = _nonpositive_integer(s)
    if n is not None:
        raise PoleError(n)
    with ctx.workdps():
        value = mpmath.gamma(mpmath.mpc(s))
        err = float(abs(value)) * 10.0 ** (-(ctx.working_digits - 3))
    return Approx(+value, err)


def _series_lower(s, x, eps):
    """gamma(s, x) = x^s e^{-x} sum_n x^n / (s (s+1) ... (s+n))."""
    term = 1 / s
    total = term
    n = 0
    while True:
        n += 1
        term *= x / (s + n)
        total += term
        if abs(term) < eps * abs(total) and n > abs(s):
            break
        if n > 10**6:
            raise AlgorithmSelectionError("lower incomplete gamma series did not converge")
    return total * mpmath.exp(s * mpmath.log(x) - x)


def _continued_fraction(s, x, eps, max_terms):
    """Legendre continued fraction via the modified Lentz algorithm."""
    tiny = mpmath.mpf(10) ** (-(mpmath.mp.dps * 2))
    b = x + 1 - s
    c = 1 / tiny
    d = 1 / b
    h = d
    for i in range(1, max_terms):
        an = -i * (i - s)
        b += 2
        d = an * d + b
        if d == 0:
            d = tiny
        c = b + an / c
        if c == 0:
            c = tiny
        d = 1 / d
        delta = d * c
        h *= delta
        if abs(delta - 1) < eps:
            return mpmath.exp(s * mpmath.log(x) - x) * h, i
    raise AlgorithmSelectionError(f"continued fraction for Gamma({s}, {x}) exceeded {max_terms} terms")


def _e1(x, eps):
    """Gamma(0, x) = E_1(x) via its convergent series."""
    total = -mpmath.euler - mpmath.log(x)
    term = mpmath.mpf(1)
    n = 0
    while True:
        n += 1
        term *= -x / n
        total -= term / n
        if abs(term) < eps and n > x:
            return total


def _small_x(s, x, eps):
    n = _nonpositive_integer(s)
    if n is not None:
        value = _e1(x, eps)
        for j in range(1, n + 1):
            value = (value - mpmath.exp(-j * mpmath.log(x) - x)) / (-j)
        return value
    if mpmath.re(s) >= 0.5:
        return mpmath.gamma(s) - _series_lower(s, x, eps)
    m = int(math.ceil(0.5 - float(mpmath.re(s))))
    value = mpmath.gamma(s + m) - _series_lower(s + m, x, eps)
    for j in range(m - 1, -1, -1):
        sj = s + j
        value = (value - mpmath.exp(sj * mpmath.log(x) - x)) / sj
    return value


def _method(s, x) -> str:
    return "cf" if x > CF_CROSSOVER + 0.5 * abs(s) else "series"


def upper_incomplete_gamma(s, x, ctx: EvalContext = DEFAULT_CONTEXT, method: str | None = None) -> Approx:
    """Gamma(s, x) = int_x^oo e^{-u} u^{s-1} du for complex ``s`` and real ``x > 0``."""
    x = mpmath.mpf(x)
    if x <= 0:
        raise DomainError("upper incomplete gamma needs x > 0")
    method = method or _method(mpmath.mpc(s), x)
    extra = 0
    # digits lost to cancellation: Gamma(s) - gamma(s,x) for large x, or
    # division by s + j near a pole in the downward recurrence
    if method == "series":
        extra += int(float(x) / math.log(10)) + 2
        sc = complex(s)
        nearest = round(sc.real)
        dist = abs(sc - nearest)
        if nearest <= 0 and 0 < dist < 1e-3:
            extra += int(-math.log10(dist)) + 2
    with ctx.workdps(extra):
        s = mpmath.mpc(s)
        eps = mpmath.mpf(10) ** (-(ctx.working_digits + 2))
        if method == "cf":
            value, _ = _continued_fraction(s, x, eps, ctx.max_terms)
        elif method == "series":
            value = _small_x(s, x, eps)
        else:
            raise DomainError(f"unknown method {method!r}")
        err = float(abs(value)) * 10.0 ** (-(ctx.working_digits - 3))
    return Approx(+value, err)


def lower_incomplete_gamma(s, x, ctx: EvalContext = DEFAULT_CONTEXT) -> Approx:
    if _nonpositive_integer(s) is not None:
        raise PoleError(_nonpositive_integer(s))
    x = mpmath.mpf(x)
    with ctx.workdps(int(float(x) / math.log(10)) + 2):
        s = mpmath.mpc(s)
        value = _series_lower(s, x, mpmath.mpf(10) ** (-(ctx.working_digits + 2)))
        err = float(abs(value)) * 10.0 ** (-(ctx.working_digits - 3))
    return Approx(+value, err)


# ---------------------------------------------------------------------------
# Arb bridge

def to_arb(x) -> flint.arb:
    """Exact conversion of an mpmath real (or int/Fraction) to an arb."""
    if isinstance(x, int):
        return flint.arb(x)
    if hasattr(x, "numerator") and hasattr(x, "denominator"):
        return flint.arb(flint.fmpq(x.numerator, x.denominator))
    x = mpmath.mpf(x)
    sign, man, exp, _ = x._mpf_
    if not man:
        return flint.arb(0)
    return flint.arb((-int(man) if sign else int(man), int(exp)))


def to_acb(z) -> flint.acb:
    z = mpmath.mpc(z)
    return flint.acb(to_arb(z.real), to_arb(z.imag))


def _arb_to_mpf(x: flint.arb):
    man, exp = x.mid().man_exp()
    return mpmath.mpf((int(man), int(exp)))


def from_acb(z: flint.acb) -> tuple[mpmath.mpc, float]:
    """Midpoint as mpc and a radius bound as float."""
    value = mpmath.mpc(_arb_to_mpf(z.real), _arb_to_mpf(z.imag))
    rad = float(z.real.rad()) + float(z.imag.rad())
    return value, rad


class arb_precision:
    """Context manager setting Arb's working precision in bits."""

    def __init__(self, bits: int):
        self.bits = bits

    def __enter__(self):
        self._old = flint.ctx.prec
        flint.ctx.prec = self.bits
        return self

    def __exit__(self, *exc):
        flint.ctx.prec = self._old


def gamma_upper_ladder(s, lambdas, y) -> list[flint.acb]:
    """lam^{-s} Gamma(s, lam y) for each lam in ``lambdas`` (arb values), ball arithmetic.

    Must be called inside an ``arb_precision`` block; ``s`` and ``y`` are acb/arb.
    """
    out = []
    neg_s = -s
    for lam in lambdas:
        out.append(flint.acb(lam * y).gamma_upper(s) * flint.acb(lam).pow(neg_s))
    return out
