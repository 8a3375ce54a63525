"""Dirichlet series over square-free indices, smoothed sums, and sign changes.

Two routes to D_r(s) = sum_{r^2 | m} a(m) m^{-s}:

* ``d_r_direct`` sums the series (Re(s) > 1 only; oracle role);
* ``d_r_eval`` uses the additive-character identity
  sum_{d | r^2} sum_{(u, d) = 1} e(m u / d) = r^2 [r^2 | m] to write
  D_r(s) = (2 pi)^{s'} / Gamma(s') r^{-2} sum_{d | r^2} sum_u Lambda(f, u/d, s),
  which is entire in s.

M(s) = sum_r mu(r) D_r(s). For many values of s on a vertical line the
``HorocycleSeries`` evaluator is used instead of incomplete gammas: the split
integrals are discretized once on fixed Gauss-Legendre nodes in log y, where
the integrands (class sums of f and of its cusp partners on horocycles) do not
depend on s. Each new s then costs two dot products.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import flint
import mpmath
import numpy as np

from .arith import divisors, epsilon_power, is_squarefree, mobius, squarefree_upto
from .context import DEFAULT_CONTEXT, ConvergenceError, DomainError, EvalContext, NeedsMoreCoefficients, ValidationError
from .mellin import LATTICE, ODD, MellinEvaluator, decompose_cusp, _dft_plus, _unit_acb
from .qspace import HalfIntegralForm
from .special import arb_precision, from_acb, to_acb


@dataclass
class SeriesEval:
    value: mpmath.mpc
    certified_error: float
    truncation: dict
    s: complex
    method: str = ""

    def __complex__(self):
        return complex(self.value)


# ---------------------------------------------------------------------------
# Coefficient helpers


def a_float(form: HalfIntegralForm) -> np.ndarray:
    """a(m) = c(m) / (scale m^{k/4 - 1/2}) as float64, a[0] = 0."""
    m = np.arange(form.N + 1, dtype=np.float64)
    m[0] = 1.0
    c = np.array(form.c, dtype=np.float64) / form.scale
    out = c / m ** (form.k / 4 - 0.5)
    out[0] = 0.0
    return out


def a_bound_constant(form: HalfIntegralForm, ctx: EvalContext = DEFAULT_CONTEXT) -> float:
    """C with |a(m)| <= C m^{1/4} on the table, times tail_safety."""
    a = np.abs(a_float(form))
    m = np.arange(form.N + 1, dtype=np.float64)
    m[0] = 1.0
    return float(np.max(a / m**0.25)) * ctx.tail_safety


def _sqfree_mask(n: int) -> np.ndarray:
    mask = np.ones(n + 1, dtype=bool)
    mask[0] = False
    for p in range(2, math.isqrt(n) + 1):
        mask[p * p :: p * p] = False
    return mask


# ---------------------------------------------------------------------------
# D_r


def d_r_direct(form: HalfIntegralForm, r: int, s, m_max: int | None = None, ctx: EvalContext = DEFAULT_CONTEXT) -> SeriesEval:
    """Truncated sum over m = 0 (mod r^2), m <= m_max, of a(m) m^{-s}.

    The tail bound uses |a(m)| <= C m^{1/4}; it is finite only for Re(s) > 5/4.
    """
    s = mpmath.mpc(s)
    sigma = float(s.real)
    if sigma <= 1:
        raise DomainError("direct summation of D_r needs Re(s) > 1")
    m_max = form.N if m_max is None else m_max
    if m_max > form.N:
        raise NeedsMoreCoefficients(m_max, form.N)
    r2 = r * r
    with ctx.workdps():
        w = mpmath.mpf(form.k) / 4 - mpmath.mpf(1) / 2
        terms = []
        for m in range(r2, m_max + 1, r2):
            c = form.c[m]
            if c:
                terms.append(mpmath.mpf(c) * mpmath.exp(-(s + w) * mpmath.log(m)))
        value = mpmath.fsum(terms) / form.scale
    C = a_bound_constant(form, ctx)
    if sigma > 1.25:
        # sum_{n > m_max / r^2} C (r^2 n)^{1/4 - sigma}
        n0 = m_max // r2
        tail = C * r2 ** (0.25 - sigma) * (max(n0, 1) ** (1.25 - sigma)) / (sigma - 1.25) if n0 else C * r2 ** (0.25 - sigma) * (1 + 1 / (sigma - 1.25))
    else:
        tail = math.inf
    return SeriesEval(value, tail, {"m_max": m_max, "tail_bound": tail}, complex(s), "direct")


def _prefactor(k: int, s) -> mpmath.mpc:
    sp = s + mpmath.mpf(k) / 4 - mpmath.mpf(1) / 2
    return mpmath.power(2 * mpmath.pi, sp) / mpmath.gamma(sp)


def d_r_eval(form: HalfIntegralForm, r: int, s, ctx: EvalContext = DEFAULT_CONTEXT, evaluator: MellinEvaluator | None = None) -> SeriesEval:
    """(2 pi)^{s'} / Gamma(s') r^{-2} sum_{d | r^2} sum_{(u,d)=1} Lambda(f, u/d, s); entire in s."""
    ev = evaluator or MellinEvaluator(form, ctx)
    with ctx.workdps():
        s = mpmath.mpc(s)
        total = mpmath.mpc(0)
        err = 0.0
        for d in divisors(r * r):
            cs = ev.class_sum(d, s)
            total += cs.value
            err += cs.error
        pref = _prefactor(form.k, s) / (r * r)
        value = pref * total
        cert = float(abs(pref)) * err + float(abs(value)) * 10.0 ** (-ctx.working_digits + 3)
    flags = {} if is_squarefree(r) else {"excluded_from_M": True}
    return SeriesEval(value, cert, {"divisors": len(divisors(r * r)), **flags}, complex(s), "ladder")


@dataclass
class BoundScan:
    sigma: float
    tau: float
    rows: list  # (r, |D_r|, |D_r| r^2, |D_r| / r^2.3, squarefree)
    const_right: float  # max |D_r| r^2
    const_left: float  # max |D_r| / r^2.3
    fitted_exponent: float  # e with |D_r| ~ A r^{-e}
    fitted_constant: float


def _loglog_fit(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float, float]:
    """Slope, intercept, and slope standard error of ys against xs (already logged)."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    n = len(x)
    if n > 2:
        resid = y - A @ coef
        s2 = float(resid @ resid) / (n - 2)
        se = math.sqrt(s2 / float(((x - x.mean()) ** 2).sum()))
    else:
        se = 0.0
    return float(coef[0]), float(coef[1]), se


def d_r_bound_scan(form: HalfIntegralForm, r_list: Iterable[int], sigma: float, tau: float = 0.0, ctx: EvalContext = DEFAULT_CONTEXT, evaluator=None) -> BoundScan:
    """|D_r(sigma + i tau)| against r^{-2} and r^{2.3}, plus an upper-envelope power fit."""
    ev = evaluator or MellinEvaluator(form, ctx)
    rows = []
    for r in r_list:
        v = d_r_eval(form, r, mpmath.mpc(sigma, tau), ctx, ev) if not isinstance(ev, HorocycleSeries) else ev.d_r(r, mpmath.mpc(sigma, tau))
        a = float(abs(v.value))
        rows.append((r, a, a * r * r, a / r**2.3, is_squarefree(r)))
    good = [(r, a) for r, a, *_ , sq in rows if sq and a > 0]
    slope, icpt, _ = _loglog_fit([math.log(r) for r, _ in good], [math.log(a) for _, a in good]) if len(good) >= 2 else (0.0, 0.0, 0.0)
    # shift the fitted line up so it dominates every point
    lift = max((math.log(a) - (slope * math.log(r) + icpt) for r, a in good), default=0.0)
    return BoundScan(sigma, tau, rows, max(x[2] for x in rows), max(x[3] for x in rows), -slope, math.exp(icpt + lift))


# ---------------------------------------------------------------------------
# Horocycle evaluator for M(s) and D_r(s)


def _gl_rule(n: int):
    """Gauss-Legendre nodes and weights on [-1, 1] at the current Arb precision."""
    nodes, weights = [], []
    for i in range(n):
        x, w = flint.arb.legendre_p_root(n, i, weight=True)
        nodes.append(x)
        weights.append(w)
    return nodes, weights


def _terms_for(y: float, digits: int, growth: float, L: int = 1) -> int:
    """Index bound so that j^growth e^{-2 pi j y / L} < 10^{-digits} beyond it."""
    target = digits * math.log(10) + 10
    a = 2 * math.pi * y / L
    j = max(1.0, target / a)
    for _ in range(60):
        j_new = (target + growth * math.log(max(j, 1.0))) / a
        if abs(j_new - j) < 0.5:
            break
        j = j_new
    return int(j) + 2


class HorocycleSeries:
    """M_R(s) = sum_{r <= R} mu(r) D_r(s) and the D_r(s), from s-independent horocycle samples.

    For every d | r^2 the upper pieces integrate P_d(y) = sum_u f(iy + u/d) over
    y >= y0(d), and the lower pieces, after y = z / D, integrate

        const_d (d or 2d)^{-k/2} Q_d(z / D),  Q_d(y) = sum_u kappa(v_u) f_*(iy + v_u/d),

    over z >= 1 / y0(d); the factor d^{1-2s} of the functional equation is
    absorbed by that substitution, so the node values are s-free. y0(d) is the
    grid boundary just below 1/(2d). Nodes are composite Gauss-Legendre on
    panels of width ``panel`` in log y and log z.
    """

    def __init__(self, form: HalfIntegralForm, r_max: int, digits: int = 30, panel: float = 0.2, nodes: int = 24, sigma_max: float = 4.0, include_nonsquarefree: bool = False):
        self.form = form
        self.k = form.k
        self.r_max = r_max
        self.digits = digits
        self.bits = int(digits * 3.33) + 64
        self.panel = panel
        self.n_nodes = nodes
        self.sigma_max = sigma_max
        self.rs = [r for r in range(1, r_max + 1) if is_squarefree(r)]
        sampled = range(1, r_max + 1) if include_nonsquarefree else self.rs
        ds = set()
        for r in sampled:
            ds.update(divisors(r * r))
        self.ds = sorted(ds)
        self._mev = MellinEvaluator(form, EvalContext(digits=max(digits, 15)), validate=True)
        with arb_precision(self.bits):
            self._build()

    # grids -----------------------------------------------------------------
    def _build(self):
        k = self.k
        d_max = max(self.ds)
        self.y_min = Fraction(1, 2 * d_max)
        ln_y_min = math.log(float(self.y_min))
        Delta = self.panel
        self.i_of = {d: int(math.floor((math.log(1 / (2 * d)) - ln_y_min) / Delta + 1e-12)) for d in self.ds}
        tail = self.digits * math.log(10) + 25
        y_end = 1.2 * (tail + self.sigma_max * math.log(20)) / (2 * math.pi)
        n_y = int(math.ceil((math.log(y_end) - ln_y_min) / Delta))
        gl_x, gl_w = _gl_rule(self.n_nodes)
        DeltaA = flint.arb(Delta)
        lnymin = flint.arb(flint.fmpq(1, 2 * d_max)).log()
        self.half = DeltaA / 2

        def panel_nodes(base_log: flint.arb, i: int):
            mid = base_log + DeltaA * i + self.half
            return [mid + self.half * x for x in gl_x]

        self.gl_w = [self.half * w for w in gl_w]
        # y side: per panel, log y nodes
        self.y_logs = [panel_nodes(lnymin, i) for i in range(n_y)]
        self.y_vals = [[t.exp() for t in row] for row in self.y_logs]
        # z side: boundaries Z_j = (1/y_min) e^{(j - i(1)) Delta}
        i1 = self.i_of[1]
        lnz0 = -lnymin - DeltaA * i1
        z_tail = 0.0
        for d in self.ds:
            case = decompose_cusp(1 if d > 1 else 0, d)
            mu_min = 1.0 / LATTICE[case.target_cusp]
            z_tail = max(z_tail, case.D * y_end / mu_min)
        n_z = int(math.ceil((math.log(z_tail) - float(lnz0.mid())) / Delta)) + 1
        self.z_logs = [panel_nodes(lnz0, j) for j in range(n_z)]
        self.z_vals = [[t.exp() for t in row] for row in self.z_logs]
        self.z_shift = i1
        self._sample_upper()
        self._sample_lower(y_end)
        self._merged = None
        self._per_r = {}

    def _sample_upper(self):
        """P_d at y nodes for panels i >= i(d); P_d = sum_{h | d} mu(d/h) h S_h."""
        form = self.form
        growth = self.k / 4 + 0.25
        hs = set()
        for d in self.ds:
            hs.update(divisors(d))
        first_panel = {}
        for d in self.ds:
            for h in divisors(d):
                first_panel[h] = min(first_panel.get(h, 10**9), self.i_of[d])
        two_pi = 2 * flint.arb.pi()
        S = {}
        n_y = len(self.y_vals)
        for h in sorted(hs):
            i0 = first_panel[h]
            y_lo = math.exp(math.log(float(self.y_min)) + i0 * self.panel)
            J = _terms_for(y_lo, self.digits + 5, growth) // h + 1
            if J * h > form.N:
                raise NeedsMoreCoefficients(J * h, form.N, f"table for horocycle samples at y = {y_lo:.3g}")
            poly = flint.fmpz_poly([0] + [form.c[h * n] for n in range(1, J + 1)])
            rows = {}
            for i in range(i0, n_y):
                y_lo_i = math.exp(math.log(float(self.y_min)) + i * self.panel)
                Ji = min(J, _terms_for(y_lo_i, self.digits + 5, growth) // h + 1)
                p = poly.truncate(Ji + 1)
                rows[i] = [p((-two_pi * h * y).exp()) for y in self.y_vals[i]]
            S[h] = rows
        inv_scale = flint.arb(flint.fmpq(1, form.scale))
        self.P = {}
        for d in self.ds:
            rows = {}
            for i in range(self.i_of[d], n_y):
                vals = [flint.arb(0)] * self.n_nodes
                for h in divisors(d):
                    mu = mobius(d // h)
                    if mu:
                        row = S[h][i]
                        vals = [v + row[n] * (mu * h) for n, v in enumerate(vals)]
                rows[i] = [v * inv_scale for v in vals]
            self.P[d] = rows

    def _sample_lower(self, y_end: float):
        """const_d (d or 2d)^{-k/2} Q_d(z / D) at z nodes for panels j >= i(1) - i(d)."""
        k = self.k
        growth = self.k / 4 + 0.25
        two_pi = 2 * flint.arb.pi()
        self.R = {}
        for d in self.ds:
            case1 = decompose_cusp(1 if d > 1 else 0, d)
            cusp = case1.target_cusp
            L = LATTICE[cusp]
            D = case1.D
            j0 = self.z_shift - self.i_of[d]
            z_lo = math.exp(float(self.z_logs[j0][0].mid()) - self.panel)  # panel start
            y1 = z_lo / D
            J = _terms_for(y1, self.digits + 5, growth, L)
            exp = self._mev.expansion(cusp, J)
            nums = exp.series.numerators()
            M = L * d
            weights = [flint.acb(0)] * M
            for u in range(d):
                if math.gcd(u, d) != 1:
                    continue
                c = decompose_cusp(u, d)
                weights[c.v % M] += _unit_acb(c.kappa(k))
            K = _dft_plus(weights)
            coeffs = [flint.acb(0)] + [K[j % M] * nums[j] for j in range(1, J + 1)]
            poly = flint.acb_poly(coeffs)
            if case1.case == ODD:
                eps = complex(epsilon_power(d, -k))
                const = flint.acb(eps.real, eps.imag) * flint.arb(2 * d) ** (flint.arb(-k) / 2)
            else:
                sn, cs = flint.arb.sin_cos_pi_fmpq(flint.fmpq(-k, 4))
                const = flint.acb(cs, sn) * flint.arb(d) ** (flint.arb(-k) / 2)
            const = const * flint.arb(flint.fmpq(1, exp.series.den))
            z_stop = D * y_end * L * 1.0
            rows = {}
            for j in range(j0, len(self.z_vals)):
                zj = math.exp(float(self.z_logs[j][0].mid()) - self.panel)
                if zj > z_stop:
                    break
                Jj = min(J, _terms_for(zj / D, self.digits + 5, growth, L))
                p = poly.truncate(Jj + 1) if Jj < J else poly
                rows[j] = [p((-two_pi * z / (D * L)).exp()) * const for z in self.z_vals[j]]
            self.R[d] = rows

    # weights ---------------------------------------------------------------
    def weight(self, d: int, R: int | None = None) -> Fraction:
        """w_d = sum over square-free r <= R with d | r^2 of mu(r) / r^2."""
        R = self.r_max if R is None else R
        return sum((Fraction(mobius(r), r * r) for r in self.rs if r <= R and (r * r) % d == 0), Fraction(0))

    def _combine(self, coef: dict[int, Fraction]):
        H = {}
        Rz = {}
        for d, c in coef.items():
            if not c:
                continue
            ca = flint.arb(flint.fmpq(c.numerator, c.denominator))
            for i, row in self.P[d].items():
                acc = H.get(i)
                H[i] = [x * ca for x in row] if acc is None else [a + x * ca for a, x in zip(acc, row)]
            for j, row in self.R[d].items():
                acc = Rz.get(j)
                Rz[j] = [x * ca for x in row] if acc is None else [a + x * ca for a, x in zip(acc, row)]
        return H, Rz

    def _integrate(self, H, Rz, s) -> flint.acb:
        k = self.k
        with arb_precision(self.bits):
            sa = to_acb(s)
            shift = flint.arb(flint.fmpq(2 * k - 4, 8))
            sp = sa + shift
            sq = 1 - sa + shift
            total = flint.acb(0)
            for i, row in H.items():
                logs = self.y_logs[i]
                for n, v in enumerate(row):
                    total += v * self.gl_w[n] * (sp * logs[n]).exp()
            for j, row in Rz.items():
                logs = self.z_logs[j]
                for n, v in enumerate(row):
                    total += v * self.gl_w[n] * (sq * logs[n]).exp()
            pi2 = 2 * flint.arb.pi()
            pref = flint.acb(pi2).pow(sp) * sp.rgamma()
            return pref * total

    def m_value(self, s, R: int | None = None) -> flint.acb:
        with arb_precision(self.bits):
            if R is None or R == self.r_max:
                if self._merged is None:
                    self._merged = self._combine({d: self.weight(d) for d in self.ds})
                H, Rz = self._merged
            else:
                H, Rz = self._combine({d: self.weight(d, R) for d in self.ds})
            return self._integrate(H, Rz, s)

    def calibrate(self, s=2, ctx: EvalContext | None = None) -> float:
        """|D_1(s) by horocycle nodes - D_1(s) by the incomplete-gamma ladder|, an empirical quadrature check."""
        ctx = ctx or EvalContext(digits=max(30, self.digits))
        ref = d_r_eval(self.form, 1, s, ctx, self._mev if self._mev.ctx.digits >= ctx.digits else None)
        got = self.d_r(1, s)
        self.calibration = float(abs(got.value - ref.value))
        return self.calibration

    def d_r(self, r: int, s) -> SeriesEval:
        if r > self.r_max:
            raise DomainError(f"r = {r} exceeds the evaluator's r_max = {self.r_max}")
        if any(d not in self.P for d in divisors(r * r)):
            raise DomainError(f"r = {r} is not square-free; build with include_nonsquarefree=True")
        with arb_precision(self.bits):
            if r not in self._per_r:
                self._per_r[r] = self._combine({d: Fraction(1, r * r) for d in divisors(r * r)})
            H, Rz = self._per_r[r]
            val = self._integrate(H, Rz, s)
        with mpmath.workdps(self.digits + 10):
            v, rad = from_acb(val)
        err = rad + getattr(self, "calibration", 0.0)
        return SeriesEval(v, err, {"r": r, "nodes": self.n_nodes, "panel": self.panel, "quadrature": "Gauss-Legendre, calibrated against the ladder" if hasattr(self, "calibration") else "uncalibrated"}, complex(s), "horocycle")


# ---------------------------------------------------------------------------
# M(s)


def direct_sqfree_sum(form: HalfIntegralForm, s, ctx: EvalContext = DEFAULT_CONTEXT) -> SeriesEval:
    """sum over square-free t <= N of a(t) t^{-s}, with the C t^{1/4} tail bound (Re(s) > 5/4)."""
    s = mpmath.mpc(s)
    sigma = float(s.real)
    if sigma <= 1:
        raise DomainError("direct summation of M needs Re(s) > 1")
    with ctx.workdps():
        w = mpmath.mpf(form.k) / 4 - mpmath.mpf(1) / 2
        terms = [mpmath.mpf(form.c[t]) * mpmath.exp(-(s + w) * mpmath.log(t)) for t in squarefree_upto(form.N) if form.c[t]]
        value = mpmath.fsum(terms) / form.scale
    C = a_bound_constant(form, ctx)
    tail = C * form.N ** (1.25 - sigma) / (sigma - 1.25) if sigma > 1.25 else math.inf
    return SeriesEval(value, tail, {"t_max": form.N, "tail_bound": tail}, complex(s), "direct")


def _tail_fit(rs: Sequence[int], mags: Sequence[float], R: int) -> tuple[float, float, float]:
    """Fit |D_r| <= A r^{-e} (upper envelope) and return (A, e, sum_{r > R} A r^{-e})."""
    pts = [(r, m) for r, m in zip(rs, mags) if m > 0 and r > 1]
    if len(pts) < 3:
        return 0.0, 0.0, math.inf
    slope, icpt, _ = _loglog_fit([math.log(r) for r, _ in pts], [math.log(m) for _, m in pts])
    lift = max(math.log(m) - (slope * math.log(r) + icpt) for r, m in pts)
    A, e = math.exp(icpt + lift), -slope
    if e <= 1:
        return A, e, math.inf
    return A, e, A * R ** (1 - e) / (e - 1)


def m_eval(form: HalfIntegralForm, s, ctx: EvalContext = DEFAULT_CONTEXT, r_max: int = 10, method: str = "ladder", evaluator=None, margin: float = 0.0) -> SeriesEval:
    """sum_{r <= r_max} mu(r) D_r(s) with an empirical tail and a Cauchy check.

    The tail is A r_max^{1-e}/(e-1) from an upper-envelope fit |D_r(s)| <= A r^{-e}
    over the computed r (an empirical model, not a proof). The Cauchy check is the
    change from r_max/2 to r_max; the reported error is the larger of the two.
    """
    s = mpmath.mpc(s)
    if float(s.real) <= 0.75 + margin:
        raise DomainError("M(s) is only continued to Re(s) > 3/4")
    if method == "horocycle":
        ev = evaluator or HorocycleSeries(form, r_max, digits=ctx.digits)
        terms = {r: ev.d_r(r, s) for r in range(1, r_max + 1) if is_squarefree(r)}
    elif method == "ladder":
        ev = evaluator or MellinEvaluator(form, ctx)
        terms = {r: d_r_eval(form, r, s, ctx, ev) for r in range(1, r_max + 1) if is_squarefree(r)}
    else:
        raise DomainError(f"unknown method {method!r}")
    with ctx.workdps():
        value = mpmath.fsum(mobius(r) * t.value for r, t in terms.items())
        half = mpmath.fsum(mobius(r) * t.value for r, t in terms.items() if 2 * r <= r_max)
        numeric = sum(t.certified_error for t in terms.values())
        A, e, tail = _tail_fit(list(terms), [float(abs(t.value)) for t in terms.values()], r_max)
        cauchy = float(abs(value - half))
    err = numeric + max(tail, cauchy)
    trunc = {"r_max": r_max, "tail_model": "fitted |D_r| <= A r^-e", "A": A, "e": e, "tail": tail, "cauchy_half": cauchy, "numeric": numeric}
    return SeriesEval(value, err, trunc, complex(s), method)


# ---------------------------------------------------------------------------
# Smoothed sums


def _fsum_float(x: np.ndarray) -> float:
    return math.fsum(x.tolist())


def smoothed_sum_sqfree(form: HalfIntegralForm, x: float, t_max: int | None = None, with_tail: bool = False):
    """sum over square-free t <= t_max of a(t) e^{-t/x} (correctly rounded summation, index order)."""
    t_max = form.N if t_max is None else t_max
    if t_max < 20 * x:
        raise DomainError(f"t_max = {t_max} below 20 x = {20 * x}")
    if t_max > form.N:
        raise NeedsMoreCoefficients(t_max, form.N)
    a = a_float(form)[: t_max + 1]
    t = np.arange(t_max + 1, dtype=np.float64)
    mask = _sqfree_mask(t_max)
    val = _fsum_float((a * np.exp(-t / x))[mask])
    if not with_tail:
        return val
    C = a_bound_constant(form)
    tail = C * t_max**0.25 * x * math.exp(-t_max / x) / max(1e-300, 1 - x / (4 * t_max))
    return val, tail


def smoothed_sum_second_moment(form: HalfIntegralForm, x: float, m_max: int | None = None) -> float:
    """sum_{m <= m_max} a(m)^2 e^{-m/x}."""
    m_max = form.N if m_max is None else m_max
    if m_max < 20 * x:
        raise DomainError(f"m_max = {m_max} below 20 x = {20 * x}")
    if m_max > form.N:
        raise NeedsMoreCoefficients(m_max, form.N)
    a = a_float(form)[: m_max + 1]
    m = np.arange(m_max + 1, dtype=np.float64)
    return _fsum_float(a * a * np.exp(-m / x))


@dataclass(frozen=True)
class ExponentFit:
    exponent: float
    stderr: float
    band: tuple[float, float]
    intercept: float
    residuals: tuple


def growth_exponent_fit(values: Sequence[tuple[float, float]], min_points: int = 4) -> ExponentFit:
    """Least-squares slope of log |S| against log x, with a +-2 standard-error band."""
    if len(values) < min_points:
        raise DomainError(f"need at least {min_points} points, got {len(values)}")
    xs = [math.log(x) for x, _ in values]
    ys = [math.log(abs(v)) for _, v in values]
    if max(xs) - min(xs) < math.log(10):
        raise DomainError("points must span at least one decade")
    slope, icpt, se = _loglog_fit(xs, ys)
    res = tuple(y - (slope * x + icpt) for x, y in zip(xs, ys))
    return ExponentFit(slope, se, (slope - 2 * se, slope + 2 * se), icpt, res)


# ---------------------------------------------------------------------------
# Contour check


@dataclass
class ContourResult:
    x: float
    integral: float
    smoothed: float
    gap: float
    quad_error: float
    truncation_bound: float
    tau_max: float
    r_max: int
    nodes: int


def _abs_gamma_2(tau: float) -> float:
    """|Gamma(2 + i tau)| from |Gamma(1 + i tau)|^2 = pi tau / sinh(pi tau)."""
    if tau == 0:
        return 1.0
    return math.hypot(1, tau) * math.sqrt(math.pi * tau / math.sinh(math.pi * tau)) if tau < 200 else 0.0


def contour_check(form: HalfIntegralForm, x: float, ctx: EvalContext = DEFAULT_CONTEXT, r_max: int = 40, evaluator: HorocycleSeries | None = None, tau_max: float | None = None, panel: float = 1.0, nodes: int = 16, budget: float = 1e-8) -> ContourResult:
    """(1/2 pi i) int_{Re s = 2} M(s) Gamma(s) x^s ds against sum_t a(t) e^{-t/x}.

    By conjugate symmetry the integral is (1/pi) Re int_0^T M(2+it) Gamma(2+it) x^{2+it} dt.
    Composite Gauss-Legendre with ``nodes`` and ``nodes - 6`` points per panel gives
    the quadrature error estimate; the segment is truncated where the bound
    sup|M| x^2 int_T^oo |Gamma(2+it)| dt drops below ``budget`` times the result scale.
    """
    if not 10 <= x <= 10**4:
        raise DomainError("contour check is set up for 10 <= x <= 10^4")
    ev = evaluator or HorocycleSeries(form, r_max, digits=max(25, ctx.digits // 2))
    # sup |M(2 + it)| <= sum_t |a(t)| / t^2 (direct bound plus tail)
    a = np.abs(a_float(form))
    t = np.arange(form.N + 1, dtype=np.float64)
    t[0] = 1
    absM = float(np.sum(a / t**2)) + a_bound_constant(form, ctx) * form.N ** (-0.75) / 0.75
    if tau_max is None:
        tau_max = 4.0
        while absM * x**2 * mpmath.quad(lambda u: _abs_gamma_2(float(u)), [tau_max, tau_max + 60]) / math.pi > budget:
            tau_max += 2.0
    trunc = float(absM * x**2 * mpmath.quad(lambda u: _abs_gamma_2(float(u)), [tau_max, tau_max + 60]) / math.pi)
    n_panels = int(math.ceil(tau_max / panel))
    h = tau_max / n_panels

    def integrate(n: int) -> float:
        xs, ws = np.polynomial.legendre.leggauss(n)
        total = mpmath.mpf(0)
        with mpmath.workdps(30):
            for p in range(n_panels):
                for xi, wi in zip(xs, ws):
                    tau = h * p + h / 2 * (1 + xi)
                    s = mpmath.mpc(2, tau)
                    with arb_precision(ev.bits):
                        Mv = ev.m_value(s)
                        mv, _ = from_acb(Mv)
                    total += h / 2 * wi * mpmath.re(mv * mpmath.gamma(s) * mpmath.power(x, s))
            return float(total / mpmath.pi)

    fine = integrate(nodes)
    coarse = integrate(nodes - 6)
    if abs(fine - coarse) > 100 * budget * max(1.0, abs(fine)):
        raise ConvergenceError(f"contour quadrature misses its target: estimate {abs(fine - coarse):.3g}")
    smoothed = smoothed_sum_sqfree(form, x, min(form.N, max(int(60 * x), 20 * int(x))) if 60 * x <= form.N else form.N)
    gap = abs(fine - smoothed) / abs(smoothed)
    return ContourResult(x, fine, smoothed, gap, abs(fine - coarse), trunc, tau_max, ev.r_max, nodes)


# ---------------------------------------------------------------------------
# Signs and coefficient growth


@dataclass
class SignChangeReport:
    t_max: int
    pairs: list
    count: int
    zero_count: int
    zeros: list = field(default_factory=list)


def sign_changes(form: HalfIntegralForm, t_max: int) -> SignChangeReport:
    """Consecutive square-free t1 < t2 (zeros skipped) with c(t1) c(t2) < 0, in exact integers."""
    if t_max > form.N:
        raise NeedsMoreCoefficients(t_max, form.N)
    pairs = []
    zeros = []
    prev = None
    for t in squarefree_upto(t_max):
        c = form.c[t]
        if c == 0:
            zeros.append(t)
            continue
        if prev is not None and (form.c[prev] > 0) != (c > 0):
            pairs.append((prev, t))
        prev = t
    return SignChangeReport(t_max, pairs, len(pairs), len(zeros), zeros)


def verify_pairs(form: HalfIntegralForm, report: SignChangeReport) -> bool:
    sq = set(squarefree_upto(report.t_max))
    for t1, t2 in report.pairs:
        if t1 >= t2 or t1 not in sq or t2 not in sq or form.c[t1] * form.c[t2] >= 0:
            return False
        if any(t in sq and form.c[t] != 0 for t in range(t1 + 1, t2)):
            return False
    return True


@dataclass
class IwaniecReport:
    t_max: int
    max_ratio: float
    argmax: int
    running: list  # (t, running max) at each new record


def iwaniec_check(form: HalfIntegralForm, t_max: int) -> IwaniecReport:
    """Running max over square-free t <= t_max of |a(t)| / t^{3/14}."""
    if t_max > form.N:
        raise NeedsMoreCoefficients(t_max, form.N)
    a = np.abs(a_float(form))
    best, arg = 0.0, 1
    running = []
    for t in squarefree_upto(t_max):
        r = a[t] / t ** (3 / 14)
        if r > best:
            best, arg = float(r), t
            running.append((t, best))
    return IwaniecReport(t_max, best, arg, running)


# ---------------------------------------------------------------------------
# Export


def to_csv(rows: Iterable[Sequence], header: Sequence[str], provenance: dict | None = None) -> str:
    buf = io.StringIO()
    if provenance:
        for key in sorted(provenance):
            buf.write(f"# {key}: {provenance[key]}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (mpmath.mpf,)):
        return mpmath.nstr(v, 20)
    return str(v)


def _jsonable(obj):
    if hasattr(obj, "__dataclass_fields__"):
        return {k: _jsonable(v) for k, v in asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (mpmath.mpc, complex)):
        return {"re": _fmt(mpmath.mpf(obj.real)), "im": _fmt(mpmath.mpf(obj.imag))}
    if isinstance(obj, mpmath.mpf):
        return _fmt(obj)
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def to_json(obj, provenance: dict | None = None) -> str:
    """Deterministic JSON (sorted keys, fixed float formatting) with a provenance block."""
    return json.dumps({"provenance": provenance or {}, "result": _jsonable(obj)}, sort_keys=True, indent=2) + "\n"
