"""Exact q-expansions and Hecke eigenforms in S_{k/2}(Gamma_0(4)).

The space M_{k/2}(Gamma_0(4)) is spanned by the monomials theta^a F^b with
a + 4b = k, where theta = sum_n q^{n^2} and F = sum_{n odd} sigma_1(n) q^n.
Cusp forms are the combinations whose constant terms vanish at the three
cusps infinity, 0 and 1/2. The generators have closed-form expansions at each
cusp, so these constant terms are exact rationals:

* cusp 0:   theta_0 = theta,   F_0 = theta(z + 1/2)^4 / 16;
* cusp 1/2: theta_{1/2} = sum_n Q^{(2n+1)^2},  F_{1/2} = (theta_{1/2}^4 + theta(z + 1/2)^4) / 16,
  written in Q = q^{1/4}.

Expansions at a cusp mean the slash images (-2iz)^{-k/2} f(-1/(4z)) and
(-2z+1)^{-k/2} f(z/(-2z+1)); ``mellin.cusp_expansion`` re-validates them
pointwise against these definitions.
"""

from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import flint

from .arith import is_prime, kronecker, sigma
from .context import DomainError, NeedsMoreCoefficients, UnsupportedWeightError, ValidationError

CUSPS = ("inf", "0", "1/2")


def _fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, flint.fmpq):
        return Fraction(int(x.p), int(x.q))
    return Fraction(int(x))


@dataclass(frozen=True)
class ExactSeries:
    """Truncated power series sum_{i <= order} (poly[i] / den) X^i with X = q^{1/lattice}.

    ``order`` is the last index known exactly; coefficients past it are never
    reported. Arithmetic keeps the common denominator reduced.
    """

    poly: flint.fmpz_poly
    den: int
    order: int
    lattice: int = 1

    def __post_init__(self):
        if self.den <= 0:
            raise DomainError("series denominator must be positive")
        if self.poly.degree() > self.order:
            object.__setattr__(self, "poly", self.poly.truncate(self.order + 1))
        g = math.gcd(int(self.poly.content()), self.den) if not self.poly.is_zero() else self.den
        if g > 1:
            object.__setattr__(self, "poly", flint.fmpz_poly([int(c) // g for c in self.poly.coeffs()]))
            object.__setattr__(self, "den", self.den // g)

    @classmethod
    def from_coefficients(cls, coeffs: Sequence, order: int | None = None, lattice: int = 1) -> "ExactSeries":
        fr = [_fraction(c) for c in coeffs]
        if order is None:
            order = len(fr) - 1
        fr = fr[: order + 1]
        den = math.lcm(*(c.denominator for c in fr)) if fr else 1
        return cls(flint.fmpz_poly([int(c * den) for c in fr]), den, order, lattice)

    @classmethod
    def zero(cls, order: int, lattice: int = 1) -> "ExactSeries":
        return cls(flint.fmpz_poly([]), 1, order, lattice)

    def coeff(self, i: int) -> Fraction:
        if i < 0:
            return Fraction(0)
        if i > self.order:
            raise NeedsMoreCoefficients(i, self.order, "series")
        return Fraction(int(self.poly[i]), self.den)

    __getitem__ = coeff

    def coefficients(self) -> list[Fraction]:
        return [self.coeff(i) for i in range(self.order + 1)]

    def numerators(self) -> list[int]:
        """Integer numerators over ``den``, padded to ``order + 1`` entries."""
        c = [int(x) for x in self.poly.coeffs()]
        return c + [0] * (self.order + 1 - len(c))

    def _check(self, other: "ExactSeries"):
        if self.lattice != other.lattice:
            raise DomainError("series on different exponent lattices")

    def __add__(self, other: "ExactSeries") -> "ExactSeries":
        self._check(other)
        den = math.lcm(self.den, other.den)
        poly = self.poly * (den // self.den) + other.poly * (den // other.den)
        return ExactSeries(poly, den, min(self.order, other.order), self.lattice)

    def __neg__(self) -> "ExactSeries":
        return ExactSeries(-self.poly, self.den, self.order, self.lattice)

    def __sub__(self, other: "ExactSeries") -> "ExactSeries":
        return self + (-other)

    def scale(self, c) -> "ExactSeries":
        c = _fraction(c)
        return ExactSeries(self.poly * c.numerator, self.den * c.denominator, self.order, self.lattice)

    def __mul__(self, other) -> "ExactSeries":
        if not isinstance(other, ExactSeries):
            return self.scale(other)
        self._check(other)
        order = min(self.order, other.order)
        return ExactSeries(self.poly.mul_low(other.poly, order + 1), self.den * other.den, order, self.lattice)

    __rmul__ = scale

    def __pow__(self, e: int) -> "ExactSeries":
        if e < 0:
            raise DomainError("negative powers are not supported")
        if e == 0:
            return ExactSeries(flint.fmpz_poly([1]), 1, self.order, self.lattice)
        return ExactSeries(self.poly.pow_trunc(e, self.order + 1), self.den**e, self.order, self.lattice)

    def truncate(self, order: int) -> "ExactSeries":
        if order > self.order:
            raise NeedsMoreCoefficients(order, self.order, "series")
        return ExactSeries(self.poly.truncate(order + 1), self.den, order, self.lattice)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExactSeries):
            return NotImplemented
        return (self.order, self.lattice, self.den) == (other.order, other.lattice, other.den) and self.poly == other.poly

    def __hash__(self):
        return hash((self.order, self.lattice, self.den, str(self.poly)))


# ---------------------------------------------------------------------------
# Generators


def _theta_numerators(N: int, step: int = 1, alternating: bool = False) -> list[int]:
    """Coefficients of sum_n (+-1)^n X^{step n^2} up to X^N."""
    c = [0] * (N + 1)
    n = 0
    while step * n * n <= N:
        sign = -1 if alternating and n % 2 else 1
        c[step * n * n] += 1 if n == 0 else 2 * sign
        n += 1
    return c


def theta_series(N: int) -> ExactSeries:
    if N < 1:
        raise DomainError("order must be at least 1")
    return ExactSeries(flint.fmpz_poly(_theta_numerators(N)), 1, N)


def f2_series(N: int) -> ExactSeries:
    """F = sum_{n odd} sigma_1(n) q^n, the weight-2 generator on Gamma_0(4)."""
    if N < 1:
        raise DomainError("order must be at least 1")
    c = [0] * (N + 1)
    for n in range(1, N + 1, 2):
        c[n] = sigma(1, n)
    return ExactSeries(flint.fmpz_poly(c), 1, N)


def monomial_exponents(k: int) -> list[tuple[int, int]]:
    """(a, b) with a + 4b = k, ordered by increasing b."""
    if k < 1 or k % 2 == 0:
        raise DomainError(f"weight k must be odd and positive, got {k}")
    return [(k - 4 * b, b) for b in range(k // 4 + 1)]


def generator_expansions(cusp: str, N: int) -> tuple[ExactSeries, ExactSeries]:
    """Exact (theta_*, F_*) at a cusp, to index N on that cusp's lattice."""
    if cusp == "inf":
        return theta_series(N), f2_series(N)
    if cusp == "0":
        t4 = ExactSeries(flint.fmpz_poly(_theta_numerators(N, alternating=True)), 1, N)
        return theta_series(N), (t4**4).scale(Fraction(1, 16))
    if cusp == "1/2":
        c = [0] * (N + 1)
        n = 0
        while (2 * n + 1) ** 2 <= N:
            c[(2 * n + 1) ** 2] = 2
            n += 1
        th = ExactSeries(flint.fmpz_poly(c), 1, N, lattice=4)
        t4 = ExactSeries(flint.fmpz_poly(_theta_numerators(N, step=4, alternating=True)), 1, N, lattice=4)
        # the sum over n in Z hits each odd square twice; c holds that count already
        return th, (th**4 + t4**4).scale(Fraction(1, 16))
    raise DomainError(f"unknown cusp {cusp!r}")


def monomial_basis(k: int, N: int, cusp: str = "inf") -> list[ExactSeries]:
    """All theta^a F^b with a + 4b = k, in the order of ``monomial_exponents``."""
    return list(_monomials(k, N, cusp))


@lru_cache(maxsize=32)
def _monomials(k: int, N: int, cusp: str) -> tuple[ExactSeries, ...]:
    th, F = generator_expansions(cusp, N)
    return tuple(th**a * F**b for a, b in monomial_exponents(k))


def monomial_combination(coords: Sequence, k: int, N: int, cusp: str = "inf") -> ExactSeries:
    basis = monomial_basis(k, N, cusp)
    total = ExactSeries.zero(N, basis[0].lattice)
    for x, m in zip(coords, basis):
        if x:
            total = total + m.scale(x)
    return total


# ---------------------------------------------------------------------------
# Linear algebra helpers over Q


def _nullspace(rows: list[list[Fraction]], ncols: int) -> list[list[Fraction]]:
    """Basis of {x : A x = 0} in reduced form, one vector per free column."""
    if not rows:
        return [[Fraction(int(i == j)) for i in range(ncols)] for j in range(ncols)]
    A = flint.fmpq_mat(len(rows), ncols, [flint.fmpq(x.numerator, x.denominator) for r in rows for x in r])
    R, rank = A.rref()
    pivots = []
    for i in range(rank):
        for j in range(ncols):
            if R[i, j] != 0:
                pivots.append(j)
                break
    free = [j for j in range(ncols) if j not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for i, p in enumerate(pivots):
            v[p] = -_fraction(R[i, f])
        basis.append(v)
    return basis


def _echelon(vectors: list[list[Fraction]]) -> list[list[Fraction]]:
    """Reduced row echelon form of the row space, zero rows dropped."""
    if not vectors:
        return []
    n = len(vectors[0])
    A = flint.fmpq_mat(len(vectors), n, [flint.fmpq(x.numerator, x.denominator) for r in vectors for x in r])
    R, rank = A.rref()
    return [[_fraction(R[i, j]) for j in range(n)] for i in range(rank)]


# ---------------------------------------------------------------------------
# Forms


@dataclass
class HalfIntegralForm:
    """A form in S_{k/2}(Gamma_0(4)) with its exact coefficient table.

    ``c`` is a primitive integer table (first nonzero entry positive).
    ``scale`` is that first nonzero entry, so the normalized form with leading
    coefficient 1 is c / scale. ``coords`` are the exact monomial coordinates
    of c in ``monomial_exponents(k)`` order. a(m) = c(m) / (scale m^{k/4 - 1/2}).
    """

    k: int
    N: int
    c: list[int]
    coords: list[Fraction]
    eigenvalues: dict[int, Fraction] = field(default_factory=dict)
    scale: int = 1

    def __post_init__(self):
        if len(self.c) != self.N + 1:
            raise DomainError("coefficient table length must be N + 1")

    @property
    def first_index(self) -> int:
        return next(m for m, x in enumerate(self.c) if x)

    def normalized(self, m: int) -> Fraction:
        return Fraction(self.coeff(m), self.scale)

    def coeff(self, m: int) -> int:
        if m > self.N:
            raise NeedsMoreCoefficients(m, self.N)
        return self.c[m]

    def a(self, m: int, dps: int = 30):
        import mpmath

        with mpmath.workdps(dps):
            return mpmath.mpf(self.coeff(m)) / self.scale / mpmath.power(m, mpmath.mpf(self.k) / 4 - mpmath.mpf(1) / 2)

    def series(self) -> ExactSeries:
        return ExactSeries(flint.fmpz_poly(self.c), 1, self.N)


def _cusp_constant_rows(k: int) -> list[list[Fraction]]:
    """Constant term of each monomial at each cusp, exactly."""
    rows = []
    for cusp in CUSPS:
        lat = 4 if cusp == "1/2" else 1
        basis = monomial_basis(k, 2 * lat, cusp)
        rows.append([m.coeff(0) for m in basis])
    return rows


def dim_modular(k: int) -> int:
    return k // 4 + 1


def _form_from_coords(k: int, N: int, coords: Sequence[Fraction], eigenvalues=None) -> HalfIntegralForm:
    ser = monomial_combination(coords, k, N)
    nums = ser.numerators()
    g = int(ser.poly.content()) or 1
    first = next(x for x in nums if x)
    if first < 0:
        g = -g
    ints = [x // g for x in nums]
    factor = Fraction(ser.den, g)
    return HalfIntegralForm(k, N, ints, [x * factor for x in coords], dict(eigenvalues or {}), abs(first // g))


def cusp_subspace(k: int, N: int) -> list[HalfIntegralForm]:
    """Echelon basis of S_{k/2}(Gamma_0(4)) to order N, integer-cleared."""
    if k < 5 or k % 2 == 0:
        raise DomainError(f"weight k must be odd and >= 5, got {k}")
    need = 2 * dim_modular(k) + 10
    if N < need:
        raise NeedsMoreCoefficients(need, N, "q-expansion order for the cusp-condition system")
    null = _nullspace(_cusp_constant_rows(k), dim_modular(k))
    if not null:
        return []
    # echelonize on the leading q-coefficients; M_{k/2} is separated by its
    # first dim + 1 coefficients, so a short prefix suffices
    n_cols = min(N, 2 * dim_modular(k) + 10)
    prefix = []
    for v in null:
        ser = monomial_combination(v, k, n_cols)
        prefix.append(ser.coefficients() + list(v))
    ech = _echelon(prefix)
    return [_form_from_coords(k, N, row[n_cols + 1 :]) for row in ech]


# ---------------------------------------------------------------------------
# Hecke operators


def hecke_T_p2(c: Sequence, p: int, k: int) -> list:
    """T(p^2) on a coefficient table c(0..N); output valid for n <= N // p^2.

    b(n) = c(p^2 n) + ((-1)^lam n / p) p^(lam-1) c(n) + p^(2 lam - 1) c(n / p^2), k = 2 lam + 1.
    """
    if p == 2 or not is_prime(p):
        raise DomainError(f"T(p^2) needs an odd prime, got {p}")
    if k % 2 == 0:
        raise DomainError(f"weight k must be odd, got {k}")
    lam = (k - 1) // 2
    p2 = p * p
    N = len(c) - 1
    mid = p ** (lam - 1)
    top = p ** (2 * lam - 1)
    sgn = -1 if lam % 2 else 1
    out = []
    for n in range(N // p2 + 1):
        v = c[p2 * n] + kronecker(sgn * n, p) * mid * c[n]
        if n % p2 == 0:
            v += top * c[n // p2]
        out.append(v)
    return out


def hecke_T4(c: Sequence) -> list:
    """U(4): b(n) = c(4n); a consistency check only."""
    return [c[4 * n] for n in range((len(c) - 1) // 4 + 1)]


def _coordinates(table: Sequence, basis: list[HalfIntegralForm]) -> list[Fraction]:
    """Exact coordinates of ``table`` in ``basis`` (echelon), verified on the whole table."""
    n = len(table) - 1
    if not basis:
        if any(table):
            raise ValidationError("nonzero table outside the zero space")
        return []
    rows = [[Fraction(f.c[m]) for f in basis] for m in range(n + 1)]
    A = flint.fmpq_mat(n + 1, len(basis), [flint.fmpq(x.numerator, x.denominator) for r in rows for x in r])
    rhs = [_fraction(x) for x in table]
    # solve on a square subsystem of pivot rows, verify on the rest
    R, rank = A.transpose().rref()
    if rank < len(basis):
        raise NeedsMoreCoefficients(2 * n, n, "Hecke image (basis not separated)")
    pivots = []
    for i in range(rank):
        pivots.append(next(j for j in range(n + 1) if R[i, j] != 0))
    sub = flint.fmpq_mat(rank, rank, [flint.fmpq(basis[j].c[m]) for m in pivots for j in range(rank)])
    b = flint.fmpq_mat(rank, 1, [flint.fmpq(rhs[m].numerator, rhs[m].denominator) for m in pivots])
    x = [_fraction(v) for v in sub.solve(b).entries()]
    for m in range(n + 1):
        if sum(x[j] * basis[j].c[m] for j in range(rank)) != rhs[m]:
            raise ValidationError(f"Hecke image leaves the cusp space at index {m}")
    return x


def hecke_matrix(basis: list[HalfIntegralForm], p: int) -> flint.fmpq_mat:
    """Matrix of T(p^2) on ``basis``: column j holds the coordinates of T f_j."""
    d = len(basis)
    if d == 0:
        return flint.fmpq_mat(0, 0)
    k = basis[0].k
    images = [hecke_T_p2(f.c, p, k) for f in basis]
    short = [HalfIntegralForm(k, len(images[0]) - 1, f.c[: len(images[0])], f.coords, {}, f.scale) for f in basis]
    cols = [_coordinates(img, short) for img in images]
    return flint.fmpq_mat(d, d, [flint.fmpq(cols[j][i].numerator, cols[j][i].denominator) for i in range(d) for j in range(d)])


def _rational_roots(poly: flint.fmpq_poly) -> list[Fraction]:
    num, _ = poly.numer(), poly.denom()
    z = flint.fmpz_poly([int(c) for c in num.coeffs()])
    roots = []
    for fac, e in z.factor()[1]:
        if fac.degree() != 1:
            raise UnsupportedWeightError(f"characteristic polynomial has irreducible factor {fac} over Q")
        a, b = int(fac[1]), int(fac[0])
        roots.extend([Fraction(-b, a)] * e)
    return sorted(roots)


def eigenbasis(k: int, N: int, primes: Sequence[int] = (3, 5, 7)) -> list[HalfIntegralForm]:
    """Simultaneous T(p^2) eigenforms with rational eigenvalues, normalized c(first) = 1 up to ``scale``."""
    basis = cusp_subspace(k, N)
    if not primes or not basis:
        return basis
    d = len(basis)
    mats = {p: hecke_matrix(basis, p) for p in primes}
    for p in primes:
        for q in primes:
            if p < q and mats[p] * mats[q] != mats[q] * mats[p]:
                raise ValidationError(f"T({p}^2) and T({q}^2) do not commute")
    # split the whole space by each operator in turn
    spaces = [[[Fraction(int(i == j)) for i in range(d)] for j in range(d)]]
    values: list[dict[int, Fraction]] = [{}]
    for p in primes:
        M = mats[p]
        roots = sorted(set(_rational_roots(M.charpoly())))
        new_spaces, new_values = [], []
        for space, vals in zip(spaces, values):
            for lam in roots:
                # vectors x in span(space) with (M - lam) x = 0
                B = flint.fmpq_mat(d, len(space), [flint.fmpq(space[j][i].numerator, space[j][i].denominator) for i in range(d) for j in range(len(space))])
                K = (M - lam_matrix(lam, d)) * B
                rows = [[_fraction(K[i, j]) for j in range(len(space))] for i in range(d)]
                ys = _nullspace(rows, len(space))
                if ys:
                    vecs = [[sum(y[j] * space[j][i] for j in range(len(space))) for i in range(d)] for y in ys]
                    new_spaces.append(vecs)
                    new_values.append({**vals, p: lam})
        if sum(len(s) for s in new_spaces) != d:
            raise UnsupportedWeightError(f"T({p}^2) is not diagonalizable over Q on S_{k}/2")
        spaces, values = new_spaces, new_values
    forms = []
    for space, vals in zip(spaces, values):
        for vec in _echelon(space):
            coords = [sum(vec[j] * basis[j].coords[i] for j in range(d)) for i in range(dim_modular(k))]
            forms.append(_form_from_coords(k, N, coords, vals))
    forms.sort(key=lambda f: (tuple(f.eigenvalues[p] for p in primes), f.first_index))
    return forms


def lam_matrix(lam: Fraction, d: int) -> flint.fmpq_mat:
    return flint.fmpq_mat(d, d, [flint.fmpq(lam.numerator, lam.denominator) if i == j else 0 for i in range(d) for j in range(d)])


def verify_eigen(form: HalfIntegralForm) -> bool:
    """T(p^2) c = lam_p c exactly on the valid range, for every recorded p."""
    for p, lam in form.eigenvalues.items():
        img = hecke_T_p2(form.c, p, form.k)
        if any(Fraction(img[n]) != lam * form.c[n] for n in range(len(img))):
            return False
    return True
