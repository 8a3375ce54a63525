"""Exact arithmetic kernel: factorization, symbols, and the theta multiplier.

Factorization goes through a smallest-prime-factor sieve that is grown on
demand up to ``SIEVE_LIMIT``. Larger inputs are rejected rather than handled
slowly.

Symbol conventions
------------------
``kronecker(c, d)`` for odd ``d`` is Shimura's extension of the Jacobi
symbol:

* ``d > 0``: the Jacobi symbol (c/d), for any integer ``c``;
* ``d < 0``: (c/|d|) if ``c >= 0``, and -(c/|d|) if ``c < 0``;
* (0/1) = (0/-1) = 1.

For even ``d`` it is the ordinary Kronecker symbol. The multiplier test in
the suite checks the odd-``d`` convention against theta quotients.
"""

from __future__ import annotations

import math
from functools import lru_cache

import mpmath
import numpy as np

from .context import DEFAULT_CONTEXT, DomainError, EvalContext
from .special import cpow

SIEVE_LIMIT = 10**7

_spf = np.zeros(2, dtype=np.int32)


def _ensure_sieve(n: int) -> None:
    global _spf
    if n < len(_spf):
        return
    if n > SIEVE_LIMIT:
        raise DomainError(f"{n} exceeds the factorization limit {SIEVE_LIMIT}")
    size = min(SIEVE_LIMIT, max(n, 2 * len(_spf), 1 << 16)) + 1
    spf = np.zeros(size, dtype=np.int32)
    for p in range(2, math.isqrt(size - 1) + 1):
        if spf[p] == 0:
            block = spf[p * p :: p]
            block[block == 0] = p
    idx = np.nonzero(spf == 0)[0]
    spf[idx] = idx
    _spf = spf


def factorize(n: int) -> dict[int, int]:
    """Prime factorization of a positive integer as ``{p: e}``."""
    n = int(n)
    if n < 1:
        raise DomainError(f"cannot factor {n}")
    _ensure_sieve(n)
    out: dict[int, int] = {}
    while n > 1:
        p = int(_spf[n])
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        out[p] = e
    return out


def primes_up_to(n: int) -> list[int]:
    if n < 2:
        return []
    _ensure_sieve(n)
    idx = np.arange(2, n + 1)
    return [int(p) for p in idx[_spf[2 : n + 1] == idx]]


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    _ensure_sieve(n)
    return int(_spf[n]) == n


def divisors(n: int) -> list[int]:
    divs = [1]
    for p, e in factorize(n).items():
        divs = [d * p**j for d in divs for j in range(e + 1)]
    return sorted(divs)


def sigma(nu: int, n: int) -> int:
    """Divisor power sum sum_{d | n} d**nu for integer ``nu >= 0``."""
    out = 1
    for p, e in factorize(n).items():
        out *= sum(p ** (nu * j) for j in range(e + 1))
    return out


def euler_phi(n: int) -> int:
    out = n
    for p in factorize(n):
        out -= out // p
    return out


def is_squarefree(n: int) -> bool:
    return all(e == 1 for e in factorize(n).values())


def is_cubefree(n: int) -> bool:
    return all(e <= 2 for e in factorize(n).values())


def mobius(r: int) -> int:
    f = factorize(r)
    if any(e > 1 for e in f.values()):
        return 0
    return -1 if len(f) % 2 else 1


def squarefree_decompose(m: int) -> tuple[int, int]:
    """Return ``(t, n)`` with ``t`` square-free and ``m == t * n**2``."""
    t, n = 1, 1
    for p, e in factorize(m).items():
        t *= p ** (e % 2)
        n *= p ** (e // 2)
    return t, n


def ramanujan_sum(d: int, m: int) -> int:
    """c_d(m) = sum over u mod d, gcd(u, d) = 1, of e(m u / d)."""
    g = math.gcd(d, m)
    return sum(mobius(d // h) * h for h in divisors(g))


def jacobi(a: int, n: int) -> int:
    """Jacobi symbol (a/n) for odd positive ``n``."""
    if n <= 0 or n % 2 == 0:
        raise DomainError(f"Jacobi symbol needs odd positive modulus, got {n}")
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def kronecker(c: int, d: int) -> int:
    """Shimura's symbol (c/d) for odd ``d``, Kronecker's for even ``d``."""
    c, d = int(c), int(d)
    if d % 2:
        if d > 0:
            return jacobi(c, d)
        value = jacobi(c, -d)
        return -value if c < 0 else value
    if d == 0:
        return 1 if c in (1, -1) else 0
    sign = 1
    if d < 0:
        d = -d
        if c < 0:
            sign = -1
    if c % 2 == 0:
        return 0
    v = 0
    while d % 2 == 0:
        d //= 2
        v += 1
    two = 1 if c % 8 in (1, 7) else -1
    return sign * two**v * (jacobi(c, d) if d > 1 else 1)


def epsilon(d: int) -> mpmath.mpc:
    """The fourth root of unity eps_d: 1 for d = 1 (mod 4), i for d = 3 (mod 4)."""
    if d % 2 == 0:
        raise DomainError(f"epsilon needs odd d, got {d}")
    return mpmath.mpc(1) if d % 4 == 1 else mpmath.mpc(0, 1)


def epsilon_power(d: int, k: int) -> complex:
    """eps_d**k as an exact Gaussian unit (python complex with entries in {0, +-1})."""
    if d % 2 == 0:
        raise DomainError(f"epsilon needs odd d, got {d}")
    if d % 4 == 1:
        return 1
    return (1, 1j, -1, -1j)[k % 4]


def gauss_sum(d: int, ctx: EvalContext = DEFAULT_CONTEXT) -> mpmath.mpc:
    """Quadratic Gauss sum sum_{n=1}^{d} e(n^2/d), evaluated numerically."""
    with ctx.workdps():
        return mpmath.fsum(mpmath.expjpi(mpmath.mpf(2 * (n * n % d)) / d) for n in range(1, d + 1))


def theta_value(z, ctx: EvalContext = DEFAULT_CONTEXT) -> tuple[mpmath.mpc, float]:
    """theta(z) = sum_n e(n^2 z) with a bound on the truncation error."""
    with ctx.workdps():
        z = mpmath.mpc(z)
        y = float(z.imag)
        if y <= 0:
            raise DomainError("theta needs Im(z) > 0")
        # tail sum_{n > N} 2 e^{-2 pi n^2 y} <= 2 e^{-2 pi (N+1)^2 y} / (1 - e^{-2 pi y})
        target = (ctx.working_digits + 5) * math.log(10)
        nmax = math.isqrt(int(target / (2 * math.pi * y)) + 1) + 1
        if nmax > ctx.max_terms:
            raise DomainError(f"Im(z) = {y:g} too small for a theta series at this precision")
        q = mpmath.expjpi(2 * z)
        total = mpmath.mpc(1)
        qn = q
        step = q * q * q
        for _ in range(nmax):
            total += 2 * qn
            qn *= step
            step *= q * q
        tail = 2 * math.exp(-2 * math.pi * (nmax + 1) ** 2 * y) / -math.expm1(-2 * math.pi * y)
        return total, tail


def _check_gamma0_4(gamma) -> tuple[int, int, int, int]:
    (a, b), (c, d) = gamma
    a, b, c, d = int(a), int(b), int(c), int(d)
    if a * d - b * c != 1 or c % 4:
        raise DomainError(f"matrix {gamma} is not in Gamma_0(4)")
    return a, b, c, d


def theta_multiplier(gamma, z, ctx: EvalContext = DEFAULT_CONTEXT) -> mpmath.mpc:
    """j(gamma, z) = eps_d^{-1} (c/d) (cz + d)^{1/2} for gamma in Gamma_0(4)."""
    a, b, c, d = _check_gamma0_4(gamma)
    with ctx.workdps():
        z = mpmath.mpc(z)
        if z.imag <= 0:
            raise DomainError("multiplier needs Im(z) > 0")
        root = cpow(c * z + d, mpmath.mpf(1) / 2)
        return kronecker(c, d) * root / epsilon(d)


def mobius_apply(gamma, z):
    (a, b), (c, d) = gamma
    return (a * z + b) / (c * z + d)


@lru_cache(maxsize=None)
def squarefree_upto(n: int) -> tuple[int, ...]:
    """All square-free t in [1, n], ascending."""
    flags = np.ones(n + 1, dtype=bool)
    flags[0] = False
    for p in range(2, math.isqrt(n) + 1):
        flags[p * p :: p * p] = False
    return tuple(int(t) for t in np.nonzero(flags)[0])


def gamma0_4_sample(count: int, seed: int = 0, cmax: int = 60) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """Deterministic sample of distinct matrices in Gamma_0(4) with |c| <= cmax and c != 0."""
    import random

    rng = random.Random(seed)
    seen = set()
    out = []
    while len(out) < count:
        c = 4 * rng.randint(1, cmax // 4) * rng.choice((-1, 1))
        d = rng.randint(-3 * cmax, 3 * cmax)
        if math.gcd(c, d) != 1:
            continue
        # a d - b c = 1
        a = pow(d, -1, abs(c)) if abs(c) > 1 else 1
        b = (a * d - 1) // c
        a += c * rng.randint(-2, 2)
        b = (a * d - 1) // c
        g = ((a, b), (c, d))
        if g in seen:
            continue
        seen.add(g)
        out.append(g)
    return out


def multiplier_residual(gamma, z, ctx: EvalContext = DEFAULT_CONTEXT) -> float:
    """|theta(gamma z) / theta(z) - j(gamma, z)| / |j(gamma, z)|."""
    with ctx.workdps():
        z = mpmath.mpc(z)
        w = mobius_apply(tuple(tuple(mpmath.mpf(x) for x in row) for row in gamma), z)
        num, _ = theta_value(w, ctx)
        den, _ = theta_value(z, ctx)
        j = theta_multiplier(gamma, z, ctx)
        return float(abs(num / den - j) / abs(j))
