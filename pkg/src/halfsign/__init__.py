"""Numerics for half-integral weight cusp forms on Gamma_0(4): exact q-expansions,
Hecke eigenforms, lift coefficients, twisted Mellin transforms, and the
square-free Dirichlet series whose coefficients change sign."""

__version__ = "0.1.0"
