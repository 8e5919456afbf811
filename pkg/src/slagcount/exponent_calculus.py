"""Exact exponent bookkeeping for the equidistribution error terms.

Every error term is a monomial eps^a * exp(-b t) * exp(g t) * ||w||_l.  Balancing
two such terms under eps = exp(-s t) is a linear equation in s, solved here
over exact rationals (or sympy expressions, when symbols are passed in).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil

from .lie_data import GroupDimensions, GroupSpec, dimensions, integrability_constant, rho_H

Rational = Fraction


class SobolevThresholdWarning(UserWarning):
    pass


class PPiNotTabulatedError(LookupError):
    pass


class BalanceError(ValueError):
    pass


@dataclass(frozen=True)
class AsymptoticMonomial:
    """eps**eps_exp * exp(-decay_exp * t) * exp(growth_exp * t), optionally times ||w||_l."""

    eps_exp: object = Fraction(0)
    decay_exp: object = Fraction(0)
    sobolev_index: object | None = None
    growth_exp: object = Fraction(0)

    def __mul__(self, other: "AsymptoticMonomial") -> "AsymptoticMonomial":
        if self.sobolev_index is None:
            sob = other.sobolev_index
        elif other.sobolev_index is None:
            sob = self.sobolev_index
        else:
            sob = max(self.sobolev_index, other.sobolev_index)
        return AsymptoticMonomial(self.eps_exp + other.eps_exp,
                                  self.decay_exp + other.decay_exp,
                                  sob,
                                  self.growth_exp + other.growth_exp)

    def rate(self, s):
        """Exponential decay rate in t once eps = exp(-s t) is substituted."""
        return self.eps_exp * s + self.decay_exp - self.growth_exp

    def dominates(self, other: "AsymptoticMonomial", s) -> bool:
        """True if this term decays no faster than ``other`` (it is the big-O survivor)."""
        return self.rate(s) <= other.rate(s)


def balance(term_a: AsymptoticMonomial, term_b: AsymptoticMonomial):
    """Rate s such that eps = exp(-s t) gives both terms the same exponential rate."""
    diff = term_a.eps_exp - term_b.eps_exp
    if diff == 0:
        raise BalanceError("terms have equal eps exponents; nothing to balance")
    s = (term_b.decay_exp - term_b.growth_exp - term_a.decay_exp + term_a.growth_exp) / diff
    try:
        negative = bool(s < 0)
    except TypeError:  # undecidable symbolic sign
        negative = False
    if negative:
        raise BalanceError(f"balancing rate {s} is negative; terms are mis-ordered")
    return s


@dataclass(frozen=True)
class PipelineConstants:
    spec: GroupSpec
    dims: GroupDimensions
    p_cusp: Fraction = Fraction(1)
    p_prime_limit: Fraction = Fraction(1)
    c1: Fraction = field(init=False)
    d: int = field(init=False)

    def __post_init__(self):
        if not (0 < self.p_cusp <= 1):
            raise ValueError("p_cusp must lie in (0, 1]")
        object.__setattr__(self, "c1", Fraction(self.dims.dim_G - self.dims.dim_K))
        object.__setattr__(self, "d", self.dims.dim_K)

    @classmethod
    def from_spec(cls, spec: GroupSpec, p_cusp=Fraction(1)) -> "PipelineConstants":
        return cls(spec, dimensions(spec), Fraction(p_cusp))


def d_l(l, consts: PipelineConstants) -> Fraction:
    return Fraction(l) + consts.c1 / 2


def C_l(l, consts: PipelineConstants) -> Fraction:
    """Sobolev exponent of the thickened indicator: 2l + 4 dim Y + dim X / 2."""
    l = Fraction(l)
    if l <= Fraction(consts.dims.dim_X, 2):
        warnings.warn(f"l = {l} is not above dim(X)/2; Sobolev embedding not guaranteed",
                      SobolevThresholdWarning, stacklevel=2)
    return 2 * l + 4 * consts.dims.dim_Y + Fraction(consts.dims.dim_X, 2)


def thickening_norm_exponents(l, consts: PipelineConstants) -> dict[str, Fraction]:
    l = Fraction(l)
    dx, dy = consts.dims.dim_X, consts.dims.dim_Y
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SobolevThresholdWarning)
        phi = -C_l(l, consts)
    return {
        "rho": -l - Fraction(dx - dy, 2),
        "beta": -l + Fraction(dy, 2),
        "tau": -l - Fraction(9 * dy, 2),
        "phi": phi,
        "G_ball": Fraction(-2 * dy),
        "F_total": Fraction(-3 * dy),
    }


def mixing_rate_sup(rho_h, p_pi: int) -> Fraction:
    """Supremum of admissible mixing rates: rho(H) / k with k = ceil(p(pi)/2)."""
    if p_pi < 2:
        raise ValueError("p(pi) is at least 2")
    return Fraction(rho_h) / ceil(Fraction(p_pi) / 2)


def sobolev_thresholds(consts: PipelineConstants) -> tuple[int, int]:
    l0_prime = consts.dims.dim_K // 2 + 1
    l0 = max(l0_prime, consts.dims.dim_X // 2 + 2)
    return l0_prime, l0


def wavefront_term(consts: PipelineConstants, p_prime) -> AsymptoticMonomial:
    return AsymptoticMonomial(eps_exp=consts.p_cusp * p_prime)


def mixing_term(c_l, delta0_prime, l=None) -> AsymptoticMonomial:
    return AsymptoticMonomial(eps_exp=-c_l, decay_exp=delta0_prime, sobolev_index=l)


def counting_terms(delta0, d) -> tuple[AsymptoticMonomial, AsymptoticMonomial]:
    """eps * e^{20T}-type truncation term and eps^{-d} * e^{(20 - delta0) T} smoothing term.

    Only exponent differences matter, so the common growth 20 is dropped.
    """
    return (AsymptoticMonomial(eps_exp=Fraction(1)),
            AsymptoticMonomial(eps_exp=-d, growth_exp=-delta0))


def delta_from_constants(consts: PipelineConstants, l0: int, delta0_prime) -> dict[str, Fraction]:
    c = C_l(l0, consts)
    p_prime = consts.p_prime_limit
    s = balance(wavefront_term(consts, p_prime), mixing_term(c, delta0_prime, l0))
    delta0 = wavefront_term(consts, p_prime).rate(s)
    d = d_l(l0, consts)
    return {
        "C_l0": c,
        "delta0_sup": delta0,
        "d_l0": d,
        "delta_section5": delta0 / d,
        "delta_eq22": balance(*counting_terms(delta0, d)),
    }


@dataclass(frozen=True)
class DeltaReport:
    spec: GroupSpec
    dims: GroupDimensions
    rho_H: Fraction
    p_pi: int
    l0_prime: int
    l0: int
    delta0_prime_sup: Fraction
    C_l0: Fraction
    delta0_sup: Fraction
    d_l0: Fraction
    delta_section5: Fraction
    delta_eq22: Fraction
    open_interval_flags: dict = field(default_factory=dict)

    def headline(self, variant: str = "section5") -> Fraction:
        return self.delta_eq22 if variant == "eq22" else self.delta_section5


def delta_chain(spec: GroupSpec, p_pi: int | None = None,
                table: dict | None = None, p_cusp=Fraction(1)) -> DeltaReport:
    consts = PipelineConstants.from_spec(spec, p_cusp)
    if p_pi is None:
        p_pi = integrability_constant(spec, table)
    if p_pi is None:
        raise PPiNotTabulatedError(f"p(pi) not tabulated for (p, q) = ({spec.p}, {spec.q})")
    rh = rho_H(spec)
    d0p = mixing_rate_sup(rh, p_pi)
    l0p, l0 = sobolev_thresholds(consts)
    vals = delta_from_constants(consts, l0, d0p)
    flags = {"delta0_prime": True, "p_prime": True, "delta0": True,
             "delta_section5": True, "delta_eq22": True}
    return DeltaReport(spec, consts.dims, rh, int(p_pi), l0p, l0, d0p,
                       vals["C_l0"], vals["delta0_sup"], vals["d_l0"],
                       vals["delta_section5"], vals["delta_eq22"], flags)
