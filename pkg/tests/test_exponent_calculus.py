import warnings
from dataclasses import replace
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from slagcount.exponent_calculus import (
    AsymptoticMonomial, BalanceError, PipelineConstants, PPiNotTabulatedError,
    SobolevThresholdWarning, C_l, balance, counting_terms, d_l, delta_chain,
    delta_from_constants, mixing_rate_sup, mixing_term, sobolev_thresholds,
    thickening_norm_exponents, wavefront_term,
)
from slagcount.lie_data import GroupSpec

K3 = GroupSpec(3, 19)
CONSTS = PipelineConstants.from_spec(K3)


def sympy_chain(p, q, p_pi):
    """Independent recomputation of the constant chain from the defining formulas."""
    R = sympy.Rational
    n = p + q
    dim_g = R(n * (n - 1), 2)
    dim_k = R(p * (p - 1), 2) + R(q * (q - 1), 2)
    dim_y = dim_g - (n - 1)
    # rho(H) for B_p / D_p: e_1 pairs with e_j (2 roots each) and e_1 itself (mult q - p)
    rho = R(2 * (p - 1) + (q - p), 2)
    d0p = rho / sympy.ceiling(R(p_pi, 2))
    l0p = sympy.floor(dim_k / 2) + 1
    l0 = max(l0p, sympy.floor(dim_g / 2) + 2)
    c = 2 * l0 + 4 * dim_y + dim_g / 2
    d0 = d0p / (1 + c)
    dl = l0 + (dim_g - dim_k) / 2
    return dict(rho=rho, d0p=d0p, l0p=l0p, l0=l0, C=c, d0=d0, dl=dl, s5=d0 / dl, e22=d0 / (dl + 1))


def test_delta_chain_k3():
    rep = delta_chain(K3)
    assert (rep.dims.dim_G, rep.dims.dim_K, rep.dims.dim_Y) == (231, 174, 210)
    assert (rep.l0_prime, rep.l0) == (88, 117)
    assert rep.rho_H == 10 and rep.delta0_prime_sup == 1
    assert rep.C_l0 == Fraction(2379, 2)
    assert rep.delta0_sup == Fraction(2, 2381)
    assert rep.d_l0 == Fraction(291, 2)
    assert rep.delta_section5 == Fraction(4, 692871)
    assert rep.delta_eq22 == Fraction(4, 697633)
    assert rep.delta_eq22 == Fraction(2, 2381) * Fraction(2, 293)
    assert rep.delta_eq22 < rep.delta_section5
    assert all(rep.open_interval_flags.values())
    assert rep.headline() == rep.delta_section5 and rep.headline("eq22") == rep.delta_eq22


@pytest.mark.parametrize("p,q,p_pi", [(3, 19, 20), (1, 2, 2), (2, 2, 4), (2, 5, 7), (4, 9, 12)])
def test_delta_chain_matches_sympy(p, q, p_pi):
    rep = delta_chain(GroupSpec(p, q), p_pi=p_pi)
    ref = sympy_chain(p, q, p_pi)
    got = dict(rho=rep.rho_H, d0p=rep.delta0_prime_sup, l0p=rep.l0_prime, l0=rep.l0,
               C=rep.C_l0, d0=rep.delta0_sup, dl=rep.d_l0, s5=rep.delta_section5,
               e22=rep.delta_eq22)
    for k, v in ref.items():
        assert sympy.Rational(str(got[k])) == v, k


def test_delta_chain_rerun_identical():
    assert delta_chain(K3) == delta_chain(K3)


def test_p_pi_missing():
    with pytest.raises(PPiNotTabulatedError, match="p\\(pi\\) not tabulated"):
        delta_chain(GroupSpec(2, 2))
    rep = delta_chain(GroupSpec(2, 2), table={(2, 2): 4})
    assert rep.p_pi == 4


def test_d_l_examples():
    assert d_l(117, CONSTS) == Fraction(291, 2)
    assert d_l(0, CONSTS) == Fraction(57, 2)
    assert d_l(5, PipelineConstants.from_spec(GroupSpec(1, 2))) == 6


def test_C_l_examples():
    assert C_l(117, CONSTS) == Fraction(2379, 2)
    assert C_l(116, CONSTS) == Fraction(2375, 2)
    assert 1 + C_l(117, CONSTS) == Fraction(2381, 2)
    for l in range(120, 140):
        assert C_l(l, CONSTS) - C_l(l - 1, CONSTS) == 2
    with pytest.warns(SobolevThresholdWarning):
        C_l(10, CONSTS)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        C_l(116, CONSTS)


def test_thickening_exponents():
    ex = thickening_norm_exponents(117, CONSTS)
    assert ex["tau"] == -1062
    assert ex["rho"] == Fraction(-255, 2)
    assert ex["phi"] == -C_l(117, CONSTS)
    assert ex["G_ball"] == -420 and ex["F_total"] == -630
    assert thickening_norm_exponents(0, CONSTS)["beta"] == 105


def test_mixing_rate_sup_examples():
    assert mixing_rate_sup(10, 20) == 1
    assert mixing_rate_sup(10, 2) == 10
    assert mixing_rate_sup(Fraction(1, 2), 4) == Fraction(1, 4)
    assert mixing_rate_sup(10, 21) == Fraction(10, 11)
    with pytest.raises(ValueError):
        mixing_rate_sup(10, 1)


def test_sobolev_thresholds_examples():
    assert sobolev_thresholds(CONSTS) == (88, 117)
    assert sobolev_thresholds(PipelineConstants.from_spec(GroupSpec(1, 2))) == (1, 3)
    assert sobolev_thresholds(PipelineConstants.from_spec(GroupSpec(2, 2))) == (2, 5)


def test_pipeline_constants():
    assert CONSTS.c1 == 57 and CONSTS.d == 174 and CONSTS.p_cusp == 1
    with pytest.raises(ValueError):
        PipelineConstants.from_spec(K3, p_cusp=0)
    half = PipelineConstants.from_spec(K3, p_cusp=Fraction(1, 2))
    # a smaller cusp exponent shrinks delta
    vals = delta_from_constants(half, 117, Fraction(1))
    assert vals["delta_section5"] < Fraction(4, 692871)


# -- balancing -------------------------------------------------------------------------

def test_balance_footnote_symbolic():
    d0, d = sympy.symbols("delta0 d", positive=True)
    a = AsymptoticMonomial(eps_exp=1, growth_exp=20)
    b = AsymptoticMonomial(eps_exp=-d, growth_exp=20 - d0)
    s = balance(a, b)
    assert sympy.simplify(s - d0 / (d + 1)) == 0


def test_balance_section34_symbolic():
    d0p, pp, c = sympy.symbols("delta0p pprime C", positive=True)
    a = AsymptoticMonomial(eps_exp=pp)
    b = AsymptoticMonomial(eps_exp=-c, decay_exp=d0p, sobolev_index=sympy.Symbol("l"))
    s = balance(a, b)
    assert sympy.simplify(s - d0p / (pp + c)) == 0
    decay = a.rate(s)
    assert sympy.simplify(decay - pp * d0p / (pp + c)) == 0
    assert sympy.simplify(sympy.limit(decay, pp, 1) - d0p / (1 + c)) == 0


def test_balance_exact_instances():
    c = C_l(117, CONSTS)
    s = balance(wavefront_term(CONSTS, 1), mixing_term(c, 1, 117))
    assert s == 1 / (1 + c)
    assert balance(*counting_terms(Fraction(2, 2381), Fraction(291, 2))) == Fraction(4, 697633)


def test_balance_errors():
    with pytest.raises(BalanceError):
        balance(AsymptoticMonomial(eps_exp=1), AsymptoticMonomial(eps_exp=1, decay_exp=3))
    with pytest.raises(BalanceError):
        # would need eps growing in t
        balance(AsymptoticMonomial(eps_exp=1, decay_exp=5), AsymptoticMonomial(eps_exp=-1))


fr = st.fractions(min_value=-20, max_value=20, max_denominator=50)


@settings(max_examples=200, deadline=None)
@given(a=st.tuples(fr, fr, fr), b=st.tuples(fr, fr, fr), c=st.tuples(fr, fr, fr))
def test_balance_scale_invariant(a, b, c):
    ta = AsymptoticMonomial(a[0], a[1], None, a[2])
    tb = AsymptoticMonomial(b[0], b[1], None, b[2])
    tc = AsymptoticMonomial(c[0], c[1], 3, c[2])
    try:
        s = balance(ta, tb)
    except BalanceError:
        with pytest.raises(BalanceError):
            balance(ta * tc, tb * tc)
        return
    assert balance(ta * tc, tb * tc) == s
    assert ta.rate(s) == tb.rate(s)


def test_monomial_product_and_domination():
    a = AsymptoticMonomial(Fraction(1), Fraction(2), 5, Fraction(1))
    b = AsymptoticMonomial(Fraction(-3), Fraction(1), 7, Fraction(0))
    ab = a * b
    assert (ab.eps_exp, ab.decay_exp, ab.sobolev_index, ab.growth_exp) == (-2, 3, 7, 1)
    assert (a * AsymptoticMonomial()).sobolev_index == 5
    # at s = 1: a decays at rate 2, b at rate -2
    assert b.dominates(a, 1) and not a.dominates(b, 1)


def test_monotonicity_sweep():
    for q in range(1, 26):
        for p in range(1, q + 1):
            consts = PipelineConstants.from_spec(GroupSpec(p, q))
            _, l0 = sobolev_thresholds(consts)
            d0p = Fraction(1)
            base = delta_from_constants(consts, l0, d0p)
            up_l = delta_from_constants(consts, l0 + 1, d0p)
            bigger_y = replace(consts, dims=replace(consts.dims, dim_Y=consts.dims.dim_Y + 1))
            up_y = delta_from_constants(bigger_y, l0, d0p)
            for key in ("delta_section5", "delta_eq22"):
                assert up_l[key] < base[key]
                assert up_y[key] < base[key]
            assert base["delta_eq22"] < base["delta_section5"]
