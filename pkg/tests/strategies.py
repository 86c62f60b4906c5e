"""Hypothesis strategies for Gaussian rationals and jets."""

from hypothesis import strategies as st

from crt.gaussian import GaussianRational
from crt.jets import Jet, VarSpace

small_ints = st.integers(-9, 9)
denoms = st.sampled_from([1, 2, 3])


def gaussians(allow_zero=True):
    g = st.builds(lambda a, b, q: GaussianRational(a, b) / q, small_ints, small_ints, denoms)
    return g if allow_zero else g.filter(bool)


@st.composite
def spaces(draw, max_vars=4):
    k = draw(st.integers(1, max_vars))
    return VarSpace.of(("x", k))


def _exponents(k, D):
    return st.lists(st.integers(0, D), min_size=k, max_size=k).filter(lambda e: sum(e) <= D).map(tuple)


@st.composite
def jets(draw, space, D, zero_constant=False, max_terms=8):
    exps = draw(st.lists(_exponents(space.dim, D), max_size=max_terms))
    c = {}
    for e in exps:
        if zero_constant and not any(e):
            continue
        c[e] = draw(gaussians())
    return Jet(space, D, c)


@st.composite
def jet_tuple(draw, count, max_vars=4, max_order=6, zero_constant=False):
    S = draw(spaces(max_vars))
    D = draw(st.integers(1, max_order))
    return S, D, [draw(jets(S, D, zero_constant)) for _ in range(count)]
