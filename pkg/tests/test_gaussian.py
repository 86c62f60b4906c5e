from hypothesis import given

from crt.gaussian import I, ONE, ZERO, GaussianRational, gr

from strategies import gaussians


def test_normalized_denominators():
    g = GaussianRational("4/6", "-3/9")
    assert str(g.re) == "2/3" and str(g.im) == "-1/3"


def test_str_and_parse():
    for text in ["3/2", "i", "-2*i", "1/2-3/4*i", "0", "-1"]:
        assert str(GaussianRational.parse(text)) == text


def test_arithmetic():
    assert I * I == -ONE
    assert (gr(1, 1) * gr(1, -1)) == 2
    assert gr(3, 4).norm() == 25
    assert gr(1, 1).inverse() == gr("1/2", "-1/2")
    assert gr(2, 0) == 2 and hash(gr(2, 0)) == hash(2)


def test_zero_is_falsy():
    assert not ZERO and gr(0, 1)


@given(gaussians(), gaussians())
def test_conj_multiplicative(x, y):
    assert (x * y).conj() == x.conj() * y.conj()
    assert x.conj().conj() == x


@given(gaussians(allow_zero=False))
def test_inverse(x):
    assert x * x.inverse() == ONE
