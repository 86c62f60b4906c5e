"""Exact Gaussian rationals: complex numbers a + b*i with rational a, b."""

from __future__ import annotations

from fractions import Fraction
import re as _re

from gmpy2 import mpq

_ZERO = mpq(0)
_RATIONAL = _re.compile(r"[+-]?\d+(?:/\d+)?")


def _to_mpq(value):
    if isinstance(value, type(_ZERO)):
        return value
    if isinstance(value, Fraction):
        return mpq(value.numerator, value.denominator)
    if isinstance(value, (int, str)):
        return mpq(value)
    raise TypeError(f"cannot convert {value!r} to a rational")


class GaussianRational:
    """Immutable exact complex number with rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        if isinstance(re, GaussianRational):
            if im:
                raise TypeError("imaginary part given twice")
            re, im = re.re, re.im
        elif isinstance(re, complex):
            raise TypeError("floating point complex values are not exact")
        object.__setattr__(self, "re", _to_mpq(re))
        object.__setattr__(self, "im", _to_mpq(im))

    def __setattr__(self, name, value):
        raise AttributeError("GaussianRational is immutable")

    @classmethod
    def _make(cls, re, im):
        obj = object.__new__(cls)
        object.__setattr__(obj, "re", re)
        object.__setattr__(obj, "im", im)
        return obj

    @classmethod
    def coerce(cls, value) -> "GaussianRational":
        if isinstance(value, GaussianRational):
            return value
        return cls(value)

    @classmethod
    def parse(cls, text: str) -> "GaussianRational":
        """Read the format produced by ``str``: ``3/2``, ``-i``, ``1/2-3/4*i``."""
        t = "".join(text.split())
        try:
            if _re.search(r"[\d/]\s+[\d/]", text):
                raise ValueError
            if not t.endswith("i"):
                return cls._make(mpq(_RATIONAL.fullmatch(t).group(0).lstrip("+")), _ZERO)
            cut = max(t.rfind("+"), t.rfind("-"))
            real, imag = (t[:cut], t[cut:-1]) if cut > 0 else ("", t[:-1])
            if imag.endswith("*"):
                imag = imag[:-1]
                if imag in ("", "+", "-"):
                    raise ValueError
            if imag in ("", "+", "-"):
                imag += "1"
            re_part = mpq(_RATIONAL.fullmatch(real).group(0).lstrip("+")) if real else _ZERO
            return cls._make(re_part, mpq(_RATIONAL.fullmatch(imag).group(0).lstrip("+")))
        except (AttributeError, ValueError):
            raise ValueError(f"not a Gaussian rational literal: {text!r}") from None

    # arithmetic

    def __add__(self, other):
        if not isinstance(other, GaussianRational):
            try:
                other = GaussianRational(other)
            except TypeError:
                return NotImplemented
        return GaussianRational._make(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, GaussianRational):
            try:
                other = GaussianRational(other)
            except TypeError:
                return NotImplemented
        return GaussianRational._make(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return GaussianRational.coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, GaussianRational):
            try:
                other = GaussianRational(other)
            except TypeError:
                return NotImplemented
        a, b, c, d = self.re, self.im, other.re, other.im
        return GaussianRational._make(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, GaussianRational):
            try:
                other = GaussianRational(other)
            except TypeError:
                return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return GaussianRational.coerce(other) * self.inverse()

    def __neg__(self):
        return GaussianRational._make(-self.re, -self.im)

    def __pos__(self):
        return self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        result, base = ONE, self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def inverse(self) -> "GaussianRational":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("Gaussian rational division by zero")
        return GaussianRational._make(self.re / n, -self.im / n)

    def conj(self) -> "GaussianRational":
        return GaussianRational._make(self.re, -self.im)

    def norm(self):
        """Squared modulus, an exact rational."""
        return self.re * self.re + self.im * self.im

    # comparison and display

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if not isinstance(other, GaussianRational):
            try:
                other = GaussianRational(other)
            except TypeError:
                return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        if not self.im:
            return hash(Fraction(int(self.re.numerator), int(self.re.denominator)))
        return hash((self.re, self.im))

    def is_real(self) -> bool:
        return not self.im

    def __repr__(self):
        return f"GaussianRational({str(self)!r})"

    def __str__(self):
        re_s = _fmt(self.re)
        if not self.im:
            return re_s
        if self.im == 1:
            im_s = "i"
        elif self.im == -1:
            im_s = "-i"
        else:
            im_s = f"{_fmt(self.im)}*i"
        if not self.re:
            return im_s
        if im_s.startswith("-"):
            return f"{re_s}{im_s}"
        return f"{re_s}+{im_s}"


def _fmt(q) -> str:
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


ZERO = GaussianRational._make(mpq(0), mpq(0))
ONE = GaussianRational._make(mpq(1), mpq(0))
I = GaussianRational._make(mpq(0), mpq(1))


def gr(re=0, im=0) -> GaussianRational:
    """Shorthand constructor, e.g. ``gr(1, 2)`` for 1+2i or ``gr("3/2")``."""
    return GaussianRational(re, im)
