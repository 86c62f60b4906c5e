"""Truncated multivariate formal power series with exact Gaussian-rational coefficients.

A :class:`Jet` is a representative of a formal power series modulo the ideal of
terms of total degree greater than its ``order``.  Operations that lose
information (differentiation) lower the jet's ``prec``: coefficients of degree
at most ``prec`` are exact, anything above is unknown and never consulted by
zero tests or equality.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from gmpy2 import mpq

from .errors import (
    DimensionMismatch,
    NonzeroConstantTerm,
    NotAUnit,
    SingularJacobian,
    SpaceMismatch,
    UnknownVariable,
)
from .gaussian import ONE, ZERO, GaussianRational

_Q0 = mpq(0)
_make = GaussianRational._make

DEFAULT_ORDER = 8


def _var_name(block: str, j: int) -> str:
    return f"{block}_{j}" if block[-1].isdigit() else f"{block}{j}"


@dataclass(frozen=True)
class VarSpace:
    """Ordered blocks of formal variables, e.g. ``(("z", 1), ("chi", 1), ("tau", 1))``."""

    blocks: tuple

    def __post_init__(self):
        blocks = tuple((str(name), int(dim)) for name, dim in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        names = [b for b, _ in blocks]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate block names in {names}")
        if any(dim < 0 for _, dim in blocks):
            raise ValueError("block dimensions must be non-negative")
        variables = tuple(_var_name(b, j + 1) for b, dim in blocks for j in range(dim))
        if len(set(variables)) != len(variables):
            raise ValueError(f"block names produce clashing variables: {variables}")
        object.__setattr__(self, "_names", variables)
        object.__setattr__(self, "_index", {v: k for k, v in enumerate(variables)})

    @classmethod
    def of(cls, *blocks) -> "VarSpace":
        return cls(tuple(blocks))

    @property
    def names(self) -> tuple:
        return self._names

    @property
    def dim(self) -> int:
        return len(self._names)

    def __len__(self):
        return len(self._names)

    def __contains__(self, name):
        return name in self._index

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownVariable(f"{name!r} is not a variable of {self}") from None

    def block(self, name: str) -> tuple:
        """Variable names of one block, in order."""
        for b, dim in self.blocks:
            if b == name:
                return tuple(_var_name(b, j + 1) for j in range(dim))
        raise UnknownVariable(f"no block {name!r} in {self}")

    def block_dim(self, name: str) -> int:
        return len(self.block(name))

    def without(self, *names: str) -> "VarSpace":
        for name in names:
            self.block(name)
        return VarSpace(tuple((b, d) for b, d in self.blocks if b not in names))

    def __str__(self):
        return "(" + ", ".join(f"{b}:{d}" for b, d in self.blocks) + ")"

    def monomial(self, exp: tuple) -> str:
        parts = []
        for name, e in zip(self._names, exp):
            if e == 1:
                parts.append(name)
            elif e > 1:
                parts.append(f"{name}^{e}")
        return "*".join(parts) if parts else "1"


def _deg(exp) -> int:
    return sum(exp)


def _normalize(space: VarSpace, order: int, coeffs: Mapping) -> dict:
    out = {}
    n = space.dim
    for exp, c in coeffs.items():
        exp = tuple(int(e) for e in exp)
        if len(exp) != n:
            raise DimensionMismatch(f"exponent {exp} does not fit {space}")
        if any(e < 0 for e in exp):
            raise ValueError(f"negative exponent {exp}")
        if sum(exp) > order:
            continue
        c = GaussianRational.coerce(c)
        if c:
            out[exp] = out[exp] + c if exp in out else c
            if not out[exp]:
                del out[exp]
    return out


# ---------------------------------------------------------------------------
# coefficient-dictionary kernels


def _add_into(acc: dict, terms: dict, sign: int = 1) -> None:
    for e, c in terms.items():
        cur = acc.get(e)
        if cur is None:
            acc[e] = c if sign > 0 else -c
        else:
            s = cur + c if sign > 0 else cur - c
            if s:
                acc[e] = s
            else:
                del acc[e]


def _sorted_by_degree(terms: dict, order: int, base: int):
    rows = []
    for e, c in terms.items():
        d = sum(e)
        if d > order:
            continue
        key = 0
        for x in reversed(e):
            key = key * base + x
        rows.append((d, key, c.re, c.im))
    rows.sort(key=lambda r: r[0])
    return rows


def _mul_terms(a: dict, b: dict, order: int, nvars: int) -> dict:
    """Product of two coefficient dictionaries, dropping degrees above ``order``."""
    if not a or not b or order < 0:
        return {}
    base = order + 1
    ra = _sorted_by_degree(a, order, base)
    rb = _sorted_by_degree(b, order, base)
    if len(ra) > len(rb):
        ra, rb = rb, ra
    degs_b = [r[0] for r in rb]
    acc_re: dict = {}
    acc_im: dict = {}
    for da, ka, ar, ai in ra:
        hi = bisect_right(degs_b, order - da)
        if not hi:
            break
        for j in range(hi):
            _, kb, br, bi = rb[j]
            k = ka + kb
            if ai:
                if bi:
                    re = ar * br - ai * bi
                    im = ar * bi + ai * br
                else:
                    re = ar * br
                    im = ai * br
            elif bi:
                re = ar * br
                im = ar * bi
            else:
                re = ar * br
                im = None
            if k in acc_re:
                acc_re[k] += re
                if im is not None:
                    acc_im[k] = acc_im.get(k, _Q0) + im
            else:
                acc_re[k] = re
                if im is not None:
                    acc_im[k] = im
    out = {}
    for k, re in acc_re.items():
        im = acc_im.get(k, _Q0)
        if re or im:
            exp = []
            for _ in range(nvars):
                k, r = divmod(k, base)
                exp.append(r)
            out[tuple(exp)] = _make(re, im)
    return out


def _scale_terms(terms: dict, c: GaussianRational) -> dict:
    if not c:
        return {}
    return {e: v * c for e, v in terms.items()}


def _valuation(terms: dict) -> int | None:
    if not terms:
        return None
    return min(sum(e) for e in terms)


# ---------------------------------------------------------------------------


class Jet:
    """Formal power series over a :class:`VarSpace`, truncated at total degree ``order``."""

    __slots__ = ("space", "order", "prec", "_c")

    def __init__(self, space: VarSpace, order: int, coeffs: Mapping | None = None, prec: int | None = None):
        if order < 0:
            raise ValueError("order must be non-negative")
        self.space = space
        self.order = order
        self.prec = order if prec is None else min(prec, order)
        self._c = _normalize(space, order, coeffs or {})

    @classmethod
    def _raw(cls, space, order, c, prec):
        obj = object.__new__(cls)
        obj.space = space
        obj.order = order
        obj.prec = min(prec, order)
        obj._c = c
        return obj

    # constructors

    @classmethod
    def zero(cls, space: VarSpace, order: int = DEFAULT_ORDER) -> "Jet":
        return cls._raw(space, order, {}, order)

    @classmethod
    def const(cls, space: VarSpace, order: int, value) -> "Jet":
        value = GaussianRational.coerce(value)
        c = {(0,) * space.dim: value} if value else {}
        return cls._raw(space, order, c, order)

    @classmethod
    def one(cls, space: VarSpace, order: int = DEFAULT_ORDER) -> "Jet":
        return cls.const(space, order, ONE)

    @classmethod
    def var(cls, space: VarSpace, order: int, name: str) -> "Jet":
        k = space.index(name)
        exp = tuple(1 if j == k else 0 for j in range(space.dim))
        c = {exp: ONE} if order >= 1 else {}
        return cls._raw(space, order, c, order)

    @classmethod
    def variables(cls, space: VarSpace, order: int, block: str | None = None) -> list:
        names = space.names if block is None else space.block(block)
        return [cls.var(space, order, v) for v in names]

    # inspection

    @property
    def coeffs(self) -> dict:
        return dict(self._c)

    def __getitem__(self, exp) -> GaussianRational:
        return self._c.get(tuple(exp), ZERO)

    def coefficient(self, **powers) -> GaussianRational:
        exp = [0] * self.space.dim
        for name, e in powers.items():
            exp[self.space.index(name)] = e
        return self[tuple(exp)]

    def terms(self) -> list:
        """Known nonzero terms as ``(exponent, coefficient)``, sorted by degree."""
        return sorted(
            ((e, c) for e, c in self._c.items() if sum(e) <= self.prec),
            key=lambda t: (sum(t[0]), tuple(-x for x in t[0])),
        )

    def lowest_term(self):
        terms = self.terms()
        return terms[0] if terms else None

    def constant_term(self) -> GaussianRational:
        return self._c.get((0,) * self.space.dim, ZERO)

    def valuation(self) -> int | None:
        """Lowest degree of a known nonzero term, or None if zero to ``prec``."""
        t = self.lowest_term()
        return None if t is None else sum(t[0])

    def is_zero(self) -> bool:
        return all(sum(e) > self.prec for e in self._c)

    def is_constant(self) -> bool:
        return all(sum(e) == 0 or sum(e) > self.prec for e in self._c)

    def homogeneous(self, k: int) -> "Jet":
        return Jet._raw(self.space, self.order, {e: c for e, c in self._c.items() if sum(e) == k}, self.prec)

    def truncate(self, order: int) -> "Jet":
        """Drop everything above ``order``; the result lives at that order."""
        c = {e: v for e, v in self._c.items() if sum(e) <= order}
        return Jet._raw(self.space, order, c, min(self.prec, order))

    def with_order(self, order: int) -> "Jet":
        """Re-home at a different order without claiming precision it does not have."""
        if order <= self.order:
            return self.truncate(order)
        return Jet._raw(self.space, order, dict(self._c), self.prec)

    def with_prec(self, prec: int) -> "Jet":
        return Jet._raw(self.space, self.order, dict(self._c), min(prec, self.prec))

    # arithmetic

    def _check(self, other: "Jet"):
        if not isinstance(other, Jet):
            raise TypeError(f"expected a Jet, got {type(other).__name__}")
        if other.space != self.space or other.order != self.order:
            raise SpaceMismatch(
                f"jets over {self.space}@{self.order} and {other.space}@{other.order} cannot be combined"
            )

    def _lift(self, other):
        if isinstance(other, Jet):
            self._check(other)
            return other
        return Jet.const(self.space, self.order, other)

    def __add__(self, other):
        other = self._lift(other)
        c = dict(self._c)
        _add_into(c, other._c)
        return Jet._raw(self.space, self.order, c, min(self.prec, other.prec))

    __radd__ = __add__

    def __sub__(self, other):
        other = self._lift(other)
        c = dict(self._c)
        _add_into(c, other._c, -1)
        return Jet._raw(self.space, self.order, c, min(self.prec, other.prec))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __neg__(self):
        return Jet._raw(self.space, self.order, {e: -c for e, c in self._c.items()}, self.prec)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            try:
                c = GaussianRational.coerce(other)
            except TypeError:
                return NotImplemented
            return Jet._raw(self.space, self.order, _scale_terms(self._c, c), self.prec)
        self._check(other)
        prec = _product_prec(self, other)
        return Jet._raw(self.space, self.order, _mul_terms(self._c, other._c, self.order, self.space.dim), prec)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * invert_unit(other)
        return self * GaussianRational.coerce(other).inverse()

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("jets only support non-negative integer powers")
        result = Jet.one(self.space, self.order)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, Jet):
            if other.space != self.space or other.order != self.order:
                return False
            return (self - other).is_zero()
        try:
            return (self - Jet.const(self.space, self.order, other)).is_zero()
        except TypeError:
            return NotImplemented

    __hash__ = None

    # calculus and structure

    def derive(self, var: str) -> "Jet":
        k = self.space.index(var)
        c = {}
        for e, v in self._c.items():
            if e[k]:
                ne = e[:k] + (e[k] - 1,) + e[k + 1:]
                c[ne] = v * e[k]
        return Jet._raw(self.space, self.order, c, self.prec - 1)

    def bar(self) -> "Jet":
        return Jet._raw(self.space, self.order, {e: c.conj() for e, c in self._c.items()}, self.prec)

    def compose(self, args, space: VarSpace | None = None) -> "Jet":
        return compose(self, args, space)

    def evaluate(self, point) -> GaussianRational:
        return evaluate(self, point)

    def embed(self, space: VarSpace, rename: Mapping[str, str] | None = None) -> "Jet":
        """Relabel variables into a larger space (each variable maps to a variable)."""
        rename = rename or {}
        idx = [space.index(rename.get(v, v)) for v in self.space.names]
        m = space.dim
        c = {}
        for e, v in self._c.items():
            ne = [0] * m
            for j, x in zip(idx, e):
                ne[j] += x
            ne = tuple(ne)
            c[ne] = c[ne] + v if ne in c else v
        c = {e: v for e, v in c.items() if v}
        return Jet._raw(space, self.order, c, self.prec)

    # display

    def __str__(self):
        terms = self.terms()
        if not terms:
            return f"0 + O({self.prec + 1})"
        parts = [_term_str(c, self.space.monomial(e)) for e, c in terms]
        s = parts[0]
        for p in parts[1:]:
            s += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
        return s + f" + O({self.prec + 1})"

    def __repr__(self):
        return f"Jet({self.space}, order={self.order}, {self})"


def _term_str(c: GaussianRational, mono: str) -> str:
    simple = c.is_real() or not c.re
    if mono == "1":
        return str(c) if simple else f"({c})"
    if c == ONE:
        return mono
    if c == -ONE:
        return "-" + mono
    return f"{c}*{mono}" if simple else f"({c})*{mono}"


def _product_prec(a: Jet, b: Jet) -> int:
    va = a.valuation()
    vb = b.valuation()
    va = a.prec + 1 if va is None else min(va, a.prec + 1)
    vb = b.prec + 1 if vb is None else min(vb, b.prec + 1)
    return min(a.prec + vb, b.prec + va, a.order)


# ---------------------------------------------------------------------------
# operations


def jet_arith(f: Jet, g: Jet, op: str) -> Jet:
    f._check(g)
    if op == "add":
        return f + g
    if op == "sub":
        return f - g
    if op == "mul":
        return f * g
    raise ValueError(f"unknown operation {op!r}")


def derive(f: Jet, var: str) -> Jet:
    return f.derive(var)


def bar(f: Jet) -> Jet:
    return f.bar()


def compose(f: Jet, args, space: VarSpace | None = None) -> Jet:
    """Substitute jets for the variables of ``f``.

    ``args`` is either a sequence with one jet per variable of ``f.space`` or a
    mapping from variable names to jets; in the mapping form, variables left out
    map to the same-named variable of the target ``space``.  Every substituted
    jet must have zero constant term.
    """
    if isinstance(args, Mapping):
        if space is None:
            sample = next(iter(args.values()), None)
            if sample is None:
                raise ValueError("target space needed for an empty substitution")
            space = sample.space
        order = next(iter(args.values())).order if args else f.order
        for name in args:
            f.space.index(name)
        args = [args[v] if v in args else Jet.var(space, order, v) for v in f.space.names]
    args = list(args)
    if len(args) != f.space.dim:
        raise DimensionMismatch(f"{len(args)} arguments for {f.space.dim} variables")
    if not args:
        target = space or f.space
        return Jet.const(target, f.order, f.constant_term())
    target = args[0].space
    order = args[0].order
    for a in args:
        if a.space != target or a.order != order:
            raise SpaceMismatch("composition arguments must share space and order")
        if a.constant_term():
            raise NonzeroConstantTerm(f"argument {a} has nonzero constant term")
    prec = min([f.prec] + [a.prec for a in args])
    c = _compose_terms(f._c, [a._c for a in args], order, target.dim)
    return Jet._raw(target, order, c, prec)


def _compose_terms(terms: dict, args: list, order: int, m: int) -> dict:
    nvars = len(args)
    zero = (0,) * m
    powers = [[{zero: ONE}] for _ in range(nvars)]
    vals = [_valuation(a) for a in args]

    def power(i, p):
        cache = powers[i]
        while len(cache) <= p:
            cache.append(_mul_terms(cache[-1], args[i], order, m))
        return cache[p]

    def rec(group: dict, i: int, budget: int) -> dict:
        if i == nvars:
            c = next(iter(group.values()))
            return {zero: c}
        by_power: dict = {}
        for e, c in group.items():
            by_power.setdefault(e[i], {})[e] = c
        acc: dict = {}
        for p, sub in sorted(by_power.items()):
            if p == 0:
                _add_into(acc, rec(sub, i + 1, budget))
                continue
            if vals[i] is None:
                continue
            v = vals[i] * p
            if v > budget:
                continue
            inner = rec(sub, i + 1, budget - v)
            if inner:
                _add_into(acc, _mul_terms(power(i, p), inner, budget, m))
        return acc

    return rec(terms, 0, order)


def evaluate(f: Jet, point: Sequence) -> GaussianRational:
    point = [GaussianRational.coerce(x) for x in point]
    if len(point) != f.space.dim:
        raise DimensionMismatch(f"point of dimension {len(point)} for {f.space}")
    cache: dict = {}
    total = ZERO
    for e, c in f._c.items():
        term = c
        for j, x in enumerate(e):
            if x:
                key = (j, x)
                if key not in cache:
                    cache[key] = point[j] ** x
                term = term * cache[key]
        total = total + term
    return total


def invert_unit(f: Jet) -> Jet:
    """Multiplicative inverse of a jet with nonzero constant term."""
    c0 = f.constant_term()
    if not c0:
        raise NotAUnit(f"{f} has zero constant term")
    g = Jet.const(f.space, f.order, c0.inverse())
    two = Jet.const(f.space, f.order, 2)
    known = 0
    while known < f.order:
        g = g * (two - f * g)
        known = 2 * known + 1
    return g.with_prec(f.prec)


def implicit_solve(phi: Sequence[Jet], unknowns) -> list:
    """Solve ``phi(x, y) = 0`` for ``y = y(x)`` with ``y(0) = 0``.

    ``unknowns`` names the block (or blocks) of ``phi``'s space holding ``y``.
    Works order by order with the constant Jacobian ``dphi/dy(0)``; the result
    lives over the space with those blocks removed.
    """
    from .linalg import inverse

    phi = list(phi)
    if not phi:
        return []
    if isinstance(unknowns, str):
        unknowns = (unknowns,)
    space = phi[0].space
    order = phi[0].order
    for p in phi:
        if p.space != space or p.order != order:
            raise SpaceMismatch("implicit system components must share space and order")
    ynames = [v for b in unknowns for v in space.block(b)]
    if len(ynames) != len(phi):
        raise DimensionMismatch(f"{len(phi)} equations for {len(ynames)} unknowns")
    for p in phi:
        if p.constant_term():
            raise SingularJacobian("implicit system does not vanish at the origin")
    xspace = space.without(*unknowns)
    zero = (0,) * space.dim
    jac = []
    for p in phi:
        row = []
        for y in ynames:
            e = list(zero)
            e[space.index(y)] = 1
            row.append(p[tuple(e)])
        jac.append(row)
    try:
        jinv = inverse(jac)
    except ZeroDivisionError:
        raise SingularJacobian("dphi/dy(0) is not invertible") from None

    k = len(phi)
    y = [{} for _ in range(k)]
    ycols = {v: j for j, v in enumerate(ynames)}
    for m in range(1, order + 1):
        xs = Jet.variables(xspace, m)
        args, xi = [], 0
        for v in space.names:
            if v in ycols:
                args.append(Jet(xspace, m, y[ycols[v]]))
            else:
                args.append(xs[xi])
                xi += 1
        resid = [compose(p.truncate(m), args) for p in phi]
        for i in range(k):
            for j in range(k):
                if jinv[i][j] and resid[j]._c:
                    _add_into(y[i], _scale_terms(resid[j]._c, jinv[i][j]), -1)
    prec = min(p.prec for p in phi)
    return [Jet._raw(xspace, order, yi, prec) for yi in y]


def invert_map(components: Sequence[Jet]) -> list:
    """Formal inverse of a map ``x -> components(x)`` fixing 0 with invertible linear part."""
    components = list(components)
    space = components[0].space
    order = components[0].order
    if len(components) != space.dim:
        raise DimensionMismatch("only square maps can be inverted")
    ybl = tuple((f"y_{b}", d) for b, d in space.blocks)
    big = VarSpace(space.blocks + ybl)
    ren = {v: _var_name(f"y_{b}", j + 1) for b, d in space.blocks for j, v in enumerate(space.block(b))}
    phi = []
    for comp, v in zip(components, space.names):
        phi.append(comp.embed(big, ren) - Jet.var(big, order, v))
    sol = implicit_solve(phi, [b for b, _ in ybl])
    return sol


def map_compose(outer: Sequence[Jet], inner: Sequence[Jet]) -> list:
    """Component-wise ``outer(inner(x))``."""
    return [compose(f, list(inner)) for f in outer]


def jacobian(components: Sequence[Jet], variables: Iterable[str] | None = None):
    from .matrix import JetMatrix

    components = list(components)
    variables = list(variables) if variables is not None else list(components[0].space.names)
    return JetMatrix([[c.derive(v) for v in variables] for c in components])
