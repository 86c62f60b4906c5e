"""Manifest language: defining equations, implicit series and maps.

A manifest is a sequence of newline separated statements::

    order 8
    implicit xi(x): xi - (1 - xi^2)*x = 0
    manifold source real n=1 d=1 name=MXI:
        Im(w) = Re(w)*xi(z*conj(z))
    manifold target real n=1 d=1 name=MP:
        rho = Im(w) - 2*Re(w)*z*conj(z)
    map (z, w^2)
    task transversal

Lines starting with whitespace continue the previous statement; ``#`` starts a
comment.  See ``docs/grammar.md`` for the full grammar.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import (
    CRTError,
    ManifestConstantTerm,
    ManifestDimensionMismatch,
    ManifestError,
    ManifestSyntaxError,
    NormalizationFailure,
    UnknownIdentifier,
    UnresolvedImplicit,
    ValidationFailure,
)
from .gaussian import I, GaussianRational
from .jets import DEFAULT_ORDER, Jet, VarSpace, compose, implicit_solve
from .manifold import GenericManifold, from_complex_defining, holo_space, normal_space, validate
from .mapping import FormalMap, compose_maps

FUNCTIONS = ("conj", "Re", "Im")
KEYWORDS = ("order", "implicit", "manifold", "map", "task")

# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: GaussianRational
    pos: tuple = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Var:
    name: str
    pos: tuple = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Call:
    """``conj``, ``Re`` or ``Im`` applied to one argument."""

    func: str
    arg: "Expr"
    pos: tuple = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class SeriesRef:
    """Application of an implicitly defined series."""

    name: str
    args: tuple
    pos: tuple = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    pos: tuple = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Neg:
    operand: "Expr"
    pos: tuple = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exp: int
    pos: tuple = field(default=(0, 0), compare=False, repr=False)


Expr = Union[Num, Var, Call, SeriesRef, BinOp, Neg, Pow]


@dataclass(frozen=True)
class Implicit:
    name: str
    aux: tuple
    lhs: Expr
    rhs: Expr
    pos: tuple = field(default=(0, 0), compare=False, repr=False)

    @property
    def expr(self) -> Expr:
        return _difference(self.lhs, self.rhs)


@dataclass(frozen=True)
class Equation:
    """``label = rhs`` (named component) or ``lhs = rhs``."""

    label: Optional[str]
    lhs: Optional[Expr]
    rhs: Expr
    pos: tuple = field(default=(0, 0), compare=False, repr=False)

    @property
    def expr(self) -> Expr:
        return self.rhs if self.lhs is None else _difference(self.lhs, self.rhs)


@dataclass(frozen=True)
class ManifoldDecl:
    role: str
    kind: str
    n: int
    d: int
    equations: tuple
    name: Optional[str] = None
    pos: tuple = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class MapDecl:
    components: tuple
    name: Optional[str] = None
    pos: tuple = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Task:
    op: str
    params: tuple = ()
    pos: tuple = field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Manifest:
    order: Optional[int] = None
    implicits: tuple = ()
    source: Optional[ManifoldDecl] = None
    target: Optional[ManifoldDecl] = None
    map: Optional[MapDecl] = None
    tasks: tuple = ()


def _difference(lhs: Expr, rhs: Expr) -> Expr:
    if isinstance(rhs, Num) and not rhs.value:
        return lhs
    return BinOp("-", lhs, rhs, lhs.pos)


# ---------------------------------------------------------------------------
# tokenizer


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t]+)|(?P<comment>#[^\n]*)|(?P<nl>\r?\n)|(?P<num>\d+)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^(),:=;])"
)


def tokenize(text: str) -> list:
    """Tokens with 1-based positions; indented lines continue the previous statement."""
    toks = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ManifestSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            nxt = m.end()
            line += 1
            line_start = nxt
            continuation = nxt < len(text) and text[nxt] in " \t"
            if not continuation:
                toks.append(Token("NEWLINE", "\n", line - 1, col))
        elif kind == "num":
            toks.append(Token("NUM", m.group(), line, col))
        elif kind == "ident":
            toks.append(Token("IDENT", m.group(), line, col))
        elif kind == "op":
            toks.append(Token(m.group(), m.group(), line, col))
        pos = m.end()
    toks.append(Token("NEWLINE", "\n", line, pos - line_start + 1))
    toks.append(Token("EOF", "", line, pos - line_start + 1))
    return toks


# ---------------------------------------------------------------------------
# parser


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg: str, expected=()):
        t = self.tok
        found = "end of line" if t.kind == "NEWLINE" else "end of input" if t.kind == "EOF" else repr(t.text)
        raise ManifestSyntaxError(f"{msg}, found {found}", t.line, t.col, expected)

    def expect(self, kind: str, what: str | None = None) -> Token:
        if self.tok.kind != kind:
            self.error("unexpected token", (what or repr(kind),))
        return self.advance()

    def expect_word(self, *words) -> Token:
        if self.tok.kind != "IDENT" or self.tok.text not in words:
            self.error("unexpected token", words)
        return self.advance()

    def skip_newlines(self):
        while self.tok.kind == "NEWLINE":
            self.advance()

    def end_statement(self):
        if self.tok.kind not in ("NEWLINE", "EOF"):
            self.error("unexpected token", ("end of statement",))
        self.skip_newlines()

    # statements

    def manifest(self) -> Manifest:
        order = None
        implicits, tasks = [], []
        source = target = mp = None
        self.skip_newlines()
        while self.tok.kind != "EOF":
            t = self.tok
            if t.kind != "IDENT" or t.text not in KEYWORDS:
                self.error("expected a statement", KEYWORDS)
            if t.text == "order":
                if order is not None:
                    raise ManifestError("duplicate order statement", t.line, t.col)
                self.advance()
                order = int(self.expect("NUM", "integer").text)
            elif t.text == "implicit":
                implicits.append(self.implicit())
            elif t.text == "manifold":
                decl = self.manifold()
                if decl.role == "source":
                    if source is not None:
                        raise ManifestError("duplicate source manifold", t.line, t.col)
                    source = decl
                else:
                    if target is not None:
                        raise ManifestError("duplicate target manifold", t.line, t.col)
                    target = decl
            elif t.text == "map":
                if mp is not None:
                    raise ManifestError("duplicate map statement", t.line, t.col)
                mp = self.map_decl()
            else:
                tasks.append(self.task())
            self.end_statement()
        return Manifest(order, tuple(implicits), source, target, mp, tuple(tasks))

    def implicit(self) -> Implicit:
        t = self.advance()
        name = self.expect("IDENT", "series name").text
        aux = ("x",)
        if self.tok.kind == "(":
            self.advance()
            names = [self.expect("IDENT", "auxiliary variable").text]
            while self.tok.kind == ",":
                self.advance()
                names.append(self.expect("IDENT", "auxiliary variable").text)
            self.expect(")")
            aux = tuple(names)
        self.expect(":")
        lhs = self.expr()
        self.expect("=")
        rhs = self.expr()
        return Implicit(name, aux, lhs, rhs, (t.line, t.col))

    def manifold(self) -> ManifoldDecl:
        t = self.advance()
        role = self.expect_word("source", "target").text
        kind = self.expect_word("real", "normal").text
        opts = {}
        while self.tok.kind == "IDENT" and self.peek().kind == "=":
            key = self.advance()
            self.advance()
            if key.text in ("n", "d"):
                opts[key.text] = int(self.expect("NUM", "integer").text)
            elif key.text == "name":
                opts["name"] = self.expect("IDENT", "name").text
            else:
                raise ManifestSyntaxError(f"unknown manifold option {key.text!r}", key.line, key.col, ("n", "d", "name"))
        for key in ("n", "d"):
            if key not in opts:
                self.error(f"missing {key}=", (f"{key}=",))
        self.expect(":")
        eqs = [self.equation()]
        while self.tok.kind not in ("NEWLINE", "EOF"):
            if self.tok.kind == ";":
                self.advance()
                continue
            eqs.append(self.equation())
        return ManifoldDecl(role, kind, opts["n"], opts["d"], tuple(eqs), opts.get("name"), (t.line, t.col))

    def equation(self) -> Equation:
        t = self.tok
        if t.kind == "IDENT" and self.peek().kind == "=" and re.fullmatch(r"(rho|Q|w)\d*", t.text):
            self.advance()
            self.advance()
            return Equation(t.text, None, self.expr(), (t.line, t.col))
        lhs = self.expr()
        self.expect("=")
        return Equation(None, lhs, self.expr(), (t.line, t.col))

    def map_decl(self) -> MapDecl:
        t = self.advance()
        name = None
        if self.tok.kind == "IDENT" and self.peek().kind == "=":
            name = self.advance().text
            self.advance()
        self.expect("(")
        comps = [self.expr()]
        while self.tok.kind == ",":
            self.advance()
            comps.append(self.expr())
        self.expect(")")
        return MapDecl(tuple(comps), name, (t.line, t.col))

    def task(self) -> Task:
        t = self.advance()
        words = [self.expect("IDENT", "operation name").text]
        while self.tok.kind == "-" and self.peek().kind == "IDENT":
            self.advance()
            words.append(self.advance().text)
        params = []
        while self.tok.kind == "IDENT" and self.peek().kind == "=":
            key = self.advance().text
            self.advance()
            v = self.tok
            if v.kind not in ("NUM", "IDENT"):
                self.error("expected a parameter value", ("integer", "word"))
            self.advance()
            params.append((key, int(v.text) if v.kind == "NUM" else v.text))
        return Task("-".join(words), tuple(params), (t.line, t.col))

    # expressions

    def expr(self) -> Expr:
        left = self.term()
        while self.tok.kind in ("+", "-"):
            op = self.advance()
            left = BinOp(op.kind, left, self.term(), (op.line, op.col))
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.tok.kind in ("*", "/"):
            op = self.advance()
            left = BinOp(op.kind, left, self.unary(), (op.line, op.col))
        return left

    def unary(self) -> Expr:
        if self.tok.kind == "-":
            t = self.advance()
            return Neg(self.unary(), (t.line, t.col))
        if self.tok.kind == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.tok.kind == "^":
            op = self.advance()
            e = self.expect("NUM", "non-negative integer exponent")
            return Pow(base, int(e.text), (op.line, op.col))
        return base

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "NUM":
            self.advance()
            return Num(GaussianRational(int(t.text)), (t.line, t.col))
        if t.kind == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "IDENT":
            self.advance()
            if t.text == "i":
                return Num(I, (t.line, t.col))
            if self.tok.kind == "(":
                self.advance()
                args = [self.expr()]
                while self.tok.kind == ",":
                    self.advance()
                    args.append(self.expr())
                self.expect(")")
                if t.text in FUNCTIONS:
                    if len(args) != 1:
                        raise ManifestSyntaxError(f"{t.text} takes one argument", t.line, t.col)
                    return Call(t.text, args[0], (t.line, t.col))
                return SeriesRef(t.text, tuple(args), (t.line, t.col))
            return Var(t.text, (t.line, t.col))
        self.error("expected an expression", ("number", "identifier", "'('"))


def parse_expr(text: str) -> Expr:
    p = _Parser(text)
    p.skip_newlines()
    e = p.expr()
    p.skip_newlines()
    if p.tok.kind != "EOF":
        p.error("trailing input", ("end of input",))
    return e


def parse(text: str) -> Manifest:
    """Parse manifest text and resolve every identifier."""
    m = _Parser(text).manifest()
    resolve(m)
    return m


# ---------------------------------------------------------------------------
# name resolution


def _indexed(name: str, stem: str, count: int):
    """Index of ``name`` as a member of block ``stem`` (``z`` alone only when count is 1)."""
    if name == stem:
        return 1 if count == 1 else None
    m = re.fullmatch(re.escape(stem) + r"(\d+)", name)
    if m and 1 <= int(m.group(1)) <= count:
        return int(m.group(1))
    return None


def _canonical(name: str, n: int, d: int, blocks) -> str | None:
    dims = {"z": n, "w": d, "chi": n, "tau": d}
    for stem in blocks:
        k = _indexed(name, stem, dims[stem])
        if k is not None:
            return f"{stem}{k}"
    return None


def _walk(e: Expr):
    yield e
    if isinstance(e, Call):
        yield from _walk(e.arg)
    elif isinstance(e, SeriesRef):
        for a in e.args:
            yield from _walk(a)
    elif isinstance(e, BinOp):
        yield from _walk(e.left)
        yield from _walk(e.right)
    elif isinstance(e, (Neg,)):
        yield from _walk(e.operand)
    elif isinstance(e, Pow):
        yield from _walk(e.base)


def _check_expr(e: Expr, allowed_var, series: dict, allow_reim: bool, context: str):
    for node in _walk(e):
        if isinstance(node, Var) and not allowed_var(node.name):
            raise UnknownIdentifier(f"unknown identifier {node.name!r} in {context}", *node.pos)
        if isinstance(node, Call) and node.func in ("Re", "Im") and not allow_reim:
            raise ManifestError(f"{node.func} is only allowed in real defining equations", *node.pos)
        if isinstance(node, SeriesRef):
            if node.name not in series:
                raise UnknownIdentifier(f"unknown series {node.name!r} in {context}", *node.pos)
            if len(node.args) != series[node.name]:
                raise ManifestDimensionMismatch(
                    f"series {node.name} takes {series[node.name]} argument(s), got {len(node.args)}", *node.pos
                )


def resolve(m: Manifest) -> None:
    """Raise a positioned diagnostic for any name that does not resolve."""
    series = {}
    for imp in m.implicits:
        if imp.name in series or imp.name in FUNCTIONS or imp.name == "i":
            raise ManifestError(f"series name {imp.name!r} is already taken", *imp.pos)
        names = set(imp.aux) | {imp.name}
        _check_expr(imp.expr, names.__contains__, series, False, f"implicit {imp.name}")
        series[imp.name] = len(imp.aux)
    for decl in (m.source, m.target):
        if decl is None:
            continue
        if decl.n < 0 or decl.d < 1:
            raise ManifestDimensionMismatch("need n >= 0 and d >= 1", *decl.pos)
        if len(decl.equations) != decl.d:
            raise ManifestDimensionMismatch(
                f"{decl.role} manifold has d={decl.d} but {len(decl.equations)} equation(s)", *decl.pos
            )
        blocks = ("z", "w", "chi", "tau") if decl.kind == "real" else ("z", "chi", "tau")
        ok = lambda v, decl=decl, blocks=blocks: _canonical(v, decl.n, decl.d, blocks) is not None
        for eq in decl.equations:
            if decl.kind == "normal" and eq.lhs is not None:
                raise ManifestError("normal-form equations must read Q = ... or w = ...", *eq.pos)
            if decl.kind == "real" and eq.label is not None and not eq.label.startswith("rho"):
                raise ManifestError("real defining equations read rho = ... or lhs = rhs", *eq.pos)
            _check_expr(eq.expr, ok, series, decl.kind == "real", f"{decl.role} manifold")
    if m.map is not None:
        src = m.source
        if src is None:
            raise ManifestError("map given without a source manifold", *m.map.pos)
        tgt = m.target or src
        if len(m.map.components) != src.n + src.d or tgt.n + tgt.d != src.n + src.d:
            raise ManifestDimensionMismatch(
                f"map has {len(m.map.components)} components, expected {tgt.n + tgt.d}", *m.map.pos
            )
        ok = lambda v: _canonical(v, src.n, src.d, ("z", "w")) is not None
        for c in m.map.components:
            _check_expr(c, ok, series, False, "map")


# ---------------------------------------------------------------------------
# pretty printer

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_UNARY = 3
_POW = 4


def _num_str(v: GaussianRational) -> str:
    if v == I:
        return "i"
    s = str(v)
    return s if re.fullmatch(r"\d+", s) else f"({s})"


def format_expr(e: Expr, ctx: int = 0) -> str:
    if isinstance(e, Num):
        s, p = _num_str(e.value), _POW + 1
    elif isinstance(e, Var):
        s, p = e.name, _POW + 1
    elif isinstance(e, Call):
        s, p = f"{e.func}({format_expr(e.arg)})", _POW + 1
    elif isinstance(e, SeriesRef):
        s, p = f"{e.name}({', '.join(format_expr(a) for a in e.args)})", _POW + 1
    elif isinstance(e, Pow):
        s, p = f"{format_expr(e.base, _POW + 1)}^{e.exp}", _POW
    elif isinstance(e, Neg):
        s, p = f"-{format_expr(e.operand, _UNARY)}", _UNARY
    else:
        p = _PREC[e.op]
        sep = f" {e.op} " if p == 1 else e.op
        s = format_expr(e.left, p) + sep + format_expr(e.right, p + 1)
    return f"({s})" if p < ctx else s


def format_manifest(m: Manifest) -> str:
    out = []
    if m.order is not None:
        out.append(f"order {m.order}")
    for imp in m.implicits:
        out.append(f"implicit {imp.name}({', '.join(imp.aux)}): {format_expr(imp.lhs)} = {format_expr(imp.rhs)}")
    for decl in (m.source, m.target):
        if decl is None:
            continue
        head = f"manifold {decl.role} {decl.kind} n={decl.n} d={decl.d}"
        if decl.name:
            head += f" name={decl.name}"
        out.append(head + ":")
        for eq in decl.equations:
            if eq.label is not None:
                out.append(f"    {eq.label} = {format_expr(eq.rhs)}")
            else:
                out.append(f"    {format_expr(eq.lhs)} = {format_expr(eq.rhs)}")
    if m.map is not None:
        prefix = f"{m.map.name} = " if m.map.name else ""
        out.append(f"map {prefix}({', '.join(format_expr(c) for c in m.map.components)})")
    for t in m.tasks:
        out.append(" ".join([f"task {t.op}"] + [f"{k}={v}" for k, v in t.params]))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# lowering


def real_space(n: int, d: int) -> VarSpace:
    """``(z, w, chi, tau)``: the complexified ambient space of a real defining equation."""
    return VarSpace.of(("z", n), ("w", d), ("chi", n), ("tau", d))


def bar_image(f: Jet) -> Jet:
    """Complexified conjugate: conjugate coefficients and swap ``z <-> chi``, ``w <-> tau``."""
    swap = {"z": "chi", "chi": "z", "w": "tau", "tau": "w"}
    ren = {}
    for b, dim in f.space.blocks:
        if b not in swap or f.space.block_dim(swap[b]) != dim:
            raise UnknownIdentifier(f"conj() needs a paired variable block for {b!r}")
        for x, y in zip(f.space.block(b), f.space.block(swap[b])):
            ren[x] = y
    return f.bar().embed(f.space, ren)


class _Lowering:
    def __init__(self, space: VarSpace, D: int, series: dict, names: dict):
        self.space, self.D, self.series, self.names = space, D, series, names

    def __call__(self, e: Expr) -> Jet:
        S, D = self.space, self.D
        if isinstance(e, Num):
            return Jet.const(S, D, e.value)
        if isinstance(e, Var):
            if e.name not in self.names:
                raise UnknownIdentifier(f"unknown identifier {e.name!r}", *e.pos)
            return Jet.var(S, D, self.names[e.name])
        if isinstance(e, Call):
            u = self(e.arg)
            try:
                ub = bar_image(u)
            except UnknownIdentifier as exc:
                raise UnknownIdentifier(str(exc), *e.pos) from None
            if e.func == "conj":
                return ub
            if e.func == "Re":
                return (u + ub) / 2
            return (u - ub) / GaussianRational(0, 2)
        if isinstance(e, SeriesRef):
            if e.name not in self.series:
                raise UnresolvedImplicit(f"series {e.name!r} has not been solved", *e.pos)
            s = self.series[e.name]
            args = [self(a) for a in e.args]
            for a in args:
                if a.constant_term():
                    raise ManifestConstantTerm(f"argument of {e.name} must vanish at 0", *e.pos)
            return compose(s.with_order(D), args, S)
        if isinstance(e, Neg):
            return -self(e.operand)
        if isinstance(e, Pow):
            return self(e.base) ** e.exp
        left, right = self(e.left), self(e.right)
        if e.op == "+":
            return left + right
        if e.op == "-":
            return left - right
        if e.op == "*":
            return left * right
        if right.is_constant():
            c = right.constant_term()
            if not c:
                raise ManifestError("division by zero", *e.pos)
            return left * c.inverse()
        if not right.constant_term():
            raise ManifestError("divisor must have a nonzero constant term", *e.pos)
        return left / right


def _names_for(space: VarSpace, n: int, d: int) -> dict:
    blocks = [b for b, _ in space.blocks]
    names = {}
    for v in ("z", "w", "chi", "tau"):
        if v not in blocks:
            continue
        dim = space.block_dim(v)
        for k, full in enumerate(space.block(v), start=1):
            names[f"{v}{k}"] = full
            if dim == 1:
                names[v] = full
    return names


def lower(e: Expr, space: VarSpace, D: int = DEFAULT_ORDER, series: dict | None = None) -> Jet:
    """Complexify an expression into a jet over ``space``.

    Variables ``z, w, chi, tau`` (with 1-based indices) map to the blocks of
    the same name; ``conj`` swaps ``z <-> chi`` and ``w <-> tau`` and conjugates
    coefficients.  Implicit series must be supplied already solved in ``series``.
    """
    names = {}
    for b, dim in space.blocks:
        for k, full in enumerate(space.block(b), start=1):
            names[full] = full
            names[f"{b}{k}"] = full
            if dim == 1:
                names[b] = full
    return _Lowering(space, D, series or {}, names)(e)


def solve_implicits(implicits, D: int) -> dict:
    """Solve each implicit declaration once, in order, as a jet over its auxiliaries."""
    series = {}
    for imp in implicits:
        blocks = [(a, 1) for a in imp.aux] + [(imp.name, 1)]
        if len({b for b, _ in blocks}) != len(blocks):
            raise ManifestError(f"implicit {imp.name}: repeated variable name", *imp.pos)
        S = VarSpace.of(*blocks)
        names = {b: S.block(b)[0] for b, _ in blocks}
        phi = _Lowering(S, D, series, names)(imp.expr)
        try:
            sol = implicit_solve([phi], imp.name)[0]
        except CRTError as exc:
            raise ManifestError(f"implicit {imp.name}: {exc}", *imp.pos) from None
        series[imp.name] = sol
    return series


@dataclass
class Instance:
    """Objects built from a manifest (target and map are optional)."""

    source: GenericManifold
    target: Optional[GenericManifold]
    map: Optional[FormalMap]
    order: int
    changes: dict = field(default_factory=dict)


def _embed_checked(f: Jet, space: VarSpace, forbidden: tuple, pos, what: str) -> Jet:
    """Drop the ``forbidden`` blocks from ``f``'s space, refusing if ``f`` depends on them."""
    bad = [f.space.index(v) for b in forbidden for v in f.space.block(b)]
    for e, _ in f.terms():
        for j in bad:
            if e[j]:
                raise ManifestError(f"{what} may not depend on {f.space.names[j]}", *pos)
    keep = [j for j in range(f.space.dim) if j not in bad]
    c = {tuple(e[j] for j in keep): v for e, v in f.coeffs.items() if not any(e[j] for j in bad)}
    return Jet._raw(space, f.order, c, f.prec)


def build_manifold(decl: ManifoldDecl, D: int, series: dict, check: bool = True):
    """Normal-form manifold from a declaration, plus the coordinate change used (if any)."""
    n, d = decl.n, decl.d
    name = decl.name or decl.role
    R = real_space(n, d)
    names = _names_for(R, n, d)
    low = _Lowering(R, D, series, names)
    order_eqs = _ordered(decl)
    if decl.kind == "normal":
        Q = [_embed_checked(low(eq.expr), normal_space(n, d), ("w",), eq.pos, "normal-form Q") for eq in order_eqs]
        M = GenericManifold(n, d, Q, name)
        if check:
            rep = validate(M)
            if not rep.verdict:
                raise ValidationFailure(rep.message, rep)
        return M, None
    rho = []
    for eq in order_eqs:
        r = low(eq.expr)
        if r.constant_term():
            raise ManifestError("defining function must vanish at the origin", *eq.pos)
        rho.append(r)
    try:
        wsol = implicit_solve(rho, "w")
    except CRTError as exc:
        raise NormalizationFailure(f"{name}: cannot solve the defining equations for w ({exc})") from None
    Qt = [q.embed(normal_space(n, d)) for q in wsol]
    try:
        M, change = from_complex_defining(Qt, n, d, name)
    except CRTError as exc:
        raise NormalizationFailure(f"{name}: {exc}") from None
    return M, change


def _ordered(decl: ManifoldDecl) -> list:
    """Equations in component order (``rho2`` / ``Q2`` labels select a slot)."""
    slots = [None] * decl.d
    rest = []
    for eq in decl.equations:
        m = re.fullmatch(r"(?:rho|Q|w)(\d+)", eq.label or "")
        if m:
            k = int(m.group(1))
            if not 1 <= k <= decl.d or slots[k - 1] is not None:
                raise ManifestError(f"bad or repeated component label {eq.label}", *eq.pos)
            slots[k - 1] = eq
        else:
            rest.append(eq)
    it = iter(rest)
    return [s if s is not None else next(it) for s in slots]


def build_map(decl: MapDecl, n: int, d: int, nt: int, D: int, series: dict) -> FormalMap:
    R = real_space(n, d)
    low = _Lowering(R, D, series, _names_for(R, n, d))
    S = holo_space(n, d)
    comps = []
    for k, c in enumerate(decl.components):
        jet = _embed_checked(low(c), S, ("chi", "tau"), c.pos, "map components")
        if jet.constant_term():
            raise ManifestConstantTerm(
                f"map component {k + 1} has nonzero constant term {jet.constant_term()}", *c.pos
            )
        comps.append(jet)
    return FormalMap(n, d, comps[:nt], comps[nt:], decl.name or "H")


def build_instance(m: Manifest, order: int | None = None, check: bool = True) -> Instance:
    """Lower a parsed manifest to manifolds in normal coordinates and a formal map.

    ``order`` overrides the manifest's own ``order`` statement.
    """
    D = order if order is not None else (m.order if m.order is not None else DEFAULT_ORDER)
    if m.source is None:
        raise ManifestError("manifest declares no source manifold")
    series = solve_implicits(m.implicits, D)
    M, ch_src = build_manifold(m.source, D, series, check)
    Mp, ch_tgt = (build_manifold(m.target, D, series, check) if m.target is not None else (None, None))
    H = None
    if m.map is not None:
        tgt = m.target or m.source
        H = build_map(m.map, m.source.n, m.source.d, tgt.n, D, series)
        # the map is written in the declared coordinates; move it to normal ones
        if ch_src is not None:
            H = compose_maps(ch_src.inverse(), H)
        ch_t = ch_tgt if m.target is not None else ch_src
        if ch_t is not None:
            H = compose_maps(H, ch_t)
        H.name = m.map.name or "H"
    changes = {k: v for k, v in (("source", ch_src), ("target", ch_tgt)) if v is not None}
    return Instance(M, Mp, H, D, changes)


def load(path: str) -> Manifest:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())
