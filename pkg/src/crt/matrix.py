"""Matrices of jets: products, determinants, adjugates and generic rank."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from gmpy2 import mpq

from .errors import DimensionMismatch, NotSquare, SpaceMismatch
from .gaussian import ONE, ZERO, GaussianRational
from .jets import Jet, VarSpace, compose


class JetMatrix:
    """Rectangular matrix whose entries are jets over one space and order."""

    __slots__ = ("_rows", "rows", "cols", "space", "order")

    def __init__(self, entries):
        rows = [list(r) for r in entries]
        if not rows or not rows[0]:
            raise DimensionMismatch("a JetMatrix needs at least one entry")
        ncols = len(rows[0])
        if any(len(r) != ncols for r in rows):
            raise DimensionMismatch("ragged matrix")
        space, order = rows[0][0].space, rows[0][0].order
        for r in rows:
            for e in r:
                if e.space != space or e.order != order:
                    raise SpaceMismatch("matrix entries must share space and order")
        self._rows = rows
        self.rows = len(rows)
        self.cols = ncols
        self.space = space
        self.order = order

    @classmethod
    def identity(cls, n: int, space: VarSpace, order: int) -> "JetMatrix":
        return cls([[Jet.one(space, order) if i == j else Jet.zero(space, order) for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, rows: int, cols: int, space: VarSpace, order: int) -> "JetMatrix":
        return cls([[Jet.zero(space, order) for _ in range(cols)] for _ in range(rows)])

    @classmethod
    def constant(cls, values, space: VarSpace, order: int) -> "JetMatrix":
        return cls([[Jet.const(space, order, v) for v in row] for row in values])

    def __getitem__(self, ij) -> Jet:
        i, j = ij
        return self._rows[i][j]

    def row(self, i: int) -> list:
        return list(self._rows[i])

    def col(self, j: int) -> list:
        return [r[j] for r in self._rows]

    def tolist(self) -> list:
        return [list(r) for r in self._rows]

    @property
    def shape(self):
        return (self.rows, self.cols)

    @property
    def prec(self) -> int:
        return min(e.prec for r in self._rows for e in r)

    def submatrix(self, rows, cols) -> "JetMatrix":
        return JetMatrix([[self._rows[i][j] for j in cols] for i in rows])

    def last_columns(self, k: int) -> "JetMatrix":
        return self.submatrix(range(self.rows), range(self.cols - k, self.cols))

    def map(self, fn) -> "JetMatrix":
        return JetMatrix([[fn(e) for e in r] for r in self._rows])

    def bar(self) -> "JetMatrix":
        return self.map(lambda e: e.bar())

    def compose(self, args, space=None) -> "JetMatrix":
        return self.map(lambda e: compose(e, args, space))

    def transpose(self) -> "JetMatrix":
        return JetMatrix([self.col(j) for j in range(self.cols)])

    def __add__(self, other: "JetMatrix") -> "JetMatrix":
        self._same_shape(other)
        return JetMatrix([[a + b for a, b in zip(ra, rb)] for ra, rb in zip(self._rows, other._rows)])

    def __sub__(self, other: "JetMatrix") -> "JetMatrix":
        self._same_shape(other)
        return JetMatrix([[a - b for a, b in zip(ra, rb)] for ra, rb in zip(self._rows, other._rows)])

    def __neg__(self):
        return self.map(lambda e: -e)

    def __matmul__(self, other: "JetMatrix") -> "JetMatrix":
        if self.cols != other.rows:
            raise DimensionMismatch(f"cannot multiply {self.shape} by {other.shape}")
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = Jet.zero(self.space, self.order)
                for k in range(self.cols):
                    acc = acc + self._rows[i][k] * other._rows[k][j]
                row.append(acc)
            out.append(row)
        return JetMatrix(out)

    def scale(self, c) -> "JetMatrix":
        return self.map(lambda e: e * c)

    def _same_shape(self, other):
        if self.shape != other.shape:
            raise DimensionMismatch(f"shape {self.shape} vs {other.shape}")

    def is_zero(self) -> bool:
        return all(e.is_zero() for r in self._rows for e in r)

    def constant_matrix(self) -> list:
        return [[e.constant_term() for e in r] for r in self._rows]

    def first_nonzero(self):
        """``(i, j, exponent, coefficient)`` of the lowest known nonzero term, or None."""
        best = None
        for i, r in enumerate(self._rows):
            for j, e in enumerate(r):
                t = e.lowest_term()
                if t is not None and (best is None or sum(t[0]) < sum(best[2])):
                    best = (i, j, t[0], t[1])
        return best

    def __eq__(self, other):
        if not isinstance(other, JetMatrix) or other.shape != self.shape:
            return NotImplemented
        return all(a == b for ra, rb in zip(self._rows, other._rows) for a, b in zip(ra, rb))

    __hash__ = None

    def __repr__(self):
        body = "; ".join("[" + ", ".join(str(e).rsplit(" + O(", 1)[0] for e in r) + "]" for r in self._rows)
        return f"JetMatrix({self.rows}x{self.cols}: {body})"


# ---------------------------------------------------------------------------
# determinants


class _Minors:
    """Laplace-expansion minors with memoisation on (rows, cols)."""

    def __init__(self, A: JetMatrix):
        self.A = A
        self.cache: dict = {}

    def __call__(self, rows: tuple, cols: tuple) -> Jet:
        key = (rows, cols)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        A = self.A
        if len(rows) == 1:
            val = A[rows[0], cols[0]]
        else:
            r0, rest = rows[0], rows[1:]
            val = Jet.zero(A.space, A.order)
            for k, c in enumerate(cols):
                a = A[r0, c]
                if not a._c and a.prec >= A.order:
                    continue
                sub = self(rest, cols[:k] + cols[k + 1:])
                term = a * sub
                val = val - term if k % 2 else val + term
        self.cache[key] = val
        return val


def det(A: JetMatrix) -> Jet:
    if A.rows != A.cols:
        raise NotSquare(f"determinant of a {A.rows}x{A.cols} matrix")
    idx = tuple(range(A.rows))
    return _Minors(A)(idx, idx)


def det_adj(A: JetMatrix):
    """Determinant and adjugate, with ``A @ adj == adj @ A == det * I``."""
    if A.rows != A.cols:
        raise NotSquare(f"adjugate of a {A.rows}x{A.cols} matrix")
    n = A.rows
    minors = _Minors(A)
    idx = tuple(range(n))
    d = minors(idx, idx)
    if n == 1:
        return d, JetMatrix([[Jet.one(A.space, A.order).with_prec(A.prec)]])
    adj = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            m = minors(idx[:i] + idx[i + 1:], idx[:j] + idx[j + 1:])
            adj[j][i] = -m if (i + j) % 2 else m
    return d, JetMatrix(adj)


def inverse(A: JetMatrix) -> JetMatrix:
    """Inverse of a matrix whose determinant is a unit."""
    from .jets import invert_unit

    d, adj = det_adj(A)
    dinv = invert_unit(d)
    return adj.map(lambda e: e * dinv)


# ---------------------------------------------------------------------------
# generic rank


@dataclass
class RankResult:
    rank: int
    method: str
    order: int
    prec: int
    certificate: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "method": self.method,
            "order": self.order,
            "prec": self.prec,
            "certificate": self.certificate,
        }


def _nonzero_to(j: Jet, prec: int) -> bool:
    return any(sum(e) <= prec for e in j._c)


def generic_rank(A: JetMatrix, method: str = "minors", *, seed: int = 0, points: int = 20) -> RankResult:
    """Rank of ``A`` over the fraction field of the truncated jet ring.

    ``rank`` is the largest r with an r x r minor that is nonzero in some degree
    up to ``prec`` (the least precision among the entries).  It never exceeds the
    generic rank of the untruncated matrix, so a full-rank answer is final while a
    deficient one only holds up to the reported order.

    ``method="minors"`` enumerates memoised Laplace minors; the certificate is the
    witnessing row/column sets.  ``method="random"`` restricts the matrix to
    ``points`` random lines ``x = s*p`` through the origin and computes the rank
    over the truncated univariate ring by valuation-pivoted elimination; the
    certificate is a direction ``p`` attaining the maximum.
    """
    P = A.prec
    if method == "minors":
        return _rank_minors(A, P)
    if method == "random":
        return _rank_random(A, P, seed, points)
    raise ValueError(f"unknown rank method {method!r}")


def _rank_minors(A: JetMatrix, P: int) -> RankResult:
    minors = _Minors(A)
    best = 0
    cert: dict = {}
    for r in range(1, min(A.rows, A.cols) + 1):
        found = None
        for rows in itertools.combinations(range(A.rows), r):
            for cols in itertools.combinations(range(A.cols), r):
                m = minors(rows, cols)
                if _nonzero_to(m, P):
                    found = (rows, cols, m)
                    break
            if found:
                break
        if not found:
            break
        best = r
        low = found[2].lowest_term()
        cert = {
            "rows": list(found[0]),
            "cols": list(found[1]),
            "minor_lowest_term": {"exponent": list(low[0]), "coefficient": str(low[1])},
        }
    return RankResult(best, "minors", A.order, P, cert)


def random_point(rng: random.Random, dim: int) -> list:
    """Gaussian rational with numerators in [-9, 9] and denominators in {1, 2, 3}."""
    pts = []
    for _ in range(dim):
        re = mpq(rng.randint(-9, 9), rng.choice((1, 2, 3)))
        im = mpq(rng.randint(-9, 9), rng.choice((1, 2, 3)))
        pts.append(GaussianRational._make(re, im))
    return pts


def restrict_to_line(f: Jet, p, prec: int) -> list:
    """Coefficients in ``s`` of ``f(s*p)`` up to degree ``prec``."""
    coeffs = [ZERO] * (prec + 1)
    for e, c in f._c.items():
        d = sum(e)
        if d > prec:
            continue
        term = c
        for x, k in zip(p, e):
            if k:
                term = term * x ** k
        coeffs[d] = coeffs[d] + term
    return coeffs


def _val(u: list):
    for k, c in enumerate(u):
        if c:
            return k
    return None


def _series_mul(a: list, b: list, P: int) -> list:
    out = [ZERO] * (P + 1)
    for i, x in enumerate(a):
        if not x:
            continue
        for j in range(0, P + 1 - i):
            y = b[j]
            if y:
                out[i + j] = out[i + j] + x * y
    return out


def _series_inv(u: list, P: int) -> list:
    inv0 = u[0].inverse()
    out = [ZERO] * (P + 1)
    out[0] = inv0
    for k in range(1, P + 1):
        acc = ZERO
        for j in range(1, k + 1):
            if u[j] and out[k - j]:
                acc = acc + u[j] * out[k - j]
        out[k] = -acc * inv0
    return out


def chain_ring_rank(M: list, P: int) -> int:
    """Rank of a matrix over Q(i)[s]/(s^(P+1)) in the determinantal sense.

    Pivoting on an entry of least valuation keeps every elimination exact; the
    pivot valuations v1 <= v2 <= ... generate the determinantal ideals, so the
    rank is the longest prefix with v1 + ... + vr <= P.
    """
    M = [[list(e) for e in row] for row in M]
    vals = []
    while M and M[0]:
        best = None
        for i, row in enumerate(M):
            for j, e in enumerate(row):
                v = _val(e)
                if v is not None and (best is None or v < best[0]):
                    best = (v, i, j)
        if best is None:
            break
        v, pi, pj = best
        vals.append(v)
        unit = M[pi][pj][v:] + [ZERO] * v
        uinv = _series_inv(unit, P)
        prow = M[pi]
        for i, row in enumerate(M):
            if i == pi:
                continue
            e = row[pj]
            if _val(e) is None:
                continue
            shifted = e[v:] + [ZERO] * v
            f = _series_mul(shifted, uinv, P)
            for j in range(len(row)):
                if j == pj:
                    continue
                sub = _series_mul(f, prow[j], P)
                row[j] = [a - b for a, b in zip(row[j], sub)]
        M = [[e for j, e in enumerate(row) if j != pj] for i, row in enumerate(M) if i != pi]
    total, r = 0, 0
    for v in vals:
        total += v
        if total > P:
            break
        r += 1
    return r


def _rank_random(A: JetMatrix, P: int, seed: int, points: int) -> RankResult:
    rng = random.Random(seed)
    best, cert = -1, {}
    if P < 0:
        return RankResult(0, "random", A.order, P, {})
    for _ in range(points):
        p = random_point(rng, A.space.dim)
        M = [[restrict_to_line(A[i, j], p, P) for j in range(A.cols)] for i in range(A.rows)]
        r = chain_ring_rank(M, P)
        if r > best:
            best, cert = r, {"direction": [str(x) for x in p]}
        if best == min(A.rows, A.cols):
            break
    return RankResult(best, "random", A.order, P, cert)
