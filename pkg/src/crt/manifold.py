"""Formal generic submanifolds in normal coordinates.

A manifold of CR dimension n and codimension d is the complex equation
``w = Q(z, chi, tau)`` with ``Q`` a d-tuple of jets over ``(z:n, chi:n, tau:d)``,
where ``chi`` and ``tau`` stand for the conjugates of ``z`` and ``w``.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Sequence

from .errors import DegenerateCodirection, DimensionMismatch, NormalizationFailure, RealityViolation
from .gaussian import ZERO, GaussianRational
from .jets import Jet, VarSpace, compose, implicit_solve, invert_map
from .linalg import det as const_det, nullspace
from .matrix import JetMatrix, generic_rank
from .report import Report, residual_info

log = logging.getLogger(__name__)


def normal_space(n: int, d: int) -> VarSpace:
    return VarSpace.of(("z", n), ("chi", n), ("tau", d))


def holo_space(n: int, d: int) -> VarSpace:
    return VarSpace.of(("z", n), ("w", d))


def segre_space(n: int, k: int) -> VarSpace:
    return VarSpace(tuple((f"t{j}", n) for j in range(1, k + 1)))


def _block(space, name):
    return list(space.block(name))


class GenericManifold:
    """Formal generic submanifold ``w = Q(z, conj z, conj w)`` in normal coordinates."""

    def __init__(self, n: int, d: int, Q: Sequence[Jet], name: str | None = None):
        Q = list(Q)
        if len(Q) != d:
            raise DimensionMismatch(f"codimension {d} needs {d} components, got {len(Q)}")
        space = normal_space(n, d)
        for q in Q:
            if q.space != space:
                raise DimensionMismatch(f"Q must live over {space}, got {q.space}")
        if len({q.order for q in Q}) != 1:
            raise DimensionMismatch("Q components must share one order")
        self.n = n
        self.d = d
        self.Q = Q
        self.name = name or "M"

    @property
    def N(self) -> int:
        return self.n + self.d

    @property
    def order(self) -> int:
        return self.Q[0].order

    @property
    def space(self) -> VarSpace:
        return self.Q[0].space

    def __repr__(self):
        return f"GenericManifold({self.name}: n={self.n}, d={self.d}, D={self.order}, Q={[str(q) for q in self.Q]})"

    def jacobian(self, block: str) -> JetMatrix:
        """d x (block dim) matrix of partial derivatives of Q, e.g. ``Q_z``."""
        names = self.space.block(block)
        return JetMatrix([[q.derive(v) for v in names] for q in self.Q])

    def truncate(self, order: int) -> "GenericManifold":
        return GenericManifold(self.n, self.d, [q.truncate(order) for q in self.Q], self.name)

    def reality_residual(self) -> list:
        """``Q(z, chi, Qbar(chi, z, w)) - w`` over ``(z, chi, w)``."""
        n, d = self.n, self.d
        R = VarSpace.of(("z", n), ("chi", n), ("w", d))
        D = self.order
        zs = Jet.variables(R, D, "z")
        cs = Jet.variables(R, D, "chi")
        ws = Jet.variables(R, D, "w")
        inner = [compose(q.bar(), cs + zs + ws) for q in self.Q]
        return [compose(q, zs + cs + inner) - w for q, w in zip(self.Q, ws)]

    def normality_residuals(self) -> tuple:
        """``(Q(z,0,tau) - tau, Q(0,chi,tau) - tau)`` over the normal space."""
        S = self.space
        D = self.order
        taus = Jet.variables(S, D, "tau")
        kill_chi = {v: Jet.zero(S, D) for v in S.block("chi")}
        kill_z = {v: Jet.zero(S, D) for v in S.block("z")}
        r1 = [compose(q, kill_chi, S) - t for q, t in zip(self.Q, taus)]
        r2 = [compose(q, kill_z, S) - t for q, t in zip(self.Q, taus)]
        return r1, r2


def _first_failure(residuals: list) -> dict:
    for l, r in enumerate(residuals):
        info = residual_info(r)
        if not info["zero"]:
            info["component"] = l + 1
            return info
    return {"zero": True, "verified_order": min(r.prec for r in residuals) if residuals else 0}


def validate(M: GenericManifold) -> Report:
    """Check normality and reality of ``M`` coefficient by coefficient."""
    r1, r2 = M.normality_residuals()
    normal_z = _first_failure(r1)
    normal_0 = _first_failure(r2)
    real = _first_failure(M.reality_residual())
    ok = normal_z["zero"] and normal_0["zero"] and real["zero"]
    failed = [name for name, info in (("normality Q(z,0,tau)=tau", normal_z),
                                       ("normality Q(0,chi,tau)=tau", normal_0),
                                       ("reality", real)) if not info["zero"]]
    msg = "valid generic manifold in normal coordinates" if ok else "invalid: " + ", ".join(failed) + " failed"
    return Report(
        operation="validate",
        verdict=ok,
        order=M.order,
        verified_order=M.order,
        message=f"{M.name}: {msg} (D={M.order})",
        details={
            "manifold": M.name,
            "n": M.n,
            "d": M.d,
            "normality": "pass" if normal_z["zero"] and normal_0["zero"] else "fail",
            "reality": "pass" if real["zero"] else "fail",
            "normality_chi0": normal_z,
            "normality_z0": normal_0,
            "reality_residual": real,
        },
    )


# ---------------------------------------------------------------------------
# normal coordinates


def _choose_lambda(A: list) -> GaussianRational:
    d = len(A)
    for re, im in itertools.chain([(1, 0), (0, 1)], ((a, b) for a in range(1, 6) for b in range(1, 6))):
        lam = GaussianRational(re, im)
        M = [[(lam if i == j else ZERO) + lam.conj() * A[i][j] for j in range(d)] for i in range(d)]
        if const_det(M):
            return lam
    raise NormalizationFailure("no admissible scaling for the transverse normalization")


def from_complex_defining(Qt: Sequence[Jet], n: int, d: int, name: str = "M"):
    """Bring a real complex defining equation ``w = Qt(z, chi, tau)`` to normal coordinates.

    Returns ``(M, change)`` where ``change`` is the formal map ``(z, w) -> (z, w')``
    carrying the graph of ``Qt`` onto the graph of the normalized ``Q``.
    """
    from .mapping import FormalMap

    Qt = list(Qt)
    S = normal_space(n, d)
    D = Qt[0].order
    raw = GenericManifold(n, d, Qt, name)
    real = _first_failure(raw.reality_residual())
    if not real["zero"]:
        raise RealityViolation(f"{name}: defining series fail the reality identity at {real['first_offending']}")
    if any(q.constant_term() for q in Qt):
        raise NormalizationFailure(f"{name}: defining series do not pass through the origin")
    zero = (0,) * S.dim
    Qtau0 = []
    for q in Qt:
        row = []
        for t in S.block("tau"):
            e = list(zero)
            e[S.index(t)] = 1
            row.append(q[tuple(e)])
        Qtau0.append(row)
    if not const_det(Qtau0):
        raise DegenerateCodirection(f"{name}: dQ/dtau(0) is singular")

    W = VarSpace.of(("w", d))
    ws = Jet.variables(W, D)
    # step 1: psi(w) = (lam*w + conj(lam)*gbar(w))/2 with g(tau) = Qt(0,0,tau)
    g_in_tau = [compose(q, [Jet.zero(W, D)] * (2 * n) + ws) for q in Qt]
    A = [[row.conj() for row in r] for r in Qtau0]
    lam = _choose_lambda(A)
    psi = [(w * lam + gb.bar() * lam.conj()) / 2 for w, gb in zip(ws, g_in_tau)]
    psi_inv = invert_map(psi)
    zs = Jet.variables(S, D, "z")
    cs = Jet.variables(S, D, "chi")
    ts = Jet.variables(S, D, "tau")
    psibar_inv_tau = [compose(p.bar(), ts) for p in psi_inv]
    Qt1 = [compose(p, [compose(q, zs + cs + psibar_inv_tau) for q in Qt]) for p in psi]

    # step 2: phi(z, w) inverts tau -> Qt1(z, 0, tau)
    big = VarSpace.of(("z", n), ("w", d), ("y", d))
    bz = Jet.variables(big, D, "z")
    bw = Jet.variables(big, D, "w")
    by = Jet.variables(big, D, "y")
    bzero = [Jet.zero(big, D)] * n
    phi_eqs = [compose(q, bz + bzero + by) - w for q, w in zip(Qt1, bw)]
    phi = implicit_solve(phi_eqs, "y")  # over (z, w)
    zero_S = [Jet.zero(S, D)] * n
    Qt1bar_chi0 = [compose(q.bar(), cs + zero_S + ts) for q in Qt1]
    inner = [compose(q, zs + cs + Qt1bar_chi0) for q in Qt1]
    Q = [compose(p, zs + inner) for p in phi]
    M = GenericManifold(n, d, Q, name)

    H = holo_space(n, d)
    hz = Jet.variables(H, D, "z")
    hw = Jet.variables(H, D, "w")
    psi_H = [compose(p, hw) for p in psi]
    new_w = [compose(p, hz + psi_H) for p in phi]
    change = FormalMap(n, d, hz, new_w)

    report = validate(M)
    if not report.verdict:
        raise NormalizationFailure(f"{name}: normalized series fail validation: {report.message}")
    graph = change.graph_residual(Qt, M)
    bad = _first_failure(graph)
    if not bad["zero"]:
        raise NormalizationFailure(f"{name}: coordinate change does not carry the graph: {bad}")
    return M, change


# ---------------------------------------------------------------------------
# Segre maps


@dataclass
class SegreMap:
    k: int
    n: int
    d: int
    u: list  # d jets over (t1, ..., tk)

    @property
    def space(self) -> VarSpace:
        return self.u[0].space

    @property
    def components(self) -> list:
        return Jet.variables(self.space, self.u[0].order, f"t{self.k}") + list(self.u)

    def jacobian(self) -> JetMatrix:
        comps = self.components
        return JetMatrix([[c.derive(v) for v in self.space.names] for c in comps])


class SegreTower:
    """Iterated Segre maps ``v^k(t) = (t^k, u^k(t))`` of one manifold, built lazily."""

    def __init__(self, M: GenericManifold):
        self.M = M
        self._maps: dict = {}

    def __getitem__(self, k: int) -> SegreMap:
        if k < 1:
            raise ValueError("Segre maps are indexed from k = 1")
        if k not in self._maps:
            self._maps[k] = self._build(k)
        return self._maps[k]

    def entries(self, kmax: int) -> list:
        return [(k, self[k]) for k in range(1, kmax + 1)]

    def _build(self, k: int) -> SegreMap:
        M = self.M
        D = M.order
        T = segre_space(M.n, k)
        if k == 1:
            return SegreMap(1, M.n, M.d, [Jet.zero(T, D) for _ in range(M.d)])
        prev = self[k - 1]
        ubar = [u.bar().embed(T) for u in prev.u]
        args = Jet.variables(T, D, f"t{k}") + Jet.variables(T, D, f"t{k - 1}") + ubar
        return SegreMap(k, M.n, M.d, [compose(q, args) for q in M.Q])


def segre(M: GenericManifold, k: int) -> SegreMap:
    return SegreTower(M)[k]


def _fmt_ranks(ranks: list) -> str:
    return "[" + ",".join(str(r) for r in ranks) + "]"


def finite_type(M: GenericManifold, max_k: int | None = None, method: str = "minors", seed: int = 0) -> Report:
    """Finite type via the generic rank of the Segre maps ``v^1 .. v^max_k``."""
    max_k = max_k or M.d + 1
    tower = SegreTower(M)
    ranks, certs = [], []
    witness = None
    prec = M.order
    for k in range(1, max_k + 1):
        J = tower[k].jacobian()
        res = generic_rank(J, method, seed=seed)
        ranks.append(res.rank)
        certs.append(res.to_dict())
        prec = min(prec, res.prec)
        if res.rank == M.N and witness is None:
            witness = k
    monotone = all(a <= b for a, b in zip(ranks, ranks[1:]))
    if not monotone:
        log.warning("Segre ranks of %s not monotone at D=%d: %s (truncation artifact)", M.name, M.order, ranks)
    ok = witness is not None
    if ok:
        msg = f"finite type, witness k={witness}, ranks {_fmt_ranks(ranks)}"
    else:
        msg = f"not finite type up to D={M.order} (k <= {max_k}), ranks {_fmt_ranks(ranks)}"
    return Report(
        operation="finite-type",
        verdict=ok,
        order=M.order,
        verified_order=prec,
        message=msg,
        details={
            "manifold": M.name,
            "N": M.N,
            "max_k": max_k,
            "ranks": ranks,
            "witness_k": witness,
            "monotone": monotone,
            "rank_certificates": certs,
        },
    )


def incidence_check(M: GenericManifold, k: int) -> Report:
    """Check ``(v^{k+1}, bar v^k)`` and ``(v^{k-1}, bar v^k)`` lie on the complexification."""
    tower = SegreTower(M)
    T = segre_space(M.n, k + 1)
    D = M.order

    def u(j):
        return [x.embed(T) for x in tower[j].u]

    def t(j):
        return Jet.variables(T, D, f"t{j}")

    ubar_k = [x.bar() for x in u(k)]
    first = [a - compose(q, t(k + 1) + t(k) + ubar_k) for a, q in zip(u(k + 1), M.Q)]
    forward = _first_failure(first)
    details = {"manifold": M.name, "k": k, "forward": forward}
    ok = forward["zero"]
    if k >= 2:
        second = [a - compose(q, t(k - 1) + t(k) + ubar_k) for a, q in zip(u(k - 1), M.Q)]
        backward = _first_failure(second)
        details["backward"] = backward
        ok = ok and backward["zero"]
    msg = f"incidence relations at k={k} {'hold' if ok else 'FAIL'} through degree {D}"
    return Report("incidence", ok, D, D, msg, details)


# ---------------------------------------------------------------------------
# vector fields and holomorphic nondegeneracy


@dataclass
class VectorField:
    """``L = sum phi_j d/dz_j + sum psi_l d/dw_l`` with jet coefficients over ``(z, w)``."""

    n: int
    d: int
    components: list

    @property
    def phi(self) -> list:
        return self.components[: self.n]

    @property
    def psi(self) -> list:
        return self.components[self.n:]

    @property
    def space(self) -> VarSpace:
        return self.components[0].space

    def apply(self, f: Jet) -> Jet:
        out = Jet.zero(f.space, f.order)
        for c, v in zip(self.components, f.space.names):
            out = out + c * f.derive(v)
        return out

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.components)

    def to_dict(self) -> dict:
        names = [f"z{j + 1}" for j in range(self.n)] + [f"w{l + 1}" for l in range(self.d)]
        return {f"d/d{v}": str(c) for v, c in zip(names, self.components)}

    def __str__(self):
        parts = []
        for v, c in self.to_dict().items():
            if not c.startswith("0 "):
                parts.append(f"({c.rsplit(' + O(', 1)[0]}) {v}")
        return " + ".join(parts) if parts else "0"


def tangency_residual(M: GenericManifold, L: VectorField) -> list:
    """``psi_l(z,Q) - sum_j phi_j(z,Q) dQ_l/dz_j`` over the normal space."""
    if L.n != M.n or L.d != M.d:
        raise DimensionMismatch(f"field of type ({L.n},{L.d}) on manifold ({M.n},{M.d})")
    S = M.space
    D = M.order
    zs = Jet.variables(S, D, "z")
    args = zs + M.Q
    phiQ = [compose(c.with_order(D) if c.order != D else c, args) for c in L.phi]
    psiQ = [compose(c.with_order(D) if c.order != D else c, args) for c in L.psi]
    Qz = M.jacobian("z")
    out = []
    for l in range(M.d):
        r = psiQ[l]
        for j in range(M.n):
            r = r - phiQ[j] * Qz[l, j]
        out.append(r)
    return out


def _monomials(nvars: int, max_degree: int) -> list:
    out = []
    for deg in range(max_degree + 1):
        for combo in itertools.combinations_with_replacement(range(nvars), deg):
            e = [0] * nvars
            for c in combo:
                e[c] += 1
            out.append(tuple(e))
    return out


def holo_nondeg(M: GenericManifold, field_degree: int = 4) -> Report:
    """Search for a nonzero holomorphic vector field of degree <= field_degree tangent to M."""
    if field_degree > M.order:
        raise ValueError("field_degree may not exceed the truncation order")
    n, d, N = M.n, M.d, M.N
    S = M.space
    D = M.order
    zs = Jet.variables(S, D, "z")
    subs = zs + M.Q
    mons = _monomials(N, field_degree)
    pulled = {}
    for e in mons:
        acc = Jet.one(S, D)
        for a, k in zip(subs, e):
            if k:
                acc = acc * a ** k
        pulled[e] = acc
    Qz = M.jacobian("z")
    P = min(D - 1, Qz.prec)
    unknowns = sorted(((sum(e), slot, e) for slot in range(N) for e in mons), key=lambda u: (u[0], u[1], tuple(-x for x in u[2])))
    row_index: dict = {}
    rows: list = []
    for col, (_, slot, e) in enumerate(unknowns):
        contrib = []
        if slot < n:
            for l in range(d):
                contrib.append((l, -(pulled[e] * Qz[l, slot])))
        else:
            contrib.append((slot - n, pulled[e]))
        for l, jet in contrib:
            for exp, c in jet._c.items():
                if sum(exp) > P:
                    continue
                key = (l, exp)
                r = row_index.get(key)
                if r is None:
                    r = row_index[key] = len(rows)
                    rows.append({})
                rows[r][col] = c
    kernel = nullspace(rows, len(unknowns))
    H = holo_space(n, d)
    witness = None
    if kernel:
        vec = kernel[0]
        comps = [dict() for _ in range(N)]
        for (deg, slot, e), c in zip(unknowns, vec):
            if c:
                comps[slot][e] = c
        witness = VectorField(n, d, [Jet(H, D, c) for c in comps])
        check = _first_failure(tangency_residual(M, witness))
        if not check["zero"] and check["verified_order"] >= 0:
            log.warning("kernel witness fails tangency re-check: %s", check)
    degenerate = witness is not None
    if degenerate:
        msg = f"holomorphically DEGENERATE: tangent field {witness} (field degree <= {field_degree}, D={D})"
    else:
        msg = f"holomorphically nondegenerate up to field degree {field_degree}, D={D}"
    return Report(
        operation="nondeg",
        verdict=not degenerate,
        order=D,
        verified_order=P,
        message=msg,
        details={
            "manifold": M.name,
            "field_degree": field_degree,
            "unknowns": len(unknowns),
            "equations": len(rows),
            "kernel_dimension": len(kernel),
            "degenerate_witness": witness.to_dict() if witness else None,
        },
    )
