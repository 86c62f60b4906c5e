"""Formal maps between generic submanifolds and the matrix ``a`` that measures transversality.

For ``H = (F, G)`` sending ``w = Q(z, chi, tau)`` into ``w' = Q'(z', chi', tau')``
all quantities are pulled back to the complexification through
``Psi(z, chi, tau) = (z, Q, chi, tau)`` and
``Phi(z, chi, tau) = (F(z, Q), Fbar(chi, tau), Gbar(chi, tau))``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import DimensionMismatch, NotASelfMap
from .gaussian import ONE, GaussianRational
from .jets import Jet, VarSpace, compose, invert_map
from .linalg import det as const_det
from .manifold import (
    GenericManifold,
    SegreTower,
    VectorField,
    _first_failure,
    holo_space,
    normal_space,
    tangency_residual,
)
from .matrix import JetMatrix, det, det_adj, generic_rank, inverse
from .report import Report, residual_info


class FormalMap:
    """Formal holomorphic map ``H = (F, G)`` fixing the origin, components over ``(z:n, w:d)``."""

    def __init__(self, n: int, d: int, F: Sequence[Jet], G: Sequence[Jet], name: str = "H"):
        F, G = list(F), list(G)
        if len(F) + len(G) != n + d:
            raise DimensionMismatch(f"map into C^{len(F) + len(G)} from C^{n + d}")
        space = holo_space(n, d)
        comps = F + G
        for c in comps:
            if c.space != space:
                raise DimensionMismatch(f"map components must live over {space}, got {c.space}")
        if len({c.order for c in comps}) != 1:
            raise DimensionMismatch("map components must share one order")
        for c in comps:
            if c.constant_term():
                raise DimensionMismatch(f"map component {c} has a nonzero constant term")
        self.n, self.d = n, d
        self.F, self.G = F, G
        self.name = name

    @classmethod
    def identity(cls, n: int, d: int, order: int) -> "FormalMap":
        S = holo_space(n, d)
        return cls(n, d, Jet.variables(S, order, "z"), Jet.variables(S, order, "w"), "id")

    @property
    def target_dims(self) -> tuple:
        return len(self.F), len(self.G)

    @property
    def N(self) -> int:
        return self.n + self.d

    @property
    def components(self) -> list:
        return self.F + self.G

    @property
    def order(self) -> int:
        return self.F[0].order if self.F else self.G[0].order

    @property
    def space(self) -> VarSpace:
        return self.components[0].space

    def jacobian(self) -> JetMatrix:
        """``H_Z``: rows are components, columns the variables ``(z, w)``."""
        names = self.space.names
        return JetMatrix([[c.derive(v) for v in names] for c in self.components])

    def jacobian_determinant(self) -> Jet:
        return det(self.jacobian())

    def inverse(self) -> "FormalMap":
        inv = invert_map(self.components)
        nt, _ = self.target_dims
        return FormalMap(nt, self.N - nt, inv[:self.n], inv[self.n:], f"{self.name}^-1")

    def truncate(self, order: int) -> "FormalMap":
        return FormalMap(self.n, self.d, [f.truncate(order) for f in self.F], [g.truncate(order) for g in self.G], self.name)

    def graph_residual(self, Qt: Sequence[Jet], M: GenericManifold) -> list:
        """Residual of this map carrying ``w = Qt`` onto ``w = Q_M`` (coordinate changes)."""
        src = GenericManifold(self.n, self.d, list(Qt), "graph")
        return sends_residual(src, M, self)

    def to_dict(self) -> dict:
        return {
            "F": [str(f) for f in self.F],
            "G": [str(g) for g in self.G],
        }

    def __repr__(self):
        return f"FormalMap({self.name}: F={[str(f) for f in self.F]}, G={[str(g) for g in self.G]})"


def _check_dims(M: GenericManifold, Mp: GenericManifold, H: FormalMap):
    if (H.n, H.d) != (M.n, M.d):
        raise DimensionMismatch(f"map source ({H.n},{H.d}) does not match manifold ({M.n},{M.d})")
    if H.target_dims != (Mp.n, Mp.d):
        raise DimensionMismatch(f"map target {H.target_dims} does not match manifold ({Mp.n},{Mp.d})")
    if M.d != Mp.d:
        raise DimensionMismatch("source and target must have the same codimension")
    if len({M.order, Mp.order, H.order}) != 1:
        raise DimensionMismatch(f"orders differ: M={M.order}, M'={Mp.order}, H={H.order}")


def _psi_args(M: GenericManifold) -> list:
    """Arguments realizing ``Psi``: ``(z, Q(z, chi, tau))`` over the normal space."""
    return Jet.variables(M.space, M.order, "z") + list(M.Q)


def _xi_args(M: GenericManifold) -> list:
    """Arguments ``(chi, tau)`` for series evaluated on the conjugate variables."""
    S = M.space
    return Jet.variables(S, M.order, "chi") + Jet.variables(S, M.order, "tau")


def sends_residual(M: GenericManifold, Mp: GenericManifold, H: FormalMap) -> list:
    """``G(z,Q) - Q'(F(z,Q), Fbar(chi,tau), Gbar(chi,tau))`` over the normal space of M."""
    psi = _psi_args(M)
    xi = _xi_args(M)
    F_psi = [compose(f, psi) for f in H.F]
    G_psi = [compose(g, psi) for g in H.G]
    Fbar = [compose(f.bar(), xi) for f in H.F]
    Gbar = [compose(g.bar(), xi) for g in H.G]
    phi = F_psi + Fbar + Gbar
    return [g - compose(q, phi) for g, q in zip(G_psi, Mp.Q)]


def check_sends(M: GenericManifold, Mp: GenericManifold, H: FormalMap) -> Report:
    _check_dims(M, Mp, H)
    resid = sends_residual(M, Mp, H)
    info = _first_failure(resid)
    ok = info["zero"]
    if ok:
        msg = f"{H.name} sends {M.name} into {Mp.name} (residual 0 through degree {info['verified_order']})"
    else:
        off = info["first_offending"]
        msg = (f"{H.name} does NOT send {M.name} into {Mp.name}: residual term "
               f"{off['coefficient']}*{off['monomial']} in component {info['component']}")
    return Report("check-map", ok, M.order, info["verified_order"], msg,
                  {"source": M.name, "target": Mp.name, "map": H.name, "residual": info})


def _require_sends(M, Mp, H) -> Report:
    rep = check_sends(M, Mp, H)
    if not rep.verdict:
        raise NotASelfMap(rep.message, rep)
    return rep


@dataclass
class MapOnM:
    """Pullbacks of a map to the complexification of its source."""

    a: JetMatrix
    F_psi: list
    G_psi: list
    Fbar: list
    Gbar: list
    Phi: list
    eq4_residual: dict

    @property
    def a0(self) -> list:
        return self.a.constant_matrix()


def _target_jacobian_on_phi(Mp: GenericManifold, block: str, phi: list) -> JetMatrix:
    J = Mp.jacobian(block)
    return J.compose(phi)


def a_matrix(M: GenericManifold, Mp: GenericManifold, H: FormalMap) -> MapOnM:
    """``a(Psi) = G_w(Psi) - Q'_z'(Phi) F_w(Psi)``, plus the z-derivative consistency check."""
    _require_sends(M, Mp, H)
    psi = _psi_args(M)
    xi = _xi_args(M)
    F_psi = [compose(f, psi) for f in H.F]
    G_psi = [compose(g, psi) for g in H.G]
    Fbar = [compose(f.bar(), xi) for f in H.F]
    Gbar = [compose(g.bar(), xi) for g in H.G]
    phi = F_psi + Fbar + Gbar
    HZ = H.jacobian().compose(psi)
    n, nt = H.n, len(H.F)
    Fz = HZ.submatrix(range(nt), range(n)) if n else None
    Fw = HZ.submatrix(range(nt), range(n, H.N)) if nt else None
    Gz = HZ.submatrix(range(nt, H.N), range(n)) if n else None
    Gw = HZ.submatrix(range(nt, H.N), range(n, H.N))
    Qpz = _target_jacobian_on_phi(Mp, "z", phi) if nt else None
    a = Gw - Qpz @ Fw if nt else Gw
    if n:
        lhs = Gz - Qpz @ Fz if nt else Gz
        resid = lhs + a @ M.jacobian("z")
        eq4 = _first_failure([e for r in resid.tolist() for e in r])
    else:
        eq4 = {"zero": True, "verified_order": M.order}
    return MapOnM(a, F_psi, G_psi, Fbar, Gbar, phi, eq4)


def cr_transversal(M: GenericManifold, Mp: GenericManifold, H: FormalMap) -> Report:
    """CR transversality at 0 decided by ``det a(0) != 0``."""
    on = a_matrix(M, Mp, H)
    a0 = on.a0
    d0 = const_det(a0)
    Gw0 = [row[H.n:] for row in H.jacobian().constant_matrix()[len(H.F):]]
    ok = bool(d0)
    msg = (f"CR transversal: det a(0) = {d0}" if ok else f"NOT CR transversal: det a(0) = {d0}")
    return Report(
        "transversal", ok, M.order, on.a.prec,
        f"{msg} (D={M.order})",
        {
            "source": M.name, "target": Mp.name, "map": H.name,
            "a0": [[str(x) for x in r] for r in a0],
            "det_a0": str(d0),
            "Gw0": [[str(x) for x in r] for r in Gw0],
            "a0_equals_Gw0": a0 == Gw0,
            "eq4_residual": on.eq4_residual,
            "a": [[str(e) for e in r] for r in on.a.tolist()],
        },
    )


def _hstack(left: JetMatrix, right: JetMatrix) -> JetMatrix:
    return JetMatrix([l + r for l, r in zip(left.tolist(), right.tolist())])


def verify_lemma31(M: GenericManifold, Mp: GenericManifold, H: FormalMap) -> Report:
    """Check ``det H_Z(Psi) I = a C`` and ``det Hbar_xi I = a E`` on the complexification."""
    on = a_matrix(M, Mp, H)
    a = on.a
    S = M.space
    D = M.order
    d = M.d
    psi = _psi_args(M)
    xi = _xi_args(M)
    HZ = H.jacobian()
    dHZ, B = det_adj(HZ)
    B_psi = B.compose(psi)
    dHZ_psi = compose(dHZ, psi)
    I_d = JetMatrix.identity(d, S, D)
    V = _hstack(-M.jacobian("z"), I_d) if M.n else I_d
    C = (V @ B_psi).last_columns(d)
    res_a0 = I_d.map(lambda e: e * dHZ_psi) - a @ C

    Bbar = B.bar().compose(xi)
    dHxi = compose(dHZ.bar(), xi)
    W = _hstack(M.jacobian("chi"), M.jacobian("tau")) if M.n else M.jacobian("tau")
    Dm = (W @ Bbar).last_columns(d)
    Qptau = _target_jacobian_on_phi(Mp, "tau", on.Phi)
    E = Dm @ inverse(Qptau)
    res_b0 = I_d.map(lambda e: e * dHxi) - a @ E

    # the intermediate identities V' H_Z(Psi) = a V and W' Hbar_xi = a W
    HZ_psi = HZ.compose(psi)
    Vp = _hstack(-_target_jacobian_on_phi(Mp, "z", on.Phi), I_d) if Mp.n else I_d
    res_eq6 = Vp @ HZ_psi - a @ V
    Hxi = HZ.bar().compose(xi)
    Wp = _hstack(_target_jacobian_on_phi(Mp, "chi", on.Phi), Qptau) if Mp.n else Qptau
    res_eq10 = Wp @ Hxi - a @ W

    def flat(m):
        return [e for r in m.tolist() for e in r]

    checks = {
        "a0_identity": _first_failure(flat(res_a0)),
        "b0_identity": _first_failure(flat(res_b0)),
        "V_prime_identity": _first_failure(flat(res_eq6)),
        "W_prime_identity": _first_failure(flat(res_eq10)),
        "eq4_consistency": on.eq4_residual,
    }
    ok = all(c["zero"] for c in checks.values())
    verified = min(c["verified_order"] for c in checks.values())
    msg = (f"Lemma identities {'hold' if ok else 'FAIL'} through degree {verified} (D={D}); "
           f"det H_Z(Psi) = {dHZ_psi}")
    return Report(
        "lemma31", ok, D, verified, msg,
        {
            "source": M.name, "target": Mp.name, "map": H.name,
            "checks": checks,
            "det_HZ_psi": str(dHZ_psi),
            "det_Hbar_xi": str(dHxi),
            "C": [[str(e) for e in r] for r in C.tolist()],
            "E": [[str(e) for e in r] for r in E.tolist()],
        },
    )


# ---------------------------------------------------------------------------
# degenerate maps and kernel fields


def _normalize_vector(vec: list) -> list:
    for c in vec:
        low = c.lowest_term()
        if low is not None:
            s = low[1].inverse()
            return [x * s for x in vec]
    return vec


def kernel_field(H: FormalMap):
    """Nonzero ``U`` with ``H_Z U = 0`` when ``det H_Z`` vanishes identically, else None."""
    HZ = H.jacobian()
    dHZ, B = det_adj(HZ)
    if not dHZ.is_zero():
        return None
    N = H.N
    U = None
    for j in range(N):
        col = B.col(j)
        if not all(c.is_zero() for c in col):
            U = col
            break
    if U is None:
        rk = generic_rank(HZ)
        if rk.rank == 0:
            U = [Jet.one(HZ.space, HZ.order).with_prec(HZ.prec)] + [Jet.zero(HZ.space, HZ.order)] * (N - 1)
        else:
            rows, cols = rk.certificate["rows"], rk.certificate["cols"]
            extra = next(c for c in range(N) if c not in cols)
            sel = sorted(cols + [extra])
            sub = HZ.submatrix(rows, sel)
            U = [Jet.zero(HZ.space, HZ.order) for _ in range(N)]
            for k, c in enumerate(sel):
                m = det(sub.submatrix(range(len(rows)), [x for x in range(len(sel)) if x != k]))
                U[c] = -m if k % 2 else m
    U = _normalize_vector(U)
    return VectorField(H.n, H.d, U)


def kernel_report(H: FormalMap) -> Report:
    HZ = H.jacobian()
    dHZ = det(HZ)
    L = kernel_field(H)
    D = H.order
    if L is None:
        return Report("kernel", False, D, dHZ.prec,
                      f"det H_Z = {dHZ} is a nonzero jet; no kernel field",
                      {"map": H.name, "det_HZ": str(dHZ), "field": None})
    HU = [Jet.zero(HZ.space, D) for _ in range(HZ.rows)]
    for i in range(HZ.rows):
        for j in range(HZ.cols):
            HU[i] = HU[i] + HZ[i, j] * L.components[j]
    LH = [L.apply(c) for c in H.components]
    hu = _first_failure(HU)
    lh = _first_failure(LH)
    ok = hu["zero"] and lh["zero"]
    msg = f"det H_Z vanishes identically; kernel field L = {L}" + ("" if ok else " (post-check FAILED)")
    return Report("kernel", ok, D, min(hu["verified_order"], lh["verified_order"]), msg,
                  {"map": H.name, "det_HZ": str(dHZ), "field": L.to_dict(),
                   "HZ_U": hu, "L_applied_to_H": lh, "nonzero": not L.is_zero()})


def tangency_check(M: GenericManifold, L: VectorField) -> Report:
    resid = tangency_residual(M, L)
    info = _first_failure(resid)
    ok = info["zero"]
    msg = (f"L is tangent to {M.name} through degree {info['verified_order']}" if ok else
           f"L is NOT tangent to {M.name}: residual {', '.join(str(r) for r in resid)}")
    return Report("tangency", ok, M.order, info["verified_order"], msg,
                  {"manifold": M.name, "field": L.to_dict(), "residual": info,
                   "residual_jets": [str(r) for r in resid]})


def propagation_diagnostic(M: GenericManifold, H: FormalMap, j_max: int = 2) -> Report:
    """``det H_Z`` composed with the odd Segre maps ``v^(2j+1)``, j = 0..j_max."""
    dHZ = H.jacobian_determinant()
    tower = SegreTower(M)
    rows = []
    for j in range(j_max + 1):
        k = 2 * j + 1
        v = tower[k]
        val = compose(dHZ, v.components)
        rows.append({"j": j, "k": k, "value": str(val), **residual_info(val)})
    ok = all(r["zero"] for r in rows)
    msg = ("det H_Z o v^(2j+1) vanishes for j = 0.." + str(j_max) if ok else
           "det H_Z o v^(2j+1) nonzero for j in " + str([r["j"] for r in rows if not r["zero"]]))
    return Report("propagate", ok, M.order, min(r["verified_order"] for r in rows), msg,
                  {"manifold": M.name, "map": H.name, "det_HZ": str(dHZ), "levels": rows})


def compose_maps(H1: FormalMap, H2: FormalMap) -> FormalMap:
    """``H2 o H1``."""
    if H2.space != holo_space(*H1.target_dims):
        raise DimensionMismatch("maps do not chain")
    if H1.order != H2.order:
        raise DimensionMismatch("maps have different orders")
    inner = H1.components
    comps = [compose(c, inner) for c in H2.components]
    nt = len(H2.F)
    return FormalMap(H1.n, H1.d, comps[:nt], comps[nt:], f"{H2.name}o{H1.name}")
