"""Curated manifolds and maps used by the tests, the harness and the CLI.

HEIS    Im w = |z|^2                       Q = tau + 2i z chi
FLAT    Im w = 0                           Q = tau
MP      Im w = 2 (Re w)|z|^2               Q = tau (1 + 2i z chi)/(1 - 2i z chi)
MXI     Im w = (Re w) xi(|z|^2)            Q = tau (1 + i xi)/(1 - i xi),  xi - (1 - xi^2) x = 0
QUAD22  Im w1 = |z1|^2, Im w2 = 2 Re(z1 conj z2)
"""

from __future__ import annotations

from .gaussian import GaussianRational, I
from .jets import DEFAULT_ORDER, Jet, VarSpace, compose, implicit_solve
from .manifold import GenericManifold, normal_space, holo_space
from .mapping import FormalMap

TWO_I = GaussianRational(0, 2)


def heis(D: int = DEFAULT_ORDER) -> GenericManifold:
    S = normal_space(1, 1)
    z, chi, tau = Jet.variables(S, D)
    return GenericManifold(1, 1, [tau + z * chi * TWO_I], "HEIS")


def flat(D: int = DEFAULT_ORDER, n: int = 1) -> GenericManifold:
    S = normal_space(n, 1)
    return GenericManifold(n, 1, [Jet.variables(S, D, "tau")[0]], "FLAT")


def heis_partial(D: int = DEFAULT_ORDER) -> GenericManifold:
    """n = 2, d = 1 with Q independent of z2 (holomorphically degenerate)."""
    S = normal_space(2, 1)
    z1, z2, c1, c2, tau = Jet.variables(S, D)
    return GenericManifold(2, 1, [tau + z1 * c1 * TWO_I], "HEIS2")


def quad22(D: int = DEFAULT_ORDER) -> GenericManifold:
    S = normal_space(2, 2)
    z1, z2, c1, c2, t1, t2 = Jet.variables(S, D)
    return GenericManifold(2, 2, [t1 + z1 * c1 * TWO_I, t2 + (z1 * c2 + z2 * c1) * TWO_I], "QUAD22")


def xi_jet(D: int = DEFAULT_ORDER) -> Jet:
    """Power series solution of ``xi - (1 - xi^2) x = 0``, ``xi(0) = 0``, in the variable x1."""
    S = VarSpace.of(("x", 1), ("xi", 1))
    x, xi = Jet.variables(S, D)
    return implicit_solve([xi - (1 - xi * xi) * x], "xi")[0]


def _solve_for_w(rho: Jet, name: str) -> GenericManifold:
    """Solve a complexified real hypersurface equation rho(z, w, chi, tau) = 0 for w."""
    space = rho.space
    w = implicit_solve([rho], "w")[0]
    S = normal_space(1, 1)
    return GenericManifold(1, 1, [w.embed(S)], name)


def mp(D: int = DEFAULT_ORDER) -> GenericManifold:
    """Target of the xi example: Im w = 2 (Re w)|z|^2."""
    R = VarSpace.of(("z", 1), ("w", 1), ("chi", 1), ("tau", 1))
    z, w, chi, tau = Jet.variables(R, D)
    rho = (w - tau) / TWO_I - (w + tau) * z * chi
    return _solve_for_w(rho, "MP")


def mxi(D: int = DEFAULT_ORDER) -> GenericManifold:
    """Source of the xi example: Im w = (Re w) xi(|z|^2)."""
    R = VarSpace.of(("z", 1), ("w", 1), ("chi", 1), ("tau", 1))
    z, w, chi, tau = Jet.variables(R, D)
    xi = compose(xi_jet(D), [z * chi])
    rho = (w - tau) / TWO_I - (w + tau) * xi / 2
    return _solve_for_w(rho, "MXI")


def mxi_closed_form(D: int = DEFAULT_ORDER) -> GenericManifold:
    """MXI through the rational shortcut tau (1 + i xi)/(1 - i xi)."""
    S = normal_space(1, 1)
    z, chi, tau = Jet.variables(S, D)
    xi = compose(xi_jet(D), [z * chi])
    return GenericManifold(1, 1, [tau * (1 + xi * I) / (1 - xi * I)], "MXI")


def squaring_map(D: int = DEFAULT_ORDER) -> FormalMap:
    """H(z, w) = (z, w^2)."""
    S = holo_space(1, 1)
    z, w = Jet.variables(S, D)
    return FormalMap(1, 1, [z], [w * w], "(z,w^2)")


def dilation(D: int = DEFAULT_ORDER, lam=2) -> FormalMap:
    """Weighted dilation (lam z, |lam|^2 w), an automorphism of HEIS."""
    lam = GaussianRational.coerce(lam)
    S = holo_space(1, 1)
    z, w = Jet.variables(S, D)
    return FormalMap(1, 1, [z * lam], [w * lam.norm()], f"dil({lam})")


def example_triple(D: int = DEFAULT_ORDER):
    return mxi(D), mp(D), squaring_map(D)


def heis_triples(D: int = DEFAULT_ORDER) -> list:
    """Transversal HEIS self-maps: identity, weighted dilations and a rotation."""
    M = heis(D)
    maps = [
        FormalMap.identity(1, 1, D),
        dilation(D, 2),
        dilation(D, GaussianRational(1, 1)),
        dilation(D, GaussianRational("3/5", "4/5")),
        dilation(D, GaussianRational("1/2")),
    ]
    return [(M, M, H) for H in maps]
