"""Randomized instance generation and theorem-level property suites.

Ground truth comes from a few curated triples ``(M, M', H)``; random formal
biholomorphisms move them to new coordinates, which preserves every property
the suites assert (finite type, transversality, vanishing of ``det H_Z``).
"""

from __future__ import annotations

import logging
import random
import time
from concurrent.futures import ProcessPoolExecutor
from itertools import combinations_with_replacement

from . import fixtures
from .errors import CRTError
from .gaussian import ZERO, GaussianRational
from .jets import Jet, VarSpace, compose
from .linalg import det as const_det
from .manifold import GenericManifold, finite_type, from_complex_defining, holo_nondeg, holo_space, normal_space
from .mapping import (
    FormalMap,
    check_sends,
    compose_maps,
    cr_transversal,
    kernel_report,
    verify_lemma31,
)
from .matrix import JetMatrix, generic_rank
from .report import Report

log = logging.getLogger(__name__)

FAMILIES = ("theorem-positive", "example-negative", "lemma31", "proposition37", "rank-oracle")
SUITE_ORDER = 6


def trial_rng(seed: int, trial: int, salt: str = "") -> random.Random:
    """Independent stream per (seed, trial) so serial and parallel runs agree."""
    return random.Random(f"{seed}:{trial}:{salt}")


def random_coeff(rng: random.Random, height: int = 9, allow_zero: bool = True) -> GaussianRational:
    while True:
        re = rng.randint(-height, height)
        im = rng.randint(-height, height)
        c = GaussianRational(re, im) / rng.choice((1, 2, 3))
        if c or allow_zero:
            return c


def _invertible(rng: random.Random, k: int) -> list:
    while True:
        m = [[random_coeff(rng, 3) for _ in range(k)] for _ in range(k)]
        if const_det(m):
            return m


def _monomials(nvars: int, degree: int) -> list:
    out = []
    for combo in combinations_with_replacement(range(nvars), degree):
        e = [0] * nvars
        for j in combo:
            e[j] += 1
        out.append(tuple(e))
    return out


def random_jet(rng: random.Random, space: VarSpace, D: int, lo: int, hi: int, density: float = 0.5, height: int = 9) -> Jet:
    c = {}
    for deg in range(lo, min(hi, D) + 1):
        for e in _monomials(space.dim, deg):
            if rng.random() < density:
                c[e] = random_coeff(rng, height)
    return Jet(space, D, c)


def random_biholo(n: int, d: int, D: int, seed, degree: int = 2, density: float = 0.5, mixing: bool = True):
    """Random formal biholomorphism of ``C^(n+d)`` fixing 0, and its inverse.

    The linear part is block triangular (``w`` goes to an invertible combination
    of ``w`` alone), which keeps the image of a manifold in normal coordinates a
    graph over ``(z, chi, tau)``.  ``degree`` bounds the random higher terms;
    ``degree=1`` gives a random invertible linear map; with ``mixing=False``
    the ``z`` components do not see ``w`` at the linear level either, so a
    linear change carries a quadric to a quadric.
    """
    rng = seed if isinstance(seed, random.Random) else random.Random(f"biholo:{seed}")
    S = holo_space(n, d)
    zs, ws = Jet.variables(S, D, "z"), Jet.variables(S, D, "w")
    A = _invertible(rng, n) if n else []
    B = [[random_coeff(rng, 3) if mixing else ZERO for _ in range(d)] for _ in range(n)]
    C = _invertible(rng, d)
    comps = []
    for i in range(n):
        lin = sum((zs[j] * A[i][j] for j in range(n)), Jet.zero(S, D))
        lin = lin + sum((ws[j] * B[i][j] for j in range(d)), Jet.zero(S, D))
        comps.append(lin + random_jet(rng, S, D, 2, degree, density, 3))
    for i in range(d):
        lin = sum((ws[j] * C[i][j] for j in range(d)), Jet.zero(S, D))
        comps.append(lin + random_jet(rng, S, D, 2, degree, density, 3))
    phi = FormalMap(n, d, comps[:n], comps[n:], "Phi")
    return phi, phi.inverse()


def _real_space(n: int, d: int) -> VarSpace:
    return VarSpace.of(("z", n), ("w", d), ("chi", n), ("tau", d))


def transport_manifold(M: GenericManifold, phi_inv: FormalMap, name: str | None = None):
    """Image of ``M`` under ``Phi``, renormalized; returns ``(M_new, change)``.

    A point ``Z'`` lies on the image iff ``Phi^{-1}(Z')`` lies on ``M``; the
    complexified equation is solved for ``w'`` and then put in normal form.
    """
    from .jets import implicit_solve

    n, d, D = M.n, M.d, M.order
    R = _real_space(n, d)
    hol = [c.embed(R) for c in phi_inv.components]
    conj = {v: w for v, w in zip(holo_space(n, d).names, list(R.block("chi")) + list(R.block("tau")))}
    hol_bar = [c.bar().embed(R, conj) for c in phi_inv.components]
    args = hol[:n] + hol_bar[:n] + hol_bar[n:]
    rho = [hol[n + l] - compose(M.Q[l], args) for l in range(d)]
    w_sol = implicit_solve(rho, "w")
    Qt = [q.embed(normal_space(n, d)) for q in w_sol]
    return from_complex_defining(Qt, n, d, name or M.name)


def conjugate_instance(triple, phi_src, phi_tgt):
    """Move ``(M, M', H)`` by biholomorphisms of source and target.

    ``phi_src`` and ``phi_tgt`` are ``(Phi, Phi^{-1})`` pairs (or None for the
    identity).  The new map is ``chi_t o Phi_t o H o Phi_s^{-1} o chi_s^{-1}``
    where ``chi_s``, ``chi_t`` are the renormalizing coordinate changes.
    """
    M, Mp, H = triple
    if phi_src is None and phi_tgt is None:
        return triple
    H_new = H
    if phi_src is not None:
        Phi_s, Phi_s_inv = phi_src
        M_new, chi_s = transport_manifold(M, Phi_s_inv)
        H_new = compose_maps(compose_maps(chi_s.inverse(), Phi_s_inv), H_new)
    else:
        M_new = M
    if phi_tgt is not None:
        Phi_t, Phi_t_inv = phi_tgt
        Mp_new, chi_t = transport_manifold(Mp, Phi_t_inv)
        H_new = compose_maps(H_new, compose_maps(Phi_t, chi_t))
    else:
        Mp_new = Mp
    H_new.name = H.name
    return M_new, Mp_new, H_new


# ---------------------------------------------------------------------------
# curated bases


def positive_bases(D: int) -> list:
    """Finite-type sources with transversal maps (identity, dilations, rotations)."""
    bases = [(f"HEIS/{H.name}", T) for T in fixtures.heis_triples(D) for H in [T[2]]]
    Q = fixtures.quad22(D)
    S = holo_space(2, 2)
    z1, z2, w1, w2 = Jet.variables(S, D)
    bases.append(("QUAD22/id", (Q, Q, FormalMap.identity(2, 2, D))))
    bases.append(("QUAD22/dil(2)", (Q, Q, FormalMap(2, 2, [z1 * 2, z2 * 2], [w1 * 4, w2 * 4], "dil(2)"))))
    return bases


def negative_bases(D: int) -> list:
    M, Mp, H = fixtures.example_triple(D)
    return [("xi-example", (M, Mp, H))]


def _instance(bases: list, seed: int, trial: int, D: int):
    """Conjugate the base picked by ``trial``; quadrics in two variables get linear changes."""
    label, triple = bases[trial % len(bases)]
    rng = trial_rng(seed, trial, "conj")
    M, Mp, _ = triple
    degree, mixing = (2, True) if M.n == 1 else (1, False)
    src = random_biholo(M.n, M.d, D, rng, degree, mixing=mixing)
    tgt = random_biholo(Mp.n, Mp.d, D, rng, degree, mixing=mixing)
    return label, conjugate_instance(triple, src, tgt)


# ---------------------------------------------------------------------------
# per-family trials; each returns (ok, details)


def _lemma_ok(M, Mp, H) -> tuple:
    rep = verify_lemma31(M, Mp, H)
    return rep.verdict, rep.verified_order


def _trial_theorem_positive(seed: int, trial: int, D: int) -> dict:
    label, (M, Mp, H) = _instance(positive_bases(D), seed, trial, D)
    out = {"base": label}
    out["sends"] = check_sends(M, Mp, H).verdict
    ft = finite_type(M)
    out["finite_type"] = ft.verdict
    out["witness_k"] = ft.details["witness_k"]
    det_hz = H.jacobian_determinant()
    out["det_HZ_nonzero"] = not det_hz.is_zero()
    tr = cr_transversal(M, Mp, H)
    out["transversal"] = tr.verdict
    out["det_a0"] = tr.details["det_a0"]
    out["lemma31"], _ = _lemma_ok(M, Mp, H)
    # the contrapositive of the degeneracy proposition, on nondegenerate sources
    if M.n == 1:
        nd = holo_nondeg(M, 2).verdict
        out["holo_nondeg"] = nd
        contra = (not (nd and tr.verdict)) or out["det_HZ_nonzero"]
    else:
        contra = True
    hyp = out["sends"] and ft.verdict and ft.details["witness_k"] <= M.d + 1 and out["det_HZ_nonzero"]
    out["ok"] = bool(hyp and tr.verdict and out["lemma31"] and contra and tr.details["a0_equals_Gw0"])
    return out


def _trial_example_negative(seed: int, trial: int, D: int) -> dict:
    label, (M, Mp, H) = _instance(negative_bases(D), seed, trial, D)
    out = {"base": label}
    out["sends"] = check_sends(M, Mp, H).verdict
    out["finite_type"] = finite_type(M).verdict
    out["det_HZ_nonzero"] = not H.jacobian_determinant().is_zero()
    tr = cr_transversal(M, Mp, H)
    out["transversal"] = tr.verdict
    out["det_a0"] = tr.details["det_a0"]
    out["lemma31"], _ = _lemma_ok(M, Mp, H)
    out["ok"] = bool(out["sends"] and not tr.verdict and tr.details["det_a0"] == "0"
                     and out["det_HZ_nonzero"] and not out["finite_type"] and out["lemma31"])
    return out


def _trial_lemma31(seed: int, trial: int, D: int) -> dict:
    bases = positive_bases(D) + negative_bases(D)
    label, (M, Mp, H) = _instance(bases, seed, trial, D)
    rep = verify_lemma31(M, Mp, H)
    return {"base": label, "verified_order": rep.verified_order,
            "ok": bool(rep.verdict and rep.verified_order >= D - 1)}


def degenerate_map(rng: random.Random, n: int, d: int, D: int) -> FormalMap:
    """A map whose last component is a function of the others, so ``det H_Z == 0``."""
    N = n + d
    phi, _ = random_biholo(n, d, D, rng, 2)
    comps = phi.components
    inner = VarSpace.of(("y", N - 1))
    g = random_jet(rng, inner, D, 1, 2, 0.7, 5)
    comps = comps[:-1] + [compose(g, comps[:-1])]
    return FormalMap(n, d, comps[:n], comps[n:], "degenerate")


def _trial_proposition37(seed: int, trial: int, D: int) -> dict:
    rng = trial_rng(seed, trial, "prop37")
    n, d = ((1, 1), (2, 1), (1, 2))[trial % 3]
    H = degenerate_map(rng, n, d, D)
    rep = kernel_report(H)
    det_zero = H.jacobian_determinant().is_zero()
    return {"dims": [n, d], "det_HZ_zero": det_zero, "field": rep.details.get("field"),
            "ok": bool(det_zero and rep.verdict and rep.details.get("nonzero"))}


def random_jet_matrix(rng: random.Random, D: int = 4) -> JetMatrix:
    """Random jet matrix, rank deficient about half the time."""
    nvars = rng.randint(1, 6)
    S = VarSpace.of(("x", nvars))
    rows, cols = rng.randint(1, 4), rng.randint(1, 4)
    r = rng.randint(0, min(rows, cols))
    if rng.random() < 0.5 and r:
        left = [[random_jet(rng, S, D, 0, 2, 0.3, 5) for _ in range(r)] for _ in range(rows)]
        right = [[random_jet(rng, S, D, 0, 2, 0.3, 5) for _ in range(cols)] for _ in range(r)]
        return JetMatrix(left) @ JetMatrix(right)
    return JetMatrix([[random_jet(rng, S, D, rng.randint(0, 2), D, 0.15, 5) for _ in range(cols)] for _ in range(rows)])


def _trial_rank_oracle(seed: int, trial: int, D: int) -> dict:
    rng = trial_rng(seed, trial, "rank")
    A = random_jet_matrix(rng, min(D, 4))
    sym = generic_rank(A, "minors")
    rnd = generic_rank(A, "random", seed=seed * 1000 + trial, points=20)
    return {"shape": list(A.shape), "symbolic": sym.rank, "random": rnd.rank, "ok": sym.rank == rnd.rank}


_TRIALS = {
    "theorem-positive": _trial_theorem_positive,
    "example-negative": _trial_example_negative,
    "lemma31": _trial_lemma31,
    "proposition37": _trial_proposition37,
    "rank-oracle": _trial_rank_oracle,
}


def run_trial(family: str, seed: int, trial: int, D: int) -> dict:
    try:
        out = _TRIALS[family](seed, trial, D)
    except CRTError as exc:
        out = {"ok": False, "error": f"{type(exc).__name__}: {exc}"}
    out["trial"] = trial
    return out


def _run_star(args):
    return run_trial(*args)


def reproduce_command(family: str, trials: int, seed: int, D: int) -> str:
    return f"crt suite {family} --trials {trials} --seed {seed} --order {D}"


def run_suite(family: str, trials: int = 20, seed: int = 0, D: int = SUITE_ORDER, workers: int = 1) -> Report:
    """Run ``trials`` instances of a family; the Report is a deterministic fold over trial index."""
    if family not in _TRIALS:
        raise ValueError(f"unknown suite family {family!r}; choose from {', '.join(FAMILIES)}")
    start = time.perf_counter()
    jobs = [(family, seed, t, D) for t in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_run_star, jobs))
    else:
        results = [_run_star(j) for j in jobs]
    results.sort(key=lambda r: r["trial"])
    passed = sum(1 for r in results if r["ok"])
    failed = [r for r in results if not r["ok"]]
    log.info("suite %s: %d trials in %.2fs", family, trials, time.perf_counter() - start)
    cmd = reproduce_command(family, trials, seed, D)
    msg = f"suite {family}: {passed}/{trials} passed (seed={seed}, D={D})"
    if failed:
        msg += f"; failing trials {[r['trial'] for r in failed]}; reproduce with: {cmd}"
    return Report("suite", not failed, D, D, msg, {
        "family": family, "trials": trials, "seed": seed, "passed": passed,
        "failed": len(failed), "failures": failed, "results": results,
        "reproduce": cmd,
    })
