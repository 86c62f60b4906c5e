import pytest
from hypothesis import given, settings, strategies as st

from crt import fixtures
from crt.errors import DegenerateCodirection, RealityViolation
from crt.gaussian import I
from crt.harness import random_biholo, transport_manifold
from crt.jets import Jet, compose
from crt.manifold import (
    GenericManifold,
    VectorField,
    finite_type,
    from_complex_defining,
    holo_nondeg,
    holo_space,
    incidence_check,
    normal_space,
    segre,
    validate,
)
from crt.mapping import compose_maps, sends_residual

D = 8


def nvars(n=1, d=1, order=D):
    return Jet.variables(normal_space(n, d), order)


# --- validate ---------------------------------------------------------------


@pytest.mark.parametrize("make", [fixtures.heis, fixtures.flat, fixtures.mp, fixtures.mxi,
                                  fixtures.mxi_closed_form, fixtures.heis_partial, fixtures.quad22])
def test_fixtures_validate(make):
    rep = validate(make(6))
    assert rep.verdict
    assert rep.details["normality"] == "pass" and rep.details["reality"] == "pass"


def test_reality_failure_reports_offender():
    z, chi, tau = nvars()
    rep = validate(GenericManifold(1, 1, [tau + z * chi], "bad"))
    assert not rep.verdict
    assert rep.details["reality"] == "fail"
    # Q(z, chi, Qbar(chi, z, w)) = w + 2 z chi
    off = rep.details["reality_residual"]["first_offending"]
    assert off["monomial"] == "z1*chi1" and off["coefficient"] == "2"


def test_normality_failure():
    z, chi, tau = nvars()
    rep = validate(GenericManifold(1, 1, [tau + I * z * z - I * chi * chi], "tilted"))
    assert not rep.verdict and rep.details["normality"] == "fail"


# --- normal coordinates -----------------------------------------------------


def test_normalize_already_normal():
    M, change = from_complex_defining(fixtures.heis(D).Q, 1, 1, "HEIS")
    assert M.Q == fixtures.heis(D).Q
    w = Jet.var(change.space, D, "w1")
    assert change.G == [w]


def test_normalize_pure_terms():
    z, chi, tau = nvars()
    M, change = from_complex_defining([tau + 2 * I * z * chi + I * z ** 2 + I * chi ** 2], 1, 1)
    assert M.Q == [tau + 2 * I * z * chi]
    zz, w = Jet.variables(change.space, D)
    assert change.G == [w - I * zz ** 2]
    assert validate(M).verdict


def test_normalize_rejects_nonreal():
    z, chi, tau = nvars()
    with pytest.raises(RealityViolation):
        from_complex_defining([tau + 2 * I * z * chi + z ** 2], 1, 1)


def test_normalize_rejects_degenerate_codirection():
    z, chi, tau = nvars()
    with pytest.raises((DegenerateCodirection, RealityViolation)):
        from_complex_defining([2 * I * z * chi], 1, 1)


def test_mxi_real_route_matches_closed_form():
    assert fixtures.mxi(D).Q == fixtures.mxi_closed_form(D).Q
    # sympy oracle with u = z chi
    z, chi, tau = nvars()
    u = z * chi
    assert fixtures.mxi(D).Q == [tau + 2 * I * u * tau - 2 * u ** 2 * tau - 4 * I * u ** 3 * tau]
    assert fixtures.mp(D).Q == [tau + 4 * I * u * tau - 8 * u ** 2 * tau - 16 * I * u ** 3 * tau]


# --- Segre maps and finite type ---------------------------------------------


def test_segre_heis_v2():
    v2 = segre(fixtures.heis(D), 2)
    t1, t2 = Jet.variables(v2.space, D)
    assert v2.components == [t2, 2 * I * t2 * t1]


@pytest.mark.parametrize("make", [fixtures.heis, fixtures.mxi, fixtures.flat])
def test_segre_first_is_zero(make):
    v1 = segre(make(D), 1)
    assert all(u.is_zero() for u in v1.u)


@pytest.mark.parametrize("make", [fixtures.mxi, fixtures.flat])
def test_segre_trivial_for_mxi_and_flat(make):
    M = make(D)
    for k in range(1, M.d + 3):
        v = segre(M, k)
        assert all(u.is_zero() for u in v.u)


@pytest.mark.parametrize("make", [fixtures.heis, fixtures.heis_partial, fixtures.quad22])
def test_segre_recursion_consistency(make):
    M = make(5)
    for k in range(2, M.d + 2):
        vk, prev = segre(M, k), segre(M, k - 1)
        T = vk.space
        args = Jet.variables(T, 5, f"t{k}") + Jet.variables(T, 5, f"t{k - 1}") + [u.bar().embed(T) for u in prev.u]
        assert vk.u == [compose(q, args) for q in M.Q]


def test_finite_type_examples():
    rep = finite_type(fixtures.heis(D))
    assert rep.verdict and rep.details["witness_k"] == 2 and rep.details["ranks"] == [1, 2]
    assert rep.message == "finite type, witness k=2, ranks [1,2]"
    for make in (fixtures.mxi, fixtures.flat):
        rep = finite_type(make(D))
        assert not rep.verdict and rep.details["ranks"] == [1, 1] and rep.details["witness_k"] is None
    rep = finite_type(fixtures.quad22(5))
    assert rep.verdict and rep.details["ranks"] == [2, 4, 4] and rep.details["witness_k"] == 2


def test_rank_monotone_on_fixtures():
    for make in (fixtures.heis, fixtures.mxi, fixtures.flat, fixtures.heis_partial, fixtures.quad22):
        M = make(5)
        ranks = finite_type(M, M.d + 2).details["ranks"]
        assert ranks == sorted(ranks)


def test_finite_type_random_method_agrees():
    for make in (fixtures.heis, fixtures.mxi, fixtures.quad22):
        M = make(5)
        assert finite_type(M, method="random").details["ranks"] == finite_type(M).details["ranks"]


# --- holomorphic nondegeneracy ----------------------------------------------


def test_flat_is_degenerate():
    rep = holo_nondeg(fixtures.flat(D), 2)
    assert not rep.verdict
    assert rep.details["degenerate_witness"]["d/dz1"].startswith("1 ")


def test_heis_nondegenerate_degree_3():
    rep = holo_nondeg(fixtures.heis(D), 3)
    assert rep.verdict and rep.details["kernel_dimension"] == 0
    assert rep.order == D and rep.details["field_degree"] == 3


def test_partial_heis_degenerate_in_z2():
    rep = holo_nondeg(fixtures.heis_partial(6), 2)
    assert not rep.verdict
    w = rep.details["degenerate_witness"]
    assert w["d/dz2"].startswith("1 ") and w["d/dz1"].startswith("0 ")


# --- incidence --------------------------------------------------------------


@pytest.mark.parametrize("make,k", [(fixtures.heis, 2), (fixtures.mxi, 3), (fixtures.flat, 2), (fixtures.flat, 4),
                                    (fixtures.quad22, 3)])
def test_incidence(make, k):
    rep = incidence_check(make(6), k)
    assert rep.verdict
    assert rep.details["forward"]["zero"] and rep.details["backward"]["zero"]


# --- invariance under changes of normal coordinates -------------------------


@settings(max_examples=6)
@given(st.integers(0, 10_000))
def test_biholomorphic_invariance(seed):
    base = fixtures.heis(5)
    phi, phi_inv = random_biholo(1, 1, 5, seed)
    M, change = transport_manifold(base, phi_inv)
    assert validate(M).verdict
    ft = finite_type(M)
    assert ft.verdict and ft.details["witness_k"] == 2
    assert holo_nondeg(M, 2).verdict == holo_nondeg(base, 2).verdict
    flat, _ = transport_manifold(fixtures.flat(5), phi_inv)
    assert not finite_type(flat).verdict
    assert not holo_nondeg(flat, 2).verdict


def test_transport_map_sends_base_to_image():
    base = fixtures.heis(5)
    phi, phi_inv = random_biholo(1, 1, 5, 11)
    M, change = transport_manifold(base, phi_inv)
    # Phi followed by the renormalizing change carries the base onto M
    assert all(r.is_zero() for r in sends_residual(base, M, compose_maps(phi, change)))
    assert not all(r.is_zero() for r in sends_residual(base, M, change))
