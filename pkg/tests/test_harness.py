import json
import random

from hypothesis import given, settings, strategies as st

from crt import fixtures
from crt.harness import (
    FAMILIES,
    conjugate_instance,
    degenerate_map,
    random_biholo,
    run_suite,
    run_trial,
    trial_rng,
)
from crt.jets import Jet
from crt.linalg import det as num_det
from crt.manifold import finite_type, validate
from crt.mapping import FormalMap, check_sends, compose_maps, cr_transversal, kernel_field

D = 5


@settings(max_examples=10)
@given(st.integers(0, 10_000), st.sampled_from([(1, 1), (2, 1), (1, 2)]))
def test_biholo_composed_with_inverse_is_identity(seed, dims):
    n, d = dims
    phi, inv = random_biholo(n, d, D, seed)
    ident = FormalMap.identity(n, d, D).components
    assert compose_maps(inv, phi).components == ident
    assert num_det(phi.jacobian().constant_matrix())


def test_degree_one_biholo_is_linear():
    for seed in range(5):
        phi, _ = random_biholo(2, 1, D, seed, degree=1)
        for c in phi.components:
            assert all(sum(e) == 1 for e, _ in c.terms())


def test_identity_conjugation_returns_triple():
    triple = fixtures.example_triple(D)
    assert conjugate_instance(triple, None, None) is triple


def test_conjugated_heis_identity_stays_transversal():
    M, Mp, H = fixtures.heis(D), fixtures.heis(D), FormalMap.identity(1, 1, D)
    for seed in range(3):
        rng = random.Random(seed)
        M2, Mp2, H2 = conjugate_instance((M, Mp, H), random_biholo(1, 1, D, rng), random_biholo(1, 1, D, rng))
        assert validate(M2).verdict and validate(Mp2).verdict
        assert check_sends(M2, Mp2, H2).verdict
        assert cr_transversal(M2, Mp2, H2).verdict


def test_conjugated_xi_example_stays_non_transversal():
    for seed in range(3):
        rng = random.Random(seed)
        M2, Mp2, H2 = conjugate_instance(fixtures.example_triple(D), random_biholo(1, 1, D, rng), random_biholo(1, 1, D, rng))
        assert check_sends(M2, Mp2, H2).verdict
        rep = cr_transversal(M2, Mp2, H2)
        assert not rep.verdict and rep.details["det_a0"] == "0"
        assert not H2.jacobian_determinant().is_zero()
        assert not finite_type(M2).verdict


def test_conjugation_preserves_ground_truth_for_every_base():
    from crt.harness import negative_bases, positive_bases

    for label, (M, Mp, H) in positive_bases(4) + negative_bases(4):
        rng = random.Random(label)
        deg, mix = (2, True) if M.n == 1 else (1, False)
        M2, Mp2, H2 = conjugate_instance((M, Mp, H), random_biholo(M.n, M.d, 4, rng, deg, mixing=mix),
                                         random_biholo(Mp.n, Mp.d, 4, rng, deg, mixing=mix))
        assert finite_type(M2).verdict == finite_type(M).verdict, label
        assert cr_transversal(M2, Mp2, H2).verdict == cr_transversal(M, Mp, H).verdict, label
        assert H2.jacobian_determinant().is_zero() == H.jacobian_determinant().is_zero(), label


def test_degenerate_maps_have_kernel_fields():
    rng = random.Random(5)
    for n, d in ((1, 1), (2, 1), (1, 2)):
        H = degenerate_map(rng, n, d, 4)
        assert H.jacobian_determinant().is_zero()
        L = kernel_field(H)
        assert L is not None and not L.is_zero()
        assert all(L.apply(c).is_zero() for c in H.components)


def test_trial_streams_are_independent_of_order():
    a = [trial_rng(3, t, "x").random() for t in range(5)]
    b = [trial_rng(3, t, "x").random() for t in reversed(range(5))][::-1]
    assert a == b


def test_every_family_runs():
    for fam in FAMILIES:
        out = run_trial(fam, 0, 0, 4)
        assert out["ok"], (fam, out)


def test_suite_is_deterministic_across_workers():
    serial = run_suite("lemma31", 4, seed=9, D=4)
    parallel = run_suite("lemma31", 4, seed=9, D=4, workers=2)
    assert json.dumps(serial.to_dict(), sort_keys=True) == json.dumps(parallel.to_dict(), sort_keys=True)
    assert serial.verdict and serial.details["passed"] == 4


def test_suite_report_carries_reproduction_command():
    rep = run_suite("rank-oracle", 3, seed=1, D=4)
    assert rep.details["reproduce"] == "crt suite rank-oracle --trials 3 --seed 1 --order 4"
