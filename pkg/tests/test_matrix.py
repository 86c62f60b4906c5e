import random

import pytest

from crt import fixtures
from crt.errors import NotSquare
from crt.gaussian import I
from crt.harness import random_jet_matrix
from crt.jets import Jet, VarSpace
from crt.manifold import segre
from crt.matrix import JetMatrix, det, det_adj, generic_rank, inverse


def zspace(D=6):
    S = VarSpace.of(("z", 1), ("w", 1))
    return S, *Jet.variables(S, D)


def test_det_adj_unipotent():
    S, z, w = zspace()
    one, zero = Jet.one(S, 6), Jet.zero(S, 6)
    d, adj = det_adj(JetMatrix([[one, z], [zero, one]]))
    assert d == 1
    assert adj.tolist() == [[one, -z], [zero, one]]


def test_det_of_squaring_jacobian():
    H = fixtures.squaring_map(8)
    d, adj = det_adj(H.jacobian())
    w = Jet.var(H.space, 8, "w1")
    assert d == 2 * w
    assert H.jacobian().tolist()[1][1] == 2 * w


def test_det_identity_and_not_square():
    S, z, w = zspace()
    assert det(JetMatrix.identity(3, S, 6)) == 1
    with pytest.raises(NotSquare):
        det_adj(JetMatrix([[z, w]]))


def test_adjugate_identity_random():
    rng = random.Random(7)
    for _ in range(20):
        A = random_jet_matrix(rng, 4)
        if A.rows != A.cols:
            continue
        d, B = det_adj(A)
        dI = JetMatrix.identity(A.rows, A.space, A.order).map(lambda e: e * d)
        assert A @ B == dI
        assert B @ A == dI


def test_inverse_of_unit_matrix():
    S, z, w = zspace()
    one = Jet.one(S, 6)
    A = JetMatrix([[one + z, w], [z * w, one - 2 * w]])
    assert A @ inverse(A) == JetMatrix.identity(2, S, 6)


def test_rank_heis_v2():
    v2 = segre(fixtures.heis(8), 2)
    J = v2.jacobian()
    r = generic_rank(J)
    assert r.rank == 2
    t1, t2 = Jet.variables(J.space, 8)
    assert det(J) == -2 * I * t2
    assert r.certificate["minor_lowest_term"]["coefficient"] == "-2*i"


def test_rank_zero_and_mxi():
    S, z, w = zspace()
    assert generic_rank(JetMatrix.zeros(2, 3, S, 6)).rank == 0
    assert generic_rank(JetMatrix.zeros(2, 3, S, 6), "random").rank == 0
    J = segre(fixtures.mxi(8), 3).jacobian()
    assert generic_rank(J).rank == 1
    assert generic_rank(J, "random").rank == 1


def test_rank_methods_agree_on_random_matrices():
    rng = random.Random(2024)
    for k in range(50):
        A = random_jet_matrix(rng, 4)
        exact = generic_rank(A)
        rand = generic_rank(A, "random", seed=k)
        assert rand.rank == exact.rank
        assert rand.rank <= min(A.rows, A.cols)


def test_rank_random_certificate_is_reproducible():
    A = segre(fixtures.quad22(5), 3).jacobian()
    a = generic_rank(A, "random", seed=3)
    b = generic_rank(A, "random", seed=3)
    assert a.rank == b.rank == 4
    assert a.certificate == b.certificate
