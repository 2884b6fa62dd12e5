import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nicesos.algebra import ALICE, Polynomial, Signature
from nicesos.certificate import SosCertificate, extract, is_nice, verify
from nicesos.corpus import MATCHING_SIGNATURE, matching_certificate, matching_polynomial
from nicesos.games import GamePolynomial
from nicesos.nicify import (
    NicifyError,
    block_cholesky,
    cholesky_complete,
    gram_from_certificate,
    nicify_level1,
    pivoted_cholesky,
)


def random_psd(rng, n, rank=None):
    rank = n if rank is None else rank
    G = rng.normal(size=(rank, n)) + 1j * rng.normal(size=(rank, n))
    return G.conj().T @ G


class TestBlockCholesky:
    def test_scalar(self):
        np.testing.assert_allclose(block_cholesky(np.array([[4.0]]), [(0, 1)]), [[2.0]])

    def test_two_blocks(self):
        M = np.zeros((3, 3))
        M[:2, :2] = [[2, 1], [1, 2]]
        M[2, 2] = 1
        R = block_cholesky(M, [(0, 2), (2, 3)])
        assert np.abs(R.conj().T @ R - M).max() <= 1e-12
        assert R[:2, 2].tolist() == [0, 0] and R[2, :2].tolist() == [0, 0]

    def test_rank_one(self):
        R = block_cholesky(np.ones((2, 2)), [(0, 2)])
        np.testing.assert_allclose(R, [[1, 1], [0, 0]], atol=1e-15)

    def test_not_psd(self):
        with pytest.raises(NicifyError):
            block_cholesky(np.diag([1.0, -1.0]), [(0, 2)])


def test_pivoted_cholesky_rank():
    rng = np.random.default_rng(3)
    A = random_psd(rng, 6, rank=2)
    R = pivoted_cholesky(A)
    assert np.abs(R.conj().T @ R - A).max() <= 1e-10
    assert np.count_nonzero(np.abs(R).max(axis=1) > 1e-8) == 2


class TestCholeskyComplete:
    def test_identity(self):
        R = cholesky_complete(np.eye(5), np.eye(2))
        np.testing.assert_allclose(R, np.eye(5), atol=1e-15)

    @pytest.mark.parametrize("seed", range(5))
    def test_random_full_rank(self, seed):
        rng = np.random.default_rng(seed)
        M = random_psd(rng, 8)
        Q, _ = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))
        R_a = Q @ np.linalg.cholesky(M[:3, :3]).conj().T
        R = cholesky_complete(M, R_a)
        assert np.abs(R.conj().T @ R - M).max() <= 1e-8
        assert np.abs(R[:3, :3] - R_a).max() <= 1e-10
        assert np.abs(R[3:, :3]).max() == 0

    def test_rank_deficient_corner(self):
        rng = np.random.default_rng(11)
        v = rng.normal(size=(1, 2)) + 1j * rng.normal(size=(1, 2))
        W = np.vstack([np.hstack([v, np.zeros((1, 4))]),
                       rng.normal(size=(5, 6)) + 1j * rng.normal(size=(5, 6))])
        W[1:, :2] = 0
        W[1:, :2] = rng.normal(size=(5, 1)) @ v  # corner stays rank 1
        M = W.conj().T @ W
        corner = M[:2, :2]
        R_a = np.zeros((2, 2), dtype=complex)
        R_a[1] = np.sqrt(corner[0, 0].real) * np.array([1, corner[0, 1] / corner[0, 0]])
        R = cholesky_complete(M, R_a)
        assert np.abs(R.conj().T @ R - M).max() <= 1e-8
        assert np.abs(R[:2, :2] - R_a).max() <= 1e-10

    def test_mismatched_corner(self):
        with pytest.raises(NicifyError):
            cholesky_complete(np.eye(3), 2 * np.eye(2))


@given(st.integers(4, 9), st.integers(1, 3), st.booleans(), st.integers(0, 2 ** 32 - 1))
@settings(deadline=None, max_examples=60)
def test_completion_property(n, k, deficient, seed):
    rng = np.random.default_rng(seed)
    M = random_psd(rng, n, rank=max(1, n - 2) if deficient else None)
    corner = M[:k, :k]
    Q, _ = np.linalg.qr(rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k)))
    R_a = Q @ pivoted_cholesky(corner)
    R = cholesky_complete(M, R_a)
    assert np.abs(R.conj().T @ R - M).max() <= 1e-8 * max(1, np.abs(M).max())
    assert np.abs(R[:k, :k] - R_a).max() <= 1e-10


def test_matching_gram():
    gram = gram_from_certificate(matching_certificate())
    assert gram.alice_blocks == ((0, 1), (1, 2), (2, 3))
    np.testing.assert_allclose(np.diag(gram.M)[:3], 1)
    assert gram.M.shape == (7, 7)
    assert np.abs(gram.M[:3, :3] - np.eye(3)).max() == 0


def test_single_letter_gram():
    sig = Signature(2, 2, 2, 2)
    cert = SosCertificate(0.0, [(1.0, Polynomial.letter(sig, ALICE, 0, 1))], [], sig)
    gram = gram_from_certificate(cert)
    assert gram.M[0, 0] == 1 and np.count_nonzero(gram.M) == 1


def test_cross_question_gram_rejected():
    sig = MATCHING_SIGNATURE
    r = Polynomial.letter(sig, ALICE, 0, 1) + Polynomial.letter(sig, ALICE, 1, 1)
    with pytest.raises(NicifyError, match="cross-question"):
        gram_from_certificate(SosCertificate(0.0, [(1.0, r)], [], sig))


def _nicify_checked(cert, gp, tol):
    before = verify(cert, gp, tol)
    nice = nicify_level1(cert, gp, tol=tol)
    after = verify(nice, gp, tol)
    assert is_nice(nice).is_nice
    assert nice.bound == cert.bound
    assert after.max_residual <= before.max_residual + 1e-8
    G0, G1 = gram_from_certificate(cert).M, gram_from_certificate(nice).M
    assert np.abs(G0 - G1).max() <= 1e-8
    return nice


@pytest.mark.parametrize("game", ["chsh", "matching", "trivial", "bn:3", "xor:++/+-"])
def test_nicify_extracted(run, game):
    gp, problem, sol = run(game, "npa", 1)
    _nicify_checked(extract(sol, problem), gp, 1e-5)


def test_nicify_already_nice_fixture():
    cert = matching_certificate()
    nice = _nicify_checked(cert, GamePolynomial(matching_polynomial()), 1e-12)
    assert nice.bound == 6.0


def test_nicify_rejects_degree_two(run):
    gp, problem, sol = run("chsh", "npa", 2)
    cert = extract(sol, problem)
    if cert.degree() > 1:
        with pytest.raises(NicifyError, match="degree"):
            nicify_level1(cert, gp)


@pytest.mark.parametrize("game", ["chsh", "matching", "bn:3"])
def test_level1_slack_cross_entries_vanish(run, game):
    _, problem, sol = run(game, "npa", 1)
    basis = problem.labels["basis"]
    Z = sol.dual_slack[0]
    qs = [w[0].question if w and w[0].party == ALICE else None for w in basis.entries]
    for i, qi in enumerate(qs):
        for j, qj in enumerate(qs):
            if qi is not None and qj is not None and qi != qj:
                assert abs(Z[i, j]) <= 1e-7
