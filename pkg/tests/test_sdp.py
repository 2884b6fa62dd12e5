import numpy as np
import pytest
import scipy.sparse as sp

from nicesos.sdp import SdpError, SdpProblem, Status, real_embed, real_unembed, solve

from conftest import TSIRELSON


def toy():
    """max x  s.t.  x = 1,  x >= 0."""
    return SdpProblem([1], [np.array([[1.0 + 0j]])], [sp.csr_matrix(np.array([[1.0 + 0j]]))],
                      np.array([1.0]))


def test_embed_example():
    H = np.array([[1, 1j], [-1j, 1]])
    want = np.array([[1, 0, 0, -1], [0, 1, 1, 0], [0, 1, 1, 0], [-1, 0, 0, 1]], dtype=float)
    np.testing.assert_array_equal(real_embed(H), want)


def random_hermitian(rng, n):
    G = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (G + G.conj().T) / 2


def test_embed_spectrum_doubles():
    rng = np.random.default_rng(0)
    H = random_hermitian(rng, 5)
    lam = np.linalg.eigvalsh(H)
    np.testing.assert_allclose(np.linalg.eigvalsh(real_embed(H)), np.repeat(lam, 2), atol=1e-12)


def test_embed_inner_product():
    rng = np.random.default_rng(1)
    A, B = random_hermitian(rng, 5), random_hermitian(rng, 5)
    direct = np.trace(A.conj().T @ B).real
    assert np.sum(real_embed(A) * real_embed(B)) == pytest.approx(2 * direct, abs=1e-12)


def test_unembed_inverts_embed():
    H = random_hermitian(np.random.default_rng(2), 4)
    np.testing.assert_allclose(real_unembed(real_embed(H)), H, atol=1e-15)


def test_embed_rejects_non_hermitian():
    with pytest.raises(SdpError):
        real_embed(np.array([[0, 1], [0, 0]]))


def test_toy_problem():
    sol = solve(toy(), gap_tol=1e-11)
    assert sol.status is Status.OPTIMAL
    assert sol.primal[0][0, 0].real == pytest.approx(1, abs=1e-10)
    assert sol.gap <= 1e-10
    assert sol.dual_obj == pytest.approx(1, abs=1e-10)


def test_chsh(run):
    _, _, sol = run("chsh", "npa", 1)
    assert sol.status is Status.OPTIMAL
    assert sol.dual_obj == pytest.approx(TSIRELSON, abs=1e-6)


def test_trivial(run):
    _, _, sol = run("trivial", "npa", 1)
    assert sol.dual_obj == pytest.approx(1, abs=1e-8)


def test_iterates_are_deterministic(run):
    _, problem, first = run("chsh", "onpa", 1)
    again = solve(problem)
    assert again.history == first.history
    assert np.array_equal(again.dual_y, first.dual_y)


@pytest.mark.parametrize("game, hierarchy", [("chsh", "npa"), ("matching", "onpa")])
def test_slack_is_reconstructed_from_y(run, game, hierarchy):
    _, problem, sol = run(game, hierarchy, 1)
    for Z, S in zip(sol.dual_slack, problem.slack(sol.dual_y)):
        assert np.abs(Z - S).max() <= 1e-9


def test_redundant_constraints_are_dropped():
    p = toy()
    p = SdpProblem([1], p.objective, [sp.vstack([p.constraints[0]] * 3).tocsr()],
                   np.array([1.0, 1.0, 1.0]))
    sol = solve(p)
    assert sol.status is Status.OPTIMAL
    assert sol.primal_obj == pytest.approx(1, abs=1e-9)


def test_infeasible_is_not_optimal():
    # x = 1 and x = 2 cannot both hold
    A = sp.csr_matrix(np.array([[1.0 + 0j], [1.0 + 0j]]))
    p = SdpProblem([1], [np.array([[1.0 + 0j]])], [A], np.array([1.0, 2.0]))
    assert solve(p, max_iter=50).status is Status.INFEASIBLE


def test_validate_shapes():
    p = toy()
    bad = SdpProblem([2], p.objective, p.constraints, p.rhs)
    with pytest.raises(SdpError):
        bad.validate()
