"""Small dense primal-dual interior-point solver for Hermitian block SDPs.

Problems are stated as::

    maximize    <C, X>
    subject to  <A_k, X> = b_k   (k = 0..m-1)
                X = diag(X_1, ..., X_p) >= 0

with Hermitian blocks and ``<A, X> = Re tr(A^* X)``.  The dual is::

    minimize    b^T y
    subject to  Z = sum_k y_k A_k - C >= 0

The solver realifies every block with :func:`real_embed` and runs a
Nesterov-Todd scaled Mehrotra predictor-corrector iteration on the real
symmetric problem.
"""
from __future__ import annotations

import enum
import logging
import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

__all__ = [
    "SdpError",
    "SdpProblem",
    "SdpSolution",
    "Status",
    "real_embed",
    "solve",
]

log = logging.getLogger(__name__)


DENSE_LIMIT = 2 * 10 ** 8


class SdpError(ValueError):
    pass


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    MAX_ITER = "MaxIter"
    INFEASIBLE = "Infeasible"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass
class SdpProblem:
    """Standard-form Hermitian block SDP.

    ``constraints[b]`` is a sparse complex ``(m, n_b * n_b)`` matrix whose
    row ``k`` is the row-major flattening of block ``b`` of ``A_k``.
    ``normalization`` is the index of the constraint whose multiplier is the
    bound; ``labels`` carries whatever the builder needs to turn a dual
    solution back into polynomials.
    """

    block_dims: list[int]
    objective: list[np.ndarray]
    constraints: list[sp.csr_matrix]
    rhs: np.ndarray
    normalization: int | None = 0
    labels: dict[str, Any] = field(default_factory=dict)

    @property
    def num_constraints(self) -> int:
        return len(self.rhs)

    def constraint_matrix(self, k: int) -> list[np.ndarray]:
        return [np.asarray(A[k].todense()).reshape(n, n)
                for A, n in zip(self.constraints, self.block_dims)]

    def apply(self, X: list[np.ndarray]) -> np.ndarray:
        """``[<A_k, X>]_k``."""
        out = np.zeros(self.num_constraints)
        for A, Xb in zip(self.constraints, X):
            out += (A.conj() @ Xb.ravel()).real
        return out

    def adjoint_apply(self, y: np.ndarray) -> list[np.ndarray]:
        """``sum_k y_k A_k`` blockwise."""
        return [np.asarray(A.T @ y).reshape(n, n) for A, n in zip(self.constraints, self.block_dims)]

    def objective_value(self, X: list[np.ndarray]) -> float:
        return float(sum(np.vdot(C, Xb).real for C, Xb in zip(self.objective, X)))

    def slack(self, y: np.ndarray) -> list[np.ndarray]:
        """Dual slack ``sum_k y_k A_k - C``."""
        return [S - C for S, C in zip(self.adjoint_apply(y), self.objective)]

    def validate(self, tol: float = 1e-12) -> None:
        m = self.num_constraints
        if len(self.objective) != len(self.block_dims) or len(self.constraints) != len(self.block_dims):
            raise SdpError("block count mismatch")
        for b, (C, A, n) in enumerate(zip(self.objective, self.constraints, self.block_dims)):
            if C.shape != (n, n):
                raise SdpError(f"objective block {b} has shape {C.shape}, expected {(n, n)}")
            if np.abs(C - C.conj().T).max(initial=0) > tol:
                raise SdpError(f"objective block {b} is not Hermitian")
            if A.shape != (m, n * n):
                raise SdpError(f"constraint block {b} has shape {A.shape}, expected {(m, n * n)}")
            Ac = A.tocoo()
            i, j = np.divmod(Ac.col, n)
            At = sp.csr_matrix((Ac.data, (Ac.row, j * n + i)), shape=A.shape)
            diff = A - At.conj()
            if diff.nnz and abs(diff).max() > tol:
                raise SdpError(f"constraint block {b} is not Hermitian")


@dataclass
class SdpSolution:
    status: Status
    primal: list[np.ndarray]
    dual_y: np.ndarray
    dual_slack: list[np.ndarray]
    primal_obj: float
    dual_obj: float
    gap: float
    primal_residual: float
    dual_residual: float
    iterations: int
    history: list[tuple] = field(default_factory=list)

    @property
    def bound(self) -> float:
        return self.dual_obj

    def min_eig(self, which: str = "slack") -> float:
        mats = self.dual_slack if which == "slack" else self.primal
        return min((float(np.linalg.eigvalsh(M)[0]) for M in mats if M.size), default=0.0)


def real_embed(H: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """``[[Re H, -Im H], [Im H, Re H]]`` for a Hermitian ``H``."""
    H = np.asarray(H, dtype=complex)
    if H.shape[0] != H.shape[1] or np.abs(H - H.conj().T).max(initial=0) > tol:
        raise SdpError("real_embed needs a Hermitian matrix")
    return np.block([[H.real, -H.imag], [H.imag, H.real]])


def real_unembed(X: np.ndarray) -> np.ndarray:
    """Hermitian matrix whose embedding is the orthogonal projection of ``X``."""
    n = X.shape[0] // 2
    re = (X[:n, :n] + X[n:, n:]) / 2
    im = (X[n:, :n] - X[:n, n:]) / 2
    H = re + 1j * im
    return (H + H.conj().T) / 2


def _embed_rows(A: sp.csr_matrix, n: int) -> sp.csr_matrix:
    """Row-wise real embedding of flattened Hermitian blocks, scaled by 1/2."""
    Ac = A.tocoo()
    i, j = np.divmod(Ac.col, n)
    re, im = Ac.data.real, Ac.data.imag
    N = 2 * n
    rows = np.concatenate([Ac.row] * 4)
    cols = np.concatenate([i * N + j, (i + n) * N + (j + n), i * N + (j + n), (i + n) * N + j])
    vals = np.concatenate([re, re, -im, im]) / 2
    out = sp.csr_matrix((vals, (rows, cols)), shape=(A.shape[0], N * N))
    out.eliminate_zeros()
    return out


def _independent_rows(blocks: list[sp.csr_matrix], rhs: np.ndarray,
                      tol: float) -> tuple[np.ndarray, bool]:
    """Indices of a maximal independent row set, and whether the dropped
    rows agree with it on the right-hand side."""
    stacked = sp.hstack(blocks).tocsc()
    m = stacked.shape[0]
    if m == 0:
        return np.arange(0), True
    stacked = stacked[:, np.flatnonzero(np.diff(stacked.indptr))]
    k = stacked.shape[1]
    if m * k > DENSE_LIMIT or m * m > DENSE_LIMIT:
        raise SdpError(f"{m} constraints over {k} variables is too large for the dense solver")
    dense = stacked.toarray()
    if k == 0:
        return np.arange(0), not np.any(rhs)
    _, R, piv = sla.qr(dense.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > tol * diag[0])) if diag[0] > 0 else 0
    keep = np.sort(piv[:rank])
    drop = np.setdiff1d(np.arange(m), keep)
    if drop.size == 0:
        return keep, True
    coef = np.linalg.lstsq(dense[keep].T, dense[drop].T, rcond=None)[0]
    mismatch = np.abs(coef.T @ rhs[keep] - rhs[drop]).max(initial=0.0)
    return keep, bool(mismatch <= 1e-8 * max(1.0, np.abs(rhs).max()))


def _sym(M):
    return (M + M.T) / 2


def _nt_scaling(X, Z):
    L = np.linalg.cholesky(X)
    R = np.linalg.cholesky(Z)
    U, s, Vt = np.linalg.svd(R.T @ L)
    G = (L @ Vt.T) / np.sqrt(s)
    return G, s


def _max_step(X, dX):
    L = np.linalg.cholesky(X)
    Li = sla.solve_triangular(L, np.eye(len(X)), lower=True)
    lam = np.linalg.eigvalsh(_sym(Li @ dX @ Li.T))[0]
    return np.inf if lam >= 0 else -1.0 / lam


def solve(problem: SdpProblem, gap_tol: float = 1e-8, feas_tol: float = 1e-8,
          max_iter: int = 200, rank_tol: float = 1e-10) -> SdpSolution:
    """Solve ``problem`` with an infeasible-start predictor-corrector method.

    Linearly dependent constraints are dropped first (their multipliers are
    reported as 0).  Tolerances are absolute: ``|primal_obj - dual_obj|``,
    ``max_k |<A_k, X> - b_k|`` and the dual residual in max-norm.
    """
    problem.validate()
    dims = [2 * n for n in problem.block_dims]
    full_rows = [_embed_rows(A, n) for A, n in zip(problem.constraints, problem.block_dims)]
    keep, consistent = _independent_rows(full_rows, problem.rhs, rank_tol)
    if not consistent:
        log.info("dependent constraints disagree on their right-hand sides")
        m_all, nan = problem.num_constraints, float("nan")
        X0 = [np.zeros((n, n), dtype=complex) for n in problem.block_dims]
        y0 = np.zeros(m_all)
        return SdpSolution(Status.INFEASIBLE, X0, y0, problem.slack(y0), nan, nan, nan, nan, nan, 0)
    if len(keep) < problem.num_constraints:
        dropped = problem.num_constraints - len(keep)
        log.info("dropping %d linearly dependent constraints", dropped)
        if problem.normalization is not None and problem.normalization not in keep:
            raise SdpError("normalization constraint is linearly dependent on the others")
    A = [Ab[keep].tocsr() for Ab in full_rows]
    b = problem.rhs[keep].astype(float)
    # minimise <Cm, X>
    Cm = [-real_embed(C) / 2 for C in problem.objective]
    m = len(b)
    n_total = sum(dims)

    def A_op(X):
        return sum((Ab @ Xb.ravel() for Ab, Xb in zip(A, X)), np.zeros(m))

    def At_op(y):
        return [np.asarray(Ab.T @ y).reshape(n, n) for Ab, n in zip(A, dims)]

    # rows touching each block, for the Schur complement
    touched = [np.unique(Ab.tocoo().row) for Ab in A]
    A_sub = [Ab[rows].tocsr() for Ab, rows in zip(A, touched)]

    norm_A = max((abs(Ab).max() for Ab in A if Ab.nnz), default=1.0)
    norm_C = max(np.abs(C).max(initial=0.0) for C in Cm) if Cm else 0.0
    xi = max(10.0, np.sqrt(max(dims)), float(np.max(np.abs(b), initial=0.0)) * max(dims))
    eta = max(10.0, np.sqrt(max(dims)), norm_A, norm_C)
    X = [xi * np.eye(n) for n in dims]
    Z = [eta * np.eye(n) for n in dims]
    y = np.zeros(m)

    status = Status.MAX_ITER
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        Rp = b - A_op(X)
        ATy = At_op(y)
        Rd = [C - Zb - S for C, Zb, S in zip(Cm, Z, ATy)]
        pobj = -sum(np.vdot(C, Xb) for C, Xb in zip(Cm, X))
        dobj = -float(b @ y)
        mu = sum(np.vdot(Xb, Zb) for Xb, Zb in zip(X, Z)) / n_total
        pinf = float(np.max(np.abs(Rp), initial=0.0))
        dinf = max(float(np.max(np.abs(R), initial=0.0)) for R in Rd)
        history.append((it, pobj, dobj, pinf, dinf, mu))
        if abs(pobj - dobj) <= gap_tol and pinf <= feas_tol and dinf <= feas_tol:
            status = Status.OPTIMAL
            break
        if max(np.abs(Xb).max() for Xb in X) > 1e12 or max(np.abs(Zb).max() for Zb in Z) > 1e12:
            status = Status.INFEASIBLE
            break

        try:
            scal = [_nt_scaling(Xb, Zb) for Xb, Zb in zip(X, Z)]
        except np.linalg.LinAlgError:
            status = Status.NUMERICAL_FAILURE
            break
        Ws = [G @ G.T for G, _ in scal]
        M = np.zeros((m, m))
        for Ab, rows, W in zip(A_sub, touched, Ws):
            if len(rows) == 0:
                continue
            T = Ab @ np.kron(W, W)
            M[np.ix_(rows, rows)] += np.asarray(Ab @ T.T)
        M = _sym(M)
        try:
            chol = sla.cho_factor(M)
        except np.linalg.LinAlgError:
            reg = 1e-14 * max(1.0, np.abs(np.diag(M)).max())
            try:
                chol = sla.cho_factor(M + reg * np.eye(m))
            except np.linalg.LinAlgError:
                status = Status.NUMERICAL_FAILURE
                break
        WRdW = [W @ R @ W for W, R in zip(Ws, Rd)]

        def direction(Rc_scaled):
            Rc = [G @ R @ G.T for (G, _), R in zip(scal, Rc_scaled)]
            rhs = Rp - A_op([a - c for a, c in zip(Rc, WRdW)])
            dy = sla.cho_solve(chol, rhs)
            dZ = [R - S for R, S in zip(Rd, At_op(dy))]
            dX = [_sym(a - W @ dz @ W) for a, W, dz in zip(Rc, Ws, dZ)]
            return dX, dy, [_sym(d) for d in dZ]

        # predictor
        dX, dy, dZ = direction([-np.diag(s) for _, s in scal])
        try:
            ap = min(1.0, min(_max_step(Xb, d) for Xb, d in zip(X, dX)))
            ad = min(1.0, min(_max_step(Zb, d) for Zb, d in zip(Z, dZ)))
        except np.linalg.LinAlgError:
            status = Status.NUMERICAL_FAILURE
            break
        mu_aff = sum(np.vdot(Xb + ap * a, Zb + ad * c)
                     for Xb, a, Zb, c in zip(X, dX, Z, dZ)) / n_total
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3
        # corrector
        Rc_scaled = []
        for (G, s), a, c in zip(scal, dX, dZ):
            Gi = np.linalg.inv(G)
            dXs = Gi @ a @ Gi.T
            dZs = G.T @ c @ G
            H = sigma * mu * np.eye(len(s)) - np.diag(s * s) - (dXs @ dZs + dZs @ dXs) / 2
            Rc_scaled.append(2 * H / (s[:, None] + s[None, :]))
        dX, dy, dZ = direction(Rc_scaled)
        try:
            ap = min(1.0, 0.98 * min(_max_step(Xb, d) for Xb, d in zip(X, dX)))
            ad = min(1.0, 0.98 * min(_max_step(Zb, d) for Zb, d in zip(Z, dZ)))
        except np.linalg.LinAlgError:
            status = Status.NUMERICAL_FAILURE
            break
        X = [_sym(Xb + ap * d) for Xb, d in zip(X, dX)]
        y = y + ad * dy
        Z = [_sym(Zb + ad * d) for Zb, d in zip(Z, dZ)]

    y_full = np.zeros(problem.num_constraints)
    y_full[keep] = -y
    Xc = [real_unembed(Xb) for Xb in X]
    Zc = problem.slack(y_full)
    pobj = problem.objective_value(Xc)
    dobj = float(problem.rhs @ y_full)
    pres = float(np.max(np.abs(problem.apply(Xc) - problem.rhs), initial=0.0))
    dres = max(float(np.max(np.abs(Zb - real_unembed(Zr) * 2), initial=0.0))
               for Zb, Zr in zip(Zc, Z)) if Z else 0.0
    if status is Status.MAX_ITER:
        warnings.warn(f"SDP solver stopped after {max_iter} iterations", RuntimeWarning)
    return SdpSolution(status, Xc, y_full, Zc, pobj, dobj, abs(pobj - dobj), pres, dres, it,
                       history)
