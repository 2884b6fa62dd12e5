"""Turn degree-1 certificates into nice ones by refactoring their Gram matrix.

A degree-1 certificate is a PSD Gram matrix ``M`` over the basis
``(Alice letters by question | 1, Bob letters)``.  At level 1 the Alice
cross-question entries vanish, so the Alice corner is block diagonal and has
a block-diagonal triangular factor ``R_a``.  Completing ``R_a`` to a factor
``R = [[R_a, R_ab], [0, R_b]]`` of the whole of ``M`` gives rows that each
mention at most one Alice question: a nice certificate with the same Gram
matrix, hence the same polynomial.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import ALICE, Polynomial, eliminate_answer_zero
from .certificate import CertificateError, SosCertificate, verify
from .games import GamePolynomial
from .relaxation import MonomialBasis, npa_basis

__all__ = [
    "CROSS_TOL",
    "NicifyError",
    "StructuredGram",
    "block_cholesky",
    "cholesky_complete",
    "gram_from_certificate",
    "nicify_level1",
    "pivoted_cholesky",
]

CROSS_TOL = 1e-7
PSD_TOL = 1e-9


class NicifyError(ValueError):
    pass


@dataclass(frozen=True)
class StructuredGram:
    """Gram matrix reordered as ``[Alice question 0 | ... | Alice question k-1 | 1, Bob]``.

    ``labels[i]`` is the basis word of row/column ``i``; ``partition`` lists
    the Alice blocks as ``(start, stop)`` followed by the Bob/identity band.
    """

    M: np.ndarray
    labels: tuple
    partition: tuple

    @property
    def alice_size(self) -> int:
        return self.partition[-1][0]

    @property
    def alice_blocks(self) -> tuple:
        return self.partition[:-1]


def _level1_order(basis: MonomialBasis):
    sig = basis.sig
    groups = [[] for _ in range(sig.alice_questions)]
    rest = []
    for w in basis.entries:
        if len(w) > 1:
            raise NicifyError(f"basis word {w} has degree > 1")
        if w and w[0].party == ALICE:
            groups[w[0].question].append(w)
        else:
            rest.append(w)
    rest.sort(key=lambda w: (len(w), w))
    order, partition, start = [], [], 0
    for g in groups:
        order.extend(g)
        partition.append((start, start + len(g)))
        start += len(g)
    order.extend(rest)
    partition.append((start, start + len(rest)))
    return order, tuple(partition)


def gram_from_certificate(cert: SosCertificate, basis: MonomialBasis | None = None,
                          cross_tol: float = CROSS_TOL) -> StructuredGram:
    """``M = S^* diag(lambda) S`` with rows of ``S`` the terms' coefficients."""
    if basis is None:
        basis = npa_basis(cert.signature, 1)
    order, partition = _level1_order(basis)
    index = {w: i for i, w in enumerate(order)}
    n = len(order)
    S = np.zeros((len(cert.terms), n), dtype=complex)
    for row, (lam, r) in enumerate(cert.terms):
        r = eliminate_answer_zero(r)
        for w, c in r.items():
            if w not in index:
                raise NicifyError(f"term {row} has word {w} outside the degree-1 basis")
            S[row, index[w]] = np.sqrt(lam) * c
    M = S.conj().T @ S
    k = partition[-1][0]
    mask = np.zeros((k, k), dtype=bool)
    for lo, hi in partition[:-1]:
        mask[lo:hi, lo:hi] = True
    cross = np.abs(M[:k, :k][~mask]).max(initial=0.0)
    if cross > cross_tol:
        raise NicifyError(f"Alice cross-question Gram entry of size {cross:.3e} exceeds "
                          f"{cross_tol:g}; certificate is not level-1 shaped")
    M[:k, :k][~mask] = 0
    return StructuredGram(M, tuple(order), partition)


def pivoted_cholesky(A: np.ndarray, tol: float | None = None) -> np.ndarray:
    """Rank-revealing Cholesky: returns ``R`` with ``R^* R = A``.

    Pivots by largest remaining diagonal.  Row ``k`` of ``R`` is the
    ``k``-th pivot step; rows past the numerical rank are zero.  Columns are
    returned in the original order, so ``R`` is triangular only up to the
    pivot permutation.
    """
    A = np.array(A, dtype=complex)
    n = A.shape[0]
    if tol is None:
        tol = 1e-14 * max(1.0, float(np.abs(np.diag(A)).max(initial=0.0)))
    R = np.zeros((n, n), dtype=complex)
    perm = np.arange(n)
    for k in range(n):
        d = np.diag(A).real[k:]
        j = k + int(np.argmax(d))
        if d[j - k] <= tol:
            break
        if j != k:
            A[[k, j]] = A[[j, k]]
            A[:, [k, j]] = A[:, [j, k]]
            R[:, [k, j]] = R[:, [j, k]]
            perm[[k, j]] = perm[[j, k]]
        piv = np.sqrt(A[k, k].real)
        R[k, k] = piv
        R[k, k + 1:] = A[k, k + 1:] / piv
        A[k + 1:, k + 1:] -= np.outer(R[k, k + 1:].conj(), R[k, k + 1:])
    out = np.zeros_like(R)
    out[:, perm] = R
    return out


def block_cholesky(M_a: np.ndarray, blocks) -> np.ndarray:
    """Block-diagonal factor of a block-diagonal PSD matrix, block by block."""
    M_a = np.asarray(M_a, dtype=complex)
    R = np.zeros_like(M_a)
    for lo, hi in blocks:
        B = M_a[lo:hi, lo:hi]
        if hi > lo:
            lam = np.linalg.eigvalsh((B + B.conj().T) / 2)[0]
            if lam < -PSD_TOL:
                raise NicifyError(f"block [{lo}, {hi}) has eigenvalue {lam:.3e}; not PSD")
        R[lo:hi, lo:hi] = pivoted_cholesky(B)
    return R


def _factor_psd(A: np.ndarray) -> np.ndarray:
    A = (A + A.conj().T) / 2
    lam = np.linalg.eigvalsh(A)[0] if A.size else 0.0
    if lam < 0:
        # Schur complements of PSD matrices can come out slightly indefinite
        A = A + (-lam) * np.eye(len(A))
    return pivoted_cholesky(A)


def cholesky_complete(M: np.ndarray, R_a: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Extend a factor ``R_a`` of the leading corner of ``M`` to all of ``M``.

    Any block-triangular factor ``S = [[S_a, S_ab], [0, S_b]]`` of ``M`` is
    rotated onto ``R_a`` by the unitary ``V`` solving the Procrustes problem
    ``min ||V S_a - R_a||``; because ``S_a^* S_a = R_a^* R_a`` the minimum is
    zero.  The result is ``[[R_a, V S_ab], [0, S_b]]``.
    """
    M = np.asarray(M, dtype=complex)
    R_a = np.asarray(R_a, dtype=complex)
    k = R_a.shape[0]
    if R_a.shape != (k, k) or k > M.shape[0]:
        raise NicifyError(f"R_a has shape {R_a.shape}, incompatible with M of shape {M.shape}")
    M_a, M_ab, M_b = M[:k, :k], M[:k, k:], M[k:, k:]
    scale = max(1.0, float(np.abs(M).max(initial=0.0)))
    if np.abs(R_a.conj().T @ R_a - M_a).max(initial=0.0) > tol * scale:
        raise NicifyError("R_a^* R_a does not match the leading corner of M")
    S_a = pivoted_cholesky(M_a)
    S_ab = np.linalg.pinv(S_a.conj().T, rcond=1e-12) @ M_ab
    S_b = _factor_psd(M_b - S_ab.conj().T @ S_ab)
    U, sv, Wh = np.linalg.svd(R_a @ S_a.conj().T)
    V = U @ Wh
    mismatch = np.abs(V @ S_a - R_a).max(initial=0.0)
    if mismatch > np.sqrt(tol) * scale:
        raise NicifyError(f"no unitary maps the corner factors onto each other "
                          f"(mismatch {mismatch:.3e}, singular values {np.round(sv, 12)})")
    n = M.shape[0]
    R = np.zeros((n, n), dtype=complex)
    R[:k, :k] = R_a
    R[:k, k:] = V @ S_ab
    R[k:, k:] = S_b
    return R


def nicify_level1(cert: SosCertificate, gp: GamePolynomial, tol: float = 1e-5,
                  drop_tol: float = 1e-14) -> SosCertificate:
    """Nice degree-1 certificate with the same bound and Gram matrix as ``cert``."""
    if cert.degree() > 1:
        raise NicifyError(f"certificate has degree {cert.degree()}; only degree 1 is supported")
    check = verify(cert, gp, tol)
    if not check.ok:
        raise CertificateError(f"input certificate does not verify (residual {check.max_residual:.3e})")
    gram = gram_from_certificate(cert)
    k = gram.alice_size
    R_a = block_cholesky(gram.M[:k, :k], gram.alice_blocks)
    R = cholesky_complete(gram.M, R_a)
    sig = cert.signature
    terms = []
    for row in R:
        if np.abs(row).max(initial=0.0) <= drop_tol:
            continue
        r = Polynomial._wrap({w: complex(c) for w, c in zip(gram.labels, row) if c != 0}, sig)
        terms.append((1.0, r))
    provenance = (cert.provenance + "; " if cert.provenance else "") + "nicified (level 1)"
    return SosCertificate(cert.bound, terms, list(cert.constraint_part), sig, provenance)
