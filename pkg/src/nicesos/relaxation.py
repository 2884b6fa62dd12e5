"""Moment relaxations of game polynomials as standard-form SDPs.

Two hierarchies are built here:

* the NPA relaxation: one moment matrix indexed by all words of degree
  ``<= d`` in both parties' generators;
* the one-sided relaxation: one moment block per Alice (answer, question)
  pair, indexed by Bob words only, tied together by the requirement that
  the Alice-marginal ``sum_a Gamma[a, x]`` does not depend on ``x``.

Entry ``(s, t)`` of a block stands for the pseudo-expectation of
``s^* pi t`` where ``pi`` is the block's Alice projector (identity for NPA).
Every constraint is a list of ``(block, i, j, alpha)`` terms meaning
``Re(sum alpha * Gamma_block[i, j]) = rhs``; the same terms give back the
constraint's polynomial when a dual solution is turned into a certificate.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .algebra import (
    ALICE,
    BOB,
    IDENTITY,
    Kind,
    Polynomial,
    Signature,
    _adjoint_word,
    _canonical,
    eliminate_answer_zero,
    omega,
    projector,
)
from .games import GamePolynomial
from .sdp import SdpError, SdpProblem, SdpSolution

__all__ = [
    "DEFAULT_MAX_DEGREE",
    "DualData",
    "MonomialBasis",
    "RelaxationError",
    "build_npa",
    "build_onesided",
    "dual_data",
    "npa_basis",
]

DEFAULT_MAX_DEGREE = 3


class RelaxationError(ValueError):
    pass


@dataclass(frozen=True)
class MonomialBasis:
    entries: tuple
    degree: int
    side: str
    sig: Signature
    index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {w: i for i, w in enumerate(self.entries)})

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def npa_basis(sig: Signature, d: int, side: str = "both") -> MonomialBasis:
    """Canonical words of degree ``<= d`` over the non-eliminated generators.

    ``side="bob"`` restricts to Bob's generators.  Answer-0 projectors are
    left out so that the words are linearly independent in the algebra.
    """
    if d < 0:
        raise RelaxationError("degree must be >= 0")
    party = None if side == "both" else BOB
    letters = sig.letters(party, eliminate=True)
    entries = [IDENTITY]
    seen = {IDENTITY}
    frontier = [IDENTITY]
    for level in range(1, d + 1):
        nxt = []
        for w in frontier:
            for letter in letters:
                c = _canonical(w + (letter,), sig)
                if c is not None and len(c) == level and c not in seen:
                    seen.add(c)
                    nxt.append(c)
        entries.extend(nxt)
        frontier = nxt
    return MonomialBasis(tuple(entries), d, side, sig)


def _product_word(s: tuple, t: tuple, sig: Signature):
    return _canonical(_adjoint_word(s, sig) + t, sig)


def _entry_classes(basis: MonomialBasis):
    """Group the upper triangle of the moment matrix by canonical ``s^* t``.

    Returns ``(classes, zeros, locate)`` where ``classes`` maps a class key
    to its member list ``[(i, j, conj)]`` (``conj`` set when the entry holds
    the conjugate of the key's moment), ``zeros`` lists entries whose word
    vanishes and ``locate`` maps every canonical word to ``(i, j, conj)``.
    """
    sig = basis.sig
    classes: dict = {}
    zeros = []
    locate: dict = {}
    n = len(basis)
    for i in range(n):
        for j in range(i, n):
            w = _product_word(basis.entries[i], basis.entries[j], sig)
            if w is None:
                zeros.append((i, j))
                continue
            wa = _adjoint_word(w, sig)
            wa = _canonical(wa, sig)
            key = min(w, wa)
            classes.setdefault(key, []).append((i, j, w != key))
            locate.setdefault(w, (i, j, False))
            locate.setdefault(wa, (i, j, True))
    return classes, zeros, locate


def _self_adjoint(key: tuple, sig: Signature) -> bool:
    return _canonical(_adjoint_word(key, sig), sig) == key


class _Builder:
    """Accumulates constraints as ``Re(sum alpha Gamma[b][i, j]) = rhs`` rows."""

    def __init__(self, dims):
        self.dims = list(dims)
        self.rows: list[list] = []
        self.rhs: list[float] = []
        self.kinds: list[str] = []
        self.objective = [np.zeros((n, n), dtype=complex) for n in dims]
        self.objective_terms: list = []

    def add(self, terms, rhs=0.0, kind="moment"):
        terms = [t for t in terms if not (t[1] == t[2] and t[3].real == 0)]
        if not terms:
            return
        self.rows.append(terms)
        self.rhs.append(float(rhs))
        self.kinds.append(kind)

    def add_complex_equality(self, lhs, rhs_terms, blocks_self_adjoint=False):
        """``sum lhs == sum rhs`` for complex entry values; ``lhs``/``rhs`` are
        lists of ``(block, i, j, conj, weight)``."""
        for alpha in (1.0, -1j):
            if alpha == -1j and blocks_self_adjoint:
                continue
            terms = []
            for sign, side in ((1, lhs), (-1, rhs_terms)):
                for b, i, j, conj, weight in side:
                    a = sign * alpha * weight
                    terms.append((b, i, j, np.conj(a) if conj else a))
            self.add(terms)

    def add_objective(self, b, i, j, alpha):
        C = self.objective[b]
        if i == j:
            C[i, i] += alpha.real
        else:
            C[j, i] += alpha / 2
            C[i, j] += np.conj(alpha) / 2
        self.objective_terms.append((b, i, j, alpha))

    def matrices(self):
        m = len(self.rows)
        mats = []
        for b, n in enumerate(self.dims):
            r, c, v = [], [], []
            for k, terms in enumerate(self.rows):
                for bb, i, j, alpha in terms:
                    if bb != b:
                        continue
                    if i == j:
                        r.append(k); c.append(i * n + i); v.append(complex(alpha.real))
                    else:
                        r += [k, k]
                        c += [j * n + i, i * n + j]
                        v += [alpha / 2, np.conj(alpha) / 2]
            A = sp.csr_matrix((np.array(v, dtype=complex), (r, c)), shape=(m, n * n))
            A.sum_duplicates()
            A.eliminate_zeros()
            mats.append(A)
        return mats


def _moment_constraints(builder: _Builder, block: int, classes, zeros, sig):
    for key, members in classes.items():
        i0, j0, c0 = members[0]
        rep = [(block, i0, j0, c0, 1.0)]
        for i, j, c in members[1:]:
            both_diag = i == j and i0 == j0
            builder.add_complex_equality([(block, i, j, c, 1.0)], rep, blocks_self_adjoint=both_diag)
        if i0 != j0 and _self_adjoint(key, sig):
            builder.add([(block, i0, j0, -1j)])
    for i, j in zeros:
        builder.add([(block, i, j, 1.0 + 0j)])
        if i != j:
            builder.add([(block, i, j, -1j)])


def _check_degree(d: int, max_degree: int):
    if d < 0:
        raise RelaxationError("level must be >= 0")
    if d > max_degree:
        raise RelaxationError(f"level {d} exceeds the configured limit {max_degree}")


def build_npa(gp: GamePolynomial, d: int, max_degree: int = DEFAULT_MAX_DEGREE) -> SdpProblem:
    """Level-``d`` NPA moment relaxation of ``max <P>``."""
    _check_degree(d, max_degree)
    sig = gp.signature
    poly = eliminate_answer_zero(gp.poly)
    basis = npa_basis(sig, d)
    classes, zeros, locate = _entry_classes(basis)
    builder = _Builder([len(basis)])
    builder.add([(0, 0, 0, 1.0 + 0j)], rhs=1.0, kind="normalization")
    _moment_constraints(builder, 0, classes, zeros, sig)
    for w, c in poly.items():
        if w not in locate:
            raise RelaxationError(f"term {w} does not fit in a level-{d} moment matrix")
        i, j, conj = locate[w]
        builder.add_objective(0, i, j, np.conj(c) if conj else c)
    return SdpProblem(
        block_dims=[len(basis)],
        objective=builder.objective,
        constraints=builder.matrices(),
        rhs=np.array(builder.rhs),
        normalization=0,
        labels={
            "hierarchy": "npa",
            "level": d,
            "signature": sig,
            "basis": basis,
            "blocks": [None],
            "rows": builder.rows,
            "kinds": builder.kinds,
            "objective_terms": builder.objective_terms,
        },
    )


def _alice_weights(word: tuple, sig: Signature):
    """Split an Alice part into ``[((a, x), weight)]`` over one-sided blocks."""
    if not word:
        return [((a, 0), 1.0) for a in range(sig.alice_answers)]
    if len(word) != 1:
        raise RelaxationError(f"Alice part {word} has degree > 1; one-sided relaxation "
                              "needs polynomials linear in Alice's generators")
    letter = word[0]
    if sig.kind is Kind.PROJECTOR:
        return [((letter.payload, letter.question), 1.0)]
    d = sig.alice_answers
    return [((a, letter.question), omega(d, a * letter.payload)) for a in range(d)]


def build_onesided(gp: GamePolynomial, d: int, max_degree: int = DEFAULT_MAX_DEGREE) -> SdpProblem:
    """Level-``d`` one-sided relaxation with one Bob-indexed block per (a, x)."""
    _check_degree(d, max_degree)
    sig = gp.signature
    poly = eliminate_answer_zero(gp.poly, parties=(BOB,))
    basis = npa_basis(sig, d, side="bob")
    classes, zeros, locate = _entry_classes(basis)
    labels = [(a, x) for x in range(sig.alice_questions) for a in range(sig.alice_answers)]
    block_of = {lab: k for k, lab in enumerate(labels)}
    n = len(basis)
    builder = _Builder([n] * len(labels))

    norm = [(block_of[(a, 0)], 0, 0, 1.0 + 0j) for a in range(sig.alice_answers)]
    builder.add(norm, rhs=1.0, kind="normalization")
    for b in range(len(labels)):
        _moment_constraints(builder, b, classes, zeros, sig)
    for x in range(1, sig.alice_questions):
        for key, members in classes.items():
            i0, j0, c0 = members[0]
            lhs = [(block_of[(a, 0)], i0, j0, c0, 1.0) for a in range(sig.alice_answers)]
            rhs = [(block_of[(a, x)], i0, j0, c0, 1.0) for a in range(sig.alice_answers)]
            builder.add_complex_equality(lhs, rhs, blocks_self_adjoint=_self_adjoint(key, sig))

    for word, c in poly.items():
        alice = tuple(l for l in word if l.party == ALICE)
        bob = tuple(l for l in word if l.party == BOB)
        if bob not in locate:
            raise RelaxationError(f"Bob word {bob} does not fit in a level-{d} block")
        i, j, conj = locate[bob]
        for lab, weight in _alice_weights(alice, sig):
            alpha = c * weight
            builder.add_objective(block_of[lab], i, j, np.conj(alpha) if conj else alpha)

    block_polys = [projector(sig, ALICE, x, a) for a, x in labels]
    return SdpProblem(
        block_dims=[n] * len(labels),
        objective=builder.objective,
        constraints=builder.matrices(),
        rhs=np.array(builder.rhs),
        normalization=0,
        labels={
            "hierarchy": "onpa",
            "level": d,
            "signature": sig,
            "basis": basis,
            "blocks": labels,
            "block_polys": block_polys,
            "rows": builder.rows,
            "kinds": builder.kinds,
            "objective_terms": builder.objective_terms,
        },
    )


# ---------------------------------------------------------------------------
# polynomials attached to problem data

def block_prefix(problem: SdpProblem, b: int) -> Polynomial | None:
    """Alice projector sandwiched inside block ``b`` (None for NPA)."""
    polys = problem.labels.get("block_polys")
    return None if polys is None else polys[b]


def entry_polynomial(problem: SdpProblem, b: int, i: int, j: int, alpha: complex) -> dict:
    """Raw (uncanonicalized) words of the functional ``Re(alpha Gamma_b[i, j])``.

    ``Re(alpha Gamma[i, j])`` is the pseudo-expectation of
    ``(alpha s_i^* pi s_j + conj(alpha) s_j^* pi s_i) / 2``.
    """
    sig = problem.labels["signature"]
    basis = problem.labels["basis"]
    prefix = block_prefix(problem, b)
    mid = {IDENTITY: 1.0} if prefix is None else prefix.terms
    s, t = basis.entries[i], basis.entries[j]
    out: dict = {}

    def put(u, v, coeff):
        for mw, mc in mid.items():
            w = _adjoint_word(u, sig) + mw + v
            out[w] = out.get(w, 0) + coeff * mc

    if i == j:
        put(s, s, alpha.real)
    else:
        put(s, t, alpha / 2)
        put(t, s, np.conj(alpha) / 2)
    return out


def constraint_polynomial(problem: SdpProblem, k: int) -> Polynomial:
    """Polynomial ``s_k`` with ``<A_k, Gamma> = L(s_k)``, words left raw."""
    sig = problem.labels["signature"]
    acc: dict = {}
    for b, i, j, alpha in problem.labels["rows"][k]:
        for w, c in entry_polynomial(problem, b, i, j, alpha).items():
            acc[w] = acc.get(w, 0) + c
    return Polynomial._wrap(acc, sig)


def objective_polynomial(problem: SdpProblem) -> Polynomial:
    sig = problem.labels["signature"]
    acc: dict = {}
    for b, i, j, alpha in problem.labels["objective_terms"]:
        for w, c in entry_polynomial(problem, b, i, j, alpha).items():
            acc[w] = acc.get(w, 0) + c
    return Polynomial(acc, sig)


@dataclass(frozen=True)
class DualData:
    """How to read the dual of a relaxation.

    The bound is the multiplier of ``normalization``; the slack of the dual
    is ``nu * A_norm + sum_k y_k A_k - C`` blockwise.
    """

    problem: SdpProblem
    normalization: int

    def bound(self, y: np.ndarray) -> float:
        return float(y[self.normalization])

    def slack(self, y: np.ndarray) -> list[np.ndarray]:
        return self.problem.slack(y)

    def value(self, y: np.ndarray) -> float:
        return float(self.problem.rhs @ y)

    def from_solution(self, sol: SdpSolution) -> tuple[float, list[np.ndarray]]:
        return self.bound(sol.dual_y), self.slack(sol.dual_y)


def dual_data(problem: SdpProblem) -> DualData:
    k = problem.normalization
    if k is None or not 0 <= k < problem.num_constraints:
        raise SdpError("problem has no normalization constraint")
    others = np.delete(problem.rhs, k)
    if problem.rhs[k] != 1.0 or np.any(others != 0):
        raise SdpError("normalization must be the only constraint with nonzero right-hand side")
    return DualData(problem, k)


__all__ += ["block_prefix", "constraint_polynomial", "entry_polynomial", "objective_polynomial"]
