"""Noncommutative polynomials over the two-party game algebra.

Generators come in two flavours.  In projector form every (question, answer)
pair of a party has an orthogonal projector ``M[a, x]``; in observable form
every question has a unitary ``A[x]`` of order ``d`` (the answer count) and
letters carry an exponent ``1 <= j < d``.

Words are kept in a canonical form: Alice letters first, Bob letters second,
each party's letters in their original order, with adjacent letters on the
same question merged.  The sum-to-identity relation ``sum_a M[a, x] = 1`` is
*not* a rewrite rule; see :func:`eliminate_answer_zero`.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Mapping, NamedTuple, Sequence

__all__ = [
    "ALICE",
    "BOB",
    "IDENTITY",
    "AlgebraError",
    "Kind",
    "Letter",
    "Polynomial",
    "Signature",
    "adjoint",
    "canonicalize",
    "eliminate_answer_zero",
    "equal_mod_relations",
    "format_word",
    "multiply",
    "omega",
    "parse_word",
    "projector",
    "to_observables",
    "to_projectors",
]

ALICE = 0
BOB = 1
_PARTY_NAMES = ("A", "B")


class AlgebraError(ValueError):
    """Raised for letters, words or polynomials that do not fit a signature."""


class Kind(str, enum.Enum):
    PROJECTOR = "projector"
    OBSERVABLE = "observable"


@dataclass(frozen=True)
class Signature:
    """Question and answer counts of both parties plus the generator kind.

    Answer counts are uniform across a party's questions.  For the
    observable kind the answer count is the order of every observable.
    """

    alice_questions: int
    bob_questions: int
    alice_answers: int
    bob_answers: int
    kind: Kind = Kind.PROJECTOR

    def __post_init__(self):
        for field in ("alice_questions", "bob_questions", "alice_answers", "bob_answers"):
            if int(getattr(self, field)) < 1:
                raise AlgebraError(f"{field} must be >= 1")
        object.__setattr__(self, "kind", Kind(self.kind))

    def questions(self, party: int) -> int:
        return self.alice_questions if party == ALICE else self.bob_questions

    def answers(self, party: int) -> int:
        return self.alice_answers if party == ALICE else self.bob_answers

    def with_kind(self, kind: Kind) -> "Signature":
        return Signature(self.alice_questions, self.bob_questions,
                         self.alice_answers, self.bob_answers, Kind(kind))

    def letters(self, party: int | None = None, eliminate: bool = False) -> list["Letter"]:
        """All generator letters, optionally restricted to one party.

        With ``eliminate`` the answer-0 projectors are skipped (they are
        expressible through the others).  Observable letters never include
        exponent 0.
        """
        parties = (ALICE, BOB) if party is None else (party,)
        out = []
        for p in parties:
            d = self.answers(p)
            for q in range(self.questions(p)):
                if self.kind is Kind.OBSERVABLE:
                    payloads = range(1, d)
                else:
                    payloads = range(1 if eliminate else 0, d)
                out.extend(Letter(p, q, j) for j in payloads)
        return out


class Letter(NamedTuple):
    party: int
    question: int
    payload: int

    def __str__(self):
        return f"{_PARTY_NAMES[self.party]}.{self.question}.{self.payload}"


IDENTITY: tuple = ()


def _check_letter(letter: Letter, sig: Signature) -> None:
    party, q, j = letter
    if party not in (ALICE, BOB):
        raise AlgebraError(f"unknown party {party!r}")
    if not 0 <= q < sig.questions(party):
        raise AlgebraError(f"question {q} out of range in letter {letter}")
    d = sig.answers(party)
    lo = 1 if sig.kind is Kind.OBSERVABLE else 0
    if not lo <= j < d:
        raise AlgebraError(f"payload {j} out of range [{lo}, {d}) in letter {letter}")


@lru_cache(maxsize=1 << 18)
def _canonical(word: tuple, sig: Signature):
    out = []
    for party in (ALICE, BOB):
        stack: list[Letter] = []
        d = sig.answers(party)
        for letter in word:
            if letter[0] != party:
                continue
            if stack and stack[-1][1] == letter[1]:
                top = stack.pop()
                if sig.kind is Kind.PROJECTOR:
                    if top[2] != letter[2]:
                        return None
                    stack.append(top)
                else:
                    j = (top[2] + letter[2]) % d
                    if j:
                        stack.append(Letter(party, letter[1], j))
            else:
                stack.append(Letter(*letter))
        out.extend(stack)
    return tuple(out)


def canonicalize(word: Iterable, sig: Signature):
    """Canonical form of a word, or ``None`` if the word is annihilated.

    ``None`` only occurs in projector form, when two different answers of the
    same question meet.
    """
    word = tuple(Letter(*w) for w in word)
    for letter in word:
        _check_letter(letter, sig)
    return _canonical(word, sig)


def omega(d: int, k: int = 1) -> complex:
    """``exp(2 pi i k / d)``, with exact values for the common orders."""
    k %= d
    if k == 0:
        return 1 + 0j
    if d == 2:
        return -1 + 0j
    if d == 4:
        return (1j, -1 + 0j, -1j)[k - 1]
    if d == 3:
        return complex(-0.5, math.sqrt(3) / 2 * (1 if k == 1 else -1))
    return cmath.exp(2j * math.pi * k / d)


def format_word(word: Sequence[Letter]) -> str:
    return " ".join(str(letter) for letter in word) if word else "1"


def parse_word(text: str) -> tuple:
    text = text.strip()
    if text in ("", "1"):
        return IDENTITY
    letters = []
    for token in text.split():
        try:
            party, q, j = token.split(".")
            letters.append(Letter(_PARTY_NAMES.index(party), int(q), int(j)))
        except ValueError:
            raise AlgebraError(f"bad letter {token!r}") from None
    return tuple(letters)


class Polynomial:
    """Finite complex combination of canonical words.

    Instances are treated as immutable.  Arithmetic canonicalizes and drops
    coefficients that are exactly zero; use :meth:`chop` to drop small ones.
    """

    __slots__ = ("_terms", "sig")

    def __init__(self, terms: Mapping | Iterable = (), sig: Signature | None = None,
                 *, reduce: bool = True):
        if sig is None:
            raise AlgebraError("a Polynomial needs a Signature")
        self.sig = sig
        acc: dict = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for word, coeff in items:
            word = tuple(Letter(*w) for w in word)
            if reduce:
                word = canonicalize(word, sig)
                if word is None:
                    continue
            else:
                for letter in word:
                    _check_letter(letter, sig)
            coeff = complex(coeff)
            acc[word] = acc[word] + coeff if word in acc else coeff
        self._terms = {w: c for w, c in acc.items() if c != 0}

    @classmethod
    def _wrap(cls, terms: dict, sig: Signature) -> "Polynomial":
        # terms already canonical (or deliberately raw) and validated
        self = cls.__new__(cls)
        self.sig = sig
        self._terms = {w: c for w, c in terms.items() if c != 0}
        return self

    # constructors -------------------------------------------------------
    @classmethod
    def identity(cls, sig: Signature, coeff: complex = 1.0) -> "Polynomial":
        return cls({IDENTITY: coeff}, sig)

    @classmethod
    def zero(cls, sig: Signature) -> "Polynomial":
        return cls({}, sig)

    @classmethod
    def letter(cls, sig: Signature, party: int, question: int, payload: int = 1,
               coeff: complex = 1.0) -> "Polynomial":
        return cls({(Letter(party, question, payload),): coeff}, sig)

    @classmethod
    def word(cls, sig: Signature, word: Sequence, coeff: complex = 1.0) -> "Polynomial":
        return cls({tuple(word): coeff}, sig)

    # container protocol -------------------------------------------------
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __iter__(self) -> Iterator:
        return iter(self._terms)

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def coeff(self, word: Sequence) -> complex:
        return self._terms.get(tuple(word), 0j)

    def degree(self) -> int:
        return max((len(w) for w in self._terms), default=0)

    def questions(self, party: int) -> set[int]:
        return {l.question for w in self._terms for l in w if l.party == party}

    def max_abs(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def chop(self, tol: float) -> "Polynomial":
        return Polynomial({w: c for w, c in self._terms.items() if abs(c) > tol}, self.sig)

    def reduced(self) -> "Polynomial":
        return Polynomial(self._terms, self.sig)

    def __eq__(self, other):
        # exact comparison; use equal_mod_relations for tolerances
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.sig == other.sig and self._terms == other._terms

    __hash__ = None

    # arithmetic ---------------------------------------------------------
    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.sig != self.sig:
                raise AlgebraError(f"signature mismatch: {self.sig} vs {other.sig}")
            return other
        if isinstance(other, (int, float, complex)):
            return Polynomial.identity(self.sig, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        acc = dict(self._terms)
        for w, c in other._terms.items():
            acc[w] = acc.get(w, 0) + c
        return Polynomial._wrap(acc, self.sig)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._wrap({w: -c for w, c in self._terms.items()}, self.sig)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            return Polynomial._wrap({w: c * other for w, c in self._terms.items()}, self.sig)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return multiply(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex)):
            return self * other
        return NotImplemented

    def __truediv__(self, scalar):
        return self * (1 / scalar)

    def __pow__(self, n: int):
        out = Polynomial.identity(self.sig)
        for _ in range(n):
            out = out * self
        return out

    @property
    def H(self) -> "Polynomial":
        return adjoint(self)

    def __repr__(self):
        if not self._terms:
            return "Polynomial(0)"
        parts = [f"({c.real:+.6g}{c.imag:+.6g}j)*{format_word(w)}" for w, c in self._terms.items()]
        return "Polynomial(" + " ".join(parts) + ")"

    # text form ----------------------------------------------------------
    def to_lines(self) -> list[str]:
        """One ``re im : word`` line per term, floats at full precision."""
        return [f"{float(c.real)!r} {float(c.imag)!r} : {format_word(w)}"
                for w, c in self._terms.items()]

    @classmethod
    def from_lines(cls, lines: Iterable[str], sig: Signature, *, reduce: bool = True):
        terms = []
        for n, line in enumerate(lines):
            try:
                head, word = line.split(":", 1)
                re_, im_ = head.split()
                terms.append((parse_word(word), complex(float(re_), float(im_))))
            except (ValueError, AlgebraError) as exc:
                raise AlgebraError(f"term {n}: cannot parse {line!r} ({exc})") from None
        return cls(terms, sig, reduce=reduce)


def multiply(p: Polynomial, q: Polynomial) -> Polynomial:
    if p.sig != q.sig:
        raise AlgebraError(f"signature mismatch: {p.sig} vs {q.sig}")
    sig = p.sig
    acc: dict = {}
    for w1, c1 in p._terms.items():
        for w2, c2 in q._terms.items():
            w = _canonical(w1 + w2, sig)
            if w is not None:
                acc[w] = acc.get(w, 0) + c1 * c2
    return Polynomial._wrap(acc, sig)


def _adjoint_word(word: tuple, sig: Signature) -> tuple:
    if sig.kind is Kind.OBSERVABLE:
        return tuple(Letter(l.party, l.question, sig.answers(l.party) - l.payload)
                     for l in reversed(word))
    return tuple(reversed(word))


def adjoint(p: Polynomial) -> Polynomial:
    sig = p.sig
    return Polynomial({_adjoint_word(w, sig): c.conjugate() for w, c in p._terms.items()}, sig)


def substitute(p: Polynomial, image: Callable[[Letter], Polynomial], sig: Signature) -> Polynomial:
    """Replace every letter by a polynomial over ``sig`` and expand."""
    out: dict = {}
    one = Polynomial.identity(sig)
    cache: dict = {}
    for word, c in p._terms.items():
        term = one
        for letter in word:
            if letter not in cache:
                cache[letter] = image(letter)
            term = multiply(term, cache[letter])
        for w, tc in term._terms.items():
            out[w] = out.get(w, 0) + c * tc
    return Polynomial._wrap(out, sig)


def projector(sig: Signature, party: int, question: int, answer: int,
              eliminate: bool = False) -> Polynomial:
    """The projector onto ``answer`` of ``question`` written over ``sig``.

    In observable form this is the inverse Fourier sum
    ``(1/d) sum_j omega^(-a j) A^j``.  With ``eliminate`` the answer-0
    projector is written as ``1 - sum_{a>=1} M[a]``.
    """
    d = sig.answers(party)
    if sig.kind is Kind.OBSERVABLE:
        terms = {IDENTITY: 1 / d}
        for j in range(1, d):
            terms[(Letter(party, question, j),)] = omega(d, -answer * j) / d
        return Polynomial._wrap(terms, sig)
    if eliminate and answer == 0:
        terms = {IDENTITY: 1.0}
        for a in range(1, d):
            terms[(Letter(party, question, a),)] = -1.0
        return Polynomial._wrap(terms, sig)
    return Polynomial.letter(sig, party, question, answer)


def to_observables(p: Polynomial) -> Polynomial:
    if p.sig.kind is not Kind.PROJECTOR:
        raise AlgebraError("to_observables expects a projector-form polynomial")
    target = p.sig.with_kind(Kind.OBSERVABLE)
    return substitute(p, lambda l: projector(target, l.party, l.question, l.payload), target)


def to_projectors(p: Polynomial) -> Polynomial:
    if p.sig.kind is not Kind.OBSERVABLE:
        raise AlgebraError("to_projectors expects an observable-form polynomial")
    target = p.sig.with_kind(Kind.PROJECTOR)

    def image(l: Letter) -> Polynomial:
        d = target.answers(l.party)
        return Polynomial._wrap({(Letter(l.party, l.question, a),): omega(d, a * l.payload)
                                 for a in range(d)}, target)

    return substitute(p, image, target)


def eliminate_answer_zero(p: Polynomial, parties: Sequence[int] = (ALICE, BOB)) -> Polynomial:
    """Rewrite answer-0 projectors of the given parties as ``1 - sum_{a>=1} M[a]``.

    This is how the sum-to-identity relation is applied: afterwards the
    remaining words are linearly independent in the game algebra.  No-op
    for observable-form polynomials.
    """
    if p.sig.kind is Kind.OBSERVABLE:
        return p
    sig = p.sig

    def image(l: Letter) -> Polynomial:
        if l.payload == 0 and l.party in parties:
            return projector(sig, l.party, l.question, 0, eliminate=True)
        return Polynomial._wrap({(l,): 1.0}, sig)

    return substitute(p, image, sig)


def equal_mod_relations(p: Polynomial, q: Polynomial, tol: float = 0.0) -> bool:
    """Coefficientwise comparison of canonical forms.

    Sum-to-identity is not applied; call :func:`eliminate_answer_zero` on
    both sides first if that is wanted.
    """
    if p.sig != q.sig:
        raise AlgebraError(f"signature mismatch: {p.sig} vs {q.sig}")
    return (p.reduced() - q.reduced()).max_abs() <= tol
