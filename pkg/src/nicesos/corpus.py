"""Hand-written polynomials and certificates shipped with the package.

Both are nice sum-of-squares decompositions in observable form:

* ``b3``: ``6 - P_B3`` as seven weighted squares of degree-2 terms, for the
  three-answer CHSH generalisation (order-3 unitaries, ``omega = e^{2 pi i/3}``).
* ``matching``: ``6 - P_M`` for the bipartite matching game as four
  unit-weight squares of degree-1 terms.  All four terms are required.
"""
from __future__ import annotations

from fractions import Fraction

from .algebra import ALICE, BOB, Kind, Polynomial, Signature, omega

B3_SIGNATURE = Signature(2, 2, 3, 3, Kind.OBSERVABLE)
MATCHING_SIGNATURE = Signature(3, 3, 2, 2, Kind.OBSERVABLE)

B3_WEIGHTS = (
    Fraction(5, 1872),
    Fraction(5, 1872),
    Fraction(5, 4992),
    Fraction(1, 11856),
    Fraction(259, 1976),
    Fraction(1, 11856),
    Fraction(259, 1976),
)


def _observables(sig: Signature):
    def A(x, j=1):
        return Polynomial.letter(sig, ALICE, x, j % sig.alice_answers) if j % sig.alice_answers \
            else Polynomial.identity(sig)

    def B(y, j=1):
        return Polynomial.letter(sig, BOB, y, j % sig.bob_answers) if j % sig.bob_answers \
            else Polynomial.identity(sig)

    return A, B


def b3_polynomial() -> Polynomial:
    """Symmetrized B3 game polynomial; its optimal quantum value is 6."""
    A, B = _observables(B3_SIGNATURE)
    w = omega(3)
    w2 = omega(3, 2)
    return (A(0) * B(0) + A(0, 2) * B(0, 2) + A(0) * B(1) + A(0, 2) * B(1, 2)
            + A(1) * B(0) + A(1, 2) * B(0, 2) + w * A(1) * B(1) + w2 * A(1, 2) * B(1, 2))


def b3_terms() -> list[Polynomial]:
    A, B = _observables(B3_SIGNATURE)
    sig = B3_SIGNATURE
    one = Polynomial.identity(sig)
    w = omega(3)
    w2 = omega(3, 2)
    s1 = (12 * A(0) + (0.25 - w) * B(1) * B(0) + (0.25 - w2) * B(0) * B(1)
          + (13 * w / 4 - 7) * B(0, 2) + (13 * w2 / 4 - 7) * B(1, 2))
    s2 = (12 * w2 * A(1) + (0.25 - w2) * B(1) * B(0) + (0.25 - w) * B(0) * B(1)
          + (13 * w / 4 - 7 * w2) * B(0, 2) + (13 * w2 / 4 - 7 * w) * B(1, 2))
    s3 = B(0, 2) + w * B(1, 2) + w2 * B(0) * B(1) + w2 * B(1) * B(0)
    s4 = (114 * one + (5 * w2 - 48) * A(0) * B(0) + (5 * w2 - 23) * A(0, 2) * B(0, 2)
          + (5 * w - 48) * A(0) * B(1) + (5 * w - 23) * A(0, 2) * B(1, 2))
    s5 = (A(0) * B(0) - A(0, 2) * B(1, 2)
          + ((5 * w - 3) / 7) * (A(0, 2) * B(0, 2) - A(0) * B(1)))
    s6 = (114 * one + (5 * w - 48) * A(1) * B(0) + (5 * w - 23) * A(1, 2) * B(0, 2)
          + (5 * w2 - 48) * (w * A(1) * B(1)) + (5 * w2 - 23) * (w2 * A(1, 2) * B(1, 2)))
    s7 = (A(1) * B(0) - w2 * A(1, 2) * B(1, 2)
          + ((5 * w2 - 3) / 7) * (A(1, 2) * B(0, 2) - w * A(1) * B(1)))
    return [s1, s2, s3, s4, s5, s6, s7]


def matching_polynomial() -> Polynomial:
    """``P_M = sum_x A_x (B_x - sum_{y != x} B_y)`` with +-1 observables."""
    A, B = _observables(MATCHING_SIGNATURE)
    out = Polynomial.zero(MATCHING_SIGNATURE)
    for x in range(3):
        out = out + A(x) * (2 * B(x) - B(0) - B(1) - B(2))
    return out


def matching_terms() -> list[Polynomial]:
    A, B = _observables(MATCHING_SIGNATURE)
    terms = []
    for x in range(3):
        terms.append(A(x) - (2 * B(x) - B(0) - B(1) - B(2)) / 2)
    terms.append((B(0) + B(1) + B(2)) / 2)
    return terms


def b3_certificate():
    """The seven-term nice certificate for ``6 - P_B3``."""
    from .certificate import SosCertificate

    return SosCertificate(
        6.0,
        [(float(w), s) for w, s in zip(B3_WEIGHTS, b3_terms())],
        [],
        B3_SIGNATURE,
        "hand-written nice degree-2 certificate for the symmetrized B3 polynomial",
    )


def matching_certificate():
    """Four unit-weight squares certifying ``6 - P_M``."""
    from .certificate import SosCertificate

    return SosCertificate(
        6.0,
        [(1.0, t) for t in matching_terms()],
        [],
        MATCHING_SIGNATURE,
        "hand-written nice degree-1 certificate for the matching game polynomial",
    )
