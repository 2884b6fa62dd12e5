"""Nonlocal games, their game polynomials, and the built-in corpus."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from . import corpus
from .algebra import (
    ALICE,
    BOB,
    AlgebraError,
    Kind,
    Letter,
    Polynomial,
    Signature,
    adjoint,
)

__all__ = [
    "BUILTINS",
    "GameError",
    "GamePolynomial",
    "NonlocalGame",
    "builtin",
    "classical_value",
    "game_polynomial",
    "load_game",
    "objective_polynomial",
    "save_game",
    "target",
]

NORMALIZATION_TOL = 1e-12


class GameError(ValueError):
    """Malformed game data or game file."""


@dataclass(frozen=True)
class NonlocalGame:
    """Two-player game with uniform answer alphabets per party.

    ``distribution`` maps ``(x, y)`` to a weight; missing pairs have weight 0.
    ``winning`` is the set of ``(a, b, x, y)`` tuples on which the predicate
    is 1.  ``polynomial_scale`` is an affine map ``(factor, offset)`` applied
    by :func:`objective_polynomial`, used when a game is conventionally
    reported on a rescaled polynomial (e.g. the matching game on the +-1
    correlator scale).
    """

    name: str
    alice_questions: int
    bob_questions: int
    alice_answers: int
    bob_answers: int
    distribution: dict = field(default_factory=dict)
    winning: frozenset = frozenset()
    polynomial_scale: tuple = (1.0, 0.0)

    def __post_init__(self):
        for attr in ("alice_questions", "bob_questions", "alice_answers", "bob_answers"):
            if int(getattr(self, attr)) < 1:
                raise GameError(f"{attr} must be a positive integer")
        if not self.distribution:
            w = 1.0 / (self.alice_questions * self.bob_questions)
            object.__setattr__(self, "distribution", {
                (x, y): w for x in range(self.alice_questions) for y in range(self.bob_questions)})
        dist = {}
        for (x, y), w in self.distribution.items():
            if not (0 <= x < self.alice_questions and 0 <= y < self.bob_questions):
                raise GameError(f"distribution entry ({x}, {y}) out of question range")
            if w < 0:
                raise GameError(f"negative weight {w} for questions ({x}, {y})")
            dist[(int(x), int(y))] = float(w)
        total = sum(dist.values())
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise GameError(f"distribution weights sum to {total!r}, not 1")
        object.__setattr__(self, "distribution", dist)
        win = set()
        for t in self.winning:
            a, b, x, y = (int(v) for v in t)
            if not (0 <= a < self.alice_answers and 0 <= b < self.bob_answers):
                raise GameError(f"winning entry {tuple(t)}: answer out of range")
            if not (0 <= x < self.alice_questions and 0 <= y < self.bob_questions):
                raise GameError(f"winning entry {tuple(t)}: question out of range")
            win.add((a, b, x, y))
        object.__setattr__(self, "winning", frozenset(win))
        object.__setattr__(self, "polynomial_scale", tuple(float(v) for v in self.polynomial_scale))

    @property
    def signature(self) -> Signature:
        return Signature(self.alice_questions, self.bob_questions,
                         self.alice_answers, self.bob_answers, Kind.PROJECTOR)

    def predicate(self, a: int, b: int, x: int, y: int) -> int:
        return int((a, b, x, y) in self.winning)


@dataclass(frozen=True)
class GamePolynomial:
    poly: Polynomial
    scale_note: str | None = None
    name: str = ""

    @property
    def signature(self) -> Signature:
        return self.poly.sig

    def __post_init__(self):
        if (adjoint(self.poly) - self.poly).max_abs() > 1e-12:
            raise GameError("game polynomial is not Hermitian")


def game_polynomial(g: NonlocalGame) -> GamePolynomial:
    """``sum pi(x, y) V(a, b, x, y) M[a, x] N[b, y]`` in projector form."""
    sig = g.signature
    terms = {}
    for (a, b, x, y) in sorted(g.winning):
        w = g.distribution.get((x, y), 0.0)
        if w:
            terms[(Letter(ALICE, x, a), Letter(BOB, y, b))] = w
    return GamePolynomial(Polynomial(terms, sig), name=g.name)


def objective_polynomial(g: NonlocalGame) -> GamePolynomial:
    """Game polynomial after the game's ``polynomial_scale`` is applied."""
    gp = game_polynomial(g)
    factor, offset = g.polynomial_scale
    if (factor, offset) == (1.0, 0.0):
        return gp
    note = f"{factor:g} * P_G {offset:+g}"
    return GamePolynomial(factor * gp.poly + offset, scale_note=note, name=g.name)


def classical_value(g: NonlocalGame, budget: int = 1 << 22) -> float:
    """Best winning probability over deterministic strategy pairs."""
    n_alice = g.alice_answers ** g.alice_questions
    n_bob = g.bob_answers ** g.bob_questions
    if n_alice * n_bob > budget:
        raise GameError(f"{n_alice * n_bob} deterministic strategy pairs exceed budget {budget}")
    best = 0.0
    for fa in itertools.product(range(g.alice_answers), repeat=g.alice_questions):
        for fb in itertools.product(range(g.bob_answers), repeat=g.bob_questions):
            v = sum(w for (x, y), w in g.distribution.items() if (fa[x], fb[y], x, y) in g.winning)
            best = max(best, v)
    return best


# ---------------------------------------------------------------------------
# built-in corpus

def chsh() -> NonlocalGame:
    win = [(a, b, x, y) for a, b, x, y in itertools.product(range(2), repeat=4)
           if a ^ b == x & y]
    return NonlocalGame("chsh", 2, 2, 2, 2, winning=frozenset(win))


def matching() -> NonlocalGame:
    """Bipartite matching game on three questions, reported on the P_M scale.

    With the uniform distribution the winning probability is
    ``1/2 + P_M / 18``; ``polynomial_scale`` undoes that.
    """
    win = [(a, b, x, y) for a, b in itertools.product(range(2), repeat=2)
           for x, y in itertools.product(range(3), repeat=2)
           if (a == b) == (x == y)]
    return NonlocalGame("matching", 3, 3, 2, 2, winning=frozenset(win),
                        polynomial_scale=(18.0, -9.0))


def chsh_n(n: int) -> NonlocalGame:
    """n-answer CHSH generalisation.

    Answers are exponents of ``omega_n``: products of answers become sums
    mod n, so ``ab = omega_n`` means ``a + b = 1 (mod n)``.
    """
    if n < 2:
        raise GameError("bn:<n> needs n >= 2")
    rules = {
        (0, 0): lambda a, b: a == b,
        (1, 0): lambda a, b: a == b,
        (0, 1): lambda a, b: (a + b) % n == 0,
        (1, 1): lambda a, b: (a + b) % n == 1 % n,
    }
    win = [(a, b, x, y) for (x, y), ok in rules.items()
           for a in range(n) for b in range(n) if ok(a, b)]
    return NonlocalGame(f"bn:{n}", 2, 2, n, n, winning=frozenset(win))


def xor_game(table: str) -> NonlocalGame:
    """XOR game from a sign table such as ``++/+-`` (rows are Alice questions).

    ``+`` at (x, y) means the players win when ``a == b``, ``-`` when ``a != b``.
    """
    rows = [r for r in table.split("/")]
    if not rows or any(len(r) != len(rows[0]) for r in rows) or not rows[0]:
        raise GameError(f"ragged or empty xor table {table!r}")
    win = []
    for x, row in enumerate(rows):
        for y, sign in enumerate(row):
            if sign not in "+-":
                raise GameError(f"xor table entry {sign!r} is not + or -")
            for a, b in itertools.product(range(2), repeat=2):
                if (a ^ b) == (sign == "-"):
                    win.append((a, b, x, y))
    return NonlocalGame(f"xor:{table}", len(rows), len(rows[0]), 2, 2, winning=frozenset(win))


def trivial() -> NonlocalGame:
    win = list(itertools.product(range(2), repeat=4))
    return NonlocalGame("trivial", 2, 2, 2, 2, winning=frozenset(win))


def b3() -> GamePolynomial:
    return GamePolynomial(
        corpus.b3_polynomial(),
        scale_note=("symmetrized observable-form B3 polynomial; a rescaling of the "
                    "probability-valued game polynomial, reported on its own scale "
                    "(quantum optimum 6)"),
        name="b3",
    )


BUILTINS: dict[str, Callable[[], NonlocalGame | GamePolynomial]] = {
    "chsh": chsh,
    "matching": matching,
    "trivial": trivial,
    "b3": b3,
}
PARAMETRIC = {"bn:<n>": "n-answer CHSH generalisation", "xor:<table>": "XOR game from sign rows"}


def builtin(name: str) -> NonlocalGame | GamePolynomial:
    if name in BUILTINS:
        return BUILTINS[name]()
    if name.startswith("bn:"):
        try:
            n = int(name[3:])
        except ValueError:
            raise GameError(f"bad bn parameter in {name!r}") from None
        return chsh_n(n)
    if name.startswith("xor:"):
        return xor_game(name[4:])
    raise GameError(f"unknown game {name!r}")


# ---------------------------------------------------------------------------
# file format

def game_to_dict(g: NonlocalGame) -> dict:
    doc = {
        "name": g.name,
        "alice_questions": g.alice_questions,
        "bob_questions": g.bob_questions,
        "alice_answers": g.alice_answers,
        "bob_answers": g.bob_answers,
        "distribution": [[x, y, w] for (x, y), w in sorted(g.distribution.items())],
        "winning": [list(t) for t in sorted(g.winning)],
    }
    if g.polynomial_scale != (1.0, 0.0):
        doc["polynomial_scale"] = list(g.polynomial_scale)
    return doc


def polynomial_to_dict(gp: GamePolynomial) -> dict:
    sig = gp.signature
    return {
        "name": gp.name,
        "alice_questions": sig.alice_questions,
        "bob_questions": sig.bob_questions,
        "alice_answers": sig.alice_answers,
        "bob_answers": sig.bob_answers,
        "generator_kind": sig.kind.value,
        "scale_note": gp.scale_note,
        "polynomial": gp.poly.to_lines(),
    }


def _field(doc: dict, key: str, where: str, kind=int):
    if key not in doc:
        raise GameError(f"{where}: missing field {key!r}")
    try:
        return kind(doc[key])
    except (TypeError, ValueError):
        raise GameError(f"{where}: field {key!r} has bad value {doc[key]!r}") from None


def game_from_dict(doc: dict, where: str = "<game>") -> NonlocalGame | GamePolynomial:
    if not isinstance(doc, dict):
        raise GameError(f"{where}: expected a JSON object")
    counts = {k: _field(doc, k, where) for k in
              ("alice_questions", "bob_questions", "alice_answers", "bob_answers")}
    name = str(doc.get("name", Path(where).stem))
    if "polynomial" in doc:
        kind = Kind(doc.get("generator_kind", "projector"))
        sig = Signature(**counts, kind=kind)
        try:
            poly = Polynomial.from_lines(doc["polynomial"], sig)
        except AlgebraError as exc:
            raise GameError(f"{where}: field 'polynomial': {exc}") from None
        return GamePolynomial(poly, scale_note=doc.get("scale_note"), name=name)
    dist = {}
    for i, entry in enumerate(doc.get("distribution") or []):
        try:
            x, y, w = entry
            dist[(int(x), int(y))] = dist.get((int(x), int(y)), 0.0) + float(w)
        except (TypeError, ValueError):
            raise GameError(f"{where}: distribution[{i}] is not [x, y, weight]: {entry!r}") from None
    winning = []
    for i, entry in enumerate(_field(doc, "winning", where, list)):
        try:
            a, b, x, y = (int(v) for v in entry)
        except (TypeError, ValueError):
            raise GameError(f"{where}: winning[{i}] is not [a, b, x, y]: {entry!r}") from None
        if not (0 <= a < counts["alice_answers"] and 0 <= b < counts["bob_answers"]
                and 0 <= x < counts["alice_questions"] and 0 <= y < counts["bob_questions"]):
            raise GameError(f"{where}: winning[{i}] = {entry!r} out of range")
        winning.append((a, b, x, y))
    scale = doc.get("polynomial_scale", (1.0, 0.0))
    try:
        return NonlocalGame(name, **counts, distribution=dist, winning=frozenset(winning),
                            polynomial_scale=tuple(scale))
    except GameError as exc:
        raise GameError(f"{where}: {exc}") from None


def load_game(path) -> NonlocalGame | GamePolynomial:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise GameError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return game_from_dict(doc, str(path))


def save_game(g: NonlocalGame | GamePolynomial, path) -> None:
    doc = polynomial_to_dict(g) if isinstance(g, GamePolynomial) else game_to_dict(g)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def target(g: NonlocalGame | GamePolynomial) -> GamePolynomial:
    """The polynomial a relaxation should bound for a game or fixture."""
    return g if isinstance(g, GamePolynomial) else objective_polynomial(g)

