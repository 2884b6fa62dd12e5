"""Sum-of-squares certificates: extraction, verification, niceness, files.

A certificate claims

    bound * 1 - P = sum_i lambda_i r_i^* r_i + sum_j mu_j s_j

modulo the relations of the game algebra, where every ``s_j`` vanishes in
the algebra (it is a difference of words that the moment relaxation
identified).  ``s_j`` are stored as raw, uncanonicalized words so that a
certificate file shows which relation each multiplier pays for.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .algebra import (
    ALICE,
    IDENTITY,
    AlgebraError,
    Kind,
    Polynomial,
    Signature,
    adjoint,
    eliminate_answer_zero,
    multiply,
    to_observables,
    to_projectors,
)
from .games import GamePolynomial
from .relaxation import block_prefix, constraint_polynomial, dual_data
from .sdp import SdpProblem, SdpSolution, Status

__all__ = [
    "CLAMP_TOL",
    "FORMAT_VERSION",
    "CertificateError",
    "NicenessReport",
    "SosCertificate",
    "VerifyResult",
    "convert",
    "extract",
    "is_nice",
    "load_cert",
    "save_cert",
    "verify",
]

CLAMP_TOL = 1e-7
FORMAT_VERSION = 1


class CertificateError(ValueError):
    pass


@dataclass
class SosCertificate:
    bound: float
    terms: list[tuple[float, Polynomial]]
    constraint_part: list[tuple[float, Polynomial]]
    signature: Signature
    provenance: str = ""

    def __post_init__(self):
        for n, (lam, r) in enumerate(self.terms):
            if lam < 0:
                raise CertificateError(f"term {n} has negative weight {lam}")
            if r.sig != self.signature:
                raise CertificateError(f"term {n} has signature {r.sig}, expected {self.signature}")
        for n, (_, s) in enumerate(self.constraint_part):
            if s.sig != self.signature:
                raise CertificateError(f"constraint {n} has signature {s.sig}")

    @property
    def kind(self) -> Kind:
        return self.signature.kind

    def sum_of_squares(self) -> Polynomial:
        acc: dict = {}
        for lam, r in self.terms:
            for w, c in multiply(adjoint(r), r).items():
                acc[w] = acc.get(w, 0) + lam * c
        return Polynomial._wrap(acc, self.signature)

    def constraint_sum(self) -> Polynomial:
        acc: dict = {}
        for mu, s in self.constraint_part:
            for w, c in s.reduced().items():
                acc[w] = acc.get(w, 0) + mu * c
        return Polynomial._wrap(acc, self.signature)

    def degree(self) -> int:
        return max((r.degree() for _, r in self.terms), default=0)


@dataclass
class VerifyResult:
    ok: bool
    max_residual: float
    residual: Polynomial = field(repr=False)

    def per_monomial(self) -> dict:
        return dict(self.residual.items())

    def __bool__(self):
        return self.ok


@dataclass
class NicenessReport:
    is_nice: bool
    offending_terms: list[tuple[int, frozenset]]

    def __bool__(self):
        return self.is_nice


def extract(sol: SdpSolution, problem: SdpProblem, clamp_tol: float = CLAMP_TOL,
            provenance: str | None = None) -> SosCertificate:
    """Read a certificate off the dual slack of a relaxation.

    Each block of the slack is eigendecomposed; an eigenpair ``(lam, u)``
    gives the term ``lam * r^* r`` with ``r = pi * sum_t u_t t`` where ``pi``
    is the block's Alice projector.  For one-sided problems every term thus
    mentions a single Alice question.
    """
    if sol.status is not Status.OPTIMAL:
        raise CertificateError(f"solution status is {sol.status.value}, not Optimal")
    dual = dual_data(problem)
    sig = problem.labels["signature"]
    basis = problem.labels["basis"]
    bound, slack = dual.from_solution(sol)
    terms = []
    for b, Z in enumerate(slack):
        lam, U = np.linalg.eigh((Z + Z.conj().T) / 2)
        if lam.size and lam[0] < -clamp_tol:
            raise CertificateError(
                f"block {b}: slack eigenvalue {lam[0]:.3e} below -{clamp_tol:g}; not PSD")
        prefix = block_prefix(problem, b)
        for k in range(len(lam)):
            if lam[k] <= 0:
                continue
            r = Polynomial._wrap({w: complex(U[t, k]) for t, w in enumerate(basis.entries)}, sig)
            if prefix is not None:
                r = multiply(prefix, r)
            terms.append((float(lam[k]), r))
    constraint_part = []
    y = sol.dual_y
    for k in range(problem.num_constraints):
        if k == dual.normalization:
            s = constraint_polynomial(problem, k) - Polynomial._wrap({IDENTITY: 1.0}, sig)
            if s:
                constraint_part.append((-float(y[k]), s))
        elif y[k] != 0:
            constraint_part.append((-float(y[k]), constraint_polynomial(problem, k)))
    if provenance is None:
        provenance = f"{problem.labels['hierarchy']} level {problem.labels['level']} dual"
    return SosCertificate(bound, terms, constraint_part, sig, provenance)


def _normal_form(p: Polynomial) -> Polynomial:
    return eliminate_answer_zero(p.reduced())


def verify(cert: SosCertificate, gp: GamePolynomial, tol: float = 1e-9) -> VerifyResult:
    """Expand ``bound - P - sum lambda r^* r - sum mu s`` and report its size.

    In projector form answer-0 projectors are substituted before comparing,
    which is where the sum-to-identity relation enters.
    """
    if cert.signature != gp.signature:
        raise CertificateError(f"certificate signature {cert.signature} does not match "
                               f"game polynomial signature {gp.signature}")
    sig = cert.signature
    residual = (Polynomial.identity(sig, cert.bound) - gp.poly
                - cert.sum_of_squares() - cert.constraint_sum())
    residual = _normal_form(residual)
    err = residual.max_abs()
    return VerifyResult(err <= tol, err, residual)


def is_nice(cert: SosCertificate) -> NicenessReport:
    """A certificate is nice when every square mentions at most one Alice question."""
    bad = []
    for n, (_, r) in enumerate(cert.terms):
        qs = r.questions(ALICE)
        if len(qs) > 1:
            bad.append((n, frozenset(qs)))
    return NicenessReport(not bad, bad)


def convert(cert: SosCertificate, kind: Kind) -> SosCertificate:
    """Rewrite every polynomial of ``cert`` in the other generator kind."""
    kind = Kind(kind)
    if kind is cert.kind:
        return cert
    fn = to_observables if kind is Kind.OBSERVABLE else to_projectors
    return SosCertificate(
        cert.bound,
        [(lam, fn(r)) for lam, r in cert.terms],
        [(mu, fn(s.reduced())) for mu, s in cert.constraint_part],
        cert.signature.with_kind(kind),
        cert.provenance,
    )


# ---------------------------------------------------------------------------
# files

def _sig_to_dict(sig: Signature) -> dict:
    return {
        "alice_questions": sig.alice_questions,
        "bob_questions": sig.bob_questions,
        "alice_answers": sig.alice_answers,
        "bob_answers": sig.bob_answers,
    }


def cert_to_dict(cert: SosCertificate) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "bound": cert.bound,
        "generator_kind": cert.kind.value,
        "signature": _sig_to_dict(cert.signature),
        "provenance": cert.provenance,
        "terms": [{"lambda": lam, "poly": r.to_lines()} for lam, r in cert.terms],
        "constraint_part": [{"mu": mu, "poly": s.to_lines()} for mu, s in cert.constraint_part],
    }


def cert_from_dict(doc: dict, where: str = "<certificate>") -> SosCertificate:
    def fail(msg):
        raise CertificateError(f"{where}: {msg}")

    if not isinstance(doc, dict):
        fail("expected a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        fail(f"unsupported format_version {version!r}")
    for key in ("bound", "generator_kind", "signature", "terms"):
        if key not in doc:
            fail(f"missing field {key!r}")
    try:
        sig = Signature(**{k: int(v) for k, v in doc["signature"].items()},
                        kind=Kind(doc["generator_kind"]))
    except (TypeError, ValueError) as exc:
        fail(f"bad signature: {exc}")
    terms = []
    for n, t in enumerate(doc["terms"]):
        try:
            lam = float(t["lambda"])
            poly = Polynomial.from_lines(t["poly"], sig)
        except (KeyError, TypeError, ValueError, AlgebraError) as exc:
            fail(f"terms[{n}]: {exc}")
        if not lam >= 0:
            fail(f"terms[{n}]: negative weight {lam}")
        terms.append((lam, poly))
    constraints = []
    for n, t in enumerate(doc.get("constraint_part", [])):
        try:
            constraints.append((float(t["mu"]), Polynomial.from_lines(t["poly"], sig, reduce=False)))
        except (KeyError, TypeError, ValueError, AlgebraError) as exc:
            fail(f"constraint_part[{n}]: {exc}")
    return SosCertificate(float(doc["bound"]), terms, constraints, sig, str(doc.get("provenance", "")))


def save_cert(cert: SosCertificate, path) -> None:
    Path(path).write_text(json.dumps(cert_to_dict(cert), indent=1) + "\n")


def load_cert(path) -> SosCertificate:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CertificateError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return cert_from_dict(doc, str(path))
