import json

import numpy as np
import pytest

from nicesos.algebra import ALICE, BOB, Kind, Polynomial, Signature
from nicesos.certificate import (
    CertificateError,
    SosCertificate,
    cert_to_dict,
    convert,
    extract,
    is_nice,
    load_cert,
    save_cert,
    verify,
)
from nicesos.corpus import MATCHING_SIGNATURE, b3_certificate, matching_certificate
from nicesos.games import GamePolynomial, builtin, target

from conftest import TSIRELSON



def _pm():
    from nicesos.corpus import matching_polynomial
    return matching_polynomial()


def test_b3_fixture_verifies():
    res = verify(b3_certificate(), builtin("b3"), tol=1e-9)
    assert res.ok, res.max_residual


def test_matching_fixture_verifies():
    res = verify(matching_certificate(), GamePolynomial(_pm()), tol=1e-12)
    assert res.ok and res.max_residual == 0


def test_matching_fixture_needs_all_four_terms():
    cert = matching_certificate()
    cert.terms = cert.terms[:3]
    assert not verify(cert, GamePolynomial(_pm()), tol=1e-6).ok


def test_perturbed_weight_fails():
    cert = b3_certificate()
    lam, r = cert.terms[4]
    cert.terms[4] = (lam + 1e-3, r)
    res = verify(cert, builtin("b3"), tol=1e-9)
    assert not res.ok
    # residual is linear in the weight: 1e-3 times the largest coefficient of r^* r
    scale = (r.H * r).max_abs() * 1e-3
    assert res.max_residual == pytest.approx(scale, rel=1e-6)


def test_fixtures_are_nice():
    assert is_nice(b3_certificate()).is_nice
    assert is_nice(matching_certificate()).is_nice


def test_is_nice_examples():
    sig = Signature(2, 3, 2, 2, Kind.OBSERVABLE)
    A = lambda x: Polynomial.letter(sig, ALICE, x, 1)
    B = lambda y: Polynomial.letter(sig, BOB, y, 1)
    bad = SosCertificate(0.0, [(1.0, A(0) + A(1))], [], sig)
    report = is_nice(bad)
    assert not report.is_nice
    assert report.offending_terms == [(0, frozenset({0, 1}))]
    assert is_nice(SosCertificate(0.0, [(1.0, B(0) + B(1) + B(2))], [], sig)).is_nice


def test_negative_weight_rejected():
    with pytest.raises(CertificateError):
        SosCertificate(1.0, [(-0.1, Polynomial.identity(MATCHING_SIGNATURE))], [], MATCHING_SIGNATURE)


def test_empty_certificate_for_zero_polynomial():
    sig = Signature(2, 2, 2, 2)
    gp = GamePolynomial(Polynomial.zero(sig))
    assert verify(SosCertificate(0.0, [], [], sig), gp).ok


def test_signature_mismatch():
    with pytest.raises(CertificateError):
        verify(b3_certificate(), GamePolynomial(_pm()))


def _recombine(cert, rng):
    """Mix all terms by a random unitary: sum (U s)_i^* (U s)_i is unchanged."""
    words = sorted({w for _, r in cert.terms for w in r})
    S = np.array([[np.sqrt(lam) * r.coeff(w) for w in words] for lam, r in cert.terms])
    G = rng.normal(size=(len(S), len(S))) + 1j * rng.normal(size=(len(S), len(S)))
    U, _ = np.linalg.qr(G)
    terms = [(1.0, Polynomial(dict(zip(words, row)), cert.signature)) for row in U @ S]
    return SosCertificate(cert.bound, terms, cert.constraint_part, cert.signature)


@pytest.mark.parametrize("seed", range(3))
def test_unitary_recombination_invariance(seed):
    rng = np.random.default_rng(seed)
    for cert, gp in ((b3_certificate(), builtin("b3")), (matching_certificate(), GamePolynomial(_pm()))):
        before = verify(cert, gp).max_residual
        after = verify(_recombine(cert, rng), gp).max_residual
        assert abs(after - before) <= 1e-10


@pytest.mark.parametrize("game, hierarchy, level", [
    ("chsh", "npa", 1), ("chsh", "onpa", 1), ("chsh", "npa", 2), ("chsh", "onpa", 2),
    ("matching", "npa", 1), ("matching", "onpa", 1), ("trivial", "onpa", 2), ("b3", "onpa", 2),
])
def test_extracted_certificates_verify(run, game, hierarchy, level):
    gp, problem, sol = run(game, hierarchy, level)
    cert = extract(sol, problem)
    assert cert.bound == pytest.approx(sol.dual_obj, abs=1e-12)
    assert verify(cert, gp, tol=1e-5).ok
    if hierarchy == "onpa":
        assert is_nice(cert).is_nice


def test_extracted_chsh_bound(run):
    gp, problem, sol = run("chsh", "npa", 1)
    cert = extract(sol, problem)
    assert cert.bound == pytest.approx(TSIRELSON, abs=1e-6)
    assert not is_nice(cert).is_nice


def test_extracted_matching_onesided(run):
    _, problem, sol = run("matching", "onpa", 1)
    cert = extract(sol, problem)
    assert cert.bound == pytest.approx(6, abs=1e-6)
    assert is_nice(cert).is_nice


def test_constraint_part_vanishes_in_algebra(run):
    from nicesos.algebra import eliminate_answer_zero
    _, problem, sol = run("chsh", "npa", 2)
    for _, s in extract(sol, problem).constraint_part:
        assert eliminate_answer_zero(s.reduced()).max_abs() <= 1e-12


def test_extract_rejects_indefinite_slack(run):
    import copy
    _, problem, sol = run("chsh", "npa", 1)
    broken = copy.copy(sol)
    broken.dual_y = sol.dual_y.copy()
    broken.dual_y[problem.normalization] -= 0.1
    with pytest.raises(CertificateError, match="not PSD"):
        extract(broken, problem)


@pytest.mark.parametrize("make", [b3_certificate, matching_certificate])
def test_file_round_trip(tmp_path, make):
    cert = make()
    save_cert(cert, tmp_path / "c.json")
    back = load_cert(tmp_path / "c.json")
    assert back.bound == cert.bound and back.signature == cert.signature
    assert [lam for lam, _ in back.terms] == [lam for lam, _ in cert.terms]
    assert all(a == b for (_, a), (_, b) in zip(back.terms, cert.terms))


def test_extracted_round_trip(tmp_path, run):
    _, problem, sol = run("chsh", "npa", 1)
    cert = extract(sol, problem)
    save_cert(cert, tmp_path / "c.json")
    back = load_cert(tmp_path / "c.json")
    assert cert_to_dict(back) == cert_to_dict(cert)


def test_load_rejects_negative_weight(tmp_path):
    doc = cert_to_dict(matching_certificate())
    doc["terms"][0]["lambda"] = -1.0
    (tmp_path / "c.json").write_text(json.dumps(doc))
    with pytest.raises(CertificateError, match=r"terms\[0\]"):
        load_cert(tmp_path / "c.json")


def test_load_rejects_unknown_version(tmp_path):
    doc = cert_to_dict(matching_certificate())
    doc["format_version"] = 7
    (tmp_path / "c.json").write_text(json.dumps(doc))
    with pytest.raises(CertificateError, match="format_version"):
        load_cert(tmp_path / "c.json")


def test_convert_to_projectors():
    cert = convert(matching_certificate(), Kind.PROJECTOR)
    gp = target(builtin("matching"))
    assert cert.kind is Kind.PROJECTOR
    assert verify(cert, gp, tol=1e-12).ok
