"""Command-line interface.

    nicesos solve --game chsh --hierarchy npa --level 1
    nicesos cert verify --cert fixtures/b3_nice --game b3 --tol 1e-9
    nicesos cert nicify --cert chsh.json --game chsh --out chsh_nice.json
    nicesos cert check-nice --cert fixtures/b3_nice
    nicesos games list
    nicesos games export --game matching --out matching.json

Reports go to stdout as a single JSON object; diagnostics go to stderr.
Exit codes: 0 success, 1 failed check, 2 solver failure, 3 bad input.
``NICESOS_TOL`` overrides the default solver tolerance.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path

from .algebra import AlgebraError
from .certificate import (
    CertificateError,
    convert,
    extract,
    is_nice,
    load_cert,
    save_cert,
    verify,
)
from .games import (
    BUILTINS,
    PARAMETRIC,
    GameError,
    GamePolynomial,
    NonlocalGame,
    builtin,
    load_game,
    save_game,
    target,
)
from .nicify import NicifyError, nicify_level1
from .relaxation import DEFAULT_MAX_DEGREE, RelaxationError, build_npa, build_onesided
from .sdp import SdpError, Status, solve

EXIT_OK, EXIT_FAILED, EXIT_SOLVER, EXIT_INPUT = 0, 1, 2, 3
DEFAULT_TOL = 1e-8
TOL_ENV = "NICESOS_TOL"

BAD_INPUT = (GameError, CertificateError, AlgebraError, RelaxationError, NicifyError, SdpError,
             OSError, ValueError)


class InputError(Exception):
    pass


@dataclass
class RunReport:
    game: str
    hierarchy: str
    level: int
    status: str
    value: float | None
    primal_value: float | None
    dual_value: float | None
    gap: float | None
    primal_residual: float | None
    dual_residual: float | None
    min_slack_eig: float | None
    win_probability: float | None
    iterations: int
    wall_time: float
    certificate: str | None = None


def fixtures_dir() -> Path:
    return Path(str(resources.files("nicesos") / "fixtures"))


def resolve_path(name: str) -> Path | None:
    """Find a file by path, with ``.json`` appended, or under the packaged fixtures."""
    p = Path(name)
    candidates = [p, p.with_name(p.name + ".json")]
    parts = p.parts
    if parts and parts[0] == "fixtures":
        rel = Path(*parts[1:]) if len(parts) > 1 else Path()
        candidates += [fixtures_dir() / rel, fixtures_dir() / rel.with_name(rel.name + ".json")]
    for c in candidates:
        if c.is_file():
            return c
    return None


def resolve_game(name: str) -> NonlocalGame | GamePolynomial:
    try:
        return builtin(name)
    except GameError:
        pass
    path = resolve_path(name)
    if path is None:
        raise InputError(f"unknown game {name!r} (not a built-in name or a file)")
    return load_game(path)


def default_tol() -> float:
    raw = os.environ.get(TOL_ENV)
    if not raw:
        return DEFAULT_TOL
    try:
        return float(raw)
    except ValueError:
        raise InputError(f"{TOL_ENV}={raw!r} is not a number") from None


def _emit(doc: dict, out: str | None = None) -> None:
    text = json.dumps(doc, indent=2)
    print(text)
    if out:
        Path(out).write_text(text + "\n")


def cmd_solve(args) -> int:
    game = resolve_game(args.game)
    gp = target(game)
    tol = args.tol if args.tol is not None else default_tol()
    build = build_npa if args.hierarchy == "npa" else build_onesided
    start = time.perf_counter()
    problem = build(gp, args.level, max_degree=args.max_level)
    sol = solve(problem, gap_tol=tol, feas_tol=tol, max_iter=args.max_iter)
    elapsed = time.perf_counter() - start
    ok = sol.status is Status.OPTIMAL
    win = None
    if ok and isinstance(game, NonlocalGame):
        factor, offset = game.polynomial_scale
        win = (sol.dual_obj - offset) / factor
    report = RunReport(
        game=gp.name or args.game,
        hierarchy=args.hierarchy,
        level=args.level,
        status=sol.status.value,
        value=sol.dual_obj if ok else None,
        primal_value=sol.primal_obj if ok else None,
        dual_value=sol.dual_obj if ok else None,
        gap=sol.gap if ok else None,
        primal_residual=sol.primal_residual if ok else None,
        dual_residual=sol.dual_residual if ok else None,
        min_slack_eig=sol.min_eig() if ok else None,
        win_probability=win,
        iterations=sol.iterations,
        wall_time=round(elapsed, 6),
    )
    if ok and args.cert:
        cert = extract(sol, problem, provenance=f"{gp.name or args.game} {args.hierarchy} "
                                                f"level {args.level} dual")
        save_cert(cert, args.cert)
        report.certificate = args.cert
    _emit(asdict(report), args.out)
    if not ok:
        print(f"solver finished with status {sol.status.value}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _load_cert(name: str):
    path = resolve_path(name)
    if path is None:
        raise InputError(f"certificate file {name!r} not found")
    return load_cert(path)


def _matched(cert, gp):
    if cert.kind is not gp.signature.kind:
        print(f"converting certificate from {cert.kind.value} to {gp.signature.kind.value} form",
              file=sys.stderr)
        cert = convert(cert, gp.signature.kind)
    return cert


def cmd_cert(args) -> int:
    if args.cert_cmd == "check-nice":
        cert = _load_cert(args.cert)
        report = is_nice(cert)
        _emit({
            "nice": report.is_nice,
            "terms": len(cert.terms),
            "offending_terms": [[n, sorted(qs)] for n, qs in report.offending_terms],
        })
        return EXIT_OK if report.is_nice else EXIT_FAILED

    cert = _load_cert(args.cert)
    gp = target(resolve_game(args.game))
    cert = _matched(cert, gp)
    if args.cert_cmd == "verify":
        res = verify(cert, gp, args.tol)
        _emit({"ok": res.ok, "max_residual": res.max_residual, "bound": cert.bound,
               "tol": args.tol})
        return EXIT_OK if res.ok else EXIT_FAILED
    # nicify
    nice = nicify_level1(cert, gp, tol=args.tol)
    save_cert(nice, args.out)
    res = verify(nice, gp, args.tol)
    _emit({"ok": res.ok and is_nice(nice).is_nice, "bound": nice.bound,
           "max_residual": res.max_residual, "terms": len(nice.terms), "out": args.out})
    return EXIT_OK if res.ok else EXIT_FAILED


def cmd_games(args) -> int:
    if args.games_cmd == "list":
        listing = []
        for name, make in BUILTINS.items():
            g = make()
            if isinstance(g, GamePolynomial):
                sig = g.signature
                listing.append({"name": name, "type": "polynomial", "generator_kind": sig.kind.value,
                                "questions": [sig.alice_questions, sig.bob_questions],
                                "answers": [sig.alice_answers, sig.bob_answers],
                                "scale_note": g.scale_note})
            else:
                listing.append({"name": name, "type": "game",
                                "questions": [g.alice_questions, g.bob_questions],
                                "answers": [g.alice_answers, g.bob_answers],
                                "polynomial_scale": list(g.polynomial_scale)})
        for name, what in PARAMETRIC.items():
            listing.append({"name": name, "type": "family", "description": what})
        _emit({"games": listing})
        return EXIT_OK
    g = resolve_game(args.game)
    save_game(g, args.out)
    _emit({"exported": args.game, "out": args.out})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nicesos", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an NPA or one-sided NPA relaxation")
    p.add_argument("--game", required=True, help="built-in name or game/polynomial file")
    p.add_argument("--hierarchy", choices=("npa", "onpa"), default="npa")
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--max-level", type=int, default=DEFAULT_MAX_DEGREE)
    p.add_argument("--out", help="also write the report here")
    p.add_argument("--cert", help="extract the dual certificate to this file")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("cert", help="verify, nicify or inspect certificates")
    csub = p.add_subparsers(dest="cert_cmd", required=True)
    v = csub.add_parser("verify")
    v.add_argument("--cert", required=True)
    v.add_argument("--game", required=True)
    v.add_argument("--tol", type=float, default=1e-9)
    n = csub.add_parser("nicify")
    n.add_argument("--cert", required=True)
    n.add_argument("--game", required=True)
    n.add_argument("--out", required=True)
    n.add_argument("--tol", type=float, default=1e-5)
    c = csub.add_parser("check-nice")
    c.add_argument("--cert", required=True)
    p.set_defaults(func=cmd_cert)

    p = sub.add_parser("games", help="list or export built-in games")
    gsub = p.add_subparsers(dest="games_cmd", required=True)
    gsub.add_parser("list")
    e = gsub.add_parser("export")
    e.add_argument("--game", required=True)
    e.add_argument("--out", required=True)
    p.set_defaults(func=cmd_games)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, *BAD_INPUT) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
