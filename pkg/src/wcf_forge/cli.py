"""wcf-forge command line: solve, decompose, verify, validity, demo.

Exit codes: 0 pass / valid, 1 failed certificate / invalid, 2 inconclusive,
64 bad arguments, 65 malformed JSON input.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .assignments import Assignment, PolySpec, check_validity, combine, lagrange_weights, one_tenth_move
from .decompose import decompose_f_assignment, default_threads, solve_f_assignment
from .errors import InputError, WcfError
from .instances import ExtendedMatrixInstance
from .verify import VerifyConfig, verify_solution

SCHEMA = 1
EXIT_OK, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_USAGE, EXIT_DATA = 0, 1, 2, 64, 65


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma separated list of numbers: {text!r}") from None


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, allow_nan=False)


def _config(args) -> VerifyConfig:
    kw = {}
    if getattr(args, "tol", None) is not None:
        kw["tol"] = args.tol
    if getattr(args, "eps_sweep", None):
        kw["eps_sweep"] = tuple(args.eps_sweep)
    return VerifyConfig(**kw)


def _problem(coords, roots, power) -> dict:
    return {"coords": list(map(float, coords)), "roots": list(map(float, roots)), "power": int(power)}


def _solve_problem(coords, roots, power, config, threads) -> tuple[dict, list, Assignment]:
    t = lagrange_weights(coords, PolySpec(tuple(roots), power))
    solved = solve_f_assignment(coords, roots, power, config, threads)
    terms = []
    for s in solved:
        terms.append({"alpha": s.alpha, "term": s.term.to_dict(), "certificate": s.certificate.to_dict()})
    doc = {
        "schema": SCHEMA,
        "problem": _problem(coords, roots, power),
        "assignment": t.to_dict(),
        "terms": terms,
        "passed": all(s.certificate.passed for s in solved),
    }
    return doc, solved, t


def _summary(solved) -> str:
    head = f"{'#':>2}  {'alpha':>10}  {'kind':<21}{'|S|':>3}{'k':>3}  {'case':<32}{'verdict':<8}{'ortho':>10}{'map':>10}{'min_eig':>11}"
    rows = [head]
    for i, s in enumerate(solved):
        c = s.certificate
        rows.append(
            f"{i:>2}  {s.alpha:>10.4g}  {s.term.kind:<21}{len(s.term.subset):>3}{s.term.power:>3}  "
            f"{(c.case or '')[:31]:<32}{c.verdict:<8}{c.orthogonality_residual:>10.1e}"
            f"{c.mapping_residual:>10.1e}{c.psd_min_eig:>11.2e}"
        )
    return "\n".join(rows)


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def cmd_solve(args) -> int:
    config = _config(args)
    if args.batch:
        return _solve_batch(args, config)
    if args.coords is None:
        raise UsageError("--coords is required unless --batch is given")
    doc, solved, t = _solve_problem(args.coords, args.roots, args.power, config, default_threads())
    text = _dump(doc)
    if args.out:
        Path(args.out).write_text(text + "\n")
    if args.json or not args.out:
        print(text if args.json else _summary(solved))
    else:
        print(_summary(solved))
    if args.report:
        from .report import write_report

        base = Path(args.out) if args.out else Path("wcf_forge.json")
        for p in write_report(base.parent, base.stem, t, solved):
            print(f"wrote {p}", file=sys.stderr)
    return EXIT_OK if doc["passed"] else EXIT_FAIL


def _solve_batch(args, config) -> int:
    path = Path(args.batch)
    try:
        specs = [json.loads(line) for line in path.read_text().splitlines() if line.strip()]
        problems = [(s["coords"], s.get("roots", []), int(s.get("power", 0))) for s in specs]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        print(f"malformed batch file: {e}", file=sys.stderr)
        return EXIT_DATA

    def run(p):
        try:
            return _solve_problem(*p, config, 1)[0]
        except WcfError as e:
            return {"schema": SCHEMA, "problem": _problem(*p), "error": str(e), "passed": False}

    threads = default_threads()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            docs = list(pool.map(run, problems))
    else:
        docs = [run(p) for p in problems]
    _emit("\n".join(_dump(d) for d in docs), args.out)
    return EXIT_OK if all(d["passed"] for d in docs) else EXIT_FAIL


def cmd_decompose(args) -> int:
    terms = decompose_f_assignment(args.coords, args.roots, args.power)
    doc = {
        "schema": SCHEMA,
        "problem": _problem(args.coords, args.roots, args.power),
        "terms": [t.to_dict() for t in terms],
    }
    if args.json or args.out:
        _emit(_dump(doc), args.out)
    if not args.json:
        for i, t in enumerate(terms):
            print(f"{i:>2}  alpha={t.alpha:.10g}  {t.kind:<21} k={t.power}  S={list(t.subset)}")
    return EXIT_OK


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise json.JSONDecodeError(f"malformed JSON in {path}: {e.msg}", e.doc, e.pos) from None


def cmd_verify(args) -> int:
    """Recompute every certificate from the stored instance and O."""
    doc = _load_json(args.cert)
    config = _config(args)
    try:
        terms = doc["terms"]
        results = []
        for entry in terms:
            c = entry["certificate"]
            inst = ExtendedMatrixInstance.from_dict(c["instance"])
            O = np.asarray(c["O"], dtype=float)
            results.append(verify_solution(inst, O, config, case=c.get("case")))
        recombined = None
        if "assignment" in doc:
            from .decompose import DecompositionTerm

            t = Assignment.from_dict(doc["assignment"])
            parts = [
                (e["alpha"], DecompositionTerm(
                    e["term"]["alpha"], tuple(e["term"]["subset"]), e["term"]["kind"], e["term"]["power"]
                ).assignment())
                for e in terms
            ]
            rec = combine(parts)
            ref = dict(zip(t.coords, t.weights))
            recombined = max(abs(rec.get(x, 0.0) - ref.get(x, 0.0)) for x in set(rec) | set(ref))
            recombined /= max(abs(p) for p in t.weights)
    except (KeyError, TypeError, ValueError, IndexError) as e:
        raise json.JSONDecodeError(f"certificate file has the wrong structure: {e}", "", 0) from None
    ok = all(r.passed for r in results) and (recombined is None or recombined <= 1e-10)
    for i, r in enumerate(results):
        print(f"term {i}: {r.verdict}  ortho={r.orthogonality_residual:.2e} map={r.mapping_residual:.2e} "
              f"min_eig={r.psd_min_eig:.2e}")
    if recombined is not None:
        print(f"recombination residual {recombined:.2e}")
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_validity(args) -> int:
    if args.input:
        data = _load_json(args.input)
        try:
            t = Assignment.from_dict(data)
        except (KeyError, TypeError) as e:
            raise json.JSONDecodeError(f"assignment file has the wrong structure: {e}", "", 0) from None
    elif args.coords is None:
        raise UsageError("give --coords or --input")
    elif args.weights is not None:
        if len(args.weights) != len(args.coords):
            raise UsageError("--weights and --coords differ in length")
        pts = [(c, p) for c, p in zip(args.coords, args.weights) if p != 0]
        t = Assignment.from_arrays([c for c, _ in pts], [p for _, p in pts])
    else:
        t = lagrange_weights(args.coords, PolySpec(tuple(args.roots), args.power))
    rep = check_validity(t, n_grid=args.grid, tol=args.tol if args.tol is not None else 1e-9)
    out = dict(rep.to_dict(), schema=SCHEMA)
    if args.json:
        print(_dump(out))
    else:
        print(f"sum residual {rep.sum_zero_residual:.3e}  max transfer {rep.min_transfer_value:.3e}  "
              f"asymptotic {'ok' if rep.asymptotic_ok else 'violated'}  -> {rep.verdict}")
    return {"valid": EXIT_OK, "invalid": EXIT_FAIL}.get(rep.verdict, EXIT_INCONCLUSIVE)


def cmd_demo(args) -> int:
    pts = args.points
    if len(pts) != 8:
        raise UsageError("--points needs x0,l1,x1,x2,x3,x4,r1,r2")
    coords, f = one_tenth_move(*pts)
    config = _config(args)
    doc, solved, t = _solve_problem(coords, f.roots, 0, config, default_threads())
    if args.json:
        print(_dump(doc))
    else:
        print(f"coords {list(coords)}  roots {list(f.roots)}  terms {len(solved)}")
        print(_summary(solved))
        print("all certificates pass" if doc["passed"] else "some certificates FAIL")
    if args.out:
        Path(args.out).write_text(_dump(doc) + "\n")
    return EXIT_OK if doc["passed"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wcf-forge", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def problem_args(q, coords_required=True):
        q.add_argument("--coords", type=_floats, required=coords_required)
        q.add_argument("--roots", type=_floats, default=[])
        q.add_argument("--power", type=int, default=0, help="monomial factor (-x)^k")

    def verify_args(q):
        q.add_argument("--tol", type=float, default=None)
        q.add_argument("--eps-sweep", type=_floats, default=None)

    s = sub.add_parser("solve", help="decompose, solve and certify an f-assignment")
    problem_args(s, coords_required=False)
    verify_args(s)
    s.add_argument("--out")
    s.add_argument("--json", action="store_true")
    s.add_argument("--report", action="store_true", help="write PNG figures next to --out")
    s.add_argument("--batch", help="newline-delimited JSON problems")
    s.set_defaults(func=cmd_solve)

    d = sub.add_parser("decompose", help="positive decomposition into solvable terms")
    problem_args(d)
    d.add_argument("--out")
    d.add_argument("--json", action="store_true")
    d.set_defaults(func=cmd_decompose)

    v = sub.add_parser("verify", help="re-check a certificate file")
    v.add_argument("cert")
    verify_args(v)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("validity", help="check the validity conditions of an assignment")
    problem_args(c, coords_required=False)
    c.add_argument("--weights", type=_floats)
    c.add_argument("--input")
    c.add_argument("--grid", type=int, default=512)
    c.add_argument("--tol", type=float, default=None)
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_validity)

    m = sub.add_parser("demo", help="worked pipelines")
    m.add_argument("name", choices=["one-tenth"])
    m.add_argument("--points", type=_floats, default=[0, 0.5, 1, 2, 3, 4, 5, 6])
    m.add_argument("--out")
    m.add_argument("--json", action="store_true")
    verify_args(m)
    m.set_defaults(func=cmd_demo)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, InputError) as e:
        print(f"wcf-forge: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (json.JSONDecodeError, FileNotFoundError) as e:
        print(f"wcf-forge: {e}", file=sys.stderr)
        return EXIT_DATA
    except WcfError as e:
        print(f"wcf-forge: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
