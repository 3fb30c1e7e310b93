"""Command-line interface: ``dhlab <command> ...``.

Exit codes: 0 success, 1 a check or computation failed, 2 usage or
configuration error.  Every failure prints {code, message, context} as JSON
on stderr.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import platform
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import __version__
from .model import (ConfigError, as_fraction, default_instance, derive_window, lambda_ratio, load_config,
                    parse_number, window_at)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    def __init__(self, message: str, code: str = "usage", **context: Any):
        super().__init__(message)
        self.code = code
        self.context = context


class CheckFailure(Exception):
    def __init__(self, message: str, code: str = "check_failed", **context: Any):
        super().__init__(message)
        self.code = code
        self.context = context


def _jsonable(x):
    from .verify import _jsonable as conv
    return conv(x)


def dump(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2)


@dataclass
class RunManifest:
    command: str
    config_hash: str
    seed: int
    versions: dict
    outputs: list = field(default_factory=list)
    timing: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {"command": self.command, "config_hash": self.config_hash, "seed": self.seed,
                "versions": self.versions, "outputs": self.outputs, "timing": self.timing}


def _versions() -> dict:
    import mpmath
    import numba
    return {"dhlab": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "numba": numba.__version__, "mpmath": mpmath.__version__}


def make_manifest(args, instance_record: Optional[dict]) -> RunManifest:
    skip = {"func", "out", "out_dir", "threads", "table_cache", "inputs"}
    payload = {"command": args.command, "instance": instance_record,
               "args": {k: v for k, v in sorted(vars(args).items()) if k not in skip}}
    h = hashlib.sha256(json.dumps(_jsonable(payload), sort_keys=True).encode()).hexdigest()[:16]
    return RunManifest(args.command, h, getattr(args, "seed", 0) or 0, _versions())


def _instance(args):
    if getattr(args, "config", None):
        return load_config(args.config)
    return default_instance()


def _cache_path(args) -> Optional[str]:
    if getattr(args, "table_cache", None):
        return args.table_cache
    d = os.environ.get("DHLAB_CACHE")
    return os.path.join(d, "primes.bin") if d else None


def _tables(args, limit: int, spf_limit: int = 2):
    from .primes import build_tables
    return build_tables(max(limit, 2), spf_limit=max(spf_limit, 2), cache=_cache_path(args))


def _write_json(path: Optional[str], obj: dict, manifest: RunManifest) -> None:
    obj = dict(obj)
    obj["manifest"] = manifest.config_hash
    text = dump(obj)
    if path:
        Path(path).write_text(text + "\n")
        manifest.outputs.append(path)
        Path(path + ".manifest.json").write_text(dump(manifest.to_record()) + "\n")
    else:
        print(text)


def _window(args, inst):
    eta = float(parse_number(args.eta)) if getattr(args, "eta", None) else None
    if getattr(args, "q", None):
        w = derive_window(inst, args.q)
        if eta is not None:
            w = window_at(inst, w.X, eta=eta, q=args.q)
        return w
    if getattr(args, "x", None) is None:
        raise UsageError("give --q or --x")
    return window_at(inst, float(parse_number(args.x)), eta=eta)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_cf(args) -> int:
    from .rational import continued_fraction
    ratio = lambda_ratio(parse_number(args.lambda1), parse_number(args.lambda2))
    convs = continued_fraction(ratio.value, args.count)
    print(dump([{"a": c.a, "q": c.q} for c in convs]))
    return EXIT_OK


def cmd_plan(args) -> int:
    from .rational import coupling_defect, plan_windows
    inst = _instance(args)
    wins = plan_windows(inst, args.count, acknowledge_unverified=args.acknowledge_unverified)
    man = make_manifest(args, inst.to_record())
    rows = [{"q": w.q, "X": w.X, "P": w.P, "R": w.R, "eta": w.eta, "u": w.u,
             "coupling_defect": coupling_defect(w)} for w in wins]
    _write_json(args.out, {"kind": "plan", "windows": rows}, man)
    return EXIT_OK


def _delta(args, inst) -> Fraction:
    if getattr(args, "delta", None):
        d = as_fraction(parse_number(args.delta))
        if not (0 < d < Fraction(1, 2)):
            raise ConfigError(f"delta={d} outside (0, 1/2)", code="usage")
        return d
    return inst.delta_exact


def _write_csv(path: str, header: list, rows, manifest: RunManifest) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header + ["manifest"])
        for r in rows:
            w.writerow(list(r) + [manifest.config_hash])
    manifest.outputs.append(path)
    Path(path + ".manifest.json").write_text(dump(manifest.to_record()) + "\n")


def cmd_weights(args) -> int:
    from .sieve import build_weight_table
    inst = _instance(args)
    X = float(parse_number(args.x))
    tab = build_weight_table(X, _delta(args, inst))
    man = make_manifest(args, inst.to_record())
    if args.out:
        _write_csv(args.out, ["m", "rho"], zip(tab.m.tolist(), tab.rho.tolist()), man)
    print(dump({**tab.summary(), "manifest": man.config_hash}))
    return EXIT_OK


_KINDS = ("sk", "uk", "tk", "s2t")


def _alphas(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"--alphas wants start:stop:count, got {text!r}", code="usage")
    a0, a1 = (float(parse_number(x)) for x in parts[:2])
    n = int(parts[2])
    if n < 1:
        raise UsageError("--alphas count must be positive", code="usage")
    return np.linspace(a0, a1, n)


def cmd_expsum(args) -> int:
    from .expsums import eval_T_k, integer_power_sum, prime_power_sum, weighted_square_sum
    from .sieve import build_weight_table, power_range
    inst = _instance(args)
    X = float(parse_number(args.x))
    d = _delta(args, inst)
    k = float(parse_number(args.k)) if args.k else inst.k
    lam = float(parse_number(args.lam)) if args.lam else 1.0
    alphas = _alphas(args.alphas)
    if args.kind == "sk":
        top = power_range(float(d) * X, X, k)[1]
        vals = prime_power_sum(k, X, float(d), _tables(args, top))(alphas, lam)
    elif args.kind == "uk":
        vals = integer_power_sum(k, X, float(d))(alphas, lam)
    elif args.kind == "s2t":
        vals = weighted_square_sum(build_weight_table(X, d))(alphas, lam)
    else:
        vals = eval_T_k(alphas, k, X, float(d), lam)
    vals = np.atleast_1d(vals)
    man = make_manifest(args, inst.to_record())
    rows = ((repr(float(a)), repr(float(v.real)), repr(float(v.imag))) for a, v in zip(alphas, vals))
    if args.out:
        _write_csv(args.out, ["alpha", "re", "im"], rows, man)
        print(dump({"kind": "expsum", "sum": args.kind, "X": X, "k": k, "points": len(alphas),
                    "max_abs": float(np.abs(vals).max()), "manifest": man.config_hash}))
    else:
        w = csv.writer(sys.stdout)
        w.writerow(["alpha", "re", "im", "manifest"])
        for r in rows:
            w.writerow(list(r) + [man.config_hash])
    return EXIT_OK


def cmd_arcs(args) -> int:
    from .arcs import Integrand, direct_sum_I, integrate_all
    inst = _instance(args)
    w = _window(args, inst)
    F = Integrand(inst, w)
    res = integrate_all(inst, w, integrand=F, tail_fraction=args.tail_fraction,
                        threads=args.threads, max_points=args.max_points)
    man = make_manifest(args, inst.to_record())
    samples = res.samples
    # the strided kernel samples rarely land on the short major arc: resample it
    n_major = 2001
    a_major = np.linspace(-w.major_end, w.major_end, n_major)
    major = np.column_stack([a_major, np.abs(F(a_major))])
    samples = np.concatenate([major, samples[np.abs(samples[:, 0]) > w.major_end]])
    samples = samples[np.argsort(samples[:, 0], kind="stable")]
    region = np.where(np.abs(samples[:, 0]) <= w.major_end, "major",
                      np.where(np.abs(samples[:, 0]) <= w.R, "minor", "trivial"))
    out = {"kind": "arcs",
           "window": {"X": w.X, "P": w.P, "R": w.R, "eta": w.eta, "q": w.q, "u": w.u},
           "regions": [res[r].to_record() for r in ("major", "minor", "trivial")],
           "total": res.total.to_record(),
           "grid_samples": {r: samples[region == r].tolist() for r in ("major", "minor", "trivial")}}
    if w.X <= 1e5 and not args.no_direct:
        d = direct_sum_I(inst, w, integrand=F)
        diff = abs(res.total.value - d)
        bound = res.total.quad_error + res.total.truncation_bound
        out["parseval"] = {"direct": d, "diff": diff, "bound": bound, "agree": diff <= bound}
    _write_json(args.out, out, man)
    if "parseval" in out and not out["parseval"]["agree"]:
        raise CheckFailure("Fourier identity check failed", code="parseval_mismatch", **out["parseval"])
    return EXIT_OK


def cmd_levelset(args) -> int:
    from .arcs import level_set_diagnostic
    inst = _instance(args)
    w = _window(args, inst)
    X = w.X
    zdef = X ** (0.5 - w.u + inst.epsilon)
    Z1 = float(parse_number(args.z1)) if args.z1 else zdef
    Z2 = float(parse_number(args.z2)) if args.z2 else zdef
    rep = level_set_diagnostic(inst, w, Z1, Z2, args.samples,
                               y=float(parse_number(args.y)) if args.y else None, seed=args.seed)
    man = make_manifest(args, inst.to_record())
    out = {"kind": "levelset", "X": X, **rep.to_record(),
           "hit_detail": [{"alpha": h.alpha, "s1": h.s1, "s2": h.s2,
                           "w1": None if h.witness1 is None else [h.witness1.a, h.witness1.q],
                           "w2": None if h.witness2 is None else [h.witness2.a, h.witness2.q]}
                          for h in rep.hits]}
    _write_json(args.out, out, man)
    return EXIT_OK


def cmd_optimize(args) -> int:
    from .lp import binding_analysis, load_program, paper_program, solve
    prog = load_program(args.program) if args.program else paper_program()
    sol = solve(prog)
    rec = sol.to_record()
    if prog.parameter:
        rec["binding"] = binding_analysis(prog, sol).to_record()
    print(dump(rec))
    return EXIT_OK


def cmd_search(args) -> int:
    from .search import enumerate_solutions, trend_nondecreasing, window_sweep
    inst = _instance(args)
    man = make_manifest(args, inst.to_record())
    xs = [float(x) for x in (args.x or [])]
    if args.plan:
        from .rational import plan_windows
        xs += [w.X for w in plan_windows(inst, args.plan)]
    if not xs:
        raise UsageError("give --x or --plan")
    if len(xs) == 1:
        recs, summ = enumerate_solutions(inst, xs[0], args.budget)
        if args.out:
            with open(args.out, "w") as fh:
                for r in recs:
                    fh.write(json.dumps({**r.to_record(), "manifest": man.config_hash}, sort_keys=True) + "\n")
            man.outputs.append(args.out)
        _write_json(None, {"kind": "search", **summ.to_record()}, man)
        if args.out:
            Path(args.out + ".manifest.json").write_text(dump(man.to_record()) + "\n")
        return EXIT_OK
    sums = window_sweep(inst, xs, args.budget, floor=args.floor)
    out = {"kind": "sweep", "windows": [s.to_record() for s in sums],
           "nondecreasing": trend_nondecreasing(sums)}
    _write_json(args.out, out, man)
    failed = [s.X for s in sums if s.status == "failed"]
    if failed:
        raise CheckFailure("windows without solutions", code="empty_window", windows=failed)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import quick_suite
    inst = _instance(args)
    man = make_manifest(args, inst.to_record())
    results = quick_suite(inst)
    out = {"kind": "verify", "checks": [r.to_record() for r in results],
           "passed": all(r.passed for r in results)}
    _write_json(args.out, out, man)
    bad = [r.name for r in results if not r.passed]
    if bad:
        raise CheckFailure(f"failed checks: {', '.join(bad)}", code="verify_failed", checks=bad)
    return EXIT_OK


def cmd_report(args) -> int:
    if not args.inputs:
        raise UsageError("nothing to report", code="nothing_to_report")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    trend_rows = []
    for path in args.inputs:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read {path}: {exc}", code="schema_mismatch", path=path)
        kind = data.get("kind") if isinstance(data, dict) else None
        stem = Path(path).stem
        tag = data.get("manifest", "") if isinstance(data, dict) else ""
        if kind == "arcs":
            for region in ("major", "minor", "trivial"):
                p = out_dir / f"{stem}_{region}.csv"
                with open(p, "w", newline="") as fh:
                    w = csv.writer(fh)
                    w.writerow(["alpha", "abs_integrand", "manifest"])
                    for a, v in data["grid_samples"][region]:
                        w.writerow([repr(float(a)), repr(float(v)), tag])
                written.append(str(p))
        elif kind in ("sweep", "search"):
            rows = data["windows"] if kind == "sweep" else [data]
            for s in rows:
                trend_rows.append([repr(float(s["X"])), s["count"], repr(float(s["predicted_order"])),
                                   s["status"], tag])
        elif kind == "levelset":
            p = out_dir / f"{stem}_levelset.csv"
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["X", "Z1", "Z2", "y", "measure", "lemma_bound", "ratio", "manifest"])
                w.writerow([data["X"], data["Z1"], data["Z2"], data["y"], data["measure"],
                            data["lemma_bound"], data["ratio"], tag])
            written.append(str(p))
        else:
            raise UsageError(f"{path}: unknown result kind {kind!r}", code="schema_mismatch", path=path)
    if trend_rows:
        p = out_dir / "search_trend.csv"
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["X", "N", "predicted", "status", "manifest"])
            w.writerows(trend_rows)
        written.append(str(p))
    print(dump({"kind": "report", "written": written}))
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dhlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--table-cache", default=None, help="prime cache file (default $DHLAB_CACHE/primes.bin)")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=func)
        return sp

    sp = add("cf", cmd_cf, "convergents of lambda1/lambda2")
    sp.add_argument("--lambda1", required=True)
    sp.add_argument("--lambda2", required=True)
    sp.add_argument("--count", type=int, default=10)

    sp = add("plan", cmd_plan, "windows X = q^(7/3) from convergent denominators")
    sp.add_argument("--config")
    sp.add_argument("--count", type=int, default=5)
    sp.add_argument("--acknowledge-unverified", action="store_true")
    sp.add_argument("--out")

    sp = add("weights", cmd_weights, "sieve weight table (CSV m,rho) and summary")
    sp.add_argument("--config")
    sp.add_argument("--x", required=True)
    sp.add_argument("--delta")
    sp.add_argument("--out")

    sp = add("expsum", cmd_expsum, "evaluate S_k, U_k, T_k or the weighted square sum on a grid")
    sp.add_argument("--config")
    sp.add_argument("--kind", choices=_KINDS, default="sk")
    sp.add_argument("--x", required=True)
    sp.add_argument("--k", help="exponent (default: the config's k)")
    sp.add_argument("--delta")
    sp.add_argument("--lambda", dest="lam")
    sp.add_argument("--alphas", default="0:1:11", help="start:stop:count")
    sp.add_argument("--out")

    sp = add("arcs", cmd_arcs, "region integrals of the circle-method integrand")
    sp.add_argument("--config")
    sp.add_argument("--q", type=int)
    sp.add_argument("--x")
    sp.add_argument("--eta")
    sp.add_argument("--tail-fraction", type=float, default=0.01)
    sp.add_argument("--max-points", type=int, default=600_000_000)
    sp.add_argument("--no-direct", action="store_true")
    sp.add_argument("--out")

    sp = add("levelset", cmd_levelset, "minor-arc level-set measure against the lemma bound")
    sp.add_argument("--config")
    sp.add_argument("--q", type=int)
    sp.add_argument("--x")
    sp.add_argument("--eta")
    sp.add_argument("--z1")
    sp.add_argument("--z2")
    sp.add_argument("--y")
    sp.add_argument("--samples", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")

    sp = add("optimize", cmd_optimize, "solve the exponent program exactly")
    sp.add_argument("--program")

    sp = add("search", cmd_search, "find prime solutions in one or more windows")
    sp.add_argument("--config")
    sp.add_argument("--x", action="append")
    sp.add_argument("--plan", type=int, help="also sweep this many planned windows")
    sp.add_argument("--budget", type=int, default=10 ** 10)
    sp.add_argument("--floor", type=float, default=1e4)
    sp.add_argument("--out")

    sp = add("verify", cmd_verify, "run the self-check pipeline")
    sp.add_argument("--config")
    sp.add_argument("--out")

    sp = add("report", cmd_report, "turn result files into CSVs")
    sp.add_argument("inputs", nargs="*")
    sp.add_argument("--out-dir", default=".")
    return p


def _fail(code: str, message: str, context: dict, status: int) -> int:
    print(json.dumps({"code": code, "message": message, "context": _jsonable(context)}, sort_keys=True),
          file=sys.stderr)
    return status


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return EXIT_OK
        return _fail("usage", "invalid command line", {"argv": list(argv or sys.argv[1:])}, EXIT_USAGE)
    t0 = time.perf_counter()
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail(exc.code, str(exc), exc.context, EXIT_USAGE)
    except UsageError as exc:
        return _fail(exc.code, str(exc), exc.context, EXIT_USAGE)
    except CheckFailure as exc:
        return _fail(exc.code, str(exc), exc.context, EXIT_FAIL)
    except (ValueError, RuntimeError, OSError) as exc:
        return _fail(type(exc).__name__, str(exc), {"command": args.command,
                                                    "seconds": time.perf_counter() - t0}, EXIT_FAIL)


if __name__ == "__main__":
    sys.exit(main())
