"""Command-line surface: decompose snapshot files, verify the toolkit.

``dmdkit decompose`` reads snapshot matrices (DMM1 or CSV), runs the
requested variant, and emits a spectrum report as canonical JSON: keys
sorted, no whitespace, one trailing newline.  Parsing a report and
re-serializing it reproduces the bytes exactly, so reports can be
diffed, hashed, and archived.  ``dmdkit verify`` runs the self-check
suite on internally generated oracles and prints one pass/fail line per
check.  Timings go to stderr only; reports stay byte-deterministic for a
fixed seed regardless of thread count.

Exit codes: 0 success, 1 failed verification, 2 data error,
3 conditioning error, 4 backend error.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from . import checks
from .errors import BackendError, ConditioningError, DataError
from .inner import InnerProduct
from .matrixio import load_matrix, store_matrix
from .pod import RankPolicy, default_epsilon
from .ritz import koopman_log_map
from .snapshots import SequentialTrajectory, SnapshotPair
from .variants import (
    VariantConfig,
    dmd,
    ddmd_rrr,
    ddmd_rrr_compressed,
    exact_dmd,
    fb_dmd_mrf,
)
from .verify import write_fixture_set
from .weighted import two_sided_weighted_dmd, weighted_dmd

__all__ = ["main"]


def _canonical(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def _num(x):
    x = float(x)
    return x if np.isfinite(x) else None


def _parse_refine(text):
    if text in ("none", "all"):
        return text
    if text.startswith("cap="):
        try:
            return float(text[4:])
        except ValueError as exc:
            raise DataError("bad refinement cap %r: %s" % (text, exc)) from exc
    raise DataError("refine must be 'none', 'all', or 'cap=REAL', got %r" % (text,))


def _resolve_threads(args):
    if getattr(args, "threads", None) is not None:
        return args.threads
    env = os.environ.get("DMD_NUM_THREADS")
    if env is None:
        return None
    try:
        return int(env)
    except ValueError as exc:
        raise DataError("DMD_NUM_THREADS must be an integer, got %r" % (env,)) from exc


def _load_weight(path, inverse=False):
    """Weight matrix from file: a vector is taken as diagonal weights."""
    a = load_matrix(path)
    orientation = "M-inverse" if inverse else "M"
    if 1 in a.shape:
        return InnerProduct.diagonal(np.real(a).reshape(-1), orientation=orientation)
    return InnerProduct.from_matrix(a, orientation=orientation)


def _load_input(args):
    if args.seq is not None:
        if args.x is not None or args.y is not None:
            raise DataError("--seq cannot be combined with --x/--y")
        traj = SequentialTrajectory(load_matrix(args.seq))
        return traj.F[:, :-1], traj.F[:, 1:], traj
    if args.x is None or args.y is None:
        raise DataError("either --seq FILE or both --x FILE and --y FILE are required")
    X = load_matrix(args.x)
    Y = load_matrix(args.y)
    return X, Y, SnapshotPair(X, Y, provenance="general")


def _records(dec, dt, cap):
    recs = []
    for i in range(dec.k):
        lam = dec.lambdas[i]
        r = dec.residuals[i]
        selected = bool(r <= cap) if cap is not None and np.isfinite(r) else (cap is None)
        rec = {
            "index": i,
            "lambda_re": float(lam.real),
            "lambda_im": float(lam.imag),
            "residual": _num(r),
            "selected": selected,
        }
        refined = dec.refined[i]
        if refined is not None:
            rec["refined_residual"] = _num(refined.sigma_min)
            rec["rho_re"] = float(refined.rho.real)
            rec["rho_im"] = float(refined.rho.imag)
        if dt is not None and abs(lam) > 0:
            kv = koopman_log_map(np.array([lam]), dt)[0]
            rec["koopman_re"] = float(kv.real)
            rec["koopman_im"] = float(kv.imag)
        recs.append(rec)
    return recs


def cmd_decompose(args):
    threads = _resolve_threads(args)
    X, Y, data = _load_input(args)
    n, m = X.shape

    policy = None
    epsilon = default_epsilon(n, m)
    if args.rank is not None:
        policy = RankPolicy.fixed(args.rank)
        epsilon = None
    elif args.eps is not None:
        policy = RankPolicy.spectral(args.eps)
        epsilon = args.eps

    config = VariantConfig(
        policy=policy,
        scale=not args.no_scale,
        refine=_parse_refine(args.refine),
        dt=args.dt,
        workers=threads,
    )

    M = _load_weight(args.weight, args.weight_inverse) if args.weight else None
    N = _load_weight(args.weight_n) if args.weight_n else None

    variant = args.variant
    if variant == "dmd":
        dec = dmd(X, Y, config)
    elif variant == "rrr":
        dec = ddmd_rrr(X, Y, config)
    elif variant == "rrr-compressed":
        dec = ddmd_rrr_compressed(data, config)
    elif variant == "exact":
        dec = exact_dmd(X, Y, config)
    elif variant == "fb":
        dec, _ = fb_dmd_mrf(X, Y, config)
    elif variant == "weighted":
        if M is None:
            raise DataError("--variant weighted requires --weight FILE")
        dec = weighted_dmd(X, Y, M, config)
    else:
        if M is None or N is None:
            raise DataError("--variant weighted2 requires --weight FILE and --weight-n FILE")
        dec = two_sided_weighted_dmd(X, Y, M, N, config)

    meta = {
        "variant": variant,
        "n": int(n),
        "m": int(m),
        "k": int(dec.rank),
        "epsilon": epsilon,
        "scaled": not args.no_scale,
        "weight": args.weight if args.weight else "none",
    }
    if args.dt is not None:
        meta["dt"] = args.dt
    report = {"meta": meta, "records": _records(dec, args.dt, args.select_cap)}
    payload = _canonical(report)

    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload)
        print("report: %s" % args.out, file=sys.stderr)
    else:
        sys.stdout.write(payload)

    if args.modes_out:
        present = dec.vector_present
        if not np.any(present):
            raise DataError("no vectors present to store in --modes-out")
        store_matrix(dec.vectors[:, present], args.modes_out)
        print("modes: %s (%d columns)" % (args.modes_out, int(present.sum())), file=sys.stderr)
    return 0


def cmd_verify(args):
    threads = _resolve_threads(args)
    t0 = time.monotonic()
    results = checks.run_all(n=args.n, m=args.m, seed=args.seed, workers=threads)
    elapsed = time.monotonic() - t0

    for r in results:
        print("%s %s - %s" % ("PASS" if r.passed else "FAIL", r.name, r.detail))
    npass = sum(1 for r in results if r.passed)
    print("%d/%d checks passed" % (npass, len(results)))
    print("elapsed %.1f s" % elapsed, file=sys.stderr)

    if args.fixtures:
        manifest = write_fixture_set(args.fixtures)
        print("fixtures manifest: %s" % manifest, file=sys.stderr)

    if args.out:
        report = {
            "meta": {"n": args.n, "m": args.m, "seed": args.seed},
            "checks": [{"name": r.name, "passed": bool(r.passed), "detail": r.detail} for r in results],
        }
        with open(args.out, "w") as fh:
            fh.write(_canonical(report))
        print("report: %s" % args.out, file=sys.stderr)
    return 0 if npass == len(results) else 1


def _build_parser():
    parser = argparse.ArgumentParser(prog="dmdkit", description="Data-driven modal decomposition toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decompose", help="decompose snapshot matrices and write a spectrum report")
    d.add_argument("--variant", default="rrr",
                   choices=["dmd", "rrr", "rrr-compressed", "exact", "fb", "weighted", "weighted2"])
    d.add_argument("--x", help="snapshot matrix X (DMM1 or CSV)")
    d.add_argument("--y", help="snapshot matrix Y, columns paired with X")
    d.add_argument("--seq", help="sequential trajectory matrix; supersedes --x/--y")
    d.add_argument("--eps", type=float, help="spectral truncation threshold (relative)")
    d.add_argument("--rank", type=int, help="fixed truncation rank")
    d.add_argument("--no-scale", action="store_true", help="skip column scaling")
    d.add_argument("--refine", default="all", help="'none', 'all', or 'cap=REAL'")
    d.add_argument("--select-cap", type=float, default=None,
                   help="mark records with residual <= cap as selected")
    d.add_argument("--weight", help="weight matrix file (vector file = diagonal weights)")
    d.add_argument("--weight-n", help="right-side weight matrix file for weighted2")
    d.add_argument("--weight-inverse", action="store_true",
                   help="interpret the weight file through its inverse geometry")
    d.add_argument("--dt", type=float, help="snapshot spacing; adds continuous-time frequencies")
    d.add_argument("--modes-out", help="write mode vectors to this DMM1 file")
    d.add_argument("--out", help="write the JSON report here instead of stdout")
    d.add_argument("--threads", type=int, help="worker threads for the refinement loop")
    d.set_defaults(func=cmd_decompose)

    v = sub.add_parser("verify", help="run the self-verification suite on built-in oracles")
    v.add_argument("--n", type=int, default=400, help="ambient dimension of the large checks")
    v.add_argument("--m", type=int, default=79, help="snapshot pairs of the large checks")
    v.add_argument("--seed", type=int, default=7)
    v.add_argument("--out", help="write the verification report as canonical JSON")
    v.add_argument("--fixtures", help="also write the oracle fixture set to this directory")
    v.add_argument("--threads", type=int, help="worker threads for the refinement loop")
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConditioningError as exc:
        print("conditioning error: %s" % exc, file=sys.stderr)
        return 3
    except BackendError as exc:
        print("backend error: %s" % exc, file=sys.stderr)
        return 4
    except (DataError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
