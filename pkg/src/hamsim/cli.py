"""Command line front end.

Subcommands:
  bound      cost and error figures for a product-formula run
  sweep      measured integrator error against the bound across k and r
  simulate   decompose a sparse oracle, evolve, and account for queries
  decompose  list the 1-sparse pieces of an oracle
  parity     hidden-bitstring parity through the ladder construction
  tables     recompute the worked halving traces and check them

Oracles come from --input (an entry-list file) or --gen, a compact
generator spec like random:n=4,d=3,seed=7,norm=1.  Sweeps also accept
terms:m=3,dim=8,seed=1,norm=1 for plain random Hermitian term lists.
Output is deterministic JSON (sorted keys) except where noted; exit codes
are 0 on success, 1 for domain or verification failures, 2 for usage.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
import warnings

import numpy as np

from . import __version__, _kernels, coloring, numerics, one_sparse
from . import oracle as oracle_mod
from . import parity as parity_mod
from . import suzuki
from .config import ColoringError, HamsimError, dense_cap


def fit_loglog_slope(xs, ys, floor: float = 1e-12) -> float | None:
    """Least-squares slope of log(y) against log(x), ignoring y at or
    below the noise floor.  None when fewer than two points survive."""
    pts = [(float(x), float(y)) for x, y in zip(xs, ys) if y > floor]
    if len(pts) < 2:
        return None
    lx = np.log([p[0] for p in pts])
    ly = np.log([p[1] for p in pts])
    return float(np.polyfit(lx, ly, 1)[0])


def _gen_options(spec: str) -> tuple[str, dict[str, str]]:
    kind, _, rest = spec.partition(":")
    opts: dict[str, str] = {}
    for chunk in rest.split(","):
        if not chunk:
            continue
        if "=" not in chunk:
            raise HamsimError(f"generator option {chunk!r} is not key=value")
        key, val = chunk.split("=", 1)
        opts[key] = val
    return kind, opts


def _load_oracle(input_path: str | None, gen: str | None):
    if (input_path is None) == (gen is None):
        raise HamsimError("exactly one of --input and --gen is required")
    if input_path is not None:
        return oracle_mod.from_entry_list(oracle_mod.load_entry_list(input_path))
    kind, opts = _gen_options(gen)
    if kind != "random":
        raise HamsimError(f"generator {kind!r} does not build an oracle")
    try:
        n = int(opts.pop("n"))
        d = int(opts.pop("d"))
    except KeyError as missing:
        raise HamsimError(f"random generator needs {missing.args[0]}=")
    seed = int(opts.pop("seed", "0"))
    norm = float(opts.pop("norm")) if "norm" in opts else None
    if opts:
        raise HamsimError(f"unknown generator options {sorted(opts)}")
    return oracle_mod.random_sparse(n, d, seed=seed, norm_target=norm)


def _load_terms(args) -> list[np.ndarray]:
    if args.gen is not None and args.gen.startswith("terms:"):
        _, opts = _gen_options(args.gen)
        try:
            m = int(opts.pop("m"))
            dim = int(opts.pop("dim"))
        except KeyError as missing:
            raise HamsimError(f"terms generator needs {missing.args[0]}=")
        seed = int(opts.pop("seed", "0"))
        norm = float(opts.pop("norm", "1.0"))
        if opts:
            raise HamsimError(f"unknown generator options {sorted(opts)}")
        rng = np.random.default_rng(seed)
        return [numerics.random_hermitian(dim, rng, norm=norm) for _ in range(m)]
    orc = _load_oracle(args.input, args.gen)
    tables = [one_sparse.extract_table(p) for p in coloring.decompose(orc)]
    hams = [one_sparse.table_to_dense(t) for t in tables if t.entry_count]
    if not hams:
        raise HamsimError("the matrix is zero, nothing to sweep")
    return hams


def _write_text(args, text: str) -> None:
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _plain(obj):
    # numpy scalars leak into comparisons and payloads; json wants natives
    if isinstance(obj, dict):
        return {key: _plain(val) for key, val in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(val) for val in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _emit_json(args, payload) -> None:
    _write_text(args, json.dumps(_plain(payload), sort_keys=True, indent=2) + "\n")


def _recording(fn, *fargs, **fkw):
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        out = fn(*fargs, **fkw)
    return out, [str(w.message) for w in rec]


def _int_list(text: str, flag: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v]
    except ValueError:
        raise HamsimError(f"{flag} wants a comma-separated integer list")
    if not vals:
        raise HamsimError(f"{flag} is empty")
    return vals


def cmd_bound(args) -> int:
    m, tau, eps = args.m, args.tau, args.eps
    k_free, free = suzuki.nexp_bound_optimal(m, tau, eps)
    k = args.k if args.k is not None else k_free
    notes: list[str] = []
    if args.r is not None:
        r = args.r
    else:
        r, notes = _recording(suzuki.choose_r, k, m, tau, eps)
    lin, power = suzuki.restriction_values(k, m, tau, r)
    ok = lin <= 1.0 and power <= 1.0
    per_k = suzuki.nexp_bound(k, m, tau, eps)
    count = suzuki.exponential_count(k, m)
    payload = {
        "m": m, "tau": tau, "eps": eps, "k": k, "r": r,
        "plan_length": count,
        "n_exp": r * count,
        "restriction_linear": lin,
        "restriction_power": power,
        "restriction_ok": ok,
        "error_bound": suzuki.integrator_error_bound(k, m, tau, r) if ok else None,
        "error_bound_sharp": (suzuki.integrator_error_bound_sharp(k, m, tau, r)
                              if lin <= 1.0 else None),
        "nexp_bound": per_k.value,
        "nexp_bound_window": per_k.within_window,
        "k_order_free": k_free,
        "nexp_bound_order_free": free.value,
        "nexp_bound_order_free_window": free.within_window,
        "warnings": notes,
    }
    _emit_json(args, payload)
    return 0


def cmd_sweep(args) -> int:
    hams = _load_terms(args)
    m = len(hams)
    t = args.time
    tau = max(numerics.spectral_norm(H) for H in hams) * abs(t)
    exact = numerics.hermitian_expm(sum(hams), t)
    ks = _int_list(args.k_list, "--k-list")
    rs = _int_list(args.r_list, "--r-list")
    rows = []
    for k in ks:
        for r in rs:
            start = time.perf_counter()
            approx = suzuki.plan_unitary(hams, t, k, r)
            wall = time.perf_counter() - start
            measured = numerics.unitary_diff_norm(exact, approx)
            ok = suzuki.restriction_check(k, m, tau, r)
            lin, _ = suzuki.restriction_values(k, m, tau, r)
            rows.append({
                "k": k, "r": r,
                "measured_error": measured,
                "bound": suzuki.integrator_error_bound(k, m, tau, r) if ok else None,
                "bound_sharp": (suzuki.integrator_error_bound_sharp(k, m, tau, r)
                                if lin <= 1.0 else None),
                "restriction_ok": ok,
                "n_exp": r * suzuki.exponential_count(k, m),
                "wall_time": wall,
            })
    slopes = {
        str(k): fit_loglog_slope(
            [row["r"] for row in rows if row["k"] == k],
            [row["measured_error"] for row in rows if row["k"] == k],
            floor=args.floor)
        for k in ks
    }
    if args.format == "csv":
        buf = io.StringIO()
        fields = ["k", "r", "measured_error", "bound", "bound_sharp",
                  "restriction_ok", "n_exp", "wall_time"]
        writer = csv.DictWriter(buf, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
        for k in ks:
            buf.write(f"# slope k={k}: {slopes[str(k)]}\n")
        _write_text(args, buf.getvalue())
    else:
        _emit_json(args, {"m": m, "tau": tau, "time": t,
                          "rows": rows, "slopes": slopes})
    return 0


def simulate_pipeline(orc, t: float, eps: float, k: int | None = None,
                      r: int | None = None, state_seed: int | None = None,
                      quantize: str | None = None,
                      backend: str | None = None,
                      verify: bool = True) -> dict:
    """Decompose, evolve, and account: the whole toolchain as one call.

    Dense cross-checks (verification, the measured error) run only when the
    dimension is inside the dense cap; above it they are reported as None.
    """
    dim = orc.dim
    z = coloring.iterate_count(orc.n)
    dense_ok = dim <= dense_cap()

    verification = None
    if verify and dense_ok:
        report = coloring.verify_coloring(orc)
        verification = {
            "ok": report.ok,
            "nonzero_pieces": report.nonzero_pieces,
            "max_queries_per_call": report.max_queries_per_call,
            "query_bound": report.query_bound,
            "failures": list(report.failures),
        }
        if not report.ok:
            raise ColoringError(
                "decomposition failed verification: " + "; ".join(report.failures))

    base_before = orc.counter.count
    pieces = coloring.decompose(orc)
    labeled = []
    for piece in pieces:
        table = one_sparse.extract_table(piece)
        if table.entry_count:
            labeled.append((piece.label, table))
    base_queries = orc.counter.count - base_before
    tables = [table for _, table in labeled]
    m = len(tables)

    # exact piece norms: 1-sparse means max entry magnitude
    lam_piece = float(max((max(np.max(np.abs(tb.diag_h), initial=0.0),
                               np.max(np.abs(tb.pair_amp), initial=0.0))
                           for tb in tables), default=0.0))
    tau = lam_piece * abs(t)
    notes: list[str] = []
    if k is None:
        k = suzuki.choose_k(max(m, 1), tau, eps)
    if r is None:
        r, notes = _recording(suzuki.choose_r, k, max(m, 1), tau, eps)

    norm_full = None
    H = None
    if dense_ok:
        H = oracle_mod.to_dense(orc)
        norm_full = numerics.spectral_norm(H)
    bits_needed = one_sparse.precision_bits(
        (norm_full if norm_full is not None else orc.d * lam_piece) * abs(t),
        orc.d, k, eps)
    quantize_bits = None
    if quantize not in (None, "off"):
        quantize_bits = bits_needed if quantize == "auto" else int(quantize)
        lam_grid = norm_full if norm_full is not None else orc.d * lam_piece
        if lam_grid > 0:
            tables = [one_sparse.quantize_table(tb, quantize_bits, lam_grid)
                      for tb in tables]
            labeled = [(lab, tb) for (lab, _), tb in zip(labeled, tables)]
            keep = [(lab, tb) for lab, tb in labeled if tb.entry_count]
            labeled = keep
            tables = [tb for _, tb in keep]
            m = len(tables)

    rng = np.random.default_rng(state_seed)
    if state_seed is None:
        psi0 = np.zeros(dim, dtype=np.complex128)
        psi0[0] = 1.0
    else:
        psi0 = numerics.random_state(dim, rng)

    if m == 0:
        psi = psi0.copy()
        n_exp = 0
        plan_length = 0
    else:
        plan = suzuki.build_plan(k, m)
        plan_length = len(plan.steps)
        psi = one_sparse.apply_product_formula(
            one_sparse.pack_tables(tables), plan, t, r, psi0, backend=backend)
        n_exp = r * plan_length

    restriction_ok = suzuki.restriction_check(k, max(m, 1), tau, r)
    bound = (suzuki.integrator_error_bound(k, max(m, 1), tau, r)
             if restriction_ok and m else (0.0 if not m else None))

    measured = None
    error_ok = None
    if dense_ok:
        exact = numerics.hermitian_expm(H, t) @ psi0
        measured = float(numerics.trace_distance(numerics.pure_density(psi),
                                                 numerics.pure_density(exact)))
        error_ok = measured <= eps

    base_bound = 2 * (z + 2) * n_exp
    result = {
        "n": orc.n, "d": orc.d, "dim": dim, "z": z,
        "time": t, "eps": eps, "k": k, "r": r,
        "m_pieces": m,
        "plan_length": plan_length,
        "n_exp": n_exp,
        "tau": tau,
        "piece_norm_max": lam_piece,
        "matrix_norm": norm_full,
        "verification": verification,
        "base_queries": base_queries,
        "base_query_bound": base_bound,
        "base_queries_ok": (base_queries <= base_bound) if n_exp else None,
        "precision_bits_recommended": bits_needed,
        "quantize_bits": quantize_bits,
        "restriction_ok": restriction_ok,
        "error_bound": bound,
        "measured_error": measured,
        "error_ok": error_ok,
        "backend": backend or _kernels.BACKEND,
        "warnings": notes,
    }
    if dim <= 64:
        result["state"] = [[float(a.real), float(a.imag)] for a in psi]
    return result


def cmd_simulate(args) -> int:
    orc = _load_oracle(args.input, args.gen)
    result = simulate_pipeline(
        orc, args.time, args.eps, k=args.k, r=args.r,
        state_seed=args.state_seed, quantize=args.quantize,
        backend=args.backend, verify=not args.no_verify)
    _emit_json(args, result)
    if result["error_ok"] is False:
        print(f"error: measured error {result['measured_error']} exceeds "
              f"eps {args.eps}", file=sys.stderr)
        return 1
    return 0


def cmd_decompose(args) -> int:
    orc = _load_oracle(args.input, args.gen)
    rows = []
    for piece in coloring.decompose(orc):
        table = one_sparse.extract_table(piece)
        if not table.entry_count and not args.all:
            continue
        rows.append({
            "i": piece.label.i, "j": piece.label.j, "nu": piece.label.nu,
            "diagonals": int(table.diag_idx.size),
            "pairs": int(table.pair_lo.size),
            "entries": table.entry_count,
            "max_abs": float(max(np.max(np.abs(table.diag_h), initial=0.0),
                                 np.max(np.abs(table.pair_amp), initial=0.0))),
        })
    payload = {
        "n": orc.n, "d": orc.d, "dim": orc.dim,
        "z": coloring.iterate_count(orc.n),
        "label_count": len(coloring.enumerate_labels(orc.d, orc.n)),
        "nonzero_pieces": sum(1 for row in rows if row["entries"]),
        "pieces": rows,
    }
    if orc.dim <= dense_cap() and not args.no_verify:
        report = coloring.verify_coloring(orc)
        payload["verified"] = report.ok
        payload["failures"] = list(report.failures)
    if args.format == "csv":
        buf = io.StringIO()
        fields = ["i", "j", "nu", "diagonals", "pairs", "entries", "max_abs"]
        writer = csv.DictWriter(buf, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
        _write_text(args, buf.getvalue())
    else:
        _emit_json(args, payload)
    return 0 if payload.get("verified", True) else 1


def cmd_parity(args) -> int:
    if (args.bits is None) == (args.size is None):
        raise HamsimError("exactly one of --bits and --size is required")
    if args.bits is not None:
        if set(args.bits) - {"0", "1"}:
            raise HamsimError(f"--bits wants a 01 string, got {args.bits!r}")
        bits = [int(b) for b in args.bits]
    else:
        rng = np.random.default_rng(args.seed)
        bits = [int(b) for b in rng.integers(0, 2, size=args.size)]
    instance = parity_mod.ParityInstance(bits)
    quantize_bits = None
    if args.quantize not in (None, "off"):
        if args.quantize == "auto":
            quantize_bits = one_sparse.precision_bits(
                math.pi * instance.size / 2.0, 2, 1, args.eps)
        else:
            quantize_bits = int(args.quantize)
    res, notes = _recording(parity_mod.run_parity, instance, args.eps,
                            quantize_bits=quantize_bits, backend=args.backend)
    payload = {
        "bits": "".join(str(b) for b in bits),
        "size": instance.size,
        "register_bits": parity_mod.register_bits(instance.size),
        "parity": res.parity,
        "expected_parity": instance.parity(),
        "correct": res.correct,
        "trace_error": res.trace_error,
        "eps": res.eps,
        "r": res.r,
        "n_exp": res.n_exp,
        "bit_queries": res.bit_queries,
        "h_queries": res.h_queries,
        "lower_bound_ok": res.lower_bound_ok,
        "quantize_bits": res.quantize_bits,
        "warnings": notes,
    }
    _emit_json(args, payload)
    if not res.correct or res.trace_error > args.eps:
        return 1
    return 0


def cmd_tables(args) -> int:
    lines = []
    failed = False
    for name, stored in (("main", coloring.REFERENCE_TRACE_MAIN),
                         ("shifted", coloring.REFERENCE_TRACE_SHIFTED)):
        chain = [row[0] for row in stored]
        trace = coloring.halving_trace(chain, 4)
        widths = [len(level[0]) for level in trace]
        ok = all(trace[lvl][idx] == stored[idx][lvl]
                 for idx in range(len(stored)) for lvl in range(5))
        tag = trace[4][0]
        ok = ok and tag in coloring.FINAL_ALPHABET
        lines.append(f"{name:8s} widths={'-'.join(map(str, widths))} "
                     f"tag={tag} {'PASS' if ok else 'FAIL'}")
        failed = failed or not ok
    z = coloring.iterate_count(18)
    zline_ok = z == 4
    lines.append(f"rounds   z_18={z} {'PASS' if zline_ok else 'FAIL'}")
    main_tag = coloring.halving_trace(
        [r[0] for r in coloring.REFERENCE_TRACE_MAIN], 4)[4][0]
    shifted_tag = coloring.halving_trace(
        [r[0] for r in coloring.REFERENCE_TRACE_SHIFTED], 4)[4][0]
    distinct = main_tag != shifted_tag
    lines.append(f"tags     main={main_tag} shifted={shifted_tag} "
                 f"{'PASS' if distinct else 'FAIL'}")
    _write_text(args, "\n".join(lines) + "\n")
    return 1 if (failed or not zline_ok or not distinct) else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hamsim",
        description="Sparse-Hamiltonian simulation toolkit: product-formula "
                    "bounds, 1-sparse decomposition, exact piece evolution, "
                    "and the parity ladder.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_io(p, fmt: bool = True):
        p.add_argument("--out", help="write output to this file instead of stdout")
        if fmt:
            p.add_argument("--format", choices=("json", "csv"), default="json")

    def add_source(p):
        p.add_argument("--input", help="entry-list file")
        p.add_argument("--gen", help="generator spec, e.g. random:n=4,d=2,seed=1")

    p = sub.add_parser("bound", help="cost and error figures")
    p.add_argument("--m", type=int, required=True, help="term count")
    p.add_argument("--tau", type=float, required=True, help="norm-time product")
    p.add_argument("--eps", type=float, required=True, help="error target")
    p.add_argument("--k", type=int, help="integrator order index (default: chosen)")
    p.add_argument("--r", type=int, help="slice count (default: chosen)")
    add_io(p, fmt=False)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("sweep", help="error scaling across k and r")
    add_source(p)
    p.add_argument("--time", type=float, default=1.0)
    p.add_argument("--k-list", default="1,2", dest="k_list")
    p.add_argument("--r-list", default="4,8,16,32,64,128,256", dest="r_list")
    p.add_argument("--floor", type=float, default=1e-12,
                   help="discard errors at or below this level in slope fits")
    add_io(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="decompose, evolve, account")
    add_source(p)
    p.add_argument("--time", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--k", type=int, help="override the order choice")
    p.add_argument("--r", type=int, help="override the slice count")
    p.add_argument("--state-seed", type=int, dest="state_seed",
                   help="random initial state (default: first basis state)")
    p.add_argument("--quantize", help="off (default), auto, or a bit count")
    p.add_argument("--backend", choices=("py", "cy"))
    p.add_argument("--no-verify", action="store_true", dest="no_verify")
    add_io(p, fmt=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("decompose", help="list the 1-sparse pieces")
    add_source(p)
    p.add_argument("--all", action="store_true",
                   help="include empty pieces in the listing")
    p.add_argument("--no-verify", action="store_true", dest="no_verify")
    add_io(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("parity", help="parity of a hidden bitstring")
    p.add_argument("--bits", help="explicit bitstring, e.g. 10110")
    p.add_argument("--size", type=int, help="random bitstring of this length")
    p.add_argument("--seed", type=int, default=0, help="seed for --size")
    p.add_argument("--eps", type=float, default=0.2)
    p.add_argument("--quantize", help="off (default), auto, or a bit count")
    p.add_argument("--backend", choices=("py", "cy"))
    add_io(p, fmt=False)
    p.set_defaults(func=cmd_parity)

    p = sub.add_parser("tables", help="check the worked halving traces")
    add_io(p, fmt=False)
    p.set_defaults(func=cmd_tables)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except HamsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
