"""Command-line harness: bias-curve and rate experiments, bootstrap traces,
modulus sweeps, entropy-bound sweeps, and a verify command replaying the
bundled reference values.

Every CSV gets a sibling .meta.json echoing the full configuration, so a
run is reproducible from its artifacts alone.
"""

import argparse
import csv
import json
import random
import sys
from fractions import Fraction
from importlib import resources

from . import __version__
from .funcs import catalog_get, load_pwl_csv
from .precision import default_bits


def parse_function(spec, n=None):
    """Mini-language: entropy | power:0.5 | absdev | xlog:1,1 | sawtooth |
    variance_gadget:10 | poly:c0,c1,... | pwl:path.csv | affine:a,b."""
    name, _, arg = spec.partition(":")
    if name == "entropy" or name == "absdev":
        return catalog_get(name)
    if name == "power":
        return catalog_get("power", {"alpha": float(arg)})
    if name == "xlog":
        d, g = arg.split(",")
        return catalog_get("xlog", {"delta": float(d), "gamma": float(g)})
    if name == "sawtooth":
        return catalog_get("sawtooth", {"n": n})
    if name == "variance_gadget":
        return catalog_get("variance_gadget", {"n": int(arg) if arg else n})
    if name == "poly":
        return catalog_get("poly", {"coeffs": [Fraction(c) for c in arg.split(",")]})
    if name == "affine":
        a, b = arg.split(",")
        return catalog_get("affine", {"a": Fraction(a), "b": Fraction(b)})
    if name == "pwl":
        return load_pwl_csv(arg)
    raise ValueError(f"unknown function spec {spec!r}")


def _write_csv(path, header, rows, meta):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    with open(path + ".meta.json" if not path.endswith(".csv")
              else path[:-4] + ".meta.json", "w") as fh:
        json.dump({"version": __version__, **meta}, fh, indent=2, default=str)
        fh.write("\n")


def _scheme_for(args, n):
    from . import jackknife as jk

    if args.scheme == "half":
        return jk.scheme_general([n // 2, n])
    if args.scheme and args.scheme.startswith("sizes:"):
        return jk.scheme_general([int(x) for x in args.scheme[6:].split(",")])
    return jk.scheme_delete_d(n, args.r, args.delete)


def cmd_jackknife(args):
    from . import jackknife as jk

    rows = []
    if args.n_list:
        for n in args.n_list:
            f = parse_function(args.function, n=n)
            scheme = _scheme_for(args, n)
            if args.at_p == "inv_n":
                p = Fraction(1, n)
                val = abs(float(jk.bias_at(f, scheme, p)))
                rows.append((n, val, float(p)))
            else:
                curve = jk.bias_curve(f, scheme, grid_size=args.grid)
                rows.append((n, curve.sup_abs, curve.argmax_p))
        meta = {"command": "jackknife", "config": vars(args)}
        if len(rows) >= 3:
            from .smoothness import rate_fit

            meta["rate_fit"] = rate_fit([(n, v) for n, v, _ in rows])
        _write_csv(args.out, ["n", "sup_abs_bias", "argmax_p"], rows, meta)
    else:
        n = args.n
        f = parse_function(args.function, n=n)
        scheme = _scheme_for(args, n)
        curve = jk.bias_curve(f, scheme, grid_size=args.grid)
        rows = list(zip(curve.grid, curve.values))
        _write_csv(args.out, ["p", "bias"], rows,
                   {"command": "jackknife", "config": vars(args),
                    "sup_abs": curve.sup_abs, "argmax_p": curve.argmax_p})
    return 0


def cmd_bootstrap(args):
    from . import bootstrap as bs

    n = args.n
    f = parse_function(args.function, n=n)
    nbits = args.bits or default_bits()
    if args.limit_gap:
        gap = bs.limit_gap(f, n, args.m_max, nbits=nbits)
        _write_csv(args.out, ["m", "limit_gap"], [(args.m_max, gap)],
                   {"command": "bootstrap", "config": vars(args)})
        return 0
    trace = bs.trace_sup(f, n, args.m_max, stride=args.stride, nbits=nbits,
                         grid_size=args.grid)
    rows = [(m, sup, arg, int(i % 100 == 0)) for i, (m, sup, arg) in enumerate(trace)]
    gap = bs.lagrange_sup_gap(f, n, grid_size=max(args.grid, 10001), nbits=nbits)
    rows.append(("limit", gap, "", ""))
    _write_csv(args.out, ["m", "sup_abs_bias", "argmax_p", "refined"], rows,
               {"command": "bootstrap", "config": vars(args),
                "lagrange_sup_gap": gap})
    return 0


def cmd_taylor(args):
    from . import taylor as ty

    rows = []
    for n in args.n_list or [args.n]:
        f = parse_function(args.function, n=n)
        curve = ty.taylor_bias_curve(f, args.k, n, grid_size=args.grid)
        rows.append((n, curve.sup_abs, curve.argmax_p))
    meta = {"command": "taylor", "config": vars(args)}
    if len(rows) >= 3:
        from .smoothness import rate_fit

        meta["rate_fit"] = rate_fit([(n, v) for n, v, _ in rows])
    _write_csv(args.out, ["n", "sup_abs_bias", "argmax_p"], rows, meta)
    return 0


def cmd_modulus(args):
    from . import smoothness as sm

    f = parse_function(args.function)
    lo, _, hi = args.t_ladder.partition("..")
    ts = [2.0 ** -e for e in range(int(lo), int(hi) + 1)]
    results = sm.modulus_ladder(f, args.r, ts, weighted=not args.classical)
    rows = [(res.t, res.value, res.value / res.t**args.r) for res in results]
    _write_csv(args.out, ["t", "value", "ratio"], rows,
               {"command": "modulus", "config": vars(args)})
    return 0


def cmd_entbounds(args):
    from . import smoothness as sm

    rng = random.Random(args.seed)
    rows = []
    held = 0
    for i in range(args.random):
        vals = [rng.uniform(0.01, 4.0) for _ in range(4)]
        ws = [rng.uniform(0.01, 1.0) for _ in range(4)]
        tot = sum(ws)
        X = sm.DiscreteRV(tuple((v, w / tot) for v, w in zip(vals, ws)))
        rec = sm.ent_bounds(X)
        held += bool(rec["all_hold"])
        rows.append((i, rec["ent"], rec["upper_log"], rec["upper_sqrtvar"],
                     rec["lower_hell"], rec["lower_varsqrt"], rec["lower_tv"],
                     int(rec["all_hold"])))
    _write_csv(args.out, ["case", "ent", "upper_log", "upper_sqrtvar",
                          "lower_hell", "lower_varsqrt", "lower_tv", "all_hold"],
               rows, {"command": "entbounds", "config": vars(args),
                      "all_hold_count": held})
    print(f"all_hold count = {held}/{args.random}")
    return 0 if held == args.random else 1


def _reference_checks():
    """Fast subset of the acceptance suite, keyed to match the bundled refs."""
    from fractions import Fraction as F

    from . import bootstrap as bs, jackknife as jk
    from .binom import central_moment_poly, pmf_row
    from .funcs import catalog_get

    absdev = catalog_get("absdev")

    def lagrange_gap():
        return bs.lagrange_sup_gap(absdev, 20, grid_size=100001)

    def lagrange_point(n):
        def run():
            L = bs.lagrange_interpolant(absdev, n)
            return abs(float(L(F(3, 100))))

        return run

    def vandermonde():
        rng = random.Random(1)
        for _ in range(200):
            r = rng.randint(1, 6)
            sizes = sorted(rng.sample(range(max(r, 2), 600), r))
            jk.scheme_general(sizes)  # raises if identities fail
        return 1.0

    def gadget():
        n = 10
        var = jk.delete1_r2_variance(n, F(1, n), catalog_get("variance_gadget", {"n": n}))
        return float(var)

    def moments():
        for s in (2, 4, 6):
            T = central_moment_poly(s)
            for n in (5, 12):
                p = F(1, 3)
                exact = n**s * sum(
                    w * (F(k, n) - p) ** s for k, w in enumerate(pmf_row(n, p))
                )
                if T.eval(p, n) != exact:
                    return 0.0
        return 1.0

    def bootstrap_small():
        state = bs.iterate_bias(absdev, 6, 50, nbits=256)
        return bs.sup_e_m(state, grid_size=2001).sup_abs

    return {
        "lagrange_gap_absdev_n20": lagrange_gap,
        "lagrange_absdev_p003_n20": lagrange_point(20),
        "lagrange_absdev_p003_n40": lagrange_point(40),
        "vandermonde_random_200": vandermonde,
        "variance_gadget_n10_var_at_inv_n": gadget,
        "central_moment_recurrence_exact": moments,
        "bootstrap_absdev_n6_m50_sup": bootstrap_small,
    }


def cmd_verify(args):
    if args.reference:
        with open(args.reference) as fh:
            refs = json.load(fh)
    else:
        refs = json.loads(
            resources.files("binombias").joinpath("references/acceptance.json").read_text()
        )
    checks = _reference_checks()
    report = {}
    failed = False
    for item, ref in refs.items():
        if args.only and args.only not in item:
            continue
        if item not in checks:
            report[item] = {"error": "unknown reference item"}
            failed = True
            continue
        got = float(checks[item]())
        ok = abs(got - ref["value"]) <= ref["tol"]
        report[item] = {"expected": ref["value"], "got": got,
                        "tol": ref["tol"], "pass": ok}
        failed = failed or not ok
        print(f"{'PASS' if ok else 'FAIL'} {item}: got {got:.10g}, "
              f"expected {ref['value']:.10g} +- {ref['tol']:g}")
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    return 1 if failed else 0


def _add_common(sp, out=True):
    sp.add_argument("--config", help="JSON config file; flags override it")
    sp.add_argument("--bits", type=int, default=None)
    sp.add_argument("--seed", type=int, default=1)
    if out:
        sp.add_argument("--out", required=True, help="output CSV path")


def build_parser():
    ap = argparse.ArgumentParser(prog="binombias")
    sub = ap.add_subparsers(dest="command", required=True)

    j = sub.add_parser("jackknife")
    j.add_argument("--function")
    j.add_argument("--n", type=int)
    j.add_argument("--n-list", type=lambda s: [int(x) for x in s.split(",")])
    j.add_argument("--scheme", help="half or sizes:a,b,c")
    j.add_argument("--delete", type=int, default=1)
    j.add_argument("--r", type=int, default=2)
    j.add_argument("--at-p", choices=["inv_n"], default=None)
    j.add_argument("--grid", type=int, default=20001)
    _add_common(j)
    j.set_defaults(fn=cmd_jackknife)

    b = sub.add_parser("bootstrap")
    b.add_argument("--function")
    b.add_argument("--n", type=int)
    b.add_argument("--m-max", type=int)
    b.add_argument("--stride", type=int, default=1)
    b.add_argument("--grid", type=int, default=4001)
    b.add_argument("--limit-gap", action="store_true")
    _add_common(b)
    b.set_defaults(fn=cmd_bootstrap)

    t = sub.add_parser("taylor")
    t.add_argument("--function")
    t.add_argument("--k", type=int)
    t.add_argument("--n", type=int)
    t.add_argument("--n-list", type=lambda s: [int(x) for x in s.split(",")])
    t.add_argument("--grid", type=int, default=201)
    _add_common(t)
    t.set_defaults(fn=cmd_taylor)

    m = sub.add_parser("modulus")
    m.add_argument("--function")
    m.add_argument("--r", type=int, default=2)
    m.add_argument("--t-ladder", default="3..9", help="dyadic exponents a..b")
    m.add_argument("--classical", action="store_true")
    _add_common(m)
    m.set_defaults(fn=cmd_modulus)

    e = sub.add_parser("entbounds")
    e.add_argument("--random", type=int, default=1000)
    _add_common(e)
    e.set_defaults(fn=cmd_entbounds)

    v = sub.add_parser("verify")
    v.add_argument("--reference", help="reference JSON (default: bundled)")
    v.add_argument("--only", help="substring filter on item ids")
    v.add_argument("--report", help="write machine-readable JSON report here")
    _add_common(v, out=False)
    v.set_defaults(fn=cmd_verify)
    return ap


def _apply_config_file(args):
    if getattr(args, "config", None):
        with open(args.config) as fh:
            conf = json.load(fh)
        for key, val in conf.items():
            attr = key.replace("-", "_")
            # flags explicitly given on the command line win
            if getattr(args, attr, None) in (None, False):
                setattr(args, attr, val)


def main(argv=None):
    args = build_parser().parse_args(argv)
    _apply_config_file(args)
    if args.bits:
        from . import precision

        precision.DEFAULT_BITS = args.bits
    try:
        return args.fn(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
