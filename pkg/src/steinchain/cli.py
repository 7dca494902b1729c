"""Command line: ``steinchain {report,sweep,gwi,verify}``."""
import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .chainparams import chain_params, transition_matrix
from .distributions import ParameterError, make_custom_pmf, make_pmf
from .generators import BirthDeathGenerator, gwi_generator, make_chain, validate
from .hitting import edge_terms, hitting_table
from .oracle import (alpha_potential_matrix, brute_sup_over_h, deviation_numeric, mc_hitting,
                     semigroup_ode)
from .spectral import eigenvalues, t_av_random_target
from .stein import (Inequality, certify_bounds, deviation_kernel, deviation_kernel_algebraic,
                    dirac_sup_norms, gradient_sup_profile, gradient_table, uniform_class_sups)

EXIT_OK, EXIT_PARAM, EXIT_CERT = 0, 2, 3
SPECTRUM_HEAD = 10


# -- serialization -----------------------------------------------------------

def _plain(x):
    """Recursively convert numpy scalars/arrays so ``json`` can write them."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def dumps(doc):
    # float repr is the shortest string that round-trips exactly
    return json.dumps(_plain(doc), indent=2, allow_nan=False)


def _flatten(prefix, x, rows):
    if isinstance(x, dict):
        for k, v in x.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, rows)
    elif isinstance(x, list) and x and isinstance(x[0], dict):
        for n, v in enumerate(x):
            _flatten(f"{prefix}[{n}]", v, rows)
    else:
        rows.append((prefix, json.dumps(x) if isinstance(x, list) else x))


def to_csv_text(doc):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    rows = []
    _flatten("", _plain(doc), rows)
    w.writerows(rows)
    return buf.getvalue()


def table_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


# -- shared construction -----------------------------------------------------

def build_pmf(args):
    d = args.dist
    if d is None:
        raise ParameterError("dist", "is required")
    if d == "custom":
        if not args.weights:
            raise ParameterError("weights", "custom distributions need --weights")
        try:
            w = [float(x) for x in args.weights.split(",")]
        except ValueError as exc:
            raise ParameterError("weights", f"not a comma-separated list of numbers: {args.weights!r}") from exc
        return make_custom_pmf(w)
    need = {"uniform": ("n",), "binomial": ("n", "p"), "geometric": ("p",),
            "hypergeometric": ("n", "r"), "negative_binomial": ("r", "p")}
    if d not in need:
        raise ParameterError("dist", f"unknown family {d!r}")
    kw = {}
    for name in need[d]:
        v = getattr(args, name)
        if v is None:
            raise ParameterError(name, f"is required for {d}")
        kw[name] = v
    return make_pmf(d, **kw)


def _eps_list(text):
    try:
        return tuple(float(x) for x in str(text).split(","))
    except ValueError as exc:
        raise ParameterError("eps", f"not a number list: {text!r}") from exc


def _table(gen):
    return hitting_table(gen, "closed_form" if isinstance(gen, BirthDeathGenerator) else "linear_solve")


# -- report ------------------------------------------------------------------

def _example_block(pmf, gen, D, table, spectrum, params, sups):
    """Family-specific comparison constants and bounds."""
    f, prm = pmf.family, pmf.params
    block = {}
    ineqs = []
    if f == "uniform" and not isinstance(gen, BirthDeathGenerator):
        n = prm["n"]
        sup_f, sup_g = dirac_sup_norms(gen, D, table)
        offdiag = table.times[~np.eye(n, dtype=bool)]
        block["example_uniform"] = {
            "note": "published closed forms beside values computed for the chain at the given jump rate; "
                    "the published values are not consistent with any single jump rate",
            "published": {
                "E_i(tau_j), i != j": n - 1,
                "nonzero eigenvalue": 1.0 / n,
                "D(j,j)": ((n - 1) / n) ** 2,
                "D(i,j)": -(n - 1) / n ** 2,
                "t_av": (n - 1) / n,
                "||f_delta_j||": ((n - 1) / n) ** 2,
                "||grad f_delta_j||": (n - 1) / n,
                "relaxation gradient bound 5 n log(4n)": 5 * n * math.log(4 * n),
            },
            "computed": {
                "E_i(tau_j), i != j": float(np.max(offdiag)),
                "nonzero eigenvalue": float(spectrum.eigenvalues[1]),
                "D(j,j)": float(np.max(np.diag(D.d))),
                "D(i,j)": float(np.min(D.d)),
                "t_av": params.t_av,
                "||f_delta_j||": float(sup_f.max()),
                "||grad f_delta_j||": float(sup_g.max()),
                "relaxation gradient bound 5 t_rel log(4/pi_min)":
                    5 * params.t_rel * math.log(4 / params.pi_min),
                "exact sup_h ||f_h|| * n": n * max(s.sup_f for s in sups),
            },
        }
    elif f == "binomial":
        n, p = prm["n"], prm["p"]
        block["example_binomial"] = {
            "harmonic_number": math.fsum(1.0 / np.arange(1, n + 1)),
            "t_av": params.t_av,
            "relaxation gradient bound 5 n min(log(4/(1-p)), log(4/p))":
                5 * n * min(math.log(4 / (1 - p)), math.log(4 / p)),
            "literature gradient bound min(1/(1-p), 1/p)": min(1 / (1 - p), 1 / p),
            "exact sup_h ||grad f_h||": max((s.sup_grad for s in sups[:-1]), default=0.0),
        }
    elif f == "hypergeometric":
        n, r = prm["n"], prm["r"]
        i = np.arange(1, r + 1)
        masses = pmf.masses()
        block["example_hypergeometric"] = {
            "2 r(n-r) sum 1/(i(n-i+1))": 2 * r * (n - r) * math.fsum(1.0 / (i * (n - i + 1))),
            "(2r(n-r)/n) log r": 2 * r * (n - r) / n * math.log(r) if r > 1 else 0.0,
            "5 r(n-r)/n log(max 4/pi)": 5 * r * (n - r) / n * math.log(4 / masses.min()),
            "exact sup_h ||f_h||": max(s.sup_f for s in sups),
            "exact sup_h ||grad f_h||": max((s.sup_grad for s in sups[:-1]), default=0.0),
        }
    elif f == "geometric":
        p = prm["p"]
        exact, l1 = gradient_sup_profile(gen, untruncated=True)
        k = np.arange(exact.size)
        bound = 2 * (1 - (1 - p) ** (k + 1)) / (p * (k + 1))
        worst = int(np.argmax(l1 / bound))
        block["example_geometric"] = {
            "per-state bound 2(1-(1-p)^(i+1))/(p(i+1))": bound,
            "sum_j pi_j |E_i tau_j - E_i+1 tau_j|": l1,
            "exact sup_h |grad f_h(i)|": exact,
            "global bound 2/p": 2 / p,
            "literature constant min(1, 1+p)": min(1.0, 1.0 + p),
            "comparison": "2/p exceeds min(1, 1+p) for every p in (0, 1): the hitting-time bound is looser",
        }
        ineqs.append(Inequality("sum_j pi_j |grad E(i)| <= 2(1-(1-p)^(i+1))/(p(i+1))",
                                float(l1[worst]), float(bound[worst]), tol=1e-12,
                                note=f"worst i={worst}; equality holds for the infinite chain"))
        ineqs.append(Inequality("sup_h ||grad f_h|| <= 2/p", float(exact.max()), 2 / p))
    return block, ineqs


def build_report(pmf, gen, eps=(0.25,), alpha=0.25):
    table = _table(gen)
    spectrum = eigenvalues(gen)
    D = deviation_kernel(gen, table)
    params = chain_params(gen, eps=eps, alpha=alpha, table=table, spectrum=spectrum, D=D)
    report = certify_bounds(gen, params, D, table)
    sups = uniform_class_sups(gen, D, table, params.t_av)
    block, extra = _example_block(pmf, gen, D, table, spectrum, params, sups)
    report.inequalities.extend(extra)
    pi = gen.pi
    val = validate(gen)
    doc = {
        "version": __version__,
        "distribution": pmf.describe(),
        "chain": gen.label,
        "window": [0, gen.window_upper],
        "truncation": None if getattr(gen, "truncation", None) is None else {
            "tail_mass": gen.truncation.tail_mass, "tol": gen.truncation.tol},
        "pi": {"min": float(pi.min()), "max": float(pi.max()), "argmax": int(np.argmax(pi)),
               "mean": float(np.arange(pi.size) @ pi)},
        "validation": {"detailed_balance": val.detailed_balance, "row_sum": val.row_sum,
                       "stationarity": val.stationarity},
        "spectrum_head": spectrum.eigenvalues[:SPECTRUM_HEAD],
        "parameters": params.to_dict(),
        "stein": {
            "sup_h ||f_h||": max(s.sup_f for s in sups),
            "sup_h ||grad f_h||": max((s.sup_grad for s in sups[:-1]), default=0.0),
            "max_j ||f_delta_j||": float(dirac_sup_norms(gen, D, table)[0].max()),
            "max_j ||grad f_delta_j||": float(dirac_sup_norms(gen, D, table)[1].max()),
        },
        **block,
    }
    if isinstance(gen, BirthDeathGenerator):
        doc["rates"] = {"birth": gen.birth[:-1], "death": gen.death[1:]}
    doc.update(report.to_dict())
    return doc, report.passed


def cmd_report(args):
    pmf = build_pmf(args)
    gen = make_chain(pmf, args.chain, args.scale, args.trunc_tol)
    doc, ok = build_report(pmf, gen, _eps_list(args.eps), args.alpha)
    _emit(dumps(doc) if args.format == "json" else to_csv_text(doc), args.out)
    return EXIT_OK if ok else EXIT_CERT


# -- sweep -------------------------------------------------------------------

def _threads():
    env = os.environ.get("STEINCHAIN_THREADS")
    return max(1, int(env)) if env else min(8, os.cpu_count() or 1)


def _sweep_point(family, x, args):
    if family == "binomial":
        pmf = make_pmf("binomial", n=int(x), p=args.p if args.p is not None else 0.5)
        gen = make_chain(pmf, args.chain or "paper-example", args.scale, args.trunc_tol)
        spec = eigenvalues(gen)
        tav = math.fsum(1.0 / spec.nonzero)
        tav_rt = t_av_random_target(gen)
        h = math.fsum(1.0 / np.arange(1, int(x) + 1))
        return {"n": int(x), "t_av": tav, "t_av_random_target": tav_rt, "H_n": h,
                "t_av/H_n": tav / h, "t_av/log n": tav / math.log(x)}
    if family == "uniform":
        pmf = make_pmf("uniform", n=int(x))
        gen = make_chain(pmf, args.chain or "complete-graph", args.scale, args.trunc_tol)
        D = deviation_kernel(gen)
        sup_f = max(s.sup_f for s in uniform_class_sups(gen, D))
        return {"n": int(x), "sup_h ||f_h||": sup_f, "sup_h ||f_h|| * n": sup_f * x,
                "t_av": D.trace}
    if family == "hypergeometric":
        ratio = args.ratio
        r = int(x)
        n = int(round(ratio * r))
        pmf = make_pmf("hypergeometric", n=n, r=r)
        gen = make_chain(pmf, args.chain or "paper-example", args.scale, args.trunc_tol)
        D = deviation_kernel(gen)
        sup_f = max(s.sup_f for s in uniform_class_sups(gen, D))
        scale = 2 * r * (n - r) / n * math.log(r) if r > 1 else float("nan")
        return {"n": n, "r": r, "2 t_av": 2 * D.trace, "sup_h ||f_h||": sup_f,
                "2 t_av / ((2r(n-r)/n) log r)": 2 * D.trace / scale}
    raise ParameterError("dist", f"no sweep defined for {family!r}")


def run_sweep(family, grid, args):
    with ThreadPoolExecutor(min(_threads(), len(grid))) as pool:
        return list(pool.map(lambda x: _sweep_point(family, x, args), grid))


def cmd_sweep(args):
    if not args.grid:
        raise ParameterError("grid", "must be nonempty")
    try:
        grid = [float(x) for x in args.grid.split(",")]
    except ValueError as exc:
        raise ParameterError("grid", f"not a number list: {args.grid!r}") from exc
    rows = run_sweep(args.dist, grid, args)
    if args.format == "json":
        _emit(dumps({"family": args.dist, "rows": rows}), args.out)
    else:
        header = list(rows[0])
        _emit(table_csv(header, [[r[k] for k in header] for r in rows]), args.out)
    return EXIT_OK


# -- gwi ---------------------------------------------------------------------

def gwi_table(r, p, i_max, tol=1e-12):
    """Per-state hitting times of 0 for the GWI chain and the linear bound."""
    gen = gwi_generator(r, p, tol, min_upper=i_max + 1)
    _, hi = edge_terms(gen, untruncated=True)
    e0 = np.concatenate([[0.0], np.cumsum(hi)])
    C = 1.0 / (1.0 - p)
    pi0 = (1.0 - p) ** r
    rows = []
    for i in range(i_max + 1):
        bound = C * (1.0 - p) ** (-r) * i
        grad = pi0 * (e0[i] - e0[i + 1])
        rows.append({"i": i, "E_i(tau_0)": e0[i], "bound": bound, "slack": bound - e0[i],
                     "grad f_delta_0(i)": grad, "factor bound": C, "factor slack": C - abs(grad)})
    return rows


def cmd_gwi(args):
    r = args.r if args.r is not None else 2.0
    p = args.p if args.p is not None else 0.4
    if not r > 0:
        raise ParameterError("r", f"must be > 0, got {r!r}")
    if not 0 < p < 1:
        raise ParameterError("p", f"must lie in (0, 1), got {p!r}")
    rows = gwi_table(r, p, args.i_max, args.trunc_tol)
    ok = all(row["slack"] >= 0 and row["factor slack"] >= 0 for row in rows)
    if args.format == "json":
        _emit(dumps({"r": r, "p": p, "passed": ok, "rows": rows}), args.out)
    else:
        header = list(rows[0])
        _emit(table_csv(header, [[row[k] for k in header] for row in rows]), args.out)
    return EXIT_OK if ok else EXIT_CERT


# -- verify ------------------------------------------------------------------

def verify_checks(gen, seed=0, mc_pairs=5, mc_samples=100_000):
    """Residuals of every oracle cross-check on one chain.

    Returns ``(name, value, tol, certified)`` rows.  Uncertified rows are
    diagnostics whose threshold depends on the chain's time scale.
    """
    out = []
    bd = isinstance(gen, BirthDeathGenerator)
    table = _table(gen)
    E = table.times
    if bd:
        for m in ("linear_solve", "eigen_formula"):
            other = hitting_table(gen, m).times
            rel = float(np.max(np.abs(other - E) / np.maximum(np.abs(E), 1e-300)))
            out.append((f"hitting closed_form vs {m} (rel)", rel, 1e-7))
    D = deviation_kernel(gen, table)
    tav = D.trace
    out.append(("D row sums / t_av", D.row_sum_residual() / tav, 1e-8))
    out.append(("pi D / t_av", D.left_null_residual() / tav, 1e-8))
    out.append(("L D = D L = Pi - I", D.generator_residual(gen.q), 1e-8))
    alg = deviation_kernel_algebraic(gen)
    out.append(("D hitting vs algebraic / (1+t_av)", float(np.max(np.abs(alg.d - D.d))) / (1 + tav), 1e-8))
    num = deviation_numeric(gen)
    out.append(("D hitting vs numeric integral", float(np.max(np.abs(num.d - D.d))), 1e-6))
    out.append(("t_av eigentime vs random target (rel)",
                abs(math.fsum(1.0 / eigenvalues(gen).nonzero) - t_av_random_target(gen, table)) / tav, 1e-8))
    s, t = 0.3, 0.7
    Ps, Pt, Pst = (transition_matrix(gen, x) for x in (s, t, s + t))
    out.append(("P_s P_t = P_(s+t)", float(np.max(np.abs(Ps @ Pt - Pst))), 1e-10))
    out.append(("uniformization vs ODE", float(np.max(np.abs(Pt - semigroup_ode(gen, t)))), 1e-8))
    Da = alpha_potential_matrix(gen, 1e-3)
    # resolvent identity: D^a - D = -a D^a D, so the gap is first order in a
    ident = float(np.max(np.abs(Da - D.d + 1e-3 * Da @ D.d))) / max(1.0, float(np.max(np.abs(Da))))
    out.append(("alpha-potential resolvent identity at 1e-3", ident, 1e-8))
    gap = float(np.max(np.abs(Da - D.d)))
    out.append(("alpha-potential gap at 1e-3 / t_av (diagnostic)", gap / tav, 1e-4, False))
    if gen.size <= 12:
        sups = uniform_class_sups(gen, D, table)
        err = 0.0
        for u in sups:
            b = brute_sup_over_h(D, gradient_table(gen, table) if bd else None, u.i)
            err = max(err, abs(b.sup_f - u.sup_f))
            if u.sup_grad is not None:
                err = max(err, abs(b.sup_grad - u.sup_grad))
        out.append(("sup over h: enumeration vs formula", err, 1e-12))
    rng = np.random.default_rng(seed)
    zmax = 0.0
    for k in range(mc_pairs):
        i, j = (int(v) for v in rng.choice(gen.size, 2, replace=False))
        est = mc_hitting(gen, i, j, mc_samples, seed=seed + k)
        zmax = max(zmax, abs(est.mean - E[i, j]) / est.stderr)
    out.append((f"Monte Carlo max |z| over {mc_pairs} pairs (seed {seed})", zmax, 3.0))
    return [row if len(row) == 4 else (*row, True) for row in out]


def cmd_verify(args):
    pmf = build_pmf(args)
    gen = make_chain(pmf, args.chain, args.scale, args.trunc_tol)
    seed = args.seed if args.seed is not None else 0
    checks = verify_checks(gen, seed=seed)
    ok = all(v <= tol for _, v, tol, cert in checks if cert)
    if args.format == "json":
        _emit(dumps({"chain": gen.label, "seed": seed, "passed": ok,
                     "checks": [{"name": n, "residual": v, "tol": tol, "pass": v <= tol, "certified": c}
                                for n, v, tol, c in checks]}), args.out)
    else:
        width = max(len(n) for n, *_ in checks)
        lines = [f"{'check':<{width}}  {'residual':>12}  {'tol':>8}  result"]
        for n, v, tol, c in checks:
            verdict = ("pass" if v <= tol else "FAIL") if c else ("below" if v <= tol else "above")
            lines.append(f"{n:<{width}}  {v:12.3e}  {tol:8.1e}  {verdict}")
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if ok else EXIT_CERT


# -- entry point -------------------------------------------------------------

def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dist", choices=("uniform", "binomial", "geometric", "hypergeometric",
                                           "negative_binomial", "custom"))
    common.add_argument("--n", type=int)
    common.add_argument("--p", type=float)
    common.add_argument("--r", type=float)
    common.add_argument("--weights", help="comma-separated unnormalized masses on 0..N")
    common.add_argument("--chain", default=None,
                        choices=("canonical", "paper-example", "complete-graph"))
    common.add_argument("--scale", type=float, default=1.0, help="jump rate of the complete-graph chain")
    common.add_argument("--eps", default="0.25", help="mixing threshold(s), comma separated")
    common.add_argument("--alpha", type=float, default=0.25)
    common.add_argument("--trunc-tol", type=float, default=1e-12)
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--seed", type=int)
    common.add_argument("--out")

    ap = argparse.ArgumentParser(prog="steinchain", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("report", parents=[common], help="Stein factors and certified bounds for one target")
    sw = sub.add_parser("sweep", parents=[common], help="parameter sweep as a CSV table")
    sw.add_argument("--grid", required=True, help="comma-separated n (or r for hypergeometric)")
    sw.add_argument("--ratio", type=float, default=2.0, help="n/r for hypergeometric sweeps")
    gw = sub.add_parser("gwi", parents=[common], help="GWI hitting times of 0 against the linear bound")
    gw.add_argument("--i-max", type=int, default=50)
    sub.add_parser("verify", parents=[common], help="run every oracle cross-check on one chain")
    return ap


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.format is None:
        args.format = "csv" if args.command == "sweep" else "json"
    if args.command in ("report", "verify") and args.chain is None:
        args.chain = "canonical"
    handler = {"report": cmd_report, "sweep": cmd_sweep, "gwi": cmd_gwi, "verify": cmd_verify}[args.command]
    try:
        return handler(args)
    except ParameterError as exc:
        print(f"steinchain: parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
