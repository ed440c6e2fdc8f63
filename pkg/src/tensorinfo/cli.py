"""Command-line front end.

Subcommands: scalar, solve2, solve3, sweep, oracle, verify. Output is
JSON lines (and CSV for sweeps) meant for downstream plotting; nothing
is rendered here.

Exit codes: 0 success, 1 verification failure, 2 parse error, 3 domain
error, 4 solver failure, 5 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import identities, oracle, priors, solvers
from .potentials import make_params
from .scalar_channel import DomainError, QuadratureConfig, ScalarChannel
from .solvers import DELTA_NONTRIVIAL, SolverConfig

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_PARSE = 2
EXIT_DOMAIN = 3
EXIT_SOLVER = 4
EXIT_IO = 5

CSV_HEADER = "lambda,f_rs,mi_per_n,m_u,m_v,m_w,branch,gamma_count"


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def _worker_count() -> int:
    env = os.environ.get("TENSORINFO_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _solver_config(args) -> SolverConfig:
    kwargs = {}
    for name in ("damping", "tol", "max_iter", "init_grid", "dedup_tol",
                 "grid_refine_levels"):
        value = getattr(args, name, None)
        if value is not None:
            kwargs[name] = value
    return SolverConfig(**kwargs)


def _apply_config_file(args):
    """Fill unset arguments from the JSON config file; flags win."""
    if not getattr(args, "config", None):
        return
    with open(args.config) as fh:
        conf = json.load(fh)
    for key, value in conf.items():
        dest = "lam" if key == "lambda" else key
        if hasattr(args, dest) and getattr(args, dest) is None:
            setattr(args, dest, value)


def _model_params(args):
    prior_specs = args.prior
    if len(prior_specs) == 1:
        prior_specs = prior_specs * args.order
    if len(prior_specs) != args.order:
        raise priors.PriorError(
            f"expected 1 or {args.order} priors, got {len(prior_specs)}")
    alphas = args.alpha
    if alphas is not None and len(alphas) == 1:
        alphas = alphas * args.order
    return make_params(args.order, args.lam, prior_specs, alphas)


# -- subcommands -------------------------------------------------------------

def cmd_scalar(args) -> int:
    prior = priors.construct_prior(args.prior[0])
    ch = ScalarChannel(prior, QuadratureConfig())
    record = {
        "m": args.m,
        "f_tilde": ch.free_energy(args.m),
        "overlap": ch.overlap(args.m),
        "mmse": ch.mmse(args.m),
        "scalar_mi": ch.mutual_info(args.m),
    }
    print(json.dumps(record))
    return EXIT_OK


def cmd_solve(args) -> int:
    params = _model_params(args)
    cfg = _solver_config(args)
    gamma = solvers.enumerate_gamma(params, cfg)
    if args.order == 2:
        rs = solvers.rs_free_energy2(params, cfg)
        other = solvers.inf_sup2(params, cfg)
    else:
        rs = solvers.rs_free_energy3(params, cfg)
        other = solvers.inf_sup_aux3(params, cfg)
    record = {
        "lambda": params.lam,
        "f_rs": rs.free_energy,
        "mi_per_n": rs.mutual_info_per_n,
        "minimizer": list(rs.minimizer),
        "branch": rs.branch,
        "method": rs.method,
        "gamma_points": [list(cp.point) for cp in gamma],
        "inf_sup": other.free_energy,
        "gap": abs(rs.free_energy - other.free_energy),
    }
    print(json.dumps(record))
    return EXIT_OK


def _sweep_row(params, lam, cfg):
    rs = solvers.rs_free_energy(params.with_lambda(lam), cfg)
    return lam, rs


def cmd_sweep(args) -> int:
    if args.lam_start > args.lam_end or args.lam_step <= 0:
        raise DomainError("need lam_start <= lam_end and lam_step > 0")
    args.lam = args.lam_start
    params = _model_params(args)
    cfg = _solver_config(args)
    n_steps = int(round((args.lam_end - args.lam_start) / args.lam_step))
    lams = [args.lam_start + i * args.lam_step for i in range(n_steps + 1)]

    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(lambda l: _sweep_row(params, l, cfg), lams))
    else:
        rows = [_sweep_row(params, lam, cfg) for lam in lams]
    rows.sort(key=lambda r: r[0])

    lines = [CSV_HEADER]
    for lam, rs in rows:
        m = list(rs.minimizer) + [None] * (3 - len(rs.minimizer))
        fields = [_fmt(lam), _fmt(rs.free_energy), _fmt(rs.mutual_info_per_n),
                  _fmt(m[0]), _fmt(m[1]),
                  _fmt(m[2]) if m[2] is not None else "",
                  rs.branch, str(rs.gamma_count)]
        lines.append(",".join(fields))

    first_nontrivial = max(rows[0][1].minimizer) > DELTA_NONTRIVIAL
    last_nontrivial = max(rows[-1][1].minimizer) > DELTA_NONTRIVIAL
    if not first_nontrivial and last_nontrivial:
        th = solvers.find_lambda_opt(params, rows[0][0], rows[-1][0], cfg)
        footer = {"lambda_opt": th.lambda_opt, "kind": th.kind,
                  "lambda_emergence": th.lambda_emergence}
    else:
        footer = {"transition": "no transition in range"}
    lines.append(json.dumps(footer))

    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_oracle(args) -> int:
    prior_specs = args.prior
    if len(prior_specs) == 1:
        prior_specs = prior_specs * args.order
    p = oracle.OracleParams(
        order=args.order, n=args.n, lam=args.lam,
        priors=tuple(priors.construct_prior(s) for s in prior_specs),
        disorder_samples=args.samples, seed=args.seed)
    est = oracle.exact_free_energy(p)
    record = {"order": p.order, "n": p.n, "lambda": p.lam, "M": p.disorder_samples,
              "seed": p.seed, "mean_f": est.mean_f, "stderr": est.stderr,
              "overlaps": list(est.mean_overlaps)}
    print(json.dumps(record))
    return EXIT_OK


# -- verification suites ------------------------------------------------------

def _emit(check: dict) -> bool:
    check["pass"] = bool(check.get("pass"))   # numpy bools are not JSON
    print(json.dumps(check))
    return check["pass"]


def _suite_lemmas(args) -> bool:
    rng = np.random.default_rng(args.seed)
    ok = True

    def sqrt_fn(a):
        return lambda x: np.sqrt(1.0 + (a * x) ** 2)

    def sqrt_deriv(a):
        return lambda x: a * a * x / np.sqrt(1.0 + (a * x) ** 2)

    f = identities.ScalarFunction(sqrt_fn(1.0), 2.0, sqrt_deriv(1.0))
    g = identities.ScalarFunction(sqrt_fn(1.5), 2.0, sqrt_deriv(1.5))
    rep = identities.verify_sup_inf(f, g, tol=args.tol)
    ok &= _emit({"lemma": "sup_inf_exchange", "inputs": "sqrt-family",
                 "values": rep.values.get("sup_inf"), "gaps": rep.gaps,
                 "pass": rep.status == "ok" and rep.passed})

    rep = identities.envelope_phi(f, g, t=2.0, tol=args.tol)
    ok &= _emit({"lemma": "envelope_derivative", "inputs": "sqrt-family t=2",
                 "values": rep.values.get("phi"), "gaps": rep.gaps,
                 "pass": rep.status == "ok" and rep.passed})

    f3 = identities.ScalarFunction(sqrt_fn(0.8), 2.0, sqrt_deriv(0.8))
    rep = identities.verify_se_equivalence(f, g, f3, tol=args.tol)
    ok &= _emit({"lemma": "se_equivalence", "inputs": "sqrt-family",
                 "values": rep.values.get("lhs"), "gaps": rep.gaps,
                 "pass": rep.status == "ok" and rep.passed})

    for trial in range(args.trials):
        a, b = _random_admissible(rng), _random_admissible(rng)
        a, b = _shared_bound(a, b)
        rep = identities.verify_sup_inf(a, b, tol=args.tol)
        ok &= _emit({"lemma": "sup_inf_exchange",
                     "inputs": f"random trial {trial}", "gaps": rep.gaps,
                     "pass": rep.status == "ok" and rep.passed})
    for trial in range(args.trials):
        a, b = _random_admissible(rng), _random_admissible(rng)
        t = float(rng.uniform(0.0, 3.0))
        rep = identities.envelope_phi(a, b, t, tol=args.tol)
        ok &= _emit({"lemma": "envelope_derivative",
                     "inputs": f"random trial {trial} t={t:.3f}",
                     "gaps": rep.gaps,
                     "pass": rep.status == "ok" and rep.passed})
    for trial in range(args.trials):
        fs = [_random_admissible(rng) for _ in range(3)]
        rep = identities.verify_se_equivalence(*fs, tol=args.tol)
        ok &= _emit({"lemma": "se_equivalence",
                     "inputs": f"random trial {trial}", "gaps": rep.gaps,
                     "pass": rep.status == "ok" and rep.passed})
    return ok


def _random_admissible(rng) -> identities.ScalarFunction:
    """Random positive mixture of sqrt(1 + (a x)^2) terms.

    The box bound tracks the mixture's Lipschitz constant sum(c a) so the
    sup-inf optima stay interior regardless of the drawn coefficients.
    """
    k = int(rng.integers(1, 4))
    cs = rng.uniform(0.2, 1.5, size=k)
    As = rng.uniform(0.3, 2.0, size=k)
    bound = 1.3 * float(np.dot(cs, As)) + 0.5

    def fn(x):
        x = np.asarray(x, dtype=float)
        return sum(c * np.sqrt(1.0 + (a * x) ** 2) for c, a in zip(cs, As))

    def deriv(x):
        x = np.asarray(x, dtype=float)
        return sum(c * a * a * x / np.sqrt(1.0 + (a * x) ** 2)
                   for c, a in zip(cs, As))

    return identities.ScalarFunction(fn, bound, deriv)


def _shared_bound(a, b):
    """Put a pair of functions on the larger of their two boxes."""
    bb = max(a.bound, b.bound)
    return (identities.ScalarFunction(a.fn, bb, a.deriv),
            identities.ScalarFunction(b.fn, bb, b.deriv))


def _suite_theorems(args) -> bool:
    ok = True
    tol = 1e-6
    families = {"gaussian": "gaussian:1.0", "rademacher": "rademacher",
                "sparse_rademacher": "sparse_rademacher:0.25"}
    lams2 = (0.5, 1.5, 3.0) if args.fast else (0.5, 1.5, 3.0, 6.0)
    max_gap = 0.0
    for name, spec in families.items():
        for lam in lams2:
            params = make_params(2, lam, [spec, spec])
            a = solvers.rs_free_energy2(params)
            b = solvers.inf_sup2(params)
            gap = abs(a.free_energy - b.free_energy)
            max_gap = max(max_gap, gap)
            ok &= _emit({"check": "theorem1", "prior": name, "lambda": lam,
                         "values": [a.free_energy, b.free_energy],
                         "gaps": gap, "pass": gap <= tol})
    lams3 = (2.0, 4.0) if args.fast else (2.0, 4.0, 6.0)
    for name, spec in (("gaussian", "gaussian:1.0"), ("rademacher", "rademacher")):
        for lam in lams3:
            params = make_params(3, lam, [spec] * 3)
            a = solvers.rs_free_energy3(params)
            b = solvers.inf_sup_aux3(params)
            gap = abs(a.free_energy - b.free_energy)
            ok &= _emit({"check": "theorem2_prop1", "prior": name, "lambda": lam,
                         "values": [a.free_energy, b.free_energy],
                         "gaps": gap, "pass": gap <= tol})
    return ok


def _suite_oracle(args) -> bool:
    ok = True
    M = 50 if args.fast else 2000
    lams = (0.5, 2.0) if args.fast else (0.5, 1.0, 2.0, 4.0)
    rad = priors.rademacher()
    ch = ScalarChannel(rad)
    for lam in lams:
        p = oracle.OracleParams(order=2, n=1, lam=lam, priors=(rad, rad),
                                disorder_samples=M, seed=args.seed)
        est = oracle.exact_free_energy2(p)
        target = ch.free_energy(lam)
        gap = abs(est.mean_f - target)
        limit = 4 * max(est.stderr, 1e-12)
        ok &= _emit({"check": "oracle_n1_order2", "lambda": lam,
                     "values": [est.mean_f, target], "gaps": gap,
                     "pass": gap <= limit})
    n_max = 4 if args.fast else 6
    for n in (2, n_max):
        p = oracle.OracleParams(order=2, n=n, lam=3.0, priors=(rad, rad),
                                disorder_samples=M if args.fast else 200,
                                seed=args.seed)
        est = oracle.exact_free_energy2(p)
        rs = solvers.rs_free_energy2(make_params(2, 3.0, ["rademacher"] * 2))
        gap = abs(est.mean_f - rs.free_energy)
        limit = 3 * est.stderr + 2.0 / n
        ok &= _emit({"check": "oracle_convergence", "n": n,
                     "values": [est.mean_f, rs.free_energy], "gaps": gap,
                     "pass": gap <= limit})
    return ok


def cmd_verify(args) -> int:
    suites = {"lemmas": _suite_lemmas, "theorems": _suite_theorems,
              "oracle": _suite_oracle}
    ok = suites[args.suite](args)
    return EXIT_OK if ok else EXIT_VERIFY


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tensorinfo",
        description="Replica-symmetric free energies and phase transitions "
                    "for rank-one matrix/tensor estimation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--damping", type=float, default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--max-iter", dest="max_iter", type=int, default=None)
        p.add_argument("--init-grid", dest="init_grid", type=int, default=None)
        p.add_argument("--dedup-tol", dest="dedup_tol", type=float, default=None)
        p.add_argument("--grid-refine-levels", dest="grid_refine_levels",
                       type=int, default=None)

    p = sub.add_parser("scalar", help="scalar-channel quantities at snr m")
    p.add_argument("--prior", action="append", required=True)
    p.add_argument("--m", type=float, required=True)
    p.set_defaults(func=cmd_scalar)

    for order in (2, 3):
        p = sub.add_parser(f"solve{order}",
                           help=f"order-{order} free energy at one snr")
        p.add_argument("--prior", action="append", required=True)
        p.add_argument("--lambda", dest="lam", type=float, required=True)
        p.add_argument("--alpha", action="append", type=float, default=None)
        add_common(p)
        p.set_defaults(func=cmd_solve, order=order)

    p = sub.add_parser("sweep", help="lambda sweep with transition detection")
    p.add_argument("--order", type=int, choices=(2, 3), required=True)
    p.add_argument("--prior", action="append", required=True)
    p.add_argument("--lambda-start", dest="lam_start", type=float, required=True)
    p.add_argument("--lambda-end", dest="lam_end", type=float, required=True)
    p.add_argument("--lambda-step", dest="lam_step", type=float, required=True)
    p.add_argument("--alpha", action="append", type=float, default=None)
    p.add_argument("--output", default=None, help="CSV path (stdout if absent)")
    add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="exact finite-n free energy")
    p.add_argument("--order", type=int, choices=(2, 3), required=True)
    p.add_argument("--prior", action="append", required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("verify", help="run a verification battery")
    p.add_argument("--suite", choices=("lemmas", "theorems", "oracle"),
                   required=True)
    p.add_argument("--fast", action="store_true")
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_file(args)
        return args.func(args)
    except priors.PriorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (json.JSONDecodeError,) as exc:
        print(f"error: bad config: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except solvers.SolverError as exc:
        print(f"error: {exc} (worst residual {exc.worst_residual:.3e})",
              file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
