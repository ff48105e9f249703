"""``xhold`` command-line interface.

Exit codes: 0 success, 1 configuration or validation error, 2 numerical
non-convergence, 3 dominance failure found by ``theorem-campaign``.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .config import load_scenario, load_sweep
from .correlation import check_theorem_dominance, equity_correlation_mc
from .errors import ConfigError, NonConvergence, XHoldError
from .greeks import finite_difference_delta, pathwise_delta
from .network import solve_clearing, validate_network
from .sweeps import (
    campaign_result,
    run_fig1_sweep,
    run_fig2_surface,
    run_fig10_sweep,
    run_theorem_campaign,
    write_result,
)
from .valuation import price_claims

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGENCE, EXIT_CAMPAIGN = 0, 1, 2, 3


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _emit(payload: dict) -> None:
    print(json.dumps(payload, indent=2, default=_json_default))


def _scenario(args, *, need_market=True):
    sc = load_scenario(args.config, seed=args.seed, paths=args.paths, tol=args.tol,
                       workers=args.workers)
    if need_market and (sc.market is None or sc.spot is None):
        raise ConfigError(f"{args.config}: 'market' and 'spot' sections are required here")
    if sc.market is not None and sc.market.n != sc.net.n:
        raise ConfigError(f"{args.config}: market has {sc.market.n} assets, network {sc.net.n} firms")
    return sc


def cmd_validate(args) -> int:
    sc = load_scenario(args.config, validate_net=False)
    report = validate_network(sc.net)
    payload = {"valid": report.ok, "problems": list(report.problems), "n_firms": sc.net.n}
    if report.ok and sc.spot is not None:
        x, iters = solve_clearing(sc.spot, sc.net, tol=args.tol or sc.sim.tol,
                                  max_iter=sc.sim.max_iter)
        payload.update(spot=sc.spot, equity=x.equity, recovery=x.recovery, iterations=iters)
    _emit(payload)
    return EXIT_OK if report.ok else EXIT_CONFIG


def cmd_price(args) -> int:
    sc = _scenario(args)
    est = price_claims(sc.net, sc.market, sc.spot, sc.sim.paths, sc.sim.seed, tol=sc.sim.tol,
                       max_iter=sc.sim.max_iter, workers=sc.sim.workers)
    _emit({"equity": est.equity, "equity_se": est.equity_se, "recovery": est.recovery,
           "recovery_se": est.recovery_se, "n_paths": est.n_paths, "seed": est.seed})
    return EXIT_OK


def cmd_delta(args) -> int:
    sc = _scenario(args)
    dm = pathwise_delta(sc.net, sc.market, sc.spot, sc.sim.paths, sc.sim.seed, tol=sc.sim.tol,
                        max_iter=sc.sim.max_iter, workers=sc.sim.workers)
    payload = {"delta": dm.D, "delta_se": dm.se, "n_paths": dm.n_paths, "seed": dm.seed}
    if args.fd:
        fd = finite_difference_delta(sc.net, sc.market, sc.spot, bump=args.bump,
                                     n_paths=sc.sim.paths, seed=sc.sim.seed)
        payload.update(fd_delta=fd.D, fd_delta_se=fd.se)
    _emit(payload)
    return EXIT_OK


def cmd_corr(args) -> int:
    sc = _scenario(args)
    rep = equity_correlation_mc(sc.net, sc.market, sc.spot, sc.sim.paths, sc.sim.seed,
                                workers=sc.sim.workers)
    check = check_theorem_dominance(rep)
    _emit({"rho_s": rep.rho_s, "rho_s_se": rep.rho_s_se, "rho": rep.rho,
           "sign_source": rep.sign_source, "L_s": rep.L_s, "Sigma_s": rep.Sigma_s,
           "equity": rep.s_t, "delta_equity": rep.delta_eq,
           "dominance": {"passed": check.passed, "margin": check.margin,
                         "allowance": check.allowance},
           "n_paths": rep.n_paths, "seed": rep.seed})
    return EXIT_OK


def _sweep(kind, runner):
    def command(args) -> int:
        cfg = load_sweep(args.config, kind, seed=args.seed, paths=args.paths,
                         workers=args.workers)
        result = runner(cfg)
        out = args.out or f"{kind}.csv"
        for path in write_result(result, out):
            print(path)
        return EXIT_OK
    return command


def cmd_campaign(args) -> int:
    seed = 0 if args.seed is None else args.seed
    paths = 100_000 if args.paths is None else args.paths
    report = run_theorem_campaign(args.configs, seed, paths, workers=args.workers or 1)
    if args.out:
        write_result(campaign_result(report), args.out)
    _emit(report.summary())
    return EXIT_OK if report.passed else EXIT_CAMPAIGN


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xhold", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required):
        p.add_argument("--config", required=config_required, help="YAML configuration file")
        p.add_argument("--seed", type=int, help="run seed (overrides the config)")
        p.add_argument("--paths", type=int, help="Monte-Carlo paths (overrides the config)")
        p.add_argument("--out", help="output path")
        p.add_argument("--tol", type=float, help="fixed-point tolerance")
        p.add_argument("--workers", type=int, help="worker threads")
        return p

    common(sub.add_parser("validate", help="check a network and solve it at spot"),
           True).set_defaults(func=cmd_validate)
    common(sub.add_parser("price", help="Monte-Carlo equity and debt prices"),
           True).set_defaults(func=cmd_price)
    p = common(sub.add_parser("delta", help="pathwise Delta matrix"), True)
    p.add_argument("--fd", action="store_true", help="also report finite-difference Deltas")
    p.add_argument("--bump", type=float, default=1e-4, help="relative bump for --fd")
    p.set_defaults(func=cmd_delta)
    common(sub.add_parser("corr", help="equity correlation of two firms"),
           True).set_defaults(func=cmd_corr)
    for kind, runner in (("fig1", run_fig1_sweep), ("fig10", run_fig10_sweep),
                         ("fig2", run_fig2_surface)):
        common(sub.add_parser(f"sweep-{kind}", help=f"{kind} parameter sweep to CSV"),
               False).set_defaults(func=_sweep(kind, runner))
    p = common(sub.add_parser("theorem-campaign", help="randomized rho_s >= rho check"), False)
    p.add_argument("--configs", type=int, default=1000, help="number of random configurations")
    p.set_defaults(func=cmd_campaign)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (XHoldError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
