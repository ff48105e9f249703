"""Parameter sweeps over two-firm networks and the randomized dominance campaign.

All sweeps write a CSV with a fixed column order plus a JSON sidecar
(``<out>.meta.json``) holding the run seed, path count, library version and
per-curve summaries. Rows are produced in grid order whatever the number of
workers, and floats are written with ``repr`` so identical inputs give
identical bytes.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from ._backend import BACKEND
from .config import SweepConfig
from .correlation import check_theorem_dominance, equity_correlation_mc
from .errors import PreconditionViolated, ZeroEquity
from .gbm import MarketParams
from .network import FirmNetwork, solve_clearing, total_value
from .suzuki import classify_region
from .valuation import price_claims

SCHEMA_VERSION = 1

CURVE_COLUMNS = ("m12d", "m21d", "m12s", "m21s", "sigma", "rho_asset", "a_spot",
                 "s1_price", "s1_se", "rho_s", "rho_s_se", "sign_source")
SURFACE_COLUMNS = ("a1", "a2", "region", "s1_price", "s1_se", "s2_price", "s2_se", "rho_s",
                   "rho_s_se", "sign_source")
BOUNDARY_COLUMNS = ("firm", "a1", "a2")
CAMPAIGN_COLUMNS = ("index", "a1", "a2", "d1", "d2", "m12s", "m21s", "m12d", "m21d",
                    "sigma1", "sigma2", "rho", "rate", "status", "rho_s", "rho_s_se",
                    "margin", "passed")

_REGION_LABEL = {3: "ss", 1: "sd", 2: "ds", 0: "dd"}


def point_seed(run_seed: int, index: int, crn: bool) -> int:
    """Seed for grid point ``index``: the run seed under CRN, else a spawned substream."""
    if crn:
        return int(run_seed)
    ss = np.random.SeedSequence(entropy=int(run_seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class CorrelationPoint:
    s1_price: float
    s1_se: float
    s2_price: float
    s2_se: float
    rho_s: float
    rho_s_se: float
    sign_source: float

    @property
    def defined(self) -> bool:
        return not math.isnan(self.rho_s)


def correlation_point(net: FirmNetwork, params: MarketParams, a_t, n_paths: int,
                      seed: int) -> CorrelationPoint:
    """Equity correlation at one spot; undefined (nan) where equity is numerically zero."""
    try:
        rep = equity_correlation_mc(net, params, a_t, n_paths, seed)
    except (ZeroEquity, PreconditionViolated):
        price = price_claims(net, params, a_t, n_paths, seed)
        nan = float("nan")
        s, se = price.equity, price.equity_se
        return CorrelationPoint(float(s[0]), float(se[0]), float(s[1]), float(se[1]), nan, nan, nan)
    s, se = rep.s_t, rep.se["s_t"]
    return CorrelationPoint(float(s[0]), float(se[0]), float(s[1]), float(se[1]), rep.rho_s,
                            rep.rho_s_se, rep.sign_source)


def _map(fn, items, workers: int):
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


@dataclass
class SweepResult:
    columns: tuple
    rows: list
    meta: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)  # name -> (columns, rows) written beside the CSV

    def csv_text(self) -> str:
        return _csv_text(self.columns, self.rows)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return "nan" if math.isnan(value) else repr(float(value))
    return str(value)


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def _base_meta(kind: str, seed: int, n_paths: int) -> dict:
    from . import __version__

    return {"schema_version": SCHEMA_VERSION, "kind": kind, "seed": int(seed),
            "n_paths": int(n_paths), "version": __version__, "backend": BACKEND}


def write_result(result: SweepResult, out) -> list:
    """Write the CSV, any companion CSVs and the JSON sidecar; return the paths written."""
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(result.csv_text())
    written = [out]
    for name, (columns, rows) in result.extra.items():
        path = out.with_name(f"{out.stem}.{name}.csv")
        path.write_text(_csv_text(columns, rows))
        written.append(path)
    meta_path = out.with_name(out.name + ".meta.json")
    meta_path.write_text(json.dumps(result.meta, indent=2, sort_keys=True) + "\n")
    written.append(meta_path)
    return written


def curve_is_monotone(s1, rho_s, se, slack: float = 1.0) -> bool:
    """True if ``rho_s`` does not increase with ``s1`` beyond ``slack`` combined s.e. per step."""
    order = np.argsort(s1)
    r = np.asarray(rho_s, dtype=float)[order]
    e = np.asarray(se, dtype=float)[order]
    keep = ~np.isnan(r)
    r, e = r[keep], e[keep]
    if r.size < 2:
        return True
    allowed = slack * np.hypot(e[:-1], e[1:])
    return bool(np.all(r[1:] <= r[:-1] + allowed))


def run_curve_sweep(cfg: SweepConfig) -> SweepResult:
    """rho_s against firm-1 equity along symmetric spots ``a1 = a2`` for every grid combination."""
    spots = cfg.spot.values()
    curves = list(itertools.product(cfg.m12d, cfg.m21d, cfg.m12s, cfg.m21s, cfg.sigma, cfg.rho))
    points = [(c, a) for c in curves for a in spots]

    def evaluate(job):
        index, ((m12d, m21d, m12s, m21s, sigma, rho), a) = job
        net = FirmNetwork.two_firm(*cfg.debt, m12s=m12s, m21s=m21s, m12d=m12d, m21d=m21d)
        params = MarketParams.two_asset(sigma, sigma, rho, rate=cfg.rate, tau=cfg.tau)
        seed = point_seed(cfg.seed, index, cfg.crn)
        return correlation_point(net, params, [a, a], cfg.paths, seed)

    results = _map(evaluate, list(enumerate(points)), cfg.workers)
    rows = []
    for ((m12d, m21d, m12s, m21s, sigma, rho), a), p in zip(points, results):
        rows.append({"m12d": m12d, "m21d": m21d, "m12s": m12s, "m21s": m21s, "sigma": sigma,
                     "rho_asset": rho, "a_spot": float(a), "s1_price": p.s1_price,
                     "s1_se": p.s1_se, "rho_s": p.rho_s, "rho_s_se": p.rho_s_se,
                     "sign_source": p.sign_source})

    summaries = []
    k = len(spots)
    for i, curve in enumerate(curves):
        chunk = rows[i * k:(i + 1) * k]
        defined = [r for r in chunk if not math.isnan(r["rho_s"])]
        summaries.append({
            "m12d": curve[0], "m21d": curve[1], "m12s": curve[2], "m21s": curve[3],
            "sigma": curve[4], "rho_asset": curve[5],
            "networked": any(v > 0 for v in curve[:4]),
            "monotone_non_increasing": curve_is_monotone(
                [r["s1_price"] for r in chunk], [r["rho_s"] for r in chunk],
                [r["rho_s_se"] for r in chunk]),
            "n_defined": len(defined),
            "min_margin": min((r["rho_s"] - r["rho_asset"] for r in defined), default=None),
        })
    meta = _base_meta(cfg.kind, cfg.seed, cfg.paths)
    meta.update(config=cfg.to_dict(), curves=summaries)
    return SweepResult(CURVE_COLUMNS, rows, meta)


def run_fig1_sweep(cfg: SweepConfig) -> SweepResult:
    """Debt cross-holding grid with no equity cross-holdings (defaults: ``SWEEP_DEFAULTS['fig1']``)."""
    return run_curve_sweep(cfg)


def run_fig10_sweep(cfg: SweepConfig) -> SweepResult:
    """As :func:`run_fig1_sweep` with equity cross-holdings (defaults 0.1 both ways)."""
    return run_curve_sweep(cfg)


def default_boundary(firm: int, other: float, net: FirmNetwork, low: float, high: float):
    """Own-asset level where firm ``firm`` (0 or 1) has ``v_i = d_i`` given the other asset.

    ``v_i`` is non-decreasing in the firm's own asset, so the root is unique when
    it lies inside ``[low, high]``; returns None otherwise.
    """
    d = float(net.debt[firm])

    def gap(own):
        a = np.empty(2)
        a[firm] = own
        a[1 - firm] = other
        x, _ = solve_clearing(a, net, validate=False)
        return float(total_value(a, x.stacked, net)[firm]) - d

    g_lo, g_hi = gap(low), gap(high)
    if g_lo > 0 or g_hi < 0:
        return None
    if g_lo == 0:
        return low
    return brentq(gap, low, high, xtol=1e-13, rtol=1e-13)


def run_fig2_surface(cfg: SweepConfig) -> SweepResult:
    """rho_s and solvency region on an ``(a1, a2)`` log grid, plus the default boundaries."""
    if len(cfg.m12d) * len(cfg.m21d) * len(cfg.m12s) * len(cfg.m21s) * len(cfg.sigma) \
            * len(cfg.rho) != 1:
        raise ValueError("the surface sweep takes exactly one holding/sigma/rho combination")
    net = FirmNetwork.two_firm(*cfg.debt, m12s=cfg.m12s[0], m21s=cfg.m21s[0],
                               m12d=cfg.m12d[0], m21d=cfg.m21d[0])
    sigma, rho = cfg.sigma[0], cfg.rho[0]
    params = MarketParams.two_asset(sigma, sigma, rho, rate=cfg.rate, tau=cfg.tau)
    grid = cfg.spot.values()
    points = [(float(a1), float(a2)) for a1 in grid for a2 in grid]

    def evaluate(job):
        index, (a1, a2) = job
        p = correlation_point(net, params, [a1, a2], cfg.paths, point_seed(cfg.seed, index, cfg.crn))
        region = classify_region([a1, a2], net).value
        return p, region

    results = _map(evaluate, list(enumerate(points)), cfg.workers)
    rows = [{"a1": a1, "a2": a2, "region": _REGION_LABEL[region], "s1_price": p.s1_price,
             "s1_se": p.s1_se, "s2_price": p.s2_price, "s2_se": p.s2_se, "rho_s": p.rho_s,
             "rho_s_se": p.rho_s_se, "sign_source": p.sign_source}
            for (a1, a2), (p, region) in zip(points, results)]

    boundary = []
    for firm in (0, 1):
        for other in grid:
            own = default_boundary(firm, float(other), net, cfg.spot.low, cfg.spot.high)
            if own is None:
                continue
            a1, a2 = (own, float(other)) if firm == 0 else (float(other), own)
            boundary.append({"firm": firm + 1, "a1": float(a1), "a2": float(a2)})

    meta = _base_meta(cfg.kind, cfg.seed, cfg.paths)
    meta.update(config=cfg.to_dict(), region_counts={
        label: sum(r["region"] == label for r in rows) for label in _REGION_LABEL.values()})
    return SweepResult(SURFACE_COLUMNS, rows, meta,
                       extra={"boundaries": (BOUNDARY_COLUMNS, boundary)})


@dataclass(frozen=True)
class CampaignRanges:
    asset: tuple = (0.05, 10.0)
    debt: tuple = (0.1, 5.0)
    holding: tuple = (0.0, 0.9)
    rho: tuple = (-0.95, 0.95)
    sigma: tuple = (0.05, 0.8)
    rate: tuple = (0.0, 0.05)
    tau: float = 1.0


def sample_configuration(rng: np.random.Generator, ranges: CampaignRanges = CampaignRanges()):
    """One random valid two-firm setup.

    With two firms each holding column has a single off-diagonal entry, so
    drawing entries below 1 already keeps every column sum below 1.
    """
    m12s, m21s, m12d, m21d = rng.uniform(*ranges.holding, size=4)
    a = rng.uniform(*ranges.asset, size=2)
    d = rng.uniform(*ranges.debt, size=2)
    sigma = rng.uniform(*ranges.sigma, size=2)
    rho = rng.uniform(*ranges.rho)
    rate = rng.uniform(*ranges.rate)
    net = FirmNetwork.two_firm(d[0], d[1], m12s=m12s, m21s=m21s, m12d=m12d, m21d=m21d)
    params = MarketParams.two_asset(sigma[0], sigma[1], rho, rate=rate, tau=ranges.tau)
    return net, params, a


@dataclass
class CampaignReport:
    n_configs: int
    n_evaluated: int
    n_undefined: int
    failures: list
    min_margin: float
    runtime: float
    rows: list = field(default_factory=list)
    seed: int = 0
    n_paths: int = 0

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary(self) -> dict:
        return {"n_configs": self.n_configs, "n_evaluated": self.n_evaluated,
                "n_undefined": self.n_undefined, "n_failures": len(self.failures),
                "failures": self.failures, "min_margin": self.min_margin,
                "runtime_seconds": round(self.runtime, 3), "seed": self.seed,
                "n_paths": self.n_paths, "passed": self.passed}


def run_theorem_campaign(n_configs: int, seed: int = 0, n_paths: int = 100_000, *,
                         ranges: CampaignRanges = CampaignRanges(), workers: int = 1,
                         mc_seed: int | None = None) -> CampaignReport:
    """Check ``rho_s >= rho - 3 se`` on ``n_configs`` random configurations.

    Configurations come from ``seed``; every Monte-Carlo run reuses ``mc_seed``
    (default ``seed``) so all configurations share common random numbers. Points
    where an equity price is numerically zero have no defined correlation and
    are counted separately rather than as failures.
    """
    if n_configs < 1:
        raise ValueError("n_configs must be at least 1")
    mc_seed = seed if mc_seed is None else mc_seed
    rng = np.random.default_rng(seed)
    configs = [sample_configuration(rng, ranges) for _ in range(n_configs)]

    def evaluate(job):
        index, (net, params, a) = job
        h = {"index": index, "a1": a[0], "a2": a[1], "d1": net.debt[0], "d2": net.debt[1],
             "m12s": net.eq_hold[0, 1], "m21s": net.eq_hold[1, 0],
             "m12d": net.debt_hold[0, 1], "m21d": net.debt_hold[1, 0],
             "sigma1": params.sigma[0], "sigma2": params.sigma[1],
             "rho": params.corr[0, 1], "rate": params.rate}
        row = {k: (float(v) if k != "index" else v) for k, v in h.items()}
        try:
            rep = equity_correlation_mc(net, params, a, n_paths, mc_seed)
        except (ZeroEquity, PreconditionViolated):
            nan = float("nan")
            row.update(status="undefined", rho_s=nan, rho_s_se=nan, margin=nan, passed=True)
            return row
        check = check_theorem_dominance(rep)
        row.update(status="ok", rho_s=rep.rho_s, rho_s_se=rep.rho_s_se,
                   margin=check.margin, passed=check.passed)
        return row

    start = time.perf_counter()
    rows = _map(evaluate, list(enumerate(configs)), workers)
    runtime = time.perf_counter() - start
    ok = [r for r in rows if r["status"] == "ok"]
    failures = [r["index"] for r in ok if not r["passed"]]
    min_margin = min((r["margin"] for r in ok), default=float("nan"))
    return CampaignReport(n_configs, len(ok), n_configs - len(ok), failures, float(min_margin),
                          runtime, rows, seed, n_paths)


def campaign_result(report: CampaignReport) -> SweepResult:
    meta = _base_meta("theorem-campaign", report.seed, report.n_paths)
    summary = report.summary()
    summary.pop("runtime_seconds")  # keep the sidecar reproducible
    meta.update(summary=summary)
    return SweepResult(CAMPAIGN_COLUMNS, report.rows, meta)
