"""YAML scenario and sweep configuration, with field paths and line numbers in errors.

Scenario document::

    network:
      debt: [1.0, 1.0]
      equity_holdings: [[0, 0], [0, 0]]
      debt_holdings: [[0, 0.5], [0.5, 0]]
    market:
      rate: 0.0
      sigma: [0.2, 0.2]
      rho: 0.0              # two firms; or `correlation: [[1, r], [r, 1]]`
      t: 0.0
      maturity: 1.0
    spot: [2.0, 2.0]
    simulation:
      paths: 100000
      seed: 0
      tol: 1.0e-12
      max_iter: 10000

Sweep documents use a ``sweep:`` section instead; see ``SweepConfig``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError, InvalidMarket, InvalidNetwork, NotPSD, NotSymmetric
from .gbm import MarketParams
from .network import DEFAULT_MAX_ITER, DEFAULT_TOL, FirmNetwork, require_valid


def _line_index(text: str) -> dict:
    """Map dotted key paths to 1-based source lines."""
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return {}
    index = {}

    def walk(node, prefix):
        if isinstance(node, yaml.MappingNode):
            for key, value in node.value:
                path = f"{prefix}.{key.value}" if prefix else str(key.value)
                index[path] = key.start_mark.line + 1
                walk(value, path)
        elif isinstance(node, yaml.SequenceNode):
            for i, item in enumerate(node.value):
                path = f"{prefix}[{i}]"
                index[path] = item.start_mark.line + 1
                walk(item, path)

    if root is not None:
        walk(root, "")
    return index


class Document:
    """A parsed YAML mapping that knows where each field came from."""

    def __init__(self, data: dict, lines: dict, source: str = "<config>"):
        self.data = data
        self.lines = lines
        self.source = source

    @classmethod
    def load(cls, path) -> "Document":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
        return cls.parse(text, str(path))

    @classmethod
    def parse(cls, text: str, source: str = "<config>") -> "Document":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            where = f"{source}:{mark.line + 1}" if mark is not None else source
            raise ConfigError(f"{where}: YAML syntax error: {exc}") from exc
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(f"{source}: top level must be a mapping")
        return cls(data, _line_index(text), source)

    def error(self, key: str, message: str) -> ConfigError:
        line = self.lines.get(key)
        where = f"{self.source}:{line}" if line else self.source
        return ConfigError(f"{where}: field '{key}': {message}")

    def get(self, key: str, default=None):
        node = self.data
        for part in key.split("."):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return node

    def require(self, key: str):
        value = self.get(key)
        if value is None:
            raise self.error(key, "missing required field")
        return value

    def number(self, key: str, default=None, *, integer=False, positive=False):
        value = self.get(key, default)
        if value is None:
            raise self.error(key, "missing required field")
        try:
            out = int(value) if integer else float(value)
        except (TypeError, ValueError):
            raise self.error(key, f"expected a number, got {value!r}") from None
        if integer and float(value) != out:
            raise self.error(key, f"expected an integer, got {value!r}")
        if positive and not out > 0:
            raise self.error(key, f"must be positive, got {value!r}")
        return out

    def array(self, key: str, default=None, *, ndim=1):
        value = self.get(key, default)
        if value is None:
            raise self.error(key, "missing required field")
        try:
            arr = np.asarray(value, dtype=float)
        except (TypeError, ValueError):
            raise self.error(key, f"expected numeric array, got {value!r}") from None
        if ndim == 1 and arr.ndim == 0:
            arr = arr[None]
        if arr.ndim != ndim:
            raise self.error(key, f"expected a {ndim}-d array, got shape {arr.shape}")
        return arr


@dataclass(frozen=True)
class Simulation:
    paths: int = 100_000
    seed: int = 0
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    workers: int = 1


@dataclass(frozen=True)
class Scenario:
    net: FirmNetwork
    market: MarketParams | None
    spot: np.ndarray | None
    sim: Simulation


def _network(doc: Document) -> FirmNetwork:
    debt = doc.array("network.debt")
    n = debt.shape[0]
    zeros = np.zeros((n, n)).tolist()
    eq = doc.array("network.equity_holdings", zeros, ndim=2)
    dh = doc.array("network.debt_holdings", zeros, ndim=2)
    for key, m in (("network.equity_holdings", eq), ("network.debt_holdings", dh)):
        if m.shape != (n, n):
            raise doc.error(key, f"expected a {n}x{n} matrix, got {m.shape}")
    return FirmNetwork(debt=debt, eq_hold=eq, debt_hold=dh)


def _market(doc: Document, n: int) -> MarketParams | None:
    if doc.get("market") is None:
        return None
    sigma = doc.array("market.sigma")
    if sigma.shape == (1,) and n > 1:
        sigma = np.full(n, sigma[0])
    if sigma.shape != (n,):
        raise doc.error("market.sigma", f"expected {n} volatilities, got {sigma.shape[0]}")
    if doc.get("market.correlation") is not None:
        corr = doc.array("market.correlation", ndim=2)
    elif doc.get("market.rho") is not None:
        if n != 2:
            raise doc.error("market.rho", "scalar rho only applies to two firms")
        rho = doc.number("market.rho")
        corr = np.array([[1.0, rho], [rho, 1.0]])
    else:
        corr = np.eye(n)
    try:
        return MarketParams(
            rate=doc.number("market.rate", 0.0),
            sigma=sigma,
            corr=corr,
            t=doc.number("market.t", 0.0),
            maturity=doc.number("market.maturity", 1.0),
        )
    except (InvalidMarket, NotPSD, NotSymmetric, ValueError) as exc:
        raise doc.error("market", str(exc)) from exc


def _simulation(doc: Document, overrides: dict) -> Simulation:
    sim = Simulation(
        paths=doc.number("simulation.paths", 100_000, integer=True, positive=True),
        seed=doc.number("simulation.seed", 0, integer=True),
        tol=doc.number("simulation.tol", DEFAULT_TOL, positive=True),
        max_iter=doc.number("simulation.max_iter", DEFAULT_MAX_ITER, integer=True, positive=True),
        workers=doc.number("simulation.workers", 1, integer=True, positive=True),
    )
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return replace(sim, **overrides)


def load_scenario(path, *, validate_net: bool = True, **overrides) -> Scenario:
    doc = Document.load(path)
    net = _network(doc)
    if validate_net:
        try:
            require_valid(net)
        except InvalidNetwork as exc:
            raise doc.error("network", "; ".join(exc.problems)) from exc
    market = _market(doc, net.n)
    spot = None
    if doc.get("spot") is not None:
        spot = doc.array("spot")
        if spot.shape != (net.n,):
            raise doc.error("spot", f"expected {net.n} spot values, got {spot.shape[0]}")
        if np.any(spot <= 0):
            raise doc.error("spot", "spot asset values must be positive")
    return Scenario(net, market, spot, _simulation(doc, overrides))


@dataclass(frozen=True)
class SpotGrid:
    low: float = 0.05
    high: float = 3.0
    num: int = 40

    def values(self) -> np.ndarray:
        return np.geomspace(self.low, self.high, self.num)


@dataclass(frozen=True)
class SweepConfig:
    """Grid of two-firm scenarios for the figure sweeps.

    Every combination of the holding, volatility and correlation lists is
    evaluated on the log-spaced spot grid. With ``crn`` (default) every grid
    point reuses the run seed, i.e. common random numbers across the grid.
    """

    kind: str = "fig1"
    m12d: tuple = (0.0, 0.2, 0.4, 0.6, 0.8)
    m21d: tuple = (0.0, 0.2, 0.4, 0.6, 0.8)
    m12s: tuple = (0.0,)
    m21s: tuple = (0.0,)
    sigma: tuple = (0.2, 0.4)
    rho: tuple = (-0.4, 0.0, 0.4, 0.8)
    rate: float = 0.0
    tau: float = 1.0
    debt: tuple = (1.0, 1.0)
    spot: SpotGrid = field(default_factory=SpotGrid)
    paths: int = 100_000
    seed: int = 0
    crn: bool = True
    workers: int = 1

    def to_dict(self) -> dict:
        out = asdict(self)
        out["spot"] = asdict(self.spot)
        return out


SWEEP_DEFAULTS = {
    "fig1": SweepConfig(kind="fig1"),
    "fig10": SweepConfig(kind="fig10", m12s=(0.1,), m21s=(0.1,)),
    "fig2": SweepConfig(kind="fig2", m12d=(0.6,), m21d=(0.6,), sigma=(0.2,), rho=(0.0,),
                        spot=SpotGrid(0.05, 3.0, 25)),
}


def _tuple(doc: Document, key: str, default):
    value = doc.get(key)
    if value is None:
        return tuple(default)
    arr = doc.array(key)
    return tuple(float(v) for v in arr)


def load_sweep(path, kind: str, **overrides) -> SweepConfig:
    """Sweep config for ``kind`` from an optional YAML file plus CLI overrides."""
    base = SWEEP_DEFAULTS[kind]
    if path is None:
        doc = Document({}, {})
    else:
        doc = Document.load(path)
    s = "sweep."
    spot = SpotGrid(
        low=doc.number(s + "spot.min", base.spot.low, positive=True),
        high=doc.number(s + "spot.max", base.spot.high, positive=True),
        num=doc.number(s + "spot.num", base.spot.num, integer=True, positive=True),
    )
    if spot.high < spot.low:
        raise doc.error(s + "spot", "max must not be below min")
    cfg = SweepConfig(
        kind=kind,
        m12d=_tuple(doc, s + "m12d", base.m12d),
        m21d=_tuple(doc, s + "m21d", base.m21d),
        m12s=_tuple(doc, s + "m12s", base.m12s),
        m21s=_tuple(doc, s + "m21s", base.m21s),
        sigma=_tuple(doc, s + "sigma", base.sigma),
        rho=_tuple(doc, s + "rho", base.rho),
        rate=doc.number(s + "rate", base.rate),
        tau=doc.number(s + "tau", base.tau, positive=True),
        debt=_tuple(doc, s + "debt", base.debt),
        spot=spot,
        paths=doc.number(s + "paths", base.paths, integer=True, positive=True),
        seed=doc.number(s + "seed", base.seed, integer=True),
        crn=bool(doc.get(s + "crn", base.crn)),
        workers=doc.number(s + "workers", base.workers, integer=True, positive=True),
    )
    if len(cfg.debt) != 2:
        raise doc.error(s + "debt", "sweeps are two-firm: give two debts")
    for m12d in cfg.m12d:
        for m21d in cfg.m21d:
            for m12s in cfg.m12s:
                for m21s in cfg.m21s:
                    net = FirmNetwork.two_firm(*cfg.debt, m12s=m12s, m21s=m21s,
                                               m12d=m12d, m21d=m21d)
                    try:
                        require_valid(net)
                    except InvalidNetwork as exc:
                        raise doc.error("sweep", "; ".join(exc.problems)) from exc
    for key, values in (("sigma", cfg.sigma), ("rho", cfg.rho)):
        for v in values:
            if key == "sigma" and not v > 0:
                raise doc.error(s + key, f"volatility must be positive, got {v}")
            if key == "rho" and not -1 <= v <= 1:
                raise doc.error(s + key, f"correlation must lie in [-1, 1], got {v}")
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **overrides)
