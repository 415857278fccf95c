"""Command-line harness: every experiment as CSV.

Subcommands: ``critical-table``, ``norm-table``, ``accuracy``, ``energy``,
``discontinuous`` and ``burgers``.  Parameters come from flags, from a JSON
file given with ``--config`` (flags win), or from the built-in defaults,
which reproduce the standard grids.  Exit codes: 0 success, 2 configuration
error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from . import experiments as ex
from .dg import burgers_characteristic_solution, sample
from .linops import ConvergenceError
from .rational import parse_rational
from .rk import StepFailure
from .superviscosity import Mode

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

EXPERIMENTS = ("critical-table", "norm-table", "accuracy", "energy", "discontinuous", "burgers")
SYSTEMS = {
    "norm-table": ("ode3", "dg"),
    "accuracy": ("ode3", "advection", "burgers"),
}


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass
class ExperimentConfig:
    """All knobs of one CLI invocation; ``None`` means "use the default".

    ``tau`` is the time step for the ODE and the ratio ``tau/h`` for the DG
    norm table; marching experiments use ``cfl = tau/h`` instead.
    """

    experiment: str
    system: str | None = None
    p: int | None = None
    k: int | None = None
    n_cells: int | None = None
    cfl: float | None = None
    tau: str | None = None
    mu: str | None = None
    nu: str | None = None
    mode: str | None = None
    alpha: str | None = None
    T: float | None = None
    ic: str | None = None
    out: str | None = None
    exact: bool = False
    jobs: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        allowed = SYSTEMS.get(self.experiment)
        if self.system is not None and (allowed is None or self.system not in allowed):
            raise ConfigError(f"system {self.system!r} is not valid for {self.experiment}")
        for name in ("tau", "mu", "nu", "alpha"):
            val = getattr(self, name)
            if val is not None:
                try:
                    q = parse_rational(str(val))
                except (ValueError, ZeroDivisionError) as err:
                    raise ConfigError(f"--{name}: {err}") from None
                setattr(self, name, str(val))
                if name == "alpha" and not -1 <= q <= 1:
                    raise ConfigError("--alpha must lie in [-1, 1]")
                if name == "tau" and not q > 0:
                    raise ConfigError("--tau must be positive")
        for name in ("p", "k", "n_cells"):
            val = getattr(self, name)
            if val is not None and (int(val) != val or val < (0 if name == "k" else 1)):
                raise ConfigError(f"--{name.replace('_', '-')} must be a {'nonnegative' if name == 'k' else 'positive'} integer")
        for name in ("cfl", "T"):
            val = getattr(self, name)
            if val is not None and not (math.isfinite(val) and val > 0):
                raise ConfigError(f"--{name} must be positive")
        if self.ic is not None and self.ic not in ex.INITIAL_CONDITIONS:
            raise ConfigError(f"unknown initial condition {self.ic!r}; choose from {', '.join(sorted(ex.INITIAL_CONDITIONS))}")
        if self.mode is not None:
            modes = ("plain", "adaptive", "filtered") if self.experiment == "burgers" else tuple(m.value for m in Mode)
            key = self.mode.strip().lower()
            key = {"p": "plain", "m": "modified", "f": "filtered", "a": "adaptive"}.get(key, key)
            if key not in modes:
                raise ConfigError(f"mode {self.mode!r} is not valid for {self.experiment}; choose from {', '.join(modes)}")
            self.mode = key
        if self.jobs < 1:
            raise ConfigError("--jobs must be at least 1")


def load_config(experiment: str, file_values: dict, flag_values: dict) -> ExperimentConfig:
    """Merge a JSON config with command-line flags (flags override)."""
    names = {f.name for f in fields(ExperimentConfig)}
    unknown = set(file_values) - names
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if "experiment" in file_values and file_values["experiment"] != experiment:
        raise ConfigError(f"config file is for {file_values['experiment']!r}, not {experiment!r}")
    merged = {k: v for k, v in file_values.items() if k != "experiment"}
    merged.update({k: v for k, v in flag_values.items() if v is not None and v is not False})
    try:
        return ExperimentConfig(experiment=experiment, **merged)
    except TypeError as err:
        raise ConfigError(str(err)) from None


# ------------------------------------------------------------------ runners


def _emit(cfg: ExperimentConfig, rows, columns=None) -> None:
    text = ex.write_csv(rows, columns)
    if cfg.out is None:
        sys.stdout.write(text)
    else:
        Path(cfg.out).write_text(text)


def _sidecar(cfg: ExperimentConfig, suffix: str) -> Path | None:
    if cfg.out is None:
        return None
    out = Path(cfg.out)
    return out.with_name(f"{out.stem}_{suffix}.csv")


def _profile_rows(x, columns: dict) -> list[dict]:
    return [{"x": f"{xi:.10e}", **{name: f"{vals[i]:.10e}" for name, vals in columns.items()}} for i, xi in enumerate(x)]


def run_critical_table(cfg: ExperimentConfig) -> None:
    orders = range(1, 7) if cfg.p is None else [cfg.p]
    _emit(cfg, ex.critical_table(orders), ["p", "k_star", "mu0", "nu0"])


def _norm_cell_task(args):
    system, p, mu, nu, mode, step, k, n_cells, alpha, exact = args
    return ex.norm_cell(system, p, mu, nu, mode, step, k=k, n_cells=n_cells, alpha=alpha, exact=exact)


def run_norm_table(cfg: ExperimentConfig) -> None:
    system = cfg.system or "ode3"
    grid = ex.ODE_NORM_GRID if system == "ode3" else ex.DG_NORM_GRID
    if cfg.p is not None:
        grid = [r for r in grid if r.p == cfg.p]
        if cfg.mu is not None or cfg.nu is not None:
            mu, nu = cfg.mu or "0", cfg.nu or "0"
            plain = parse_rational(mu) == 0 and parse_rational(nu) == 0
            grid = [ex.NormRow(cfg.p, mu, nu, ("plain",) if plain else ("modified", "filtered"))]
        if not grid:
            raise ConfigError(f"no grid rows for p={cfg.p}")
    elif cfg.mu is not None or cfg.nu is not None:
        raise ConfigError("--mu/--nu on the norm table need --p")
    steps = ex.NORM_STEPS if cfg.tau is None else [parse_rational(cfg.tau)]
    tasks = []
    for r in grid:
        modes = r.modes if cfg.mode is None else (cfg.mode,)
        for mode in modes:
            for s in steps:
                tasks.append((system, r.p, r.mu, r.nu, mode, s, cfg.k, cfg.n_cells or 10, cfg.alpha or "-1", cfg.exact))
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            rows = list(pool.map(_norm_cell_task, tasks))  # map keeps grid order
    else:
        rows = [_norm_cell_task(t) for t in tasks]
    _emit(cfg, rows, ex.NORM_COLUMNS)


def run_accuracy(cfg: ExperimentConfig) -> None:
    system = cfg.system or "ode3"
    rows = []
    if system == "ode3":
        table = ex.ODE_ACCURACY_ROWS
        if cfg.p is not None:
            table = [r for r in table if r[0] == cfg.p]
            if cfg.mu is not None or cfg.nu is not None:
                table = [(cfg.p, cfg.mu or "0", cfg.nu or "0")]
        taus = ex.ODE_TAU_LADDER if cfg.tau is None else [parse_rational(cfg.tau)]
        for p, mu, nu in table:
            rows += ex.ode_accuracy(p, mu, nu, cfg.mode or "modified", taus, T=cfg.T or 1.0)
    elif system == "advection":
        table = ex.ADVECTION_ACCURACY_ROWS
        if cfg.p is not None:
            table = [r for r in table if r[0] == cfg.p]
            if cfg.k is not None or cfg.mu is not None or cfg.nu is not None:
                k = cfg.k if cfg.k is not None else cfg.p - 1
                table = [(cfg.p, k, cfg.mu or "0", cfg.nu or "0")]
        Ns = ex.ADVECTION_N_LADDER if cfg.n_cells is None else [cfg.n_cells]
        alpha = float(parse_rational(cfg.alpha or "-1"))
        for p, k, mu, nu in table:
            rows += ex.advection_accuracy(p, k, mu, nu, cfg.mode or "modified", Ns, cfl=cfg.cfl or 0.02, T=cfg.T or 1.0, alpha=alpha)
    else:
        orders = sorted(ex.BURGERS_LADDERS) if cfg.p is None else [cfg.p]
        for p in orders:
            Ns = None if cfg.n_cells is None else [cfg.n_cells]
            rows += ex.burgers_accuracy(p, cfg.k, Ns, cfl=cfg.cfl or 0.05, T=cfg.T or 0.3)
    if not rows:
        raise ConfigError("the selection matches no accuracy rows")
    _emit(cfg, rows, ex.ACCURACY_COLUMNS)


def run_energy(cfg: ExperimentConfig) -> None:
    p = cfg.p or 1
    series, x, vals = ex.energy_evolution(
        p,
        cfg.k if cfg.k is not None else p,
        cfg.n_cells or 80,
        cfl=cfg.cfl or 0.05,
        mu=cfg.mu or "0",
        nu=cfg.nu or "0",
        mode=cfg.mode or "plain",
        alpha=float(parse_rational(cfg.alpha or "-1")),
        T=cfg.T or 10.0,
        ic=cfg.ic or "exp-sin",
    )
    _emit(cfg, series, ["n", "t", "norm_change"])
    side = _sidecar(cfg, "profile")
    if side is not None:
        ex.write_csv(_profile_rows(x, {"u": vals}), ["x", "u"], side)


def run_discontinuous(cfg: ExperimentConfig) -> None:
    x, profiles, summary = ex.discontinuous(
        cfg.p or 3,
        cfg.k if cfg.k is not None else 2,
        cfg.n_cells or 80,
        cfl=cfg.cfl or 0.05,
        mu=cfg.mu or "0",
        nu=cfg.nu or "-10",
        alpha=float(parse_rational(cfg.alpha or "-1")),
        T=cfg.T or 2 * math.pi,
        ic=cfg.ic or "indicator",
    )
    _emit(cfg, _profile_rows(x, profiles), ["x", *profiles])
    side = _sidecar(cfg, "summary")
    if side is not None:
        ex.write_csv(summary, ["mode", "mu", "nu", "overshoot", "undershoot"], side)
    else:
        for r in summary:
            log.info("%s: overshoot %s undershoot %s", r["mode"], r["overshoot"], r["undershoot"])


def run_burgers(cfg: ExperimentConfig) -> None:
    p = cfg.p or 5
    k = cfg.k if cfg.k is not None else ex.BURGERS_LADDERS.get(p, (p, None))[0]
    mode = cfg.mode or "adaptive"
    if mode == "filtered" and cfg.nu is None:
        raise ConfigError("a fixed-coefficient Burgers filter needs --nu")
    T = cfg.T or 1.5
    try:
        res = ex.burgers_run(p, k, cfg.n_cells or 80, cfl=cfg.cfl or 0.05, T=T, mode=mode, nu=cfg.nu, ic=cfg.ic or "sin")
    except ValueError as err:
        raise ConfigError(str(err)) from None
    x, vals = sample(res.u, res.space)
    columns = {"u": vals}
    if (cfg.ic or "sin") == "sin" and T < 1.0:
        columns["exact"] = burgers_characteristic_solution(x, T)
    _emit(cfg, _profile_rows(x, columns), ["x", *columns])
    side = _sidecar(cfg, "norms")
    if side is not None:
        ex.write_csv(res.norm_series(), ["n", "t", "norm_change"], side)
        if mode == "adaptive":
            res.log.write_csv(_sidecar(cfg, "report"))
    if mode == "adaptive" and not res.log.all_guaranteed:
        log.warning("adaptive filter guarantee |nu| ||D||^2 <= 1 failed on some steps")


RUNNERS = {
    "critical-table": run_critical_table,
    "norm-table": run_norm_table,
    "accuracy": run_accuracy,
    "energy": run_energy,
    "discontinuous": run_discontinuous,
    "burgers": run_burgers,
}


# ------------------------------------------------------------------ argparse


def _add_common(sp: argparse.ArgumentParser, systems=None) -> None:
    if systems:
        sp.add_argument("--system", choices=systems, help="problem family (default: %s)" % systems[0])
    sp.add_argument("--p", type=int, help="RK order (Taylor stability polynomial / tableau)")
    sp.add_argument("--k", type=int, help="DG polynomial degree")
    sp.add_argument("--n-cells", dest="n_cells", type=int, help="number of DG cells")
    sp.add_argument("--cfl", type=float, help="tau/h for time marching")
    sp.add_argument("--tau", help="time step (ODE) or tau/h (DG norm table), rational literal")
    sp.add_argument("--mu", help="dispersive coefficient, rational literal such as -1/4800")
    sp.add_argument("--nu", help="diffusive coefficient, rational literal such as -1.01/2")
    sp.add_argument("--mode", help="plain | modified | filtered (| adaptive for burgers)")
    sp.add_argument("--alpha", help="DG flux parameter in [-1, 1]; -1 upwind, 0 central")
    sp.add_argument("--T", type=float, help="final time")
    sp.add_argument("--ic", help="initial condition: " + ", ".join(sorted(ex.INITIAL_CONDITIONS)))
    sp.add_argument("--out", help="output CSV path (default: stdout); sidecar files sit next to it")
    sp.add_argument("--exact", action="store_true", help="force the exact rational path")
    sp.add_argument("--jobs", type=int, help="worker processes for independent grid cells")
    sp.add_argument("--config", help="JSON file with any of the above keys; flags override it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="svrk", description="Superviscosity-stabilized Runge-Kutta experiments (CSV output).")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="experiment", required=True)
    helps = {
        "critical-table": "critical superviscosity values for p = 1..6",
        "norm-table": "||R|| - 1 over a (p, mu, nu, step) grid with exact verdicts",
        "accuracy": "error ladders and observed orders",
        "energy": "time series of ||u^n|| - ||u^0|| for DG advection",
        "discontinuous": "indicator advection profiles, plain vs stabilized",
        "burgers": "Burgers profiles, norm series and the adaptive filter report",
    }
    for name in EXPERIMENTS:
        _add_common(sub.add_parser(name, help=helps[name]), SYSTEMS.get(name))
    return parser


RATIONAL_FLAGS = ("--mu", "--nu", "--tau", "--alpha")


def _join_negative_rationals(argv: list[str]) -> list[str]:
    """Turn ``--nu -1/2`` into ``--nu=-1/2``.

    argparse only recognizes plain decimals as negative numbers, so a value
    such as ``-1.01/2`` would otherwise be taken for an option.
    """
    out: list[str] = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in RATIONAL_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _join_negative_rationals(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as stop:  # argparse exits with 2 on bad flags, 0 on --help
        return int(stop.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    values = vars(args).copy()
    experiment = values.pop("experiment")
    values.pop("verbose")
    config_path = values.pop("config")
    try:
        file_values = {}
        if config_path is not None:
            try:
                file_values = json.loads(Path(config_path).read_text())
            except (OSError, json.JSONDecodeError) as err:
                raise ConfigError(f"cannot read config {config_path}: {err}") from None
            if not isinstance(file_values, dict):
                raise ConfigError("config file must hold a JSON object")
        cfg = load_config(experiment, file_values, values)
        log.info("config: %s", json.dumps(asdict(cfg)))
        RUNNERS[experiment](cfg)
    except ConfigError as err:
        print(f"svrk: config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, StepFailure, ConvergenceError, ZeroDivisionError, OverflowError) as err:
        print(f"svrk: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
