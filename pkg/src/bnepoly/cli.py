"""Command-line front end: ``bnepoly {solve,study,oracle,quantize} CONFIG.json``.

Exit codes: 0 success, 1 usage/config/IO error, 2 solver did not converge.
Data artifacts go to the output directory; logs go to standard error.
"""

from __future__ import annotations

import argparse
import csv
import importlib
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .core import ConfigError, GameSpec, StrategyProfile
from .diagnostics import (BudgetExceeded, brute_force_discrete_equilibria, convergence_study,
                          sandwich, table_regret)
from .games import RentSeekingParams, bilinear, bilinear_quadratic, rent_seeking
from .poly import eval_strategy_unchecked
from .quantize import (QuantizerConfig, dispersion, dispersion_is_exact, grid_quantize,
                       kantorovich_upper_bound)
from .solver import DiscretizedObjective, SolverConfig, gauss_seidel_solve

log = logging.getLogger("bnepoly")

EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED = 0, 1, 2
CURVE_POINTS = 1000


@dataclass
class ExperimentConfig:
    game: dict
    quantizer: QuantizerConfig
    solver: SolverConfig
    output_dir: str
    seed: int = 0
    study: Optional[dict] = None
    oracle: Optional[dict] = None
    threads: int = 1

    def resolved(self) -> dict:
        return {"game": self.game, "quantizer": _quantizer_dict(self.quantizer),
                "solver": asdict(self.solver), "study": self.study, "oracle": self.oracle,
                "output_dir": self.output_dir, "seed": self.seed}


def _quantizer_dict(q: QuantizerConfig) -> dict:
    counts = list(q.counts) if isinstance(q.counts, tuple) else q.counts
    return {"mode": q.mode, "counts": counts, "seed": q.seed}


def _need(d: dict, key: str, path: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: expected an object")
    if key not in d:
        raise ConfigError(f"{path}.{key}: missing required field")
    return d[key]


def build_game(spec: dict) -> GameSpec:
    kind = _need(spec, "kind", "game")
    if kind == "rent-seeking":
        known = {"kind", "n", "type_domains", "effort_cap", "effort_floor"}
        extra = set(spec) - known
        if extra:
            raise ConfigError(f"game: unknown field(s) {sorted(extra)}")
        try:
            params = RentSeekingParams(
                n=int(spec.get("n", 2)),
                type_domains=tuple(tuple(t) for t in spec.get("type_domains", [[0.01, 1.01]])),
                effort_cap=spec.get("effort_cap"),
                effort_floor=float(spec.get("effort_floor", 0.0)))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"game: {exc}") from exc
        return rent_seeking(params)
    if kind == "bilinear-quadratic":
        return bilinear_quadratic()
    if kind == "bilinear":
        return bilinear()
    if kind == "plugin":
        name = _need(spec, "name", "game")
        mod, _, attr = str(name).partition(":")
        try:
            factory = getattr(importlib.import_module(mod), attr)
        except (ImportError, AttributeError, ValueError) as exc:
            raise ConfigError(f"game.name: cannot load plugin {name!r}: {exc}") from exc
        game = factory(**spec.get("args", {}))
        if not isinstance(game, GameSpec):
            raise ConfigError(f"game.name: plugin {name!r} did not return a GameSpec")
        return game
    raise ConfigError(f"game.kind: unknown game {kind!r}")


def _solver_config(raw: dict) -> SolverConfig:
    if not isinstance(raw, dict):
        raise ConfigError("solver: expected an object")
    names = {f.name for f in fields(SolverConfig)}
    extra = set(raw) - names
    if extra:
        raise ConfigError(f"solver: unknown field(s) {sorted(extra)}")
    try:
        return SolverConfig(**raw)
    except TypeError as exc:
        raise ConfigError(f"solver: {exc}") from exc


def load_config(path, *, output_dir=None, seed=None, threads=None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    game = _need(raw, "game", "config")
    q = _need(raw, "quantizer", "config")
    if not isinstance(q, dict):
        raise ConfigError("quantizer: expected an object")
    top_seed = int(raw.get("seed", 0)) if seed is None else int(seed)
    try:
        quant = QuantizerConfig(mode=q.get("mode", "grid-voronoi"),
                                counts=_need(q, "counts", "quantizer"),
                                seed=int(q.get("seed", top_seed)))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"quantizer.counts: {exc}") from exc
    solver = _solver_config(raw.get("solver", {}))
    out = output_dir if output_dir is not None else raw.get("output_dir")
    if out is None:
        raise ConfigError("output_dir: missing (set it in the config or pass --output-dir)")
    study = raw.get("study")
    if study is not None:
        if not isinstance(study, dict):
            raise ConfigError("study: expected an object")
        _need(study, "axis", "study")
        levels = _need(study, "levels", "study")
        if not isinstance(levels, list) or not levels:
            raise ConfigError("study.levels: must be a non-empty list")
    return ExperimentConfig(game=game, quantizer=quant, solver=solver, output_dir=str(out),
                            seed=top_seed, study=study, oracle=raw.get("oracle"),
                            threads=int(threads or raw.get("threads", 1)))


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------

class OutputLock:
    """Exclusive use of an output directory for one command."""

    def __init__(self, directory: Path):
        self.path = directory / ".lock"

    def __enter__(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError as exc:
            raise ConfigError(f"output_dir: {self.path.parent} is locked by another run "
                              f"(remove {self.path} if stale)") from exc
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        return self

    def __exit__(self, *exc):
        try:
            self.path.unlink()
        except FileNotFoundError:
            pass


def _num(x: float) -> str:
    return f"{x:.12g}"


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")


def write_curves(directory: Path, game: GameSpec, profile: StrategyProfile, stem: str = "curves",
                 *, joint_when_different: bool = False) -> list:
    """CSV tables of every player's rule on a uniform grid over its own type interval."""
    same = all(d == game.type_domains[0] for d in game.type_domains)
    written = []
    if same:
        theta = game.type_domains[0].grid(CURVE_POINTS)
        cols = [eval_strategy_unchecked(s, theta) for s in profile.strategies]
        header = ["theta"] + [f"f_{k + 1}" for k in range(game.n)]
        rows = zip(theta, *cols)
        written.append(_write_csv(directory / f"{stem}.csv", header, rows))
    elif joint_when_different:
        header, cols = [], []
        for k, (s, d) in enumerate(zip(profile.strategies, game.type_domains)):
            theta = d.grid(CURVE_POINTS)
            header += [f"theta_{k + 1}", f"f_{k + 1}"]
            cols += [theta, eval_strategy_unchecked(s, theta)]
        written.append(_write_csv(directory / f"{stem}.csv", header, zip(*cols)))
    else:
        for k, (s, d) in enumerate(zip(profile.strategies, game.type_domains)):
            theta = d.grid(CURVE_POINTS)
            written.append(_write_csv(directory / f"{stem}_player{k + 1}.csv",
                                      ["theta", f"f_{k + 1}"],
                                      zip(theta, eval_strategy_unchecked(s, theta))))
    return written


def _write_csv(path: Path, header, rows) -> str:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_num(float(x)) for x in r])
    return path.name


def _sample_diagnostics(sample, game) -> dict:
    out = {"sample_size": int(sample.size), "provenance": sample.provenance,
           "dispersion": dispersion(sample, game.type_domains),
           "dispersion_exact": dispersion_is_exact(sample)}
    out["kantorovich_bound"] = (kantorovich_upper_bound(sample, game)
                                if sample.provenance == "grid-voronoi" else None)
    return out


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_solve(cfg: ExperimentConfig) -> int:
    game = build_game(cfg.game)
    out = Path(cfg.output_dir)
    with OutputLock(out):
        sample = cfg.quantizer.build(game)
        res = gauss_seidel_solve(game, sample, cfg.solver)
        result = {
            "config": cfg.resolved(),
            "converged": res.converged,
            "iterations": res.iterations,
            "outer_trace": list(res.outer_trace),
            "br_gap": res.br_gap,
            "gaps_per_player": list(res.gaps_per_player),
            "local": res.local,
            "coefficients": res.profile.coeff_matrix().T.tolist(),
            **_sample_diagnostics(sample, game),
        }
        result["curves"] = write_curves(out, game, res.profile)
        write_json(out / "result.json", result)
    log.info("solve: converged=%s sweeps=%d gap=%.3e", res.converged, res.iterations, res.br_gap)
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_study(cfg: ExperimentConfig) -> int:
    if cfg.study is None:
        raise ConfigError("study: missing study section")
    game = build_game(cfg.game)
    axis = cfg.study["axis"]
    levels = cfg.study["levels"]
    mult = cfg.study.get("multipliers")
    out = Path(cfg.output_dir)
    with OutputLock(out):
        if axis == "degree":
            sample = cfg.quantizer.build(game)
            st = convergence_study(game, axis, levels, None, cfg.solver, sample=sample)
        else:
            st = convergence_study(game, axis, levels, cfg.study.get("degree", cfg.solver.degree),
                                   cfg.solver, multipliers=mult)
        files = []
        for level, prof in zip(st.levels, st.profiles):
            tag = "x".join(str(v) for v in level) if isinstance(level, list) else str(level)
            files += write_curves(out, game, prof, f"curves_level{tag}", joint_when_different=True)
        doc = {"config": cfg.resolved(), **st.to_dict(), "curves": files}
        write_json(out / "study.json", doc)
    return EXIT_OK if all(st.converged) else EXIT_NOT_CONVERGED


def cmd_oracle(cfg: ExperimentConfig) -> int:
    game = build_game(cfg.game)
    spec = cfg.oracle or {}
    type_points = spec.get("type_points", 21)
    action_levels = spec.get("action_levels", 101)
    out = Path(cfg.output_dir)
    with OutputLock(out):
        counts = [int(k) for k in np.broadcast_to(np.atleast_1d(type_points), (game.n,))]
        sample = grid_quantize(game, counts)
        try:
            fps = brute_force_discrete_equilibria(game, counts, action_levels, sample=sample,
                                                  threads=cfg.threads)
        except BudgetExceeded as exc:
            raise ConfigError(f"oracle: {exc}") from exc
        res = gauss_seidel_solve(game, sample, cfg.solver)
        steps = [d.width / (int(k) - 1) for d, k in
                 zip(game.action_domains, np.broadcast_to(np.atleast_1d(action_levels), (game.n,)))]
        comparison = []
        for idx, fp in enumerate(fps):
            diffs = [float(np.max(np.abs(eval_strategy_unchecked(s, fp.type_points[k])
                                         - fp.actions[k])))
                     for k, s in enumerate(res.profile.strategies)]
            comparison.append({"fixed_point": idx, "max_abs_diff": max(diffs),
                               "max_abs_diff_per_player": diffs,
                               "max_abs_diff_in_steps": max(d / h for d, h in zip(diffs, steps)),
                               "table_regret": table_regret(game, fp, action_levels, sample)})
        coeffs = [s.coeffs for s in res.profile.strategies]
        sandwiches = []
        for i in range(game.n):
            obj = DiscretizedObjective.build(game, sample, i, coeffs, cfg.solver)
            sandwiches.append(sandwich(obj, cfg.solver))
        doc = {"config": cfg.resolved(), "fixed_points": [fp.to_dict() for fp in fps],
               "solver": {"converged": res.converged, "br_gap": res.br_gap,
                          "coefficients": res.profile.coeff_matrix().T.tolist()},
               "comparison": comparison, "sandwich": sandwiches}
        write_json(out / "oracle.json", doc)
    log.info("oracle: %d fixed point(s)", len(fps))
    return EXIT_OK


def cmd_quantize(cfg: ExperimentConfig) -> int:
    game = build_game(cfg.game)
    out = Path(cfg.output_dir)
    with OutputLock(out):
        sample = cfg.quantizer.build(game)
        doc = {"config": cfg.resolved(), "atoms": sample.atoms.tolist(),
               "weights": sample.weights.tolist(), **_sample_diagnostics(sample, game)}
        write_json(out / "quantize.json", doc)
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "study": cmd_study, "oracle": cmd_oracle, "quantize": cmd_quantize}


def build_parser() -> argparse.ArgumentParser:
    # SUPPRESS keeps a subcommand's unset flag from clobbering one given before it
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--output-dir", help="directory for result files (overrides config)")
    common.add_argument("--seed", type=int, help="random seed (overrides config)")
    common.add_argument("--threads", type=int, help="worker threads for oracle sweeps")
    common.add_argument("-v", "--verbose", action="count")
    parser = argparse.ArgumentParser(prog="bnepoly", parents=[common],
                                     description="Polynomial decision-rule equilibria of Bayesian games")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        p.add_argument("config", help="experiment config (JSON)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    opts = vars(args)
    level = logging.WARNING - 10 * min(opts.get("verbose", 0), 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, output_dir=opts.get("output_dir"), seed=opts.get("seed"),
                          threads=opts.get("threads"))
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError, FloatingPointError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
