"""Batch command-line front end.

Each run resolves its options into a RunConfig, dispatches to the library,
writes one JSON record (and a CSV table for sweeps) and prints a short
summary. Exit status: 0 success, 1 a checked comparison failed (or replay
mismatch), 2 invalid configuration.
"""

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import experiments as ex
from . import measure as ms
from . import optimizer as opt
from . import records
from .errors import GluskinError
from .polytope import CrossPolytope, inradius_bounds, mixed_coefficient_matrix
from .sampling import Seed, sample_gluskin

COMMANDS = ("sample", "measure", "verify-lemma", "optimize", "pipeline", "calibrate")
LEMMAS = ("span-distance", "discretization-slack", "event-e1", "event-e2",
          "simple-bound", "crosspol2-bound", "symmetrization")
FAMILIES = ("l1ball", "gluskin", "tail")


class ConfigError(ValueError):
    pass


def _int_list(text):
    if isinstance(text, list):
        return [int(v) for v in text]
    return [int(v) for v in str(text).split(",") if v.strip()]


def _constants(text):
    """'c_tilt=0.5,C_s=2' or a dict -> {name: float}."""
    if isinstance(text, dict):
        items = text.items()
    else:
        items = (kv.split("=", 1) for kv in str(text).split(",") if kv.strip())
    out = {}
    for k, v in items:
        k = k.strip()
        if k not in ms.CalibrationConstants.names():
            raise ConfigError(f"unknown constant {k!r}")
        out[k] = float(v)
    return out


# option name -> (type, default); a default of REQUIRED must be supplied
REQUIRED = object()
COMMON = {
    "seed": (int, 0),
    "stream": (int, 0),
    "samples": (int, None),
    "trials": (int, None),
    "workers": (int, 1),
    "output": (str, None),
    "csv": (str, None),
    "omit_timing": (bool, False),
    "constants": (_constants, {}),
}
OPTIONS = {
    "sample": {"n": (int, REQUIRED), "m": (int, REQUIRED), "directions": (int, 1000), "bm_restarts": (int, 0)},
    "measure": {"family": (str, REQUIRED), "n": (int, REQUIRED), "h": (float, 1.0), "m": (int, None), "k": (int, None)},
    "verify-lemma": {
        "name": (str, REQUIRED), "n": (int, REQUIRED), "u": (int, None), "k": (int, None), "r": (int, None),
        "m": (int, None), "tau": (float, None), "delta": (float, None), "eps": (float, None),
        "rho": (float, None), "alpha": (float, None), "s": (int, None), "s_tilde": (float, None),
        "h": (float, None), "i2_size": (int, None), "polytopes": (int, 50),
    },
    "optimize": {"log_n": (float, REQUIRED), "sweep": (int, 0), "log_n_max": (float, None)},
    "pipeline": {"n": (int, 6), "rho": (float, 1.0), "alpha": (float, 0.25), "matrices": (int, 3)},
    "calibrate": {"n_list": (_int_list, [16]), "k_list": (_int_list, [4, 8, 12])},
}
DEFAULT_COUNTS = {
    "sample": (0, 0), "measure": (100000, 0), "verify-lemma": (100000, 200), "optimize": (0, 0),
    "pipeline": (1000, 0), "calibrate": (10 ** 6, 1),
}


@dataclass
class RunConfig:
    command: str
    parameters: dict
    seed: Seed
    samples: int
    trials: int
    output_path: str = None
    options: dict = field(default_factory=dict)

    def to_dict(self):
        """Flat mapping with the same keys as the command-line flags."""
        d = {"command": self.command, **self.parameters, "seed": self.seed.value, "stream": self.seed.stream,
             "samples": self.samples, "trials": self.trials}
        d.update(self.options)
        if self.output_path is not None:
            d["output"] = self.output_path
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        command = d.pop("command", None)
        if command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r}")
        spec = OPTIONS[command]
        unknown = sorted(set(d) - set(spec) - set(COMMON))
        if unknown:
            raise ConfigError(f"unknown keys for {command}: {', '.join(unknown)}")
        values = {}
        for name, (typ, default) in {**COMMON, **spec}.items():
            if name in d and d[name] is not None:
                try:
                    values[name] = typ(d[name]) if typ is not bool else bool(d[name])
                except (TypeError, ValueError) as e:
                    raise ConfigError(f"bad value for {name}: {d[name]!r} ({e})") from None
            elif default is REQUIRED:
                raise ConfigError(f"{command} requires --{name.replace('_', '-')}")
            else:
                values[name] = default
        samples, trials = DEFAULT_COUNTS[command]
        samples = samples if values["samples"] is None else values["samples"]
        trials = trials if values["trials"] is None else values["trials"]
        try:
            seed = Seed(values["seed"], values["stream"])
        except ValueError as e:
            raise ConfigError(str(e)) from None
        params = {k: values[k] for k in spec}
        options = {k: values[k] for k in ("workers", "csv", "omit_timing", "constants")}
        return cls(command, params, seed, samples, trials, values["output"], options)


# ------------------------------------------------------------------ commands


def _constants_for(cfg, base=None):
    c = base or ms.CalibrationConstants()
    over = cfg.options.get("constants") or {}
    return c.replace(provenance_tag="user", **over) if over else c


def _need(p, *names):
    missing = [n for n in names if p.get(n) is None]
    if missing:
        raise ConfigError("missing " + ", ".join("--" + n.replace("_", "-") for n in missing))


def _run_sample(cfg):
    p = cfg.parameters
    P = sample_gluskin(p["n"], p["m"], cfg.seed)
    lower, upper = inradius_bounds(P, p["directions"], cfg.seed.child("directions"))
    res = {"max_generator_norm": float(np.linalg.norm(P.gamma, axis=0).max()),
           "inradius_lower": lower, "inradius_upper": upper,
           "full_dimensional": P.is_full_dimensional()}
    if p["bm_restarts"] > 0:
        d, T, converged = ex.bm_upper_bound(P, restarts=p["bm_restarts"], seed=cfg.seed.child("bm"))
        res.update(bm_upper_bound=d, bm_converged=converged)
    return "sample", res


def _run_measure(cfg):
    p = cfg.parameters
    fam, n, h = p["family"], p["n"], p["h"]
    workers = cfg.options["workers"]
    res = {}
    if fam == "l1ball":
        P, rho = CrossPolytope.standard(n), h
        if n <= 32:
            res["oracle"] = ms.l1_ball_measure_oracle(n, h)
    elif fam == "gluskin":
        _need(p, "m")
        P, rho = sample_gluskin(n, p["m"], cfg.seed.child("polytope")), h
    elif fam == "tail":
        _need(p, "k")
        P, rho = ex.tail_family(n, p["k"], h), 1.0
        res["oracle"] = ms.axis_cross_polytope_measure(np.abs(np.diag(P.generators)))
    else:
        raise ConfigError(f"unknown family {fam!r}; expected one of {', '.join(FAMILIES)}")
    est = ms.gaussian_measure_mc(P, rho, cfg.samples, cfg.seed, workers)
    res.update(estimate=est.estimate, ci_low=est.ci_low, ci_high=est.ci_high, hits=est.hits,
               samples=est.samples, degenerate=est.degenerate)
    return f"measure-{fam}", res


def _run_lemma(cfg):
    p = cfg.parameters
    name, n, trials = p["name"], p["n"], cfg.trials
    c = _constants_for(cfg)
    if name == "span-distance":
        _need(p, "u", "k", "tau", "delta")
        rec = ex.run_span_distance_experiment(n, p["u"], p["k"], p["tau"], p["delta"], np.eye(p["u"]),
                                              trials, cfg.seed, c)
        return name, records.experiment_record_json(rec)["results"]
    if name == "discretization-slack":
        _need(p, "m")
        eps = p["eps"] if p["eps"] is not None else float(n) ** -3
        rho = p["rho"] if p["rho"] is not None else math.sqrt(n)
        rec = ex.run_discretization_slack(n, p["m"], eps, rho, trials, cfg.seed, c)
        return name, records.experiment_record_json(rec)["results"]
    if name in ("event-e1", "event-e2"):
        _need(p, "m", "alpha", "s_tilde", "i2_size")
        A = mixed_coefficient_matrix(p["m"], n, p["alpha"], cfg.seed.child("A"))
        i2 = p["i2_size"]
        I1, I2 = list(range(n - i2)), list(range(2 * n - i2, 2 * n))
        if name == "event-e2":
            _need(p, "delta", "tau")
            rec = ex.run_event_e2_experiment(n, p["m"], p["alpha"], p["s_tilde"], p["delta"], p["tau"],
                                             A, I1, I2, trials, cfg.seed, c)
        else:
            _need(p, "s")
            rec = ex.run_event_e1_experiment(n, p["m"], p["alpha"], p["s"], p["s_tilde"], A, I1, I2,
                                             trials, cfg.seed, c, h=p["h"])
        return name, records.experiment_record_json(rec)["results"]
    if name == "simple-bound":
        _need(p, "r", "h")
        return name, ex.check_simple_bound(n, p["r"], p["h"], p["polytopes"], cfg.samples, cfg.seed,
                                           cfg.options["workers"])
    if name == "crosspol2-bound":
        _need(p, "k", "h", "delta")
        return name, ex.check_crosspol2_bound(n, p["k"], p["h"], p["delta"], p["polytopes"], cfg.samples,
                                              cfg.seed, cfg.options["workers"])
    if name == "symmetrization":
        _need(p, "r")
        return name, ex.check_symmetrization(n, p["r"], p["polytopes"], cfg.samples, cfg.seed,
                                             cfg.options["workers"])
    raise ConfigError(f"unknown lemma {name!r}; expected one of {', '.join(LEMMAS)}")


SWEEP_COLUMNS = ("log_n", "log_rho", "slope", "active_branch")


def _run_optimize(cfg):
    p = cfg.parameters
    c = _constants_for(cfg, opt.default_constants())
    if p["sweep"] and p["sweep"] >= 2:
        hi = p["log_n_max"] if p["log_n_max"] is not None else min(opt.LOG_N_MAX, 100.0 * p["log_n"])
        grid = np.geomspace(p["log_n"], hi, p["sweep"])
        fit = opt.exponent_fit(grid, c)
        rows = [{"log_n": q["log_n"], "log_rho": q["log_rho"], "slope": q["slope"], "active_branch": q["active"]}
                for q in fit.points]
        return "optimize-sweep", {"rows": rows, "slope": fit.slope, "s_tilde_slope": fit.s_tilde_slope}
    ps = opt.feasible_parameters(p["log_n"], c)
    tails = opt.check_tail_sums(ps)
    return "optimize", {
        "parameters": ps.to_dict(),
        "active_branch": opt.rho_star(ps).note,
        "constraints": [{"name": nm, "satisfied": ok, "slack": sl} for nm, ok, sl in opt.constraint_check(ps)],
        "tail_sums": {"log_sum1": tails.log_sum1, "log_sum2": tails.log_sum2, "ok": tails.ok,
                      "exact": tails.exact},
    }


def _run_pipeline(cfg):
    p = cfg.parameters
    rec = ex.run_theorem_pipeline_micro(p["n"], cfg.seed, rho=p["rho"], alpha=p["alpha"], matrices=p["matrices"],
                                        samples=cfg.samples, constants=_constants_for(cfg),
                                        workers=cfg.options["workers"])
    return "pipeline-micro", records.experiment_record_json(rec)["results"]


def _run_calibrate(cfg):
    p = cfg.parameters
    rows = ex.tilt_family_estimates(p["n_list"], p["k_list"], trials=max(1, cfg.trials), samples=cfg.samples,
                                    seed=cfg.seed, workers=cfg.options["workers"])
    return "calibrate-tilt", {"rows": rows, "c_tilt": ex.fit_tilt_constant(rows)}


RUNNERS = {"sample": _run_sample, "measure": _run_measure, "verify-lemma": _run_lemma,
           "optimize": _run_optimize, "pipeline": _run_pipeline, "calibrate": _run_calibrate}


def execute(cfg):
    """Run a config; returns the record dict (not written)."""
    t0 = time.perf_counter()
    try:
        name, results = RUNNERS[cfg.command](cfg)
    except (GluskinError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"{type(e).__name__}: {e}") from e
    wall = None if cfg.options.get("omit_timing") else time.perf_counter() - t0
    params = {k: v for k, v in cfg.to_dict().items() if k not in ("output", "csv", "omit_timing")}
    return records.make_record(name, params, cfg.seed, results, wall)


def default_path(cfg, name):
    return os.path.join(records.default_output_dir(), f"{name}-seed{cfg.seed.value}.json")


def run(cfg, out=sys.stdout):
    """Execute, persist and summarize; returns the exit status."""
    record = execute(cfg)
    path = cfg.output_path or default_path(cfg, record["name"])
    records.write_record(path, record)
    res = record["results"]
    if cfg.options.get("csv") and "rows" in res and cfg.command == "optimize":
        records.write_csv(cfg.options["csv"], res["rows"], SWEEP_COLUMNS)
    print(summary(record), file=out)
    print(f"record written to {path}", file=out)
    return 0 if res.get("passed", True) else 1


def summary(record):
    res = record["results"]
    lines = [f"{record['name']} (seed {record['seed']['value']})"]
    for key in ("estimate", "ci_low", "ci_high", "oracle", "empirical_rate", "bound_value", "c_tilt",
                "slope", "violations", "failures", "inradius_lower", "inradius_upper", "bm_upper_bound"):
        if key in res:
            lines.append(f"  {key}: {res[key]}")
    if "parameters" in res and "log_rho" in res["parameters"]:
        lines.append(f"  log rho: {res['parameters']['log_rho']}  ({res['active_branch']})")
        lines.append(f"  tail sums ok: {res['tail_sums']['ok']}")
    if "passed" in res:
        lines.append("  PASSED" if res["passed"] else "  FAILED")
    return "\n".join(lines)


def replay(path, workers=None, out=sys.stdout):
    """Re-run a record and compare its results bit for bit."""
    record = records.read_record(path)
    params = dict(record["parameters"])
    if workers is not None:
        params["workers"] = workers
    params["omit_timing"] = True
    fresh = execute(RunConfig.from_dict(params))
    same = records.dumps(fresh["results"]) == records.dumps(record["results"])
    print(f"replay of {path}: {'identical' if same else 'MISMATCH'}", file=out)
    return 0 if same else 1


# ------------------------------------------------------------------- parsing


def _add_options(sub, spec):
    for name, (typ, default) in spec.items():
        flag = "--" + name.replace("_", "-")
        if typ is bool:
            sub.add_argument(flag, dest=name, action="store_true", default=None)
        else:
            kind = str if typ in (_int_list, _constants) else typ
            sub.add_argument(flag, dest=name, type=kind, default=None)


def build_parser():
    parser = argparse.ArgumentParser(prog="gluskin", description=__doc__.splitlines()[0])
    subs = parser.add_subparsers(dest="command", required=True)
    for cmd in COMMANDS:
        sub = subs.add_parser(cmd)
        _add_options(sub, OPTIONS[cmd])
        _add_options(sub, COMMON)
        sub.add_argument("--config", help="JSON file with the same keys as the flags")
    rp = subs.add_parser("replay")
    rp.add_argument("record")
    rp.add_argument("--workers", type=int, default=None)
    return parser


def config_from_args(args):
    values = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                values = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {args.config}: {e}") from None
        if not isinstance(values, dict):
            raise ConfigError("config file must hold a JSON object")
        if values.get("command", args.command) != args.command:
            raise ConfigError("config file command does not match")
    values["command"] = args.command
    for k, v in vars(args).items():
        if k not in ("command", "config") and v is not None:
            values[k] = v
    return RunConfig.from_dict(values)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "replay":
            return replay(args.record, args.workers)
        return run(config_from_args(args))
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
