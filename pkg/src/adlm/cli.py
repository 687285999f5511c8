"""Command-line interface: ``adlm {fit,simulate,study,misspec}``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.
"""
import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .models import ModelId, fit, model_spec
from .sampler import ChainConfig, write_samples_csv
from .simulate import Scenario, SimConfig, lag_curve, run_misspec_study, run_study, simulate_dataset

log = logging.getLogger("adlm")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

TABLE1_COLUMNS = ["scenario", "model", "rmse_x1e3", "bias2_x1e3", "ed", "reps", "failures"]
MISSPEC_COLUMNS = ["model", "p", "ed", "rmse_x1e3", "bias2_x1e3", "reps", "failures"]
LAGCURVE_COLUMNS = ["lag", "beta_mean", "lower95", "upper95"]


class ConfigError(Exception):
    pass


class DataError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str = ""
    input: str | None = None
    out: str = "."
    seed: int | None = None
    model: str = "M3"
    scenario: str = "all"
    p: int | None = None
    p_values: list = field(default_factory=lambda: [50, 75, 100, 125])
    reps: int | None = None
    workers: int = 1
    dump_samples: bool = False
    degree: int = 3
    reading: str = "penalty"
    m5_ed: str = "basis"
    sim: dict = field(default_factory=dict)
    chain: dict = field(default_factory=dict)

    def resolved(self):
        # the output location is not part of what was computed
        d = asdict(self)
        del d["out"]
        d["sim"] = asdict(self.sim_config())
        d["chain"] = asdict(self.chain_config())
        return d

    def sim_config(self) -> SimConfig:
        kw = dict(self.sim)
        if self.reps is not None:
            kw["reps"] = self.reps
        if self.seed is not None:
            kw["master_seed"] = self.seed
        return _build(SimConfig, kw, "sim")

    def chain_config(self) -> ChainConfig:
        kw = dict(self.chain)
        if self.seed is not None and "seed" not in kw:
            kw["seed"] = self.seed
        return _build(ChainConfig, kw, "chain")


def _build(cls, kw, section):
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(kw) - names)
    if unknown:
        raise ConfigError(f"unknown {section} config keys: {', '.join(unknown)}")
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {section} config: {exc}") from exc


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    names = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return data


def read_series(path):
    """Read a headered ``t,x,y`` CSV; blank y cells become NaN."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        cols = [h.strip() for h in header]
        if "x" not in cols:
            raise DataError(f"{path}:1: header must contain column 'x', got {cols}")
        ix, iy = cols.index("x"), cols.index("y") if "y" in cols else None
        xs, ys = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                xs.append(float(row[ix]))
                cell = row[iy].strip() if iy is not None and iy < len(row) else ""
                ys.append(float(cell) if cell else np.nan)
            except (ValueError, IndexError) as exc:
                raise DataError(f"{path}:{lineno}: cannot parse row {row}: {exc}") from exc
    return np.array(xs), np.array(ys)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if hasattr(o, "value"):
        return o.value
    raise TypeError(f"not serialisable: {type(o)}")


def _models(arg, reading):
    if arg == "all":
        return [model_spec(m, reading) for m in ModelId]
    try:
        return [model_spec(m.strip(), reading) for m in arg.split(",")]
    except ValueError as exc:
        raise ConfigError(f"--model: {exc}") from exc


def _scenarios(arg):
    if arg == "all":
        return list(Scenario)
    try:
        return [Scenario.parse(s.strip()) for s in arg.split(",")]
    except ValueError as exc:
        raise ConfigError(f"--scenario: {exc}") from exc


# ---------------------------------------------------------------------------
# subcommands


def cmd_fit(rc: RunConfig, out: Path):
    if not rc.input:
        raise ConfigError("fit needs --input")
    x, y = read_series(rc.input)
    p = rc.p if rc.p is not None else 50
    if len(x) <= p:
        raise DataError(f"series length n={len(x)} must exceed the maximum lag p={p}")
    if not np.all(np.isfinite(y[p:])):
        raise DataError(f"y must be present for every row from index p={p} on")
    spec = model_spec(rc.model, rc.reading)
    chain = rc.chain_config()
    t0 = time.perf_counter()
    res = fit(spec, x, y, p, chain, degree=rc.degree, m5_ed=rc.m5_ed, keep_samples=rc.dump_samples)
    wall = time.perf_counter() - t0
    s = res.summary
    write_csv(out / "lagcurve.csv", LAGCURVE_COLUMNS,
              zip(range(p + 1), s.beta_mean, s.beta_lower, s.beta_upper))
    summary = {
        "model": spec.id.value, "p": p, "K": res.K, "ED": s.ed, "sigma2_mean": s.sigma2_mean,
        "acceptance_rates": s.acceptance_rates, "seed": chain.seed, "sample_count": s.sample_count,
        "n_interior": res.n_interior, "config": rc.resolved(),
    }
    write_json(out / "summary.json", summary)
    write_json(out / "timing.json", {"wall_time_s": wall})
    if rc.dump_samples and res.samples is not None:
        write_samples_csv(res.samples, out / "samples.csv")
    return ["lagcurve.csv", "summary.json"]


def cmd_simulate(rc: RunConfig, out: Path):
    cfg = rc.sim_config()
    scen = _scenarios(rc.scenario)
    for s in scen:
        rows = []
        for rep in range(cfg.reps if rc.reps is not None else 1):
            x, y, beta = simulate_dataset(s, cfg, rep)
            rows.extend((rep, t, x[t], "" if np.isnan(y[t]) else y[t]) for t in range(cfg.n))
        if len(scen) == 1 and rc.reps is None:
            write_csv(out / "data.csv", ["t", "x", "y"], [r[1:] for r in rows])
        else:
            write_csv(out / f"data_{s.value}.csv", ["rep", "t", "x", "y"], rows)
        write_csv(out / f"truth_{s.value}.csv", ["lag", "beta"], enumerate(lag_curve(s, cfg.p_true)))


def cmd_study(rc: RunConfig, out: Path):
    if rc.seed is None:
        raise ConfigError("study needs an explicit --seed")
    cfg = rc.sim_config()
    models = _models(rc.model, rc.reading)
    rows, reps = run_study([m.id.value for m in models], _scenarios(rc.scenario), cfg, rc.chain_config(),
                           workers=rc.workers, return_replicates=True, reading=rc.reading)
    table = [(r.scenario, r.model, r.rmse, r.bias2, r.ed, r.reps, r.failures) for r in rows]
    write_csv(out / "table1.csv", TABLE1_COLUMNS, table)
    write_json(out / "table1.json", {"columns": TABLE1_COLUMNS, "rows": [list(t) for t in table],
                                     "details": [r.as_dict() for r in rows], "config": rc.resolved()})
    _write_replicates(out / "table1_replicates.csv", reps)


def cmd_misspec(rc: RunConfig, out: Path):
    if rc.seed is None:
        raise ConfigError("misspec needs an explicit --seed")
    cfg = rc.sim_config()
    models = [m.id.value for m in _models(rc.model, rc.reading)]
    rows, reps = run_misspec_study(rc.p_values, cfg, rc.chain_config(), models=models, workers=rc.workers,
                                   return_replicates=True, reading=rc.reading)
    table = [(r.model, r.p, r.ed, r.rmse, r.bias2, r.reps, r.failures) for r in rows]
    write_csv(out / "misspec.csv", MISSPEC_COLUMNS, table)
    write_json(out / "misspec.json", {"columns": MISSPEC_COLUMNS, "rows": [list(t) for t in table],
                                      "details": [r.as_dict() for r in rows], "config": rc.resolved()})
    _write_replicates(out / "misspec_replicates.csv", reps)


def _write_replicates(path, reps):
    cols = ["scenario", "model", "p", "rep", "rmse", "bias2", "ed", "coverage", "error"]
    write_csv(path, cols, [(r.scenario, r.model, r.p, r.rep, r.rmse, r.bias2, r.ed, r.coverage, r.error)
                           for r in reps])


COMMANDS = {"fit": cmd_fit, "simulate": cmd_simulate, "study": cmd_study, "misspec": cmd_misspec}


def build_parser():
    ap = argparse.ArgumentParser(prog="adlm", description="Bayesian adaptive distributed lag models")
    ap.add_argument("subcommand", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON file with RunConfig fields")
    ap.add_argument("--input", help="t,x,y CSV for fit")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--reps", type=int)
    ap.add_argument("--model", help="M1..M5, comma list, or 'all'")
    ap.add_argument("--scenario", help="scenario name, comma list, or 'all'")
    ap.add_argument("--p", type=int, help="maximum lag for fit")
    ap.add_argument("--p-values", help="comma list of maximum lags for misspec")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--workers", type=int)
    ap.add_argument("--dump-samples", action="store_true", default=None)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def resolve(args) -> RunConfig:
    data = load_config(args.config) if args.config else {}
    data["subcommand"] = args.subcommand
    for key in ("input", "seed", "reps", "model", "scenario", "p", "out", "workers", "dump_samples"):
        v = getattr(args, key)
        if v is not None:
            data[key] = v
    if args.p_values:
        try:
            data["p_values"] = [int(v) for v in args.p_values.split(",")]
        except ValueError as exc:
            raise ConfigError(f"--p-values: {exc}") from exc
    try:
        return RunConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        rc = resolve(args)
        out = Path(rc.out)
        out.mkdir(parents=True, exist_ok=True)
        rc.sim_config(), rc.chain_config()
        COMMANDS[rc.subcommand](rc, out)
        write_json(out / "config.json", rc.resolved())
    except ConfigError as exc:
        print(f"adlm: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"adlm: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except np.linalg.LinAlgError as exc:
        print(f"adlm: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
