"""Command-line entry point.

Each subcommand reads a YAML config, validates it completely, runs one
experiment and writes JSON (sorted keys) and CSV artifacts plus
``manifest.json`` into the output directory.  Exit status: 0 on success,
1 when the experiment's verdict is FAIL, 2 on configuration or I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__, config
from .arrays import simulate
from .bracketing import (bracketing_feasible, bracketing_integral, bracketing_number,
                         build_brackets_halfline)
from .config import ConfigError
from .diagnostics import aec_table, changepoint_cusum, class_bracketing_fn, lipschitz_increments, \
    pipeline_check
from .marginals import Marginals
from .verify import (NetModel, ProductFunctional, SignFlipModel, check_covariance_inequality,
                     exact_small_oracle, fit_moment_constant, scaling_check, verify_maximal_inequality)

log = logging.getLogger("seqemp")


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


class Writer:
    def __init__(self, out: Path, cfg_hash: str, seed: int):
        self.out, self.cfg_hash, self.seed = out, cfg_hash, seed
        self.files: list[str] = []

    def json(self, name: str, payload: dict):
        body = {"config_hash": self.cfg_hash, "seed": self.seed, **_clean(payload)}
        (self.out / name).write_text(json.dumps(body, sort_keys=True, indent=2) + "\n")
        self.files.append(name)

    def csv(self, name: str, header: list[str], rows):
        with open(self.out / name, "w", newline="") as fh:
            w = csv.writer(fh, delimiter=",", lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
        self.files.append(name)


# --------------------------------------------------------------------------
# subcommands: each returns the verdict string (or None)


def run_simulate(cfg, seed, w: Writer, threads):
    model = config.build_model(cfg["model"])
    rows = simulate(model, cfg["n"], cfg["replicates"], seed)
    w.csv("rows.csv", ["replicate", "i", "value"],
          ((r, i + 1, float(rows[r, i])) for r in range(rows.shape[0]) for i in range(rows.shape[1])))
    w.json("summary.json", {"model": model.describe(), "n": cfg["n"], "replicates": cfg["replicates"],
                            "mean": float(rows.mean()), "std": float(rows.std())})
    return None


def _verify_model(cfg):
    proc = cfg["process"]
    if proc["kind"] == "sign_flip":
        return SignFlipModel.walsh(proc["P"], proc["n"], proc.get("a", -1.0), proc.get("b", 1.0))
    return NetModel(config.build_model(cfg["model"]), config.build_net(cfg), cfg["n"])


def run_verify_maximal(cfg, seed, w, threads):
    model = _verify_model(cfg)
    rep = verify_maximal_inequality(model, cfg["nu"], cfg["alpha"], cfg["replicates"], seed, threads=threads)
    payload = {"process": model.describe(), "report": rep.to_dict()}
    if cfg.get("exact") and isinstance(model, SignFlipModel) and model.n <= 12:
        ex = exact_small_oracle(model, cfg["nu"], cfg["alpha"])
        payload["exact"] = ex.to_dict()
    w.json("report.json", payload)
    w.csv("checks.csv", ["i", "j", "lhs_sums", "lhs_sums_se", "lhs_max", "lhs_max_se", "rhs", "margin", "ok"],
          ((c.i, c.j, c.lhs_sums, c.lhs_sums_se, c.lhs_max, c.lhs_max_se, c.rhs, c.margin, int(c.ok))
           for c in rep.checks))
    return rep.verdict


def run_moment_fit(cfg, seed, w, threads):
    model = config.build_model(cfg["model"])
    rep = fit_moment_constant(model, config.build_net(cfg), int(cfg["nu"]), cfg["lam"], cfg["m_grid"],
                              cfg["replicates"], seed, band=cfg.get("band", 4.0), threads=threads)
    w.json("report.json", {"model": model.describe(), "report": rep.to_dict()})
    w.csv("constants.csv", ["m", "norm_hat", "C_hat"], zip(rep.m_grid, rep.norm_hat, rep.C_hat))
    return rep.verdict


def run_covariance(cfg, seed, w, threads):
    model = config.build_model(cfg["model"])
    fn = ProductFunctional(tuple(config.build_member(m) for m in cfg["members"]), cfg["split"])
    rep = check_covariance_inequality(model, fn, cfg["indices"], cfg["n"], cfg["lam"], cfg["replicates"],
                                      seed, threads=threads)
    w.json("report.json", {"model": model.describe(), "report": rep.to_dict()})
    return rep.verdict


def run_chaining_scaling(cfg, seed, w, threads):
    model = config.build_model(cfg["model"])
    cls = config.build_class(cfg["class"])
    N_fn = class_bracketing_fn(cls)
    rep = scaling_check(model, cls, int(cfg["nu"]), cfg["lam"], cfg["kappa"], cfg["m_grid"], cfg["delta_grid"],
                        cfg["replicates"], seed, N_fn=N_fn, band=cfg.get("band", 4.0), threads=threads)
    w.json("report.json", {"model": model.describe(), "report": rep.to_dict()})
    w.csv("scaling.csv", ["m", "delta", "lhs", "lhs_se", "rhs", "ratio"],
          ((r["m"], r["delta"], r["lhs"], r["lhs_se"], r["rhs"], r["ratio"]) for r in rep.rows))
    return rep.verdict


def run_aec(cfg, seed, w, threads):
    model = config.build_model(cfg["model"])
    tab = aec_table(model, config.build_net(cfg), cfg["delta_grid"], cfg["n_grid"], cfg["replicates"], seed,
                    eps=cfg.get("eps", 0.75), process=cfg.get("aec_process", "Z"),
                    refine=cfg.get("refine", 4), threads=threads)
    w.json("report.json", {"model": model.describe(), "table": tab.to_dict()})
    w.csv("aec.csv", ["delta", "n", "p_hat", "se", "split1", "split2"], tab.csv_rows())
    return None


def run_lipschitz(cfg, seed, w, threads):
    model = config.build_model(cfg["model"])
    n = cfg["n"]
    if "intervals" in cfg:
        pairs = [(tuple(a), tuple(b)) for a, b in cfg["intervals"]]
    else:
        pairs = config.h_pairs(cfg.get("h_grid", {"base": 0.25, "count": 12}), n)
    mpairs = [(config.build_member(a), config.build_member(b)) for a, b in cfg.get("member_pairs", [])]
    rep = lipschitz_increments(model, n, config.build_member(cfg["member"]), pairs, cfg["p"], cfg["replicates"],
                               seed, member_pairs=mpairs, threads=threads)
    w.json("report.json", {"model": model.describe(), "report": rep.to_dict()})
    w.csv("increments.csv", ["direction", "label", "distance", "norm", "se", "ratio", "flagged"],
          ((r.direction, r.label, r.distance, r.norm, r.se, r.ratio, int(r.flagged)) for r in rep.rows))
    return "FAIL" if any(r.flagged for r in rep.rows) else None


def run_bracketing(cfg, seed, w, threads):
    cls = config.build_class(cfg["class"])
    marg = Marginals.uniform(1)
    numbers = [(e, bracketing_number(cls, e, marg)) for e in cfg["eps_grid"]]
    w.csv("numbers.csv", ["eps", "N"], numbers)
    if cls.kind == "halfline_indicators":
        for e in cfg["eps_grid"]:
            cover = build_brackets_halfline(e, marg, cls.lo, cls.hi)
            w.csv(f"cover_eps{e:g}.csv", ["k", "x_k"], cover.csv_rows())
    N_fn = class_bracketing_fn(cls, marg)
    integral = bracketing_integral(N_fn, cfg["lam"], cfg["nu"], cfg.get("eta", 1.0))
    exponent = getattr(N_fn, "exponent", 0.0)
    lam_grid = cfg.get("lam_grid", [cfg["lam"]])
    nu_grid = cfg.get("nu_grid", [cfg["nu"]])
    w.csv("feasibility.csv", ["lam", "nu", "verdict"],
          ((l, v, "finite" if bracketing_feasible(l, v, exponent) else "divergent")
           for l in lam_grid for v in nu_grid))
    w.json("report.json", {"class": cls.describe(), "integral": {
        "value": integral.value, "error_estimate": integral.error_estimate, "diverges": integral.diverges,
        "exponent": integral.exponent, "verdict": integral.verdict}, "numbers": numbers})
    return "FAIL" if integral.diverges else None


def run_pipeline(cfg, seed, w, threads):
    model = config.build_model(cfg["model"])
    cls = config.build_class(cfg["class"])
    bundle = pipeline_check(model, cls, cfg["nu"], cfg["lam"], cfg["kappa"], cfg.get("K", 1.0),
                            cfg.get("eta", 1.0), cfg.get("n", 1024), cfg.get("replicates", 2000), seed)
    w.json("verdict.json", bundle.to_dict())
    return "PASS" if bundle.passed else "FAIL"


def run_cusum(cfg, seed, w, threads):
    model = config.build_model(cfg["model"])
    net = config.build_net(cfg)
    rows = simulate(model, cfg["n"], cfg["replicates"], seed)
    stats = changepoint_cusum(rows, net)
    w.csv("cusum.csv", ["replicate", "statistic"], enumerate(stats.tolist()))
    w.json("report.json", {"model": model.describe(), "median": float(np.median(stats)),
                           "mean": float(np.mean(stats)), "replicates": cfg["replicates"]})
    return None


HELP = {
    "simulate": "draw rows of a triangular array",
    "verify-maximal": "Monte Carlo check of the maximal inequality",
    "moment-fit": "fit the moment-bound constant across block lengths",
    "covariance": "check the covariance inequality under mixing",
    "chaining-scaling": "growth of the chaining bound ratio along m",
    "aec": "equicontinuity modulus exceedance table",
    "lipschitz": "increments of the smoothed process",
    "bracketing": "bracketing cover and integral",
    "pipeline": "hypothesis checklist for weak convergence",
    "cusum": "Kolmogorov-Smirnov type change-point statistic",
}

RUNNERS = {
    "simulate": run_simulate,
    "verify-maximal": run_verify_maximal,
    "moment-fit": run_moment_fit,
    "covariance": run_covariance,
    "chaining-scaling": run_chaining_scaling,
    "aec": run_aec,
    "lipschitz": run_lipschitz,
    "bracketing": run_bracketing,
    "pipeline": run_pipeline,
    "cusum": run_cusum,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="seqemp", description="Sequential empirical process experiments.")
    sub = p.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND",
                             title="subcommands")
    for name in RUNNERS:
        s = sub.add_parser(name, help=HELP[name])
        s.add_argument("--config", required=True, help="YAML experiment config")
        s.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
        s.add_argument("--out", required=True, help="output directory")
        s.add_argument("--replicates", type=int, default=None, help="replicate count override")
        s.add_argument("--threads", type=int, default=1, help="worker threads")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def run(subcommand: str, config_path: str, seed: int | None, out: str, replicates: int | None = None,
        threads: int = 1) -> int:
    try:
        cfg = dict(config.load(config_path))
        if seed is not None:
            cfg["seed"] = int(seed)
        if replicates is not None:
            cfg["replicates"] = int(replicates)
        cfg.setdefault("seed", 0)
        config.validate(cfg, subcommand)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if threads < 1:
        print("config error: --threads must be >= 1", file=sys.stderr)
        return 2
    out_dir = Path(out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"output directory not writable: {exc}", file=sys.stderr)
        return 2
    h = config.config_hash(cfg)
    w = Writer(out_dir, h, cfg["seed"])
    t0 = time.perf_counter()
    try:
        verdict = RUNNERS[subcommand](cfg, cfg["seed"], w, threads)
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    wall = time.perf_counter() - t0
    manifest = {
        "subcommand": subcommand,
        "config_hash": h,
        "seed": cfg["seed"],
        "verdict": verdict,
        "artifacts": {f: hashlib.sha256((out_dir / f).read_bytes()).hexdigest() for f in w.files},
        "versions": {"seqemp": __version__, "python": platform.python_version(), "numpy": np.__version__,
                     "scipy": scipy.__version__},
        "threads": threads,
        "wall_time_s": wall,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    log.info("%s finished in %.2fs, verdict %s", subcommand, wall, verdict)
    return 1 if verdict == "FAIL" else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    return run(args.subcommand, args.config, args.seed, args.out, args.replicates, args.threads)


if __name__ == "__main__":
    sys.exit(main())
