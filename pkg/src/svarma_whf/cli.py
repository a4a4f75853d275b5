"""Command-line surface: simulate | estimate | select | whf | rotate | diagnose.

Every command reads a JSON config (--config), takes a few overriding flags,
writes its outputs under --out, and embeds the fully resolved config in every
JSON it produces.  Exit code 0 on success; on failure a machine-readable
error object is printed to stdout and the exit code is nonzero.  All
randomness flows through explicit seeds; there are no wall-clock defaults.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import model as model_mod
from .densities import ShockDensity
from .estimate import EstimationResult, OptimSchedule, fit
from .filtering import residuals
from .likelihood import loglik
from .model import (
    Dataset,
    SvarmaSpec,
    ThetaVector,
    read_csv,
    simulate,
    transfer_irf,
    write_csv,
)
from .polymat import PolyMat, fr_array
from .select import diagnostics_table, grid, rotate_long_run
from .whf import PartialIndices, WhfTriple, canonicalize, normalize, smith_whf_factorize

__all__ = ["main", "cmd_simulate", "cmd_estimate", "cmd_select", "cmd_whf",
           "cmd_rotate", "cmd_diagnose"]


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code
        self.message = message


def _load_config(args):
    cfg = {}
    if args.config:
        if not os.path.exists(args.config):
            raise CliError("config_not_found", f"no config file at {args.config}")
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    for key in ("data", "out", "seed", "jobs", "horizon"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if "jobs" not in cfg and os.environ.get("SVARMA_WHF_JOBS"):
        cfg["jobs"] = int(os.environ["SVARMA_WHF_JOBS"])
    cfg.setdefault("out", ".")
    return cfg


def _out_path(cfg, name):
    os.makedirs(cfg["out"], exist_ok=True)
    return os.path.join(cfg["out"], name)


def _dump_json(path, payload, cfg):
    payload = dict(payload)
    payload["config"] = cfg
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _spec_from_config(cfg):
    s = cfg.get("spec")
    if s is None:
        raise CliError("missing_spec", "config lacks a 'spec' block")
    try:
        return SvarmaSpec.from_json_dict(s)
    except (KeyError, ValueError) as exc:
        raise CliError("bad_spec", str(exc)) from exc


def _theta_from_config(cfg, spec):
    t = cfg.get("theta")
    if t is None:
        raise CliError("missing_theta", "config lacks a 'theta' block")
    try:
        if "tau1" in t:
            return ThetaVector.from_json_dict(spec, t)
        return model_mod.pack(
            np.asarray(t.get("a", np.zeros((spec.p, spec.n, spec.n))), dtype=float),
            np.asarray(t["p"], dtype=float),
            np.asarray(t["g"], dtype=float),
            np.asarray(t["B"], dtype=float),
            np.asarray(t["sigma"], dtype=float),
            [tuple(l) for l in t.get("lambda", [()] * spec.n)],
            spec,
        )
    except (KeyError, ValueError) as exc:
        raise CliError("bad_theta", str(exc)) from exc


def _dataset_from_config(cfg):
    path = cfg.get("data")
    if path is None:
        raise CliError("missing_data", "no dataset path given (--data)")
    if not os.path.exists(path):
        raise CliError("dataset_not_found", f"no dataset at {path}")
    ds = read_csv(path)
    if cfg.get("demean", False):
        ds = ds.demeaned()
    return ds


def _schedule_from_config(cfg):
    return OptimSchedule.from_json_dict(cfg.get("schedule", {}))


def _write_irf_csv(path, irf):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        n = irf.shape[1]
        header = ["horizon"] + [
            f"k_{i + 1}{j + 1}" for j in range(n) for i in range(n)
        ]
        w.writerow(header)
        for h, mat in enumerate(irf):
            w.writerow([h] + [repr(float(mat[i, j]))
                              for j in range(n) for i in range(n)])


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_simulate(cfg):
    spec = _spec_from_config(cfg)
    theta = _theta_from_config(cfg, spec)
    seed = int(cfg.get("seed", 0))
    T = int(cfg.get("T", 1000))
    burn = int(cfg.get("burn_in", 500))
    ds, _ = simulate(theta, T=T, burn_in=burn, seed=seed)
    data_path = _out_path(cfg, "data.csv")
    write_csv(ds, data_path)
    _dump_json(_out_path(cfg, "truth.json"), {
        "spec": spec.to_json_dict(),
        "theta": theta.to_json_dict(),
        "T": T,
        "burn_in": burn,
        "seed": seed,
        "data": data_path,
    }, cfg)
    return 0


def cmd_estimate(cfg):
    spec = _spec_from_config(cfg)
    ds = _dataset_from_config(cfg)
    schedule = _schedule_from_config(cfg)
    seed = int(cfg.get("seed", 0))
    res = fit(spec, ds, schedule, seed=seed)
    rs = residuals(res.theta_hat, ds)
    res.diagnostics = {"table": diagnostics_table(rs.eps)}
    _dump_json(_out_path(cfg, "result.json"), {"result": res.to_json_dict()}, cfg)
    if cfg.get("write_residuals", True):
        write_csv(Dataset(rs.eps, tuple(f"eps{i + 1}" for i in range(ds.n))),
                  _out_path(cfg, "residuals.csv"))
    horizon = int(cfg.get("horizon", 40))
    irf = transfer_irf(res.theta_hat, horizon=horizon)
    _write_irf_csv(_out_path(cfg, "irf.csv"), irf)
    return 0


def cmd_select(cfg):
    ds = _dataset_from_config(cfg)
    schedule = _schedule_from_config(cfg)
    densities = tuple(
        ShockDensity.from_json_dict(d)
        for d in cfg.get("densities",
                         [{"family": "sgt", "lambda": [0.0, 2.0, 10.0]}] * ds.n)
    )
    res = grid(
        ds,
        p_max=int(cfg.get("p_max", 8)),
        q_max=int(cfg.get("q_max", 8)),
        schedule=schedule,
        densities=densities,
        normalization=cfg.get("normalization", "natural"),
        seed=int(cfg.get("seed", 0)),
        jobs=cfg.get("jobs"),
    )
    res.write_csv(_out_path(cfg, "grid.csv"))
    best = res.best()
    _dump_json(_out_path(cfg, "grid.json"), {
        "grid": res.to_json_dict(),
        "best": best.to_json_dict(),
    }, cfg)
    return 0


def _fraction_matrix(rows):
    return fr_array([[Fraction(str(x)) for x in row] for row in rows])


def cmd_whf(cfg):
    b_cfg = cfg.get("b")
    if b_cfg is None:
        raise CliError("missing_b", "config lacks the 'b' coefficient block")
    try:
        coeffs = [_fraction_matrix(c) for c in b_cfg["coeffs"]]
        b = PolyMat(coeffs, rational=True)
    except (KeyError, ValueError, ZeroDivisionError) as exc:
        raise CliError("bad_b", f"cannot parse b(z): {exc}") from exc
    try:
        triple = canonicalize(smith_whf_factorize(b))
        payload = {"canonical": triple.to_json_dict()}
        mode = cfg.get("normalization")
        if mode:
            normalized, folded = normalize(triple, mode)
            payload["normalized"] = normalized.to_json_dict()
            payload["folded_constant"] = [[str(x) for x in row] for row in folded]
    except ValueError as exc:
        raise CliError("whf_failed", str(exc)) from exc
    _dump_json(_out_path(cfg, "whf.json"), payload, cfg)
    return 0


def cmd_rotate(cfg):
    path = cfg.get("result")
    if path is None or not os.path.exists(path):
        raise CliError("result_not_found", f"no estimation result at {path}")
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    rd = payload.get("result", payload)
    spec = SvarmaSpec.from_json_dict(rd["spec"])
    theta = ThetaVector.from_json_dict(spec, rd["theta_hat"])
    target = cfg.get("target")
    if target is None:
        raise CliError("missing_target", "config lacks the rotation 'target'")
    try:
        rot = rotate_long_run(
            theta,
            variable=int(target["variable"]) - 1,
            shock=int(target["shock"]) - 1,
            horizon=int(cfg.get("horizon", 40)),
        )
    except ValueError as exc:
        raise CliError("rotation_failed", str(exc)) from exc
    _dump_json(_out_path(cfg, "rotated.json"), {"rotation": rot.to_json_dict()}, cfg)
    _write_irf_csv(_out_path(cfg, "irf_rotated.csv"), rot.irf)
    return 0


def cmd_diagnose(cfg):
    path = cfg.get("residuals") or cfg.get("data")
    if path is None or not os.path.exists(path):
        raise CliError("residuals_not_found", f"no residual file at {path}")
    ds = read_csv(path)
    table = diagnostics_table(ds.values, lags=int(cfg.get("lags", 8)))
    _dump_json(_out_path(cfg, "diagnostics.json"), {"tests": table}, cfg)
    return 0


COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "select": cmd_select,
    "whf": cmd_whf,
    "rotate": cmd_rotate,
    "diagnose": cmd_diagnose,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="svarma-whf",
        description="Structural VARMA modelling via the Wiener-Hopf "
                    "factorisation of the MA polynomial",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config path")
        p.add_argument("--data", help="dataset CSV path")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="RNG seed")
        p.add_argument("--jobs", type=int,
                       help="parallel grid tasks (env SVARMA_WHF_JOBS)")
        p.add_argument("--horizon", type=int, help="IRF horizon")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        return COMMANDS[args.command](cfg)
    except CliError as exc:
        print(json.dumps({"error": exc.code, "message": exc.message},
                         sort_keys=True))
        return 2
    except Exception as exc:  # noqa: BLE001 - machine-readable failure contract
        print(json.dumps({
            "error": "internal_error",
            "message": f"{type(exc).__name__}: {exc}",
        }, sort_keys=True))
        return 3


if __name__ == "__main__":
    sys.exit(main())
