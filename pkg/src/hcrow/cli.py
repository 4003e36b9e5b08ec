"""Command-line entry point: one subcommand per data set.

Exit codes: 0 success, 2 configuration error, 3 numerical failure beyond the
exclusion budget.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .ensemble import (
    EnsembleFailure,
    EnsembleSpec,
    Observable,
    disorder_sweep,
    length_sweep,
    run_ensemble,
)
from .lattice import LatticeKind, LatticeSpec, band_structure
from .rng import PRNG_NAME
from .transport import FrequencyGrid

log = logging.getLogger("hcrow")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

COMMANDS = ("band", "transmit", "delay", "hom", "noon", "sweep-disorder", "sweep-length")

DEFAULT_CONFIG = {
    "lattice": {
        "length": 20,
        "hopping": 1.0,
        "kappa_ex": 0.5,
        "kappa_in": 0.1,
        "disorder_std": 0.8,
        "port_offset": 0,
    },
    "lattices": ["hcrow", "crow"],
    "length_convention": "cells",
    "realizations": 500,
    "master_seed": 0,
    "grid": {"half_width": 4.0, "count": 513},
    "envelope_sigma": 0.5,
    "tau_c": {"half_width": None, "count": 101},
    "photon_numbers": list(range(1, 11)),
    "k_points": 256,
    "u_values": [0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0],
    "lengths": [5, 10, 20, 30, 40],
    "method": "banded",
    "output_dir": "out",
    "format": "csv",
    "parallel": 1,
}

# not echoed into the manifest: they do not change any number
RUNTIME_KEYS = ("output_dir", "parallel")


class ConfigError(ValueError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


def _merge_strict(base: dict, update: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in update.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(where, "unknown key")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(where, "expected a mapping")
            out[key] = _merge_strict(base[key], value, where + ".")
        else:
            out[key] = value
    return out


def _num(cfg, path, *, integer=False, minimum=None, allow_none=False, exclusive=False):
    node = cfg
    for part in path.split("."):
        node = node[part]
    if node is None and allow_none:
        return None
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise ConfigError(path, f"expected a number, got {node!r}")
    if integer and int(node) != node:
        raise ConfigError(path, f"expected an integer, got {node!r}")
    if not math.isfinite(node):
        raise ConfigError(path, "must be finite")
    if minimum is not None and (node <= minimum if exclusive else node < minimum):
        op = ">" if exclusive else ">="
        raise ConfigError(path, f"must be {op} {minimum}, got {node!r}")
    return int(node) if integer else float(node)


@dataclass
class RunConfig:
    data: dict

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("<root>", "config must be a mapping")
        cfg = _merge_strict(DEFAULT_CONFIG, raw)
        rc = cls(cfg)
        rc.validate()
        return rc

    @classmethod
    def load(cls, path: str | None, overrides: dict) -> "RunConfig":
        raw = {}
        if path:
            try:
                with open(path, encoding="utf-8") as fh:
                    raw = json.load(fh)
            except OSError as exc:
                raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
            except json.JSONDecodeError as exc:
                raise ConfigError("--config", f"invalid JSON: {exc}") from None
            if not isinstance(raw, dict):
                raise ConfigError("<root>", "config must be a mapping")
        raw = copy.deepcopy(raw)
        raw.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(raw)

    def validate(self):
        c = self.data
        length = _num(c, "lattice.length", integer=True, minimum=1)
        _num(c, "lattice.hopping", minimum=0, exclusive=True)
        for key in ("kappa_ex", "kappa_in", "disorder_std"):
            _num(c, f"lattice.{key}", minimum=0)
        _num(c, "lattice.port_offset", integer=True, minimum=0)
        lattices = c["lattices"]
        if not isinstance(lattices, list) or not lattices:
            raise ConfigError("lattices", "expected a non-empty list")
        for item in lattices:
            try:
                LatticeKind(item)
            except ValueError:
                raise ConfigError("lattices", f"unknown lattice {item!r} (hcrow | crow)") from None
        if len(set(lattices)) != len(lattices):
            raise ConfigError("lattices", "duplicate entries")
        if c["length_convention"] not in ("cells", "sites"):
            raise ConfigError("length_convention", "expected 'cells' or 'sites'")
        if c["length_convention"] == "sites" and length % 2:
            raise ConfigError("lattice.length", "must be even under the 'sites' convention")
        _num(c, "realizations", integer=True, minimum=1)
        seed = _num(c, "master_seed", integer=True, minimum=0)
        if seed >= 2**64:
            raise ConfigError("master_seed", "must fit in 64 bits")
        _num(c, "grid.half_width", minimum=0, exclusive=True)
        count = _num(c, "grid.count", integer=True, minimum=3)
        if count % 2 == 0:
            raise ConfigError("grid.count", "must be odd so that omega = 0 is a grid point")
        _num(c, "envelope_sigma", minimum=0, exclusive=True)
        _num(c, "tau_c.half_width", minimum=0, allow_none=True)
        _num(c, "tau_c.count", integer=True, minimum=1)
        _num(c, "k_points", integer=True, minimum=2)
        for key, minimum, integer in (("photon_numbers", 1, True), ("u_values", 0, False), ("lengths", 2, True)):
            values = c[key]
            if not isinstance(values, list) or not values:
                raise ConfigError(key, "expected a non-empty list")
            for i, v in enumerate(values):
                _num({key: v}, key, integer=integer, minimum=minimum)
        if c["method"] not in ("banded", "dense"):
            raise ConfigError("method", "expected 'banded' or 'dense'")
        if c["format"] not in ("csv", "json"):
            raise ConfigError("format", "expected 'csv' or 'json'")
        _num(c, "parallel", integer=True, minimum=1)
        if not isinstance(c["output_dir"], str) or not c["output_dir"]:
            raise ConfigError("output_dir", "expected a path")
        for kind in lattices:
            try:
                self.lattice_spec(kind)
            except ValueError as exc:
                raise ConfigError("lattice", str(exc)) from None

    def lattice_spec(self, kind: str) -> LatticeSpec:
        lat = self.data["lattice"]
        n = int(lat["length"])
        if self.data["length_convention"] == "sites":
            n //= 2
        return LatticeSpec(
            kind=LatticeKind(kind),
            num_cells=n,
            hopping=float(lat["hopping"]),
            kappa_ex=float(lat["kappa_ex"]),
            kappa_in=float(lat["kappa_in"]),
            disorder_std=float(lat["disorder_std"]),
            port_offset=int(lat["port_offset"]),
        )

    def grid(self) -> FrequencyGrid:
        g = self.data["grid"]
        return FrequencyGrid.symmetric(float(g["half_width"]), int(g["count"]))

    def tau_grid(self) -> np.ndarray:
        t = self.data["tau_c"]
        half = t["half_width"]
        if half is None:
            half = 10 / float(self.data["envelope_sigma"])
        return np.linspace(-float(half), float(half), int(t["count"]))

    def ensemble_spec(self, kind: str, observables) -> EnsembleSpec:
        c = self.data
        return EnsembleSpec(
            lattice=self.lattice_spec(kind),
            realizations=int(c["realizations"]),
            master_seed=int(c["master_seed"]),
            grid=self.grid(),
            envelope_sigma=float(c["envelope_sigma"]),
            tau_c_grid=self.tau_grid(),
            observables=frozenset(observables),
            photon_numbers=tuple(int(n) for n in c["photon_numbers"]),
            parallel=int(c["parallel"]),
            method=c["method"],
        )

    def manifest_config(self) -> dict:
        return {k: v for k, v in self.data.items() if k not in RUNTIME_KEYS}


# --------------------------------------------------------------------- output


def _cell(v):
    if isinstance(v, (str, int)) and not isinstance(v, bool):
        return v
    return float(v)


def render_table(columns: dict, fmt: str) -> str:
    names = list(columns)
    n = len(next(iter(columns.values()))) if columns else 0
    rows = [[_cell(columns[k][i]) for k in names] for i in range(n)]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(names)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
        return buf.getvalue()
    records = [
        {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in zip(names, row)}
        for row in rows
    ]
    return json.dumps(records, indent=1, allow_nan=False) + "\n"


def read_table(path) -> dict:
    """Parse a table written by this module back into columns."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        records = json.loads(text)
        names = list(records[0]) if records else []
        return {k: [np.nan if r[k] is None else r[k] for r in records] for k in names}
    reader = csv.reader(io.StringIO(text))
    names = next(reader)
    cols = {k: [] for k in names}
    for row in reader:
        for k, v in zip(names, row):
            try:
                cols[k].append(float(v))
            except ValueError:
                cols[k].append(v)
    return cols


def _band_columns(prefix: str, band) -> dict:
    return {
        f"{prefix}_mean": band.mean,
        f"{prefix}_std": band.std,
        f"{prefix}_median": band.median,
        f"{prefix}_lower": band.lower,
        f"{prefix}_upper": band.upper,
    }


def _hist_columns(prefix: str, hist) -> dict:
    return {
        f"{prefix}_lower": hist.edges[:-1],
        f"{prefix}_upper": hist.edges[1:],
        "count": hist.counts.astype(int).tolist(),
        "probability": hist.probability,
        "density": hist.density,
    }


def _scalar_columns(scalars: dict) -> dict:
    names = sorted(scalars)
    return {"name": names, "value": [float(scalars[k]) for k in names]}


# ------------------------------------------------------------------- commands


def cmd_band(cfg: RunConfig) -> dict:
    tables = {}
    for kind in cfg.data["lattices"]:
        b = band_structure(cfg.lattice_spec(kind), int(cfg.data["k_points"]))
        tables[f"band_{kind}"] = {
            "k": b.k,
            "omega_plus_over_J": b.omega_plus,
            "omega_minus_over_J": b.omega_minus,
            "vg_plus_over_J": b.velocity_plus,
            "vg_minus_over_J": b.velocity_minus,
        }
    return tables


def cmd_transmit(cfg: RunConfig) -> dict:
    tables = {}
    obs = {Observable.TRANSMISSION, Observable.REFLECTION, Observable.PROFILE}
    for kind in cfg.data["lattices"]:
        spec = cfg.ensemble_spec(kind, obs)
        s = run_ensemble(spec)
        cols = {"omega_over_J": spec.grid.omega}
        cols.update(_band_columns("T", s.per_omega["transmission"]))
        cols.update(_band_columns("T_db", s.per_omega["transmission_db"]))
        cols.update(_band_columns("R", s.per_omega["reflection"]))
        tables[f"transmission_{kind}"] = cols
        prof = s.per_site["profile"]
        lat = spec.lattice
        if lat.kind is LatticeKind.HCROW:
            cell = [i // 2 + 1 for i in range(lat.dim)]
            sub = ["a" if i % 2 == 0 else "b" for i in range(lat.dim)]
        else:
            cell = list(range(1, lat.dim + 1))
            sub = ["a"] * lat.dim
        pcols = {"site": list(range(1, lat.dim + 1)), "cell": cell, "sublattice": sub}
        pcols.update(_band_columns("intensity", prof))
        tables[f"profile_{kind}"] = pcols
        tables[f"scalars_transmit_{kind}"] = _scalar_columns(s.scalars)
    return tables


def cmd_delay(cfg: RunConfig) -> dict:
    tables = {}
    for kind in cfg.data["lattices"]:
        spec = cfg.ensemble_spec(kind, {Observable.DELAY})
        s = run_ensemble(spec)
        cols = {"omega_over_J": spec.grid.omega}
        cols.update(_band_columns("tau_times_J", s.per_omega["delay"]))
        cols["excluded"] = s.delay_excluded.astype(int).tolist()
        tables[f"delay_{kind}"] = cols
        tables[f"delay_hist_{kind}"] = _hist_columns("tau_times_J", s.histograms["delay_tau0"])
        tables[f"scalars_delay_{kind}"] = _scalar_columns(s.scalars)
    return tables


def cmd_hom(cfg: RunConfig) -> dict:
    tables = {}
    for kind in cfg.data["lattices"]:
        spec = cfg.ensemble_spec(kind, {Observable.HOM})
        s = run_ensemble(spec)
        cols = {"tau_c_times_J": spec.tau_c_grid}
        cols.update(_band_columns("P_coin", s.per_tau["hom"]))
        tables[f"hom_{kind}"] = cols
        tables[f"scalars_hom_{kind}"] = _scalar_columns(s.scalars)
    return tables


def cmd_noon(cfg: RunConfig) -> dict:
    tables = {}
    obs = {Observable.NOON_COINCIDENCE, Observable.NOON_PURITY, Observable.NOON_ENTROPY}
    for kind in cfg.data["lattices"]:
        spec = cfg.ensemble_spec(kind, obs)
        s = run_ensemble(spec)
        tables[f"noon_hist_{kind}"] = _hist_columns("P_coin", s.histograms["noon_coincidence_tau0"])
        cols = {"tau_c_times_J": spec.tau_c_grid}
        cols.update(_band_columns("P_coin", s.per_tau["noon_coincidence"]))
        tables[f"noon_coincidence_{kind}"] = cols
        cols = {"tau_c_times_J": spec.tau_c_grid}
        cols.update(_band_columns("purity", s.per_tau["noon_purity"]))
        tables[f"purity_{kind}"] = cols
        cols = {"N": list(spec.photon_numbers)}
        cols.update(_band_columns("exp_S", s.per_photon_number["exp_entropy"]))
        tables[f"entropy_{kind}"] = cols
        tables[f"scalars_noon_{kind}"] = _scalar_columns(s.scalars)
    return tables


def cmd_sweep_disorder(cfg: RunConfig) -> dict:
    cols = {k: [] for k in ("lattice", "U_over_J", "T0_db_mean", "T0_db_lower", "T0_db_upper",
                            "T0_db_std", "T0_linear_mean_db", "excluded")}
    for kind in cfg.data["lattices"]:
        spec = cfg.ensemble_spec(kind, {Observable.TRANSMISSION})
        for row in disorder_sweep(spec, [float(u) for u in cfg.data["u_values"]]):
            cols["lattice"].append(kind)
            cols["U_over_J"].append(row.value)
            cols["T0_db_mean"].append(row.mean)
            cols["T0_db_lower"].append(row.lower)
            cols["T0_db_upper"].append(row.upper)
            cols["T0_db_std"].append(row.std)
            cols["T0_linear_mean_db"].append(row.extra)
            cols["excluded"].append(row.excluded)
    return {"disorder_sweep": cols}


def cmd_sweep_length(cfg: RunConfig) -> dict:
    cols = {k: [] for k in ("lattice", "length", "min_coincidence_mean", "min_coincidence_lower",
                            "min_coincidence_upper", "min_coincidence_std", "min_of_mean_curve", "excluded")}
    for kind in cfg.data["lattices"]:
        spec = cfg.ensemble_spec(kind, {Observable.HOM})
        lengths = [int(n) for n in cfg.data["lengths"]]
        if cfg.data["length_convention"] == "sites":
            lengths = [n // 2 for n in lengths]
        for row in length_sweep(spec, lengths):
            cols["lattice"].append(kind)
            cols["length"].append(int(row.value))
            cols["min_coincidence_mean"].append(row.mean)
            cols["min_coincidence_lower"].append(row.lower)
            cols["min_coincidence_upper"].append(row.upper)
            cols["min_coincidence_std"].append(row.std)
            cols["min_of_mean_curve"].append(row.extra)
            cols["excluded"].append(row.excluded)
    return {"length_sweep": cols}


HANDLERS = {
    "band": cmd_band,
    "transmit": cmd_transmit,
    "delay": cmd_delay,
    "hom": cmd_hom,
    "noon": cmd_noon,
    "sweep-disorder": cmd_sweep_disorder,
    "sweep-length": cmd_sweep_length,
}


def _prepare_output_dir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError("output_dir", f"cannot create {path}: {exc.strerror}") from None
    if not os.access(out, os.W_OK):
        raise ConfigError("output_dir", f"{path} is not writable")
    return out


def write_outputs(out: Path, command: str, cfg: RunConfig, tables: dict) -> list:
    fmt = cfg.data["format"]
    rendered = {f"{name}.{fmt}": render_table(cols, fmt) for name, cols in tables.items()}
    manifest = {
        "command": command,
        "artifact": "hcrow",
        "artifact_version": __version__,
        "master_seed": cfg.data["master_seed"],
        "prng": PRNG_NAME,
        "config": cfg.manifest_config(),
        "files": sorted(rendered),
    }
    rendered[f"manifest_{command}.json"] = json.dumps(manifest, indent=1, sort_keys=True) + "\n"
    # stage everything first so a failed write leaves no partial set behind
    staged = []
    try:
        for name, text in rendered.items():
            fd, tmp = tempfile.mkstemp(dir=out, prefix=f".{name}.")
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            staged.append((tmp, out / name))
    except OSError:
        for tmp, _ in staged:
            os.unlink(tmp)
        raise
    for tmp, final in staged:
        os.replace(tmp, final)
    return [final for _, final in staged]


HELP = {
    "band": "Bloch bands and group velocities",
    "transmit": "transmission/reflection spectra and intensity profiles",
    "delay": "group-delay spectra and the delay histogram at omega = 0",
    "hom": "HOM coincidence versus controlled delay",
    "noon": "N00N coincidence histogram, purity and entanglement entropy",
    "sweep-disorder": "mean T(0) versus disorder strength",
    "sweep-length": "mean minimum HOM coincidence versus length",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hcrow",
        description="Disorder-ensemble data for helical and regular CROW delay lines.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (unknown keys are rejected)")
    common.add_argument("--out", dest="output_dir", help="output directory")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--seed", dest="master_seed", type=int, help="master seed (u64)")
    common.add_argument("--parallel", type=int, help="worker processes")
    common.add_argument("--length-convention", dest="length_convention", choices=("cells", "sites"))
    common.add_argument("--realizations", type=int)
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=HELP[name])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    overrides = {
        k: getattr(args, k)
        for k in ("output_dir", "format", "master_seed", "parallel", "length_convention", "realizations")
    }
    try:
        cfg = RunConfig.load(args.config, overrides)
        out = _prepare_output_dir(cfg.data["output_dir"])
        tables = HANDLERS[args.command](cfg)
        files = write_outputs(out, args.command, cfg, tables)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EnsembleFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # constraint violations surfacing from the model (e.g. empty output ports)
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: output_dir: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for f in files:
        log.info("wrote %s", f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())


def main_exit():
    sys.exit(main())
