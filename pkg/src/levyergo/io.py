"""Experiment configuration files and CSV output with provenance headers."""

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

from .exceptions import UsageError
from .spectral_model import model_from_dict

SCHEMA_VERSION = 1

_CONFIG_FIELDS = {
    "schema_version", "model", "scheme", "h", "T", "time_grid", "m_paths", "seed",
    "p_moment", "dims", "bins", "x_list", "output", "t_burn",
}


@dataclass
class ExperimentConfig:
    model: dict
    seed: int
    scheme: str = "exp_euler"
    h: float = 0.05
    T: float | None = None
    time_grid: list | None = None
    m_paths: int = 1000
    p_moment: float | None = None
    dims: list = field(default_factory=lambda: [1])
    bins: int = 64
    x_list: list = field(default_factory=lambda: [0.0])
    output: str = "."
    t_burn: float | None = None

    def times(self):
        if self.time_grid is not None:
            return [float(t) for t in self.time_grid]
        if self.T is None:
            raise UsageError("config: one of T or time_grid is required")
        return [float(self.T)]

    def horizon(self):
        return max(self.times())

    def build_model(self):
        return model_from_dict(self.model, "config.model")

    def to_dict(self):
        out = {"schema_version": SCHEMA_VERSION}
        for name in ("model", "scheme", "h", "T", "time_grid", "m_paths", "seed", "p_moment",
                     "dims", "bins", "x_list", "output", "t_burn"):
            val = getattr(self, name)
            if val is not None:
                out[name] = val
        return out


def _require(cond, path, msg):
    if not cond:
        raise UsageError(f"{path}: {msg}")


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def parse_config(data, base_dir=".", overrides=None):
    """Validate a config mapping and return an :class:`ExperimentConfig`.

    ``model`` may be an inline object or a path (relative to ``base_dir``) to
    a JSON model file.  ``overrides`` (from command-line flags) replace config
    values when not None.
    """
    _require(isinstance(data, dict), "config", "expected a JSON object")
    data = dict(data)
    for key, val in (overrides or {}).items():
        if val is not None:
            data[key] = val
    unknown = set(data) - _CONFIG_FIELDS
    _require(not unknown, "config", f"unknown field(s) {sorted(unknown)}")
    version = data.pop("schema_version", SCHEMA_VERSION)
    _require(version == SCHEMA_VERSION, "config.schema_version",
             f"unsupported version {version!r} (expected {SCHEMA_VERSION})")
    _require("model" in data, "config.model", "required")
    model = data["model"]
    if isinstance(model, str):
        path = Path(base_dir) / model
        _require(path.is_file(), "config.model", f"file {str(path)!r} does not exist")
        with open(path) as fh:
            model = json.load(fh)
    _require(isinstance(model, dict), "config.model", "expected an object or a file path")
    data["model"] = model
    _require("seed" in data, "config.seed", "required (no clock-based default)")
    seed = data["seed"]
    _require(isinstance(seed, int) and not isinstance(seed, bool) and 0 <= seed < 2 ** 64,
             "config.seed", "must be an unsigned 64-bit integer")
    for key in ("h", "T", "p_moment", "t_burn"):
        if data.get(key) is not None:
            _require(_is_number(data[key]) and data[key] > 0, f"config.{key}",
                     "must be a positive number")
    if "time_grid" in data:
        grid = data["time_grid"]
        _require(isinstance(grid, list) and grid and all(_is_number(t) and t >= 0 for t in grid),
                 "config.time_grid", "must be a nonempty list of nonnegative numbers")
    if "m_paths" in data:
        _require(isinstance(data["m_paths"], int) and data["m_paths"] >= 1, "config.m_paths",
                 "must be a positive integer")
    if "bins" in data:
        _require(isinstance(data["bins"], int) and data["bins"] >= 1, "config.bins",
                 "must be a positive integer")
    if "dims" in data:
        dims = data["dims"]
        _require(isinstance(dims, list) and 1 <= len(dims) <= 3
                 and all(isinstance(d, int) and d >= 1 for d in dims),
                 "config.dims", "must list one to three 1-based mode indices")
    if "x_list" in data:
        xs = data["x_list"]
        _require(isinstance(xs, list) and xs, "config.x_list", "must be a nonempty list")
        for i, x in enumerate(xs):
            ok = _is_number(x) or (isinstance(x, list) and all(_is_number(v) for v in x))
            _require(ok, f"config.x_list[{i}]", "must be a number or a list of numbers")
    if "scheme" in data:
        _require(data["scheme"] in ("exp_euler", "picard"), "config.scheme",
                 "must be exp_euler or picard")
    return ExperimentConfig(**data)


def load_config(path, overrides=None):
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"config file {str(path)!r} does not exist")
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config: invalid JSON ({exc})") from None
    return parse_config(data, path.parent, overrides)


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def provenance_lines(command, config, extra=None):
    from . import __version__
    lines = [f"levyergo {__version__}", f"command: {command}", f"seed: {config.seed}",
             "config: " + json.dumps(config.to_dict(), sort_keys=True)]
    for key, val in (extra or {}).items():
        lines.append(f"{key}: {val}")
    return lines


def write_csv(path, header, rows, comments=()):
    """Comma-separated file with ``#`` comment lines, a header row, then rows.

    Floats use ``repr`` so identical inputs give byte-identical files.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def ensemble_rows(ensembles):
    for ens in ensembles:
        t = float(ens.time)
        for pid, row in zip(ens.path_ids.tolist(), ens.samples.tolist()):
            yield [t, pid, *row]


def write_ensemble_csv(path, ensembles, comments=()):
    n = ensembles[0].n_modes
    header = ["time", "path_id", *(f"mode_{k}" for k in range(1, n + 1))]
    return write_csv(path, header, ensemble_rows(ensembles), comments)


def read_csv(path):
    """Parse a file written by :func:`write_csv`; returns (comments, header, rows)."""
    comments, header, rows = [], None, []
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                comments.append(line[1:].strip())
            elif header is None:
                header = line.split(",")
            elif line:
                rows.append([float(v) for v in line.split(",")])
    return comments, header, rows


def default_threads():
    return os.cpu_count() or 1
