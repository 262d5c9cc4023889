"""Bounded Lipschitz nonlinearities acting on truncated states."""

from dataclasses import dataclass, field

import math

import numpy as np

from ._validation import check_scalar
from .exceptions import ParameterError, UsageError

DRIFT_KINDS = ("zero", "constant", "saturating")
_PROBE_SEED = 20240917


def _row_norms(A):
    """Euclidean norm of each row, rescaled so huge entries do not overflow."""
    scale = np.max(np.abs(A), axis=1, keepdims=True)
    safe = np.where(scale > 0, scale, 1.0)
    return scale[:, 0] * np.linalg.norm(A / safe, axis=1)


@dataclass(frozen=True)
class DriftSpec:
    """Nonlinearity ``F`` with declared bound ``c_f`` and Lipschitz constant.

    kinds
        ``zero``: F = 0.
        ``constant``: F(x) = v; ``params["value"]`` is a scalar (same value in
        every mode) or a per-mode list.
        ``saturating``: F(x)_k = (c_f / sqrt(N)) * tanh(slope * x_j) with
        ``j = (k + shift) mod N``; ``params`` holds ``slope`` and ``shift``.

    ``c_f`` or ``lipschitz`` left as None are derived by :meth:`bind` once the
    number of modes is known.
    """

    kind: str = "zero"
    c_f: float | None = 0.0
    lipschitz: float | None = 0.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in DRIFT_KINDS:
            raise UsageError(f"drift.kind must be one of {DRIFT_KINDS}, got {self.kind!r}")
        if self.c_f is not None:
            object.__setattr__(self, "c_f", check_scalar(self.c_f, "drift.c_f", lower=0.0))
        if self.lipschitz is not None:
            object.__setattr__(self, "lipschitz",
                               check_scalar(self.lipschitz, "drift.lipschitz", lower=0.0))
        object.__setattr__(self, "params", dict(self.params))
        if self.kind == "saturating" and self.c_f is None:
            raise UsageError("saturating drift needs an explicit c_f")

    @classmethod
    def zero(cls):
        return cls("zero", 0.0, 0.0)

    @classmethod
    def constant(cls, value, c_f=None):
        v = np.atleast_1d(np.asarray(value, dtype=float))
        params = {"value": float(v[0]) if v.size == 1 else v.tolist()}
        return cls("constant", c_f, 0.0, params)

    @classmethod
    def saturating(cls, c_f, slope=1.0, shift=1, lipschitz=None):
        return cls("saturating", c_f, lipschitz, {"slope": float(slope), "shift": int(shift)})

    @property
    def is_zero(self):
        return self.kind == "zero"

    def bind(self, n_modes):
        """Resolve mode-count dependent defaults and verify the declarations.

        Raises ``ParameterError`` if a declared constant is violated on the
        random probe set.
        """
        c_f, lip = self.c_f, self.lipschitz
        if self.kind == "constant":
            v = self._constant_vector(n_modes)
            if c_f is None:
                c_f = math.hypot(*v)
            lip = 0.0 if lip is None else lip
        elif self.kind == "saturating":
            if lip is None:
                lip = c_f * abs(self.params.get("slope", 1.0)) / np.sqrt(n_modes)
        else:
            c_f = 0.0 if c_f is None else c_f
            lip = 0.0 if lip is None else lip
        spec = DriftSpec(self.kind, c_f, lip, self.params)
        spec.verify(n_modes)
        return spec

    def _constant_vector(self, n_modes):
        v = np.atleast_1d(np.asarray(self.params.get("value", 0.0), dtype=float))
        if v.size == 1:
            return np.full(n_modes, v[0])
        if v.size != n_modes:
            raise UsageError(f"constant drift has {v.size} values for {n_modes} modes")
        return v

    def evaluate(self, X):
        """Apply F row-wise to an array of shape (M, N) or a single state."""
        X = np.asarray(X, dtype=float)
        n = X.shape[-1]
        if self.kind == "zero":
            return np.zeros_like(X)
        if self.kind == "constant":
            return np.broadcast_to(self._constant_vector(n), X.shape).copy()
        slope = self.params.get("slope", 1.0)
        shift = int(self.params.get("shift", 1))
        src = np.roll(X, -shift, axis=-1)
        return (self.c_f / np.sqrt(n)) * np.tanh(slope * src)

    def verify(self, n_modes, n_probes=256):
        """Check the declared bound and Lipschitz constant on random probes."""
        if self.c_f is None or self.lipschitz is None:
            raise UsageError("drift constants are unresolved; call bind() first")
        rng = np.random.default_rng(_PROBE_SEED)
        scales = np.repeat([0.1, 1.0, 10.0, 100.0], n_probes // 4)[:, None]
        x = rng.standard_normal((scales.shape[0], n_modes)) * scales
        y = x + rng.standard_normal(x.shape) * scales * 0.1
        fx, fy = self.evaluate(x), self.evaluate(y)
        bound = np.max(_row_norms(fx))
        if bound > self.c_f * (1 + 1e-9) + 1e-12:
            raise ParameterError(
                f"{self.kind} drift exceeds declared bound c_f={self.c_f} (probe max {bound:.6g})")
        ratio = np.max(_row_norms(fx - fy) / _row_norms(x - y))
        if ratio > self.lipschitz * (1 + 1e-9) + 1e-12:
            raise ParameterError(
                f"{self.kind} drift exceeds declared Lipschitz constant "
                f"{self.lipschitz} (probe max {ratio:.6g})")

    def to_dict(self):
        out = {"kind": self.kind, "c_f": self.c_f, "lipschitz": self.lipschitz}
        if self.params:
            out["params"] = dict(self.params)
        return out

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        unknown = set(data) - {"kind", "c_f", "lipschitz", "params"}
        if unknown:
            raise UsageError(f"drift: unknown field(s) {sorted(unknown)}")
        kind = data.get("kind", "zero")
        default = None if kind in ("constant", "saturating") else 0.0
        return cls(kind, data.get("c_f", default), data.get("lipschitz", default),
                   data.get("params", {}))
