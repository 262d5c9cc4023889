"""Truncated diagonal models and executable admissibility checks.

A model lives on the first ``N`` eigenmodes of a self-adjoint negative
generator ``A e_k = -lambda_k e_k``.  Each mode carries a stable noise
coefficient ``b_k``, a Gaussian coefficient ``q_k`` (variance rate), and a
constant forcing ``a_k``.

Summability conditions are decided on the infinite power-law family when
one is available (p-series exponent tests), so they say something about
the untruncated equation.  Models given as explicit finite lists can only
be checked on the truncation; those entries are flagged as
``truncation-trivial``.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_alpha, check_int, check_scalar, check_vector, strictly_less
from .drift import DriftSpec
from .exceptions import ParameterError, StructuralError, UsageError

STABLE_SUMMABILITY = "stable_summability"
GAMMA_BOUND = "gamma_bound"
GAUSSIAN_TRACE = "gaussian_trace"
DRIFT_VECTOR = "drift_vector"
STABLE_NONDEGENERACY = "stable_nondegeneracy"
STRONG_FELLER = "strong_feller"

CONDITION_IDS = (STABLE_SUMMABILITY, GAMMA_BOUND, GAUSSIAN_TRACE, DRIFT_VECTOR,
                 STABLE_NONDEGENERACY, STRONG_FELLER)

_STATEMENTS = {
    STABLE_SUMMABILITY: "sum_k b_k^alpha / lambda_k < inf",
    GAMMA_BOUND: "gamma < 1/alpha",
    GAUSSIAN_TRACE: "sum_k q_k / lambda_k < inf",
    DRIFT_VECTOR: "sum_k a_k^2 / lambda_k < inf",
    STABLE_NONDEGENERACY: "b_k >= c lambda_k^(1/alpha - theta), some theta in (0,1)",
    STRONG_FELLER: "sup_k sqrt(lambda_k / q_k) exp(-lambda_k t) < inf",
}

DEFAULT_SERIES_TERMS = 100_000
DEFAULT_FELLER_TIME = 0.1


@dataclass(frozen=True)
class PowerLawSpec:
    """Power-law family: ``lambda_k = k^e``, ``b_k = k^gamma`` on the mask,
    ``q_k = k^delta``, ``a_k`` from ``a_rule``.

    ``gamma=None`` drops the stable component, ``delta=None`` the Gaussian
    one.  ``a_rule`` is None (no forcing), a float ``s`` meaning
    ``a_k = k^s``, or an explicit sequence.
    """

    alpha: float
    gamma: float | None = None
    delta: float | None = None
    lambda_exponent: float = 2.0
    mask_period: int = 1
    a_rule: object = None
    drift: DriftSpec = field(default_factory=DriftSpec.zero)

    def __post_init__(self):
        object.__setattr__(self, "alpha",
                           check_alpha(self.alpha, allow_gaussian=False))
        for name in ("gamma", "delta"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, check_scalar(val, name))
        object.__setattr__(self, "lambda_exponent",
                           check_scalar(self.lambda_exponent, "lambda_exponent"))
        object.__setattr__(self, "mask_period",
                           check_int(self.mask_period, "mask_period", lower=1))
        rule = self.a_rule
        if rule is not None and not np.isscalar(rule):
            rule = tuple(check_vector(rule, "a_rule").tolist())
        elif rule is not None:
            rule = check_scalar(rule, "a_rule")
        object.__setattr__(self, "a_rule", rule)

    def a_values(self, n_modes):
        k = np.arange(1, n_modes + 1, dtype=float)
        if self.a_rule is None:
            return np.zeros(n_modes)
        if isinstance(self.a_rule, tuple):
            if len(self.a_rule) != n_modes:
                raise UsageError(
                    f"explicit a_rule has {len(self.a_rule)} entries for {n_modes} modes")
            return np.array(self.a_rule)
        return k ** self.a_rule


@dataclass(frozen=True)
class ReportEntry:
    condition: str
    passed: bool
    witness: float
    statement: str
    detail: str = ""
    exponent: float | None = None


@dataclass(frozen=True)
class AdmissibilityReport:
    entries: tuple = ()

    @property
    def passed(self):
        return all(e.passed for e in self.entries)

    @property
    def conditions(self):
        return [e.condition for e in self.entries]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, condition):
        for e in self.entries:
            if e.condition == condition:
                return e
        raise KeyError(condition)

    def __contains__(self, condition):
        return any(e.condition == condition for e in self.entries)

    def failed(self):
        return [e for e in self.entries if not e.passed]

    def as_table(self):
        rows = [("condition", "status", "witness", "statement", "detail")]
        for e in self.entries:
            rows.append((e.condition, "pass" if e.passed else "FAIL",
                         f"{e.witness:.6g}", e.statement, e.detail))
        widths = [max(len(r[i]) for r in rows) for i in range(5)]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
        lines.insert(1, "  ".join("-" * w for w in widths))
        lines.append(f"overall: {'pass' if self.passed else 'FAIL'}")
        return "\n".join(lines)


@dataclass(frozen=True, eq=False)
class SpectralModel:
    """Immutable N-mode diagonal model.

    Arrays are stored read-only.  ``report`` is the admissibility report
    computed when the model was built (None for hand-made models until
    :func:`check_model` is called).
    """

    alpha: float
    lam: np.ndarray
    b: np.ndarray
    q: np.ndarray
    a: np.ndarray
    drift: DriftSpec = field(default_factory=DriftSpec.zero)
    report: AdmissibilityReport | None = None
    source: PowerLawSpec | None = None

    def __post_init__(self):
        object.__setattr__(self, "alpha", check_alpha(self.alpha))
        try:
            lam = check_vector(self.lam, "lambda")
        except ParameterError as exc:
            raise StructuralError(str(exc)) from None
        n = lam.shape[0]
        if n == 0:
            raise StructuralError("a model needs at least one mode")
        if np.any(lam <= 0):
            raise StructuralError("eigenvalues lambda_k must be strictly positive")
        if np.any(np.diff(lam) < 0):
            raise StructuralError("eigenvalues lambda_k must be nondecreasing")
        arrays = {"lam": lam}
        for name, nonneg in (("b", True), ("q", True), ("a", False)):
            values = np.asarray(getattr(self, name), dtype=float)
            if values.shape != (n,):
                raise StructuralError(f"{name} must have {n} entries, got shape {values.shape}")
            arrays[name] = check_vector(values, name, nonnegative=nonneg)
        for name, arr in arrays.items():
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not isinstance(self.drift, DriftSpec):
            raise UsageError("drift must be a DriftSpec")
        object.__setattr__(self, "drift", self.drift.bind(n))

    @property
    def n_modes(self):
        return self.lam.shape[0]

    @property
    def decay_rate(self):
        """Exponential stability rate of the semigroup, ``lambda_1``."""
        return float(self.lam[0])

    @property
    def has_stable(self):
        return bool(np.any(self.b > 0))

    @property
    def has_gaussian(self):
        return bool(np.any(self.q > 0))

    def to_dict(self):
        return {
            "n_modes": self.n_modes,
            "alpha": self.alpha,
            "lambda": self.lam.tolist(),
            "b": self.b.tolist(),
            "q": self.q.tolist(),
            "a": self.a.tolist(),
            "drift": self.drift.to_dict(),
        }

    def fingerprint(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


# ---------------------------------------------------------------------------
# series helpers


def _p_series_partial(exponent, n_terms, start=1, step=1):
    k = np.arange(start, n_terms + 1, step, dtype=float)
    return float(np.sum(k ** exponent))


def _entry(condition, passed, witness, detail="", exponent=None):
    return ReportEntry(condition, bool(passed), float(witness), _STATEMENTS[condition],
                       detail, exponent)


# ---------------------------------------------------------------------------
# individual checks


def check_stable_summability(model, n_terms=DEFAULT_SERIES_TERMS):
    """Summability of ``b_k^alpha / lambda_k``.

    For a power law the general term is ``k^(alpha*gamma - e)`` on the mask,
    which converges iff the exponent is below -1.  The witness is the partial
    sum over ``n_terms`` (power law) or over the truncation (explicit model).
    """
    if isinstance(model, PowerLawSpec):
        if model.gamma is None:
            raise UsageError("spec has no stable component (gamma is None)")
        expo = model.alpha * model.gamma - model.lambda_exponent
        partial = _p_series_partial(expo, n_terms, model.mask_period, model.mask_period)
        ok = strictly_less(expo, -1.0)
        return _entry(STABLE_SUMMABILITY, ok, partial,
                      f"term exponent {expo:.6g} {'<' if ok else '>='} -1", expo)
    terms = model.b ** model.alpha / model.lam
    return _entry(STABLE_SUMMABILITY, True, terms.sum(), "truncation-trivial")


def check_gamma_bound(spec):
    """``gamma < 1/alpha`` for the heat family (``lambda_k = k^2``).

    For another eigenvalue exponent ``e`` the equivalent statement is
    ``gamma < (e - 1)/alpha``; the detail string says which form was used.
    """
    e = spec.lambda_exponent
    bound = (e - 1.0) / spec.alpha
    ok = strictly_less(spec.gamma, bound)
    form = "gamma < 1/alpha" if e == 2.0 else f"generalized: gamma < (e-1)/alpha, e={e:g}"
    return _entry(GAMMA_BOUND, ok, bound, f"{form}; gamma={spec.gamma:.6g}, bound={bound:.6g}")


def check_gaussian_trace(model, n_terms=DEFAULT_SERIES_TERMS):
    """Summability of ``q_k / lambda_k``; for ``q_k = k^delta`` iff ``delta < e - 1``."""
    if isinstance(model, PowerLawSpec):
        if model.delta is None:
            raise UsageError("spec has no Gaussian component (delta is None)")
        expo = model.delta - model.lambda_exponent
        ok = strictly_less(expo, -1.0)
        return _entry(GAUSSIAN_TRACE, ok, _p_series_partial(expo, n_terms),
                      f"delta={model.delta:.6g}, term exponent {expo:.6g}", expo)
    return _entry(GAUSSIAN_TRACE, True, float(np.sum(model.q / model.lam)),
                  "truncation-trivial")


def check_drift_vector(a, lambda_exponent=2.0, n_terms=DEFAULT_SERIES_TERMS):
    """Summability of ``a_k^2 / lambda_k``.

    ``a`` may be a :class:`PowerLawSpec`, a :class:`SpectralModel`, a float
    power ``s`` (``a_k = k^s``; converges iff ``2s - e < -1``), or an explicit
    list (weights ``k^e``; always finite).  ``None`` means no forcing.
    """
    if isinstance(a, SpectralModel):
        return _entry(DRIFT_VECTOR, True, float(np.sum(a.a ** 2 / a.lam)), "truncation-trivial")
    if isinstance(a, PowerLawSpec):
        lambda_exponent = a.lambda_exponent
        a = a.a_rule
    if a is None:
        return _entry(DRIFT_VECTOR, True, 0.0, "no forcing")
    if np.isscalar(a):
        s = float(a)
        expo = 2.0 * s - lambda_exponent
        ok = strictly_less(expo, -1.0)
        return _entry(DRIFT_VECTOR, ok, _p_series_partial(expo, n_terms),
                      f"a_k = k^{s:g}, term exponent {expo:.6g}", expo)
    vals = check_vector(a, "a")
    k = np.arange(1, vals.size + 1, dtype=float)
    return _entry(DRIFT_VECTOR, True, float(np.sum(vals ** 2 / k ** lambda_exponent)),
                  "truncation-trivial")


def check_stable_nondegeneracy(model):
    """Lower bound ``b_k >= c lambda_k^(1/alpha - theta)`` for some theta in (0, 1).

    For ``b_k = k^gamma`` this needs ``theta >= 1/alpha - gamma/e``; the witness
    is that minimal theta (clipped at 0).  A sparse mask (``mask_period > 1``)
    zeroes infinitely many ``b_k`` and always fails.
    """
    if isinstance(model, PowerLawSpec):
        if model.gamma is None:
            raise UsageError("spec has no stable component (gamma is None)")
        theta_min = 1.0 / model.alpha - model.gamma / model.lambda_exponent
        if model.mask_period > 1:
            return _entry(STABLE_NONDEGENERACY, False, theta_min,
                          f"degenerate noise: b_k = 0 off the mask (period {model.mask_period})")
        ok = strictly_less(theta_min, 1.0)
        return _entry(STABLE_NONDEGENERACY, ok, max(theta_min, 0.0),
                      f"minimal theta {theta_min:.6g} {'<' if ok else '>='} 1")
    ok = bool(np.all(model.b > 0))
    return _entry(STABLE_NONDEGENERACY, ok, float(np.min(model.b)),
                  "truncation-trivial" if ok else "degenerate noise: some b_k = 0")


def strong_feller_sup(lambda_exponent, delta, t):
    """``sup_k k^c exp(-k^e t)`` with ``c = (e - delta)/2``, exactly over integers.

    The continuous profile ``s^c exp(-s^e t)`` is unimodal with peak at
    ``s* = (c / (e t))^(1/e)`` (or decreasing if ``c <= 0``), so the integer
    supremum is attained at 1, floor(s*) or ceil(s*).
    """
    e = lambda_exponent
    c = (e - delta) / 2.0
    cands = {1}
    if c > 0 and e > 0:
        s_star = (c / (e * t)) ** (1.0 / e)
        cands.update({max(1, math.floor(s_star)), max(1, math.ceil(s_star))})
    elif e <= 0:
        raise ParameterError("lambda_exponent must be positive for the strong Feller check")
    k = np.array(sorted(cands), dtype=float)
    vals = np.exp(c * np.log(k) - k ** e * t)
    i = int(np.argmax(vals))
    return float(vals[i]), int(k[i])


def check_strong_feller(model, t=DEFAULT_FELLER_TIME):
    """Diagonal criterion ``sup_k sqrt(lambda_k/q_k) e^{-lambda_k t} < inf``."""
    t = check_scalar(t, "t", lower=0.0, lower_inclusive=False)
    if isinstance(model, PowerLawSpec):
        if model.delta is None:
            return _entry(STRONG_FELLER, False, math.inf, "Gaussian component degenerate")
        val, k = strong_feller_sup(model.lambda_exponent, model.delta, t)
        return _entry(STRONG_FELLER, math.isfinite(val), val, f"t={t:g}, attained at k={k}")
    if np.any(model.q <= 0):
        return _entry(STRONG_FELLER, False, math.inf, "Gaussian component degenerate")
    vals = np.exp(0.5 * (np.log(model.lam) - np.log(model.q)) - model.lam * t)
    k = int(np.argmax(vals)) + 1
    return _entry(STRONG_FELLER, True, float(vals.max()),
                  f"t={t:g}, attained at k={k}; truncation-trivial")


def check_model(model, feller_time=DEFAULT_FELLER_TIME, n_terms=DEFAULT_SERIES_TERMS):
    """Run every applicable check and collect an :class:`AdmissibilityReport`.

    Stable-noise checks apply when the model has a stable component,
    Gaussian checks when it has a Gaussian one; the forcing check always
    applies.
    """
    entries = []
    if isinstance(model, PowerLawSpec):
        stable, gauss = model.gamma is not None, model.delta is not None
    else:
        stable, gauss = model.has_stable, model.has_gaussian
    if stable:
        entries.append(check_stable_summability(model, n_terms))
        if isinstance(model, PowerLawSpec):
            entries.append(check_gamma_bound(model))
    if gauss:
        entries.append(check_gaussian_trace(model, n_terms))
    entries.append(check_drift_vector(model, n_terms=n_terms))
    if stable:
        entries.append(check_stable_nondegeneracy(model))
    if gauss:
        entries.append(check_strong_feller(model, feller_time))
    return AdmissibilityReport(tuple(entries))


def build_model(spec, n_modes):
    """Materialize ``n_modes`` coefficients of a power-law family.

    Conditions are evaluated and attached as ``model.report`` but never block
    the build; only structural problems raise.
    """
    n_modes = check_int(n_modes, "n_modes")
    if n_modes < 1:
        raise StructuralError("a model needs at least one mode")
    k = np.arange(1, n_modes + 1, dtype=float)
    lam = k ** spec.lambda_exponent
    if spec.gamma is None:
        b = np.zeros(n_modes)
    else:
        b = np.where(np.arange(1, n_modes + 1) % spec.mask_period == 0, k ** spec.gamma, 0.0)
    q = np.zeros(n_modes) if spec.delta is None else k ** spec.delta
    a = spec.a_values(n_modes)
    return SpectralModel(spec.alpha, lam, b, q, a, spec.drift, check_model(spec), spec)


def explicit_model(alpha, lam, b=None, q=None, a=None, drift=None):
    """Model from explicit coefficient lists; missing lists default to zeros."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    n = lam.shape[0]
    zeros = np.zeros(n)
    model = SpectralModel(alpha, lam,
                          zeros if b is None else b,
                          zeros if q is None else q,
                          zeros if a is None else a,
                          DriftSpec.zero() if drift is None else drift)
    return SpectralModel(model.alpha, model.lam, model.b, model.q, model.a,
                         model.drift, check_model(model))


_MODEL_FIELDS = {"n_modes", "alpha", "lambda_exponent", "lambda", "gamma", "b", "delta",
                 "q", "a_rule", "a", "mask_period", "drift"}


def model_from_dict(data, path="model"):
    """Build a model from its JSON form.

    Rule fields (``lambda_exponent``, ``gamma``, ``delta``, ``a_rule``) give a
    power-law model with analytic checks; any explicit list (``lambda``,
    ``b``, ``q``, ``a``) switches to an explicit model.  Unknown fields are
    rejected.
    """
    if not isinstance(data, dict):
        raise UsageError(f"{path}: expected an object")
    unknown = set(data) - _MODEL_FIELDS
    if unknown:
        raise UsageError(f"{path}: unknown field(s) {sorted(unknown)}")
    for rule, lst in (("lambda_exponent", "lambda"), ("gamma", "b"), ("delta", "q"),
                      ("a_rule", "a")):
        if rule in data and lst in data:
            raise UsageError(f"{path}: give either {rule} or {lst}, not both")
    if "alpha" not in data:
        raise UsageError(f"{path}.alpha: required")
    try:
        drift = DriftSpec.from_dict(data.get("drift", {"kind": "zero"}))
    except UsageError as exc:
        raise UsageError(f"{path}.drift: {exc}") from None
    explicit = any(k in data for k in ("lambda", "b", "q", "a"))
    if not explicit:
        if "n_modes" not in data:
            raise UsageError(f"{path}.n_modes: required for power-law models")
        a_rule = data.get("a_rule")
        if isinstance(a_rule, dict):
            extra = set(a_rule) - {"power"}
            if extra or "power" not in a_rule:
                raise UsageError(f"{path}.a_rule: expected {{\"power\": s}}")
            a_rule = a_rule["power"]
        spec = PowerLawSpec(alpha=data["alpha"], gamma=data.get("gamma"),
                            delta=data.get("delta"),
                            lambda_exponent=data.get("lambda_exponent", 2.0),
                            mask_period=data.get("mask_period", 1), a_rule=a_rule, drift=drift)
        return build_model(spec, data["n_modes"])

    if "lambda" in data:
        lam = np.asarray(data["lambda"], dtype=float)
    else:
        n = check_int(data.get("n_modes"), f"{path}.n_modes", lower=1)
        lam = np.arange(1, n + 1, dtype=float) ** data.get("lambda_exponent", 2.0)
    n = lam.shape[0]
    if "n_modes" in data and data["n_modes"] != n:
        raise UsageError(f"{path}.n_modes: {data['n_modes']} disagrees with {n} eigenvalues")
    k = np.arange(1, n + 1, dtype=float)
    period = data.get("mask_period", 1)
    b = data.get("b")
    if b is None and "gamma" in data:
        b = np.where(np.arange(1, n + 1) % period == 0, k ** data["gamma"], 0.0)
    q = data.get("q")
    if q is None and "delta" in data:
        q = k ** data["delta"]
    a = data.get("a")
    if a is None and "a_rule" in data:
        rule = data["a_rule"]
        a = k ** (rule["power"] if isinstance(rule, dict) else rule)
    return explicit_model(data["alpha"], lam, b, q, a, drift)
