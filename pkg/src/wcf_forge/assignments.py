"""Finitely supported functions on [0, inf) and Mochon's f-assignments."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError

DEGENERATE_GAP = 1e-8


def _check_coords(coords: Sequence[float], *, allow_single: bool = False) -> np.ndarray:
    x = np.asarray(coords, dtype=float)
    if x.ndim != 1 or (x.size < 2 and not allow_single):
        raise InputError("need at least two coordinates")
    if not np.all(np.isfinite(x)):
        raise InputError("coordinates must be finite")
    if np.any(x < 0):
        raise InputError("coordinates must be non-negative")
    if x.size > 1:
        gaps = np.diff(x)
        if np.any(gaps <= 0):
            raise InputError("coordinates must be strictly increasing")
        span = x[-1] - x[0]
        if np.any(gaps <= DEGENERATE_GAP * span):
            raise InputError("coordinates are numerically degenerate")
    return x


@dataclass(frozen=True)
class Assignment:
    """t = sum_i p_i [x_i] with strictly increasing x_i >= 0 and p_i != 0."""

    coords: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.coords) != len(self.weights):
            raise InputError("coords and weights differ in length")
        if self.coords:
            _check_coords(self.coords, allow_single=True)
        if any(p == 0 for p in self.weights):
            raise InputError("zero weights are not stored")

    @classmethod
    def from_arrays(cls, coords: Iterable[float], weights: Iterable[float]) -> "Assignment":
        return cls(tuple(float(c) for c in coords), tuple(float(p) for p in weights))

    @property
    def x(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)

    @property
    def p(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    def __len__(self) -> int:
        return len(self.coords)

    def value_at(self, x: float) -> float:
        for c, p in zip(self.coords, self.weights):
            if c == x:
                return p
        return 0.0

    def scaled(self, alpha: float) -> "Assignment":
        return Assignment(self.coords, tuple(alpha * p for p in self.weights))

    def to_dict(self) -> dict:
        return {"points": [{"x": c, "p": p} for c, p in zip(self.coords, self.weights)]}

    @classmethod
    def from_dict(cls, data: dict) -> "Assignment":
        pts = sorted(data["points"], key=lambda q: float(q["x"]))
        return cls.from_arrays([q["x"] for q in pts], [q["p"] for q in pts])


def combine(terms: Iterable[tuple[float, Assignment]]) -> dict[float, float]:
    """Pointwise sum of alpha * t as a coordinate -> weight mapping."""
    out: dict[float, float] = {}
    for alpha, t in terms:
        for c, p in zip(t.coords, t.weights):
            out[c] = out.get(c, 0.0) + alpha * p
    return out


@dataclass(frozen=True)
class PolySpec:
    """f(x) = (-x)^k * prod_a (a - x).

    Sign convention: f(-lam) >= 0 for lam >= 0, which is what validity needs.
    Both fields may be set at once; decomposition produces such mixed forms.
    """

    roots: tuple[float, ...] = ()
    monomial_power: int = 0

    def __post_init__(self):
        if self.monomial_power < 0:
            raise InputError("monomial power must be non-negative")
        if any((not math.isfinite(a)) or a < 0 for a in self.roots):
            raise InputError("roots must be finite and non-negative")
        object.__setattr__(self, "roots", tuple(float(a) for a in self.roots))

    @property
    def degree(self) -> int:
        return len(self.roots) + self.monomial_power

    @property
    def is_f0(self) -> bool:
        return self.degree == 0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        val = (-x) ** self.monomial_power
        for a in self.roots:
            val = val * (a - x)
        return val

    def log_abs_and_sign(self, x: float) -> tuple[float, float]:
        factors = [a - x for a in self.roots] + [-x] * self.monomial_power
        if any(fct == 0 for fct in factors):
            return -math.inf, 0.0
        sign = 1.0
        logm = 0.0
        for fct in factors:
            sign *= math.copysign(1.0, fct)
            logm += math.log(abs(fct))
        return logm, sign


F0 = PolySpec()


def monomial(k: int) -> PolySpec:
    return PolySpec(monomial_power=k)


def lagrange_weights(coords: Sequence[float], f: PolySpec = F0) -> Assignment:
    """p_i = -f(x_i) / prod_{j != i} (x_j - x_i), accumulated in log magnitude.

    Points where f vanishes carry zero weight and are dropped.
    """
    x = _check_coords(coords)
    n = x.size
    if f.degree > n - 2:
        raise InputError(f"degree {f.degree} exceeds n - 2 = {n - 2}")
    coords_out, weights_out = [], []
    for i in range(n):
        lf, sf = f.log_abs_and_sign(x[i])
        if sf == 0.0:
            continue
        diffs = np.delete(x, i) - x[i]
        lp = float(np.sum(np.log(np.abs(diffs))))
        sp = -1.0 if i % 2 else 1.0  # x_j - x_i < 0 exactly for the i earlier points
        coords_out.append(float(x[i]))
        weights_out.append(-sf * sp * math.exp(lf - lp))
    return Assignment(tuple(coords_out), tuple(weights_out))


def split_h_g(t: Assignment) -> tuple[Assignment, Assignment]:
    hx = [c for c, p in zip(t.coords, t.weights) if p > 0]
    hp = [p for p in t.weights if p > 0]
    gx = [c for c, p in zip(t.coords, t.weights) if p < 0]
    gp = [-p for p in t.weights if p < 0]
    return Assignment(tuple(hx), tuple(hp)), Assignment(tuple(gx), tuple(gp))


def moment(t: Assignment, k: int) -> float:
    x, p = t.x, t.p
    if k < 0 and np.any(x == 0):
        raise InputError("negative moment with a zero coordinate")
    return float(np.sum(p * x ** float(k)))


def moment_scale(t: Assignment, k: int) -> float:
    """max_i |p_i x_i^k|, the natural yardstick for cancellation in moment()."""
    return float(np.max(np.abs(t.p * t.x ** float(k))))


def transfer(t: Assignment, lam: float) -> float:
    """sum_i p_i / (lam + x_i)."""
    return float(np.sum(t.p / (lam + t.x)))


def transfer_oracle(coords: Sequence[float], f: PolySpec, lam: float) -> float:
    """Closed form -f(-lam) / prod_i (lam + x_i) of the transfer sum."""
    x = np.asarray(coords, dtype=float)
    den = lam + x
    if np.any(den == 0):
        raise InputError("pole: lam = -x_i")
    return float(-f(-lam) / np.prod(den))


@dataclass(frozen=True)
class ValidityReport:
    sum_zero_residual: float
    min_transfer_value: float
    grid: tuple[float, ...] = field(repr=False)
    verdict: str
    asymptotic_ok: bool = True

    def to_dict(self) -> dict:
        return {
            "sum_zero_residual": self.sum_zero_residual,
            "min_transfer_value": self.min_transfer_value,
            "asymptotic_ok": self.asymptotic_ok,
            "grid_size": len(self.grid),
            "verdict": self.verdict,
        }


def check_validity(
    t: Assignment,
    n_grid: int = 512,
    lam_range: tuple[float, float] = (1e-6, 1e6),
    tol: float = 1e-9,
) -> ValidityReport:
    """Sample the validity conditions on a log-spaced lambda grid.

    Transfer values are normalised by sum_i |p_i|/(lam + x_i) so the
    threshold is scale free.  Verdict: valid if every residual is <= tol,
    invalid if any exceeds 10*tol, inconclusive otherwise.
    """
    x, p = t.x, t.p
    if len(t) == 0:
        return ValidityReport(0.0, 0.0, (), "valid")
    s = abs(float(np.sum(p))) / float(np.sum(np.abs(p)))
    grid = np.geomspace(lam_range[0], lam_range[1], n_grid)
    vals = [float(np.sum(p / (lam + x)) / np.sum(np.abs(p) / (lam + x))) for lam in grid]
    if x[0] > 0:
        vals.append(float(np.sum(p / x) / np.sum(np.abs(p) / x)))
        grid = np.concatenate([[0.0], grid])
    else:
        # one-sided limit lam -> 0+: the x = 0 term dominates
        vals.append(math.copysign(1.0, p[0]))
    m = max(vals)
    tx = p * x
    denom = float(np.sum(np.abs(tx)))
    asym = denom == 0 or -float(np.sum(tx)) / denom <= tol
    worst = max(s, m)
    if worst > 10 * tol:
        verdict = "invalid"
    elif worst <= tol and asym:
        verdict = "valid"
    else:
        verdict = "inconclusive"
    return ValidityReport(s, m, tuple(float(g) for g in grid), verdict, asym)


def one_tenth_move(x0, l1, x1, x2, x3, x4, r1, r2) -> tuple[tuple[float, ...], PolySpec]:
    """Mochon's key move for bias 1/10: five coordinates and three roots."""
    seq = [x0, l1, x1, x2, x3, x4, r1, r2]
    if any(b <= a for a, b in zip(seq, seq[1:])):
        raise InputError("need x0 < l1 < x1 < x2 < x3 < x4 < r1 < r2")
    if x0 < 0:
        raise InputError("coordinates must be non-negative")
    coords = tuple(float(c) for c in (x0, x1, x2, x3, x4))
    return coords, PolySpec(roots=(l1, r1, r2))
