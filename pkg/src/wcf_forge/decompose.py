"""Positive decompositions of f-assignments into f0 / monomial pieces.

Peeling a right root r paired with a coordinate x_a < r uses

    t_f[S] = (r - x_a) t_g[S] + t_g[S minus x_a],     f = (r - x) g,

and roots that lie below every coordinate are turned into right roots by
the substitution w = 1/x, after which leaves are effectively monomial.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .assignments import Assignment, PolySpec, _check_coords, combine, lagrange_weights, monomial
from .errors import InputError
from .solvers import effectively_monomial, solve_effectively_monomial, solve_f0, solve_monomial
from .verify import SolutionCertificate, VerifyConfig

KINDS = ("f0", "monomial", "effectively-monomial")


@dataclass(frozen=True)
class DecompositionTerm:
    alpha: float
    subset: tuple[float, ...]
    kind: str
    power: int
    chain: tuple[tuple, ...] = ()

    def __post_init__(self):
        if not self.alpha > 0:
            raise InputError("decomposition coefficients must be positive")
        if len(self.subset) < 2 or self.power > len(self.subset) - 2:
            raise InputError("term needs at least power + 2 points")
        if self.kind not in KINDS:
            raise InputError(f"unknown term kind {self.kind!r}")

    def assignment(self) -> Assignment:
        """The unscaled t_i' on the subset."""
        if self.kind == "effectively-monomial":
            return effectively_monomial(self.subset, self.power)
        return lagrange_weights(self.subset, monomial(self.power))

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "subset": list(self.subset),
            "kind": self.kind,
            "power": self.power,
            "chain": [list(c) for c in self.chain],
        }


def recombine(terms: Sequence[DecompositionTerm]) -> dict[float, float]:
    return combine((t.alpha, t.assignment()) for t in terms)


def pair_roots(coords: Sequence[float], roots: Sequence[float]) -> dict[int, int]:
    """Maximum pairing root -> coordinate index with coordinate < root.

    Roots are taken in ascending order and each one grabs the smallest free
    coordinate below it; with nested candidate sets this is maximal.
    """
    x = np.asarray(coords, dtype=float)
    order = np.argsort(roots, kind="stable")
    used: set[int] = set()
    out: dict[int, int] = {}
    for ri in order:
        for j in range(x.size):
            if j not in used and x[j] < roots[ri]:
                out[int(ri)] = j
                used.add(j)
                break
    return out


# --- recursion on index subsets ------------------------------------------------


def _walk(vals, idx, roots, power, alpha, chain, out):
    """Peel every pairable root, then emit a leaf; vals[i] is the working coordinate."""
    roots = list(roots)
    idx = list(idx)
    # a root sitting on a coordinate just removes that point
    for r in list(roots):
        hit = [i for i in idx if vals[i] == r]
        if hit:
            roots.remove(r)
            idx.remove(hit[0])
            chain = chain + (("drop", r, float(vals[hit[0]])),)
    y = [vals[i] for i in idx]
    if power > 0 and y[0] == 0:
        while power > 0 and y[0] == 0:
            power -= 1
            idx, y = idx[1:], y[1:]
            chain = chain + (("drop", 0.0, 0.0),)
    pairs = pair_roots(y, roots)
    if pairs:
        ri = max(pairs, key=lambda q: roots[q])
        r, a = roots[ri], pairs[ri]
        rest = roots[:ri] + roots[ri + 1:]
        xa = float(y[a])
        _walk(vals, idx, rest, power, alpha * (r - xa), chain + (("peel", r, xa, "keep"),), out)
        _walk(vals, idx[:a] + idx[a + 1:], rest, power, alpha, chain + (("peel", r, xa, "drop"),), out)
        return
    zeros = [r for r in roots if r == 0]
    if zeros:
        roots = [r for r in roots if r != 0]
        power += len(zeros)
        chain = chain + (("absorb-zero-roots", len(zeros)),)
    if roots:
        out.append(("invert", tuple(idx), tuple(roots), power, alpha, chain))
        return
    out.append(("leaf", tuple(idx), (), power, alpha, chain))


def _merge(terms: list[DecompositionTerm]) -> list[DecompositionTerm]:
    merged: dict[tuple, DecompositionTerm] = {}
    for t in terms:
        key = (t.subset, t.kind, t.power)
        if key in merged:
            m = merged[key]
            merged[key] = DecompositionTerm(m.alpha + t.alpha, m.subset, m.kind, m.power, m.chain)
        else:
            merged[key] = t
    return sorted(merged.values(), key=lambda t: (len(t.subset), t.subset, t.kind, t.power))


def _as_spec(roots, power: int = 0) -> PolySpec:
    if isinstance(roots, PolySpec):
        return roots
    return PolySpec(tuple(roots), power)


def peel_right_roots(coords: Sequence[float], roots: Sequence[float]) -> list[DecompositionTerm]:
    """Decompose when every root can be paired with a smaller coordinate; leaves are f0."""
    x = _check_coords(coords)
    roots = [float(r) for r in roots]
    if len(roots) > x.size - 2:
        raise InputError("too many roots for the number of coordinates")
    if len(pair_roots(x, roots)) < len(roots):
        raise InputError("some root has no free coordinate below it; use the inversion path")
    out = []
    _walk(x, range(x.size), roots, 0, 1.0, (), out)
    return _merge([
        DecompositionTerm(alpha, tuple(float(x[i]) for i in idx), "f0", 0, chain)
        for _, idx, _, _, alpha, chain in out
    ])


class InvertedProblem(NamedTuple):
    omega: tuple[float, ...]
    roots: tuple[float, ...]
    power: int
    factor: float


def invert_coordinates(coords: Sequence[float], left_roots: Sequence[float], residual_power: int = 0) -> InvertedProblem:
    """w_i = 1/x_i (ascending), r = 1/l, so that t(x_i) = factor * t'(w_i).

    t' is the assignment of (-w)^J prod (r - w) with J = n - 2 - k - j, and
    factor = -prod(w) prod(l) < 0.
    """
    x = _check_coords(coords)
    if x[0] <= 0:
        raise InputError("inversion needs strictly positive coordinates; shift the origin first")
    left = [float(a) for a in left_roots]
    if any(not 0 < a < x[0] for a in left):
        raise InputError("left roots must lie strictly between 0 and the smallest coordinate")
    J = x.size - 2 - len(left) - residual_power
    if J < 0:
        raise InputError("degree exceeds n - 2")
    omega = tuple(float(w) for w in (1.0 / x)[::-1])
    factor = -float(np.prod(1.0 / x) * np.prod(left))
    return InvertedProblem(omega, tuple(sorted(1.0 / a for a in left)), J, factor)


def shift_origin(coords: Sequence[float], roots, c: float) -> tuple[tuple[float, ...], PolySpec]:
    """Translate coordinates and roots by c; weights are unchanged.

    A monomial factor (-x)^k turns into k roots at c.
    """
    f = _as_spec(roots)
    x = np.asarray(coords, dtype=float)
    if c < 0:
        raise InputError("shift must be non-negative")
    new_roots = tuple(a + c for a in f.roots) + (float(c),) * f.monomial_power
    if c == 0:
        return tuple(float(v) for v in x), f
    return tuple(float(v + c) for v in x), PolySpec(new_roots, 0)


def decompose_f_assignment(coords: Sequence[float], roots=(), power: int = 0) -> list[DecompositionTerm]:
    """t_f = sum alpha_i t_i' with alpha_i > 0 and t_i' f0, monomial or effectively monomial."""
    f = _as_spec(roots, power)
    x = _check_coords(coords)
    if f.degree > x.size - 2:
        raise InputError(f"degree {f.degree} exceeds n - 2 = {x.size - 2}")
    nodes: list = []
    _walk(x, range(x.size), list(f.roots), f.monomial_power, 1.0, (), nodes)
    terms = []
    for tag, idx, left, j, alpha, chain in nodes:
        sub = tuple(float(x[i]) for i in idx)
        if tag == "leaf":
            terms.append(DecompositionTerm(alpha, sub, "f0" if j == 0 else "monomial", j, chain))
            continue
        inv = invert_coordinates(sub, left, j)
        omega = np.divide(1.0, x, out=np.full_like(x, np.inf), where=x > 0)
        inner: list = []
        _walk(omega, sorted(idx, reverse=True), list(inv.roots), inv.power, 1.0, (), inner)
        for _, jdx, _, J, a2, chain2 in inner:
            s2 = tuple(sorted(float(x[i]) for i in jdx))
            # m_J on 1/x pulls back to minus the effectively monomial assignment
            coef = -inv.factor * a2 * alpha
            terms.append(DecompositionTerm(coef, s2, "effectively-monomial", J, chain + (("invert",),) + chain2))
    return _merge(terms)


@dataclass(frozen=True, eq=False)
class SolvedTerm:
    alpha: float
    O: np.ndarray
    certificate: SolutionCertificate
    term: DecompositionTerm


def solve_term(term: DecompositionTerm, config: VerifyConfig = VerifyConfig()) -> SolvedTerm:
    t = term.assignment()
    if term.kind == "f0":
        O, cert = solve_f0(t, config)
    elif term.kind == "monomial":
        O, cert = solve_monomial(t, term.power, config)
    else:
        O, cert = solve_effectively_monomial(t, term.power, config)
    return SolvedTerm(term.alpha, O, cert, term)


def default_threads() -> int:
    raw = os.environ.get("WCF_FORGE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise InputError(f"WCF_FORGE_THREADS must be an integer, got {raw!r}") from None


def solve_f_assignment(
    coords: Sequence[float],
    roots=(),
    power: int = 0,
    config: VerifyConfig = VerifyConfig(),
    threads: Optional[int] = None,
) -> list[SolvedTerm]:
    """Decompose and solve each term; results keep the term order."""
    terms = decompose_f_assignment(coords, roots, power)
    threads = default_threads() if threads is None else threads
    if threads > 1 and len(terms) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda t: solve_term(t, config), terms))
    return [solve_term(t, config) for t in terms]
