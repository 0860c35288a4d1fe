"""Independent certification of constructed solutions.

A matrix O solves an instance (H, G, w, v) when O is orthogonal, O v = w and
H - O G O^T is positive semidefinite.  Instances with divergent or vanishing
directions are checked on a finite-eps family: the violation must vanish
linearly, min_eig(eps) >= -C eps with C <= c_max.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .assignments import Assignment
from .errors import InputError
from .instances import ExtendedMatrixInstance, LimitSymMatrix, make_instance


@dataclass(frozen=True)
class VerifyConfig:
    tol: float = 1e-10
    psd_tol: float = 1e-9
    eps_sweep: tuple[float, ...] = (1e-2, 1e-3, 1e-4)
    c_max: float = 100.0
    schedule_tol: float = 1e-7

    def __post_init__(self):
        if min(self.tol, self.psd_tol, self.c_max, self.schedule_tol) <= 0:
            raise InputError("tolerances must be positive")
        eps = self.eps_sweep
        if any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
            raise InputError("eps values must be positive and strictly decreasing")


@dataclass(frozen=True)
class StepRecord:
    tag: str
    rank: int
    contact_gap: float
    component_gap: float
    contact_scale: float
    component_scale: float
    contact_power: Optional[int] = None
    component_power: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "tag": self.tag,
            "rank": self.rank,
            "contact_gap": _num(self.contact_gap),
            "component_gap": _num(self.component_gap),
            "contact_power": self.contact_power,
            "component_power": self.component_power,
        }


def _num(x: float):
    """JSON has no inf/nan; encode them as strings."""
    if np.isnan(x):
        return "nan"
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(x)


@dataclass(frozen=True, eq=False)
class SolutionCertificate:
    O: np.ndarray
    orthogonality_residual: float
    mapping_residual: float
    psd_min_eig: float
    verdict: str
    eps_sweep: tuple[tuple[float, float], ...] = ()
    slope: Optional[float] = None
    step_log: tuple[StepRecord, ...] = ()
    instance: Optional[ExtendedMatrixInstance] = field(default=None, repr=False)
    case: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        out = {
            "case": self.case,
            "verdict": self.verdict,
            "O": self.O.tolist(),
            "orthogonality_residual": float(self.orthogonality_residual),
            "mapping_residual": float(self.mapping_residual),
            "psd_min_eig": float(self.psd_min_eig),
        }
        if self.eps_sweep:
            out["eps_sweep"] = [{"eps": e, "min_eig": m} for e, m in self.eps_sweep]
            out["slope"] = self.slope
        out["step_log"] = [s.to_dict() for s in self.step_log]
        if self.instance is not None:
            out["instance"] = self.instance.to_dict()
        return out


def verify_solution(
    inst: ExtendedMatrixInstance,
    O: np.ndarray,
    config: VerifyConfig = VerifyConfig(),
    step_log: Sequence[StepRecord] = (),
    case: Optional[str] = None,
) -> SolutionCertificate:
    O = np.asarray(O, dtype=float)
    d = inst.dim
    if O.shape != (d, d):
        raise InputError(f"O has shape {O.shape}, instance needs {(d, d)}")
    ortho = float(np.max(np.abs(O.T @ O - np.eye(d))))
    wn = max(float(np.linalg.norm(inst.w)), 1e-300)
    mapping = float(np.linalg.norm(O @ inst.v - inst.w)) / wn
    ok = ortho <= config.tol and mapping <= config.tol
    sweep: tuple[tuple[float, float], ...] = ()
    slope = None
    if inst.has_limit_dirs:
        pairs = []
        for eps in config.eps_sweep:
            M = inst.H.materialize(eps) - O @ inst.G.materialize(eps) @ O.T
            pairs.append((float(eps), float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])))
        sweep = tuple(pairs)
        slope = max(0.0, max(-m / e for e, m in pairs))
        min_eig = min(m for _, m in pairs)
        ok = ok and slope <= config.c_max
    else:
        M = inst.H.finite - O @ inst.G.finite @ O.T
        min_eig = float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])
        scale = max(float(np.max(np.abs(np.linalg.eigvalsh(inst.H.finite)))), 1.0)
        ok = ok and min_eig >= -config.psd_tol * scale
    return SolutionCertificate(
        O=O,
        orthogonality_residual=ortho,
        mapping_residual=mapping,
        psd_min_eig=min_eig,
        verdict="pass" if ok else "fail",
        eps_sweep=sweep,
        slope=slope,
        step_log=tuple(step_log),
        instance=inst,
        case=case,
    )


def _prob(M: np.ndarray, psi: np.ndarray) -> list[tuple[float, float]]:
    lam, V = np.linalg.eigh(0.5 * (M + M.T))
    return list(zip(lam.tolist(), ((V.T @ psi) ** 2).tolist()))


def ebm_reconstruct(H: np.ndarray, G: np.ndarray, psi: np.ndarray, bin_tol: float = 1e-9) -> Assignment:
    """Prob[H, psi] - Prob[G, psi] as an assignment.

    Eigenvalues closer than bin_tol * spread are merged into one point.
    """
    pairs = [(lam, p) for lam, p in _prob(H, psi)] + [(lam, -p) for lam, p in _prob(G, psi)]
    pairs.sort()
    lams = np.array([lam for lam, _ in pairs])
    spread = float(lams[-1] - lams[0]) if lams.size else 0.0
    radius = bin_tol * max(spread, 1e-300)
    bins: list[list[tuple[float, float]]] = []
    for lam, p in pairs:
        if bins and lam - bins[-1][-1][0] <= radius:
            bins[-1].append((lam, p))
        else:
            bins.append([(lam, p)])
    floor = 1e-12 * float(psi @ psi)
    coords, weights = [], []
    for b in bins:
        weight = sum(p for _, p in b)
        mass = sum(abs(p) for _, p in b)
        if abs(weight) <= floor:
            continue
        x = sum(lam * abs(p) for lam, p in b) / mass if mass else b[0][0]
        coords.append(max(x, 0.0))
        weights.append(weight)
    return Assignment(tuple(coords), tuple(weights))


def reconstruct_from_solution(cert: SolutionCertificate, eps: float = 1e-7) -> Assignment:
    """Close the loop: Prob[H, w] - Prob[O G O^T, w] should give back t."""
    inst = cert.instance
    H = inst.H.materialize(eps)
    G = inst.G.materialize(eps)
    return ebm_reconstruct(H, cert.O @ G @ cert.O.T, inst.w)


@dataclass(frozen=True)
class BruteForceMatch:
    matrix: np.ndarray
    angle: float
    reflection: bool
    min_eig: float


def brute_force_2x2(
    inst: ExtendedMatrixInstance,
    step: float = 1e-5,
    eps: float = 1e-4,
    psd_tol: Optional[float] = None,
    return_all: bool = False,
):
    """Scan rotations and reflections for a solution of a rank-2 instance.

    Returns the feasible matrix with the largest PSD margin (rotations win
    ties), all feasible per-class optima when return_all is set, or None.
    """
    if inst.dim != 2:
        raise InputError("brute force oracle needs a 2x2 instance")
    H = inst.H.materialize(eps)
    G = inst.G.materialize(eps)
    v, w = inst.v, inst.w
    theta = np.arange(0.0, 2 * np.pi, step)
    c, s = np.cos(theta), np.sin(theta)
    if psd_tol is None:
        psd_tol = 1e-4 * max(1.0, float(np.max(np.abs(inst.G.finite)))) + (2 * eps if inst.has_limit_dirs else 0.0)
    found = []
    for refl in (False, True):
        # rotation [[c,-s],[s,c]]; reflection [[c,s],[s,-c]]
        if refl:
            q = np.array([[c, s], [s, -c]])
        else:
            q = np.array([[c, -s], [s, c]])
        qv = np.einsum("ijk,j->ik", q, v)
        res = np.linalg.norm(qv - w[:, None], axis=0)
        k = int(np.argmin(res))
        if res[k] > 2 * step * max(np.linalg.norm(v), 1e-300):
            continue
        Q = q[:, :, k]
        M = H - Q @ G @ Q.T
        m = float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])
        if m >= -psd_tol:
            found.append(BruteForceMatch(Q, float(theta[k]), refl, m))
    if return_all:
        return found
    if not found:
        return None
    found.sort(key=lambda f: (-round(f.min_eig, 9), f.reflection))
    return found[0].matrix


def pad_generic_instance(h: Assignment, g: Assignment, chi: float, xi: float) -> ExtendedMatrixInstance:
    """Square instance of size n_h + n_g - 1, padded with xi on H and chi on G."""
    coords = list(h.coords) + list(g.coords)
    if coords and (min(coords) < chi or max(coords) > xi):
        raise InputError("coordinates must lie in [chi, xi]")
    n = len(h) + len(g) - 1
    if n < max(len(h), len(g)):
        raise InputError("need at least one point on each side")
    Hd = np.full(n, float(xi))
    Gd = np.full(n, float(chi))
    w = np.zeros(n)
    v = np.zeros(n)
    Hd[: len(h)] = h.x
    Gd[: len(g)] = g.x
    w[: len(h)] = np.sqrt(h.p)
    v[: len(g)] = np.sqrt(g.p)
    return make_instance(
        LimitSymMatrix.from_parts(np.diag(Hd)), LimitSymMatrix.from_parts(np.diag(Gd)), w, v
    )
