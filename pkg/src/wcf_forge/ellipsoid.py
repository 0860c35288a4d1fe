"""Ellipsoid geometry: normals, Weingarten maps, positive inverses.

For a PSD matrix G and a vector v we write <G^j> = <v|G^j|v>.
"""
from __future__ import annotations

import numpy as np

from .errors import GeometryError

TOL = 1e-12


def _unit(x: np.ndarray, what: str = "vector") -> np.ndarray:
    nrm = np.linalg.norm(x)
    if nrm <= TOL:
        raise GeometryError(f"cannot normalise a zero {what}")
    return x / nrm


def symmetrize(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def positive_inverse(G: np.ndarray, rank_tol: float | None = None) -> np.ndarray:
    """Inverse on the span of eigenvalues above rank_tol, zero elsewhere."""
    G = symmetrize(np.asarray(G, dtype=float))
    lam, V = np.linalg.eigh(G)
    top = max(float(np.max(np.abs(lam))), 0.0) if lam.size else 0.0
    cut = 1e-10 * top if rank_tol is None else rank_tol
    keep = lam > cut
    return (V[:, keep] / lam[keep]) @ V[:, keep].T


def inverse_on_frame(M: np.ndarray, frame: np.ndarray) -> np.ndarray:
    """F (F^T M F)^{-1} F^T for an orthonormal frame F on which M is invertible."""
    if frame.shape[1] == 0:
        return np.zeros_like(M)
    A = frame.T @ M @ frame
    return symmetrize(frame @ np.linalg.solve(symmetrize(A), frame.T))


def ellipsoid_map(G: np.ndarray, v: np.ndarray) -> np.ndarray:
    q = float(v @ G @ v)
    if q <= TOL * max(1.0, float(v @ v)):
        raise GeometryError("point lies in the null cone of G")
    return v / np.sqrt(q)


def normal(G: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Outward unit normal G v / sqrt(<G^2>) at the boundary point along v."""
    Gv = G @ v
    if np.linalg.norm(Gv) <= TOL * max(1.0, np.linalg.norm(v)):
        raise GeometryError("G v vanishes; normal undefined")
    return Gv / np.linalg.norm(Gv)


def weingarten(G: np.ndarray, v: np.ndarray) -> np.ndarray:
    """W^-| = sqrt(<G>/<G^2>) (G + <G^3>/<G^2>^2 Gv v^TG - (Gv v^TG^2 + G^2v v^TG)/<G^2>)."""
    Gv = G @ v
    G2v = G @ Gv
    g1 = float(v @ Gv)
    g2 = float(Gv @ Gv)
    if g2 <= TOL:
        raise GeometryError("degenerate <G^2>")
    g3 = float(Gv @ G2v)
    W = G + (g3 / g2**2) * np.outer(Gv, Gv) - (np.outer(Gv, G2v) + np.outer(G2v, Gv)) / g2
    return symmetrize(np.sqrt(g1 / g2) * W)


def reverse_weingarten(G: np.ndarray, G_pinv: np.ndarray, v: np.ndarray) -> np.ndarray:
    """W = sqrt(<G^2>/<G>) (G^-| - v v^T/<G>)."""
    Gv = G @ v
    g1 = float(v @ Gv)
    if g1 <= TOL:
        raise GeometryError("degenerate <G>")
    g2 = float(Gv @ Gv)
    return symmetrize(np.sqrt(g2 / g1) * (G_pinv - np.outer(v, v) / g1))


def orth_component(reference, target: np.ndarray) -> np.ndarray:
    """N[target - <u|target> u].

    `reference` is either a unit vector u, or a pair (G, v) in which case
    u = normal(G, v) and the target defaults to v when passed as None.
    """
    if isinstance(reference, tuple):
        G, v = reference
        u = normal(G, v)
        if target is None:
            target = v
    else:
        u = np.asarray(reference, dtype=float)
    r = target - (u @ target) * u
    if np.linalg.norm(r) <= 1e-10 * max(1.0, np.linalg.norm(target)):
        raise GeometryError("target is parallel to the reference direction")
    return r / np.linalg.norm(r)


def support(G_pinv: np.ndarray, u: np.ndarray) -> float:
    """h(u) = sqrt(<u|G^-||u>) for the ellipsoid <s|G|s> = 1."""
    return float(np.sqrt(u @ G_pinv @ u))


def sherman_morrison(A_inv: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(A + a b^T)^{-1} from A^{-1}."""
    Aa = A_inv @ a
    bA = b @ A_inv
    den = 1.0 + float(b @ Aa)
    if abs(den) <= 1e-12:
        raise GeometryError("rank-one update is singular")
    return A_inv - np.outer(Aa, bA) / den
