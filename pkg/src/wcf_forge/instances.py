"""Extended matrix instances and the iteration maps acting on them.

Divergent (1/eps) and vanishing (eps) eigenvalues are never represented by
numbers.  A LimitSymMatrix stores its finite part together with two
orthonormal direction sets: D (eigenvalue -> +inf) and Z (eigenvalue -> 0+).
Every map below is written in its eps -> 0 limit form.

Each side of an instance also carries an orthonormal frame spanning the
current subspace; one direction is removed per Weingarten step.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import ellipsoid as el
from .assignments import Assignment
from .errors import GeometryError, InputError, ScheduleError

DIR_TOL = 1e-9
SHAPES = ("balanced", "pad_h_infinite", "pad_g_zero", "pad_both")


def _cols(vectors, dim: int) -> np.ndarray:
    if vectors is None or len(vectors) == 0:
        return np.zeros((dim, 0))
    arr = np.asarray(vectors, dtype=float)
    return arr.reshape(dim, -1) if arr.ndim == 2 else arr.reshape(dim, 1)


def complement(frame: np.ndarray, dirs: np.ndarray) -> np.ndarray:
    """Orthonormal basis of span(frame) minus span(dirs), dirs inside the frame."""
    if dirs.shape[1] == 0 or frame.shape[1] == 0:
        return frame
    P = frame - dirs @ (dirs.T @ frame)
    U, S, _ = np.linalg.svd(P, full_matrices=False)
    return U[:, S > 0.5]


def remove_direction(frame: np.ndarray, u: np.ndarray) -> np.ndarray:
    return complement(frame, u.reshape(-1, 1))


def project(frame: np.ndarray, x: np.ndarray) -> np.ndarray:
    return frame @ (frame.T @ x)


def _unit(x: np.ndarray) -> np.ndarray:
    nrm = np.linalg.norm(x)
    if nrm <= 1e-14:
        raise GeometryError("zero vector cannot be normalised")
    return x / nrm


@dataclass(frozen=True, eq=False)
class LimitSymMatrix:
    finite: np.ndarray
    infinite_dirs: np.ndarray  # columns, D
    zero_dirs: np.ndarray  # columns, Z

    @classmethod
    def from_parts(cls, finite, infinite=None, zero=None) -> "LimitSymMatrix":
        finite = el.symmetrize(np.asarray(finite, dtype=float))
        d = finite.shape[0]
        return cls(finite, _cols(infinite, d), _cols(zero, d))

    @property
    def dim(self) -> int:
        return self.finite.shape[0]

    @property
    def D(self) -> np.ndarray:
        return self.infinite_dirs

    @property
    def Z(self) -> np.ndarray:
        return self.zero_dirs

    @property
    def limit_dirs(self) -> np.ndarray:
        return np.hstack([self.D, self.Z])

    def finite_support(self, frame: np.ndarray) -> np.ndarray:
        return complement(frame, self.limit_dirs)

    def touches_infinite(self, x: np.ndarray) -> bool:
        if self.D.shape[1] == 0:
            return False
        return float(np.linalg.norm(self.D.T @ x)) > DIR_TOL * max(1.0, float(np.linalg.norm(x)))

    def apply(self, x: np.ndarray) -> np.ndarray:
        if self.touches_infinite(x):
            raise ScheduleError("an infinite direction was contracted against finite data")
        return self.finite @ x

    def quad(self, x: np.ndarray, power: int = 1) -> float:
        """<x|M^power|x> in the limit; +inf when x overlaps D."""
        if self.touches_infinite(x):
            return float("inf")
        y = x
        for _ in range(power // 2):
            y = self.finite @ y
        val = float(y @ y) if power % 2 == 0 else float(y @ self.finite @ y)
        return val

    def pinv(self, frame: np.ndarray) -> "LimitSymMatrix":
        """Positive inverse: invert the finite part on its support, swap D and Z."""
        fs = self.finite_support(frame)
        A = fs.T @ self.finite @ fs
        inv = fs @ el.positive_inverse(A) @ fs.T if fs.shape[1] else np.zeros_like(self.finite)
        return LimitSymMatrix(el.symmetrize(inv), self.Z.copy(), self.D.copy())

    def restricted(self, frame: np.ndarray) -> "LimitSymMatrix":
        """Project the finite part onto its support inside `frame` (rounding hygiene)."""
        fs = self.finite_support(frame)
        P = fs @ fs.T
        return LimitSymMatrix(el.symmetrize(P @ self.finite @ P), self.D, self.Z)

    def materialize(self, eps: float) -> np.ndarray:
        """Finite-eps shadow: finite + D D^T / eps + eps Z Z^T."""
        return self.finite + (self.D @ self.D.T) / eps + eps * (self.Z @ self.Z.T)

    def to_dict(self) -> dict:
        return {
            "finite": self.finite.tolist(),
            "infinite_dirs": self.D.T.tolist(),
            "zero_dirs": self.Z.T.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LimitSymMatrix":
        fin = np.asarray(data["finite"], dtype=float)
        d = fin.shape[0]
        D = np.asarray(data.get("infinite_dirs", []), dtype=float).reshape(-1, d).T
        Z = np.asarray(data.get("zero_dirs", []), dtype=float).reshape(-1, d).T
        return cls(fin, D, Z)


@dataclass(frozen=True, eq=False)
class ExtendedMatrixInstance:
    """(H, G, w, v, H^-|, G^-|, u_h, u_g) plus frames of the current subspaces."""

    H: LimitSymMatrix
    G: LimitSymMatrix
    w: np.ndarray
    v: np.ndarray
    H_pinv: LimitSymMatrix
    G_pinv: LimitSymMatrix
    frame_h: np.ndarray
    frame_g: np.ndarray
    u_h: Optional[np.ndarray] = None
    u_g: Optional[np.ndarray] = None

    @property
    def rank(self) -> int:
        return self.frame_h.shape[1]

    @property
    def dim(self) -> int:
        return self.w.shape[0]

    @property
    def completely_specified(self) -> bool:
        return self.u_h is not None and self.u_g is not None

    @property
    def has_limit_dirs(self) -> bool:
        return any(m.limit_dirs.shape[1] for m in (self.H, self.G))

    def to_dict(self) -> dict:
        def vec(x):
            return None if x is None else x.tolist()

        return {
            "H": self.H.to_dict(),
            "G": self.G.to_dict(),
            "w": self.w.tolist(),
            "v": self.v.tolist(),
            "frame_h": self.frame_h.T.tolist(),
            "frame_g": self.frame_g.T.tolist(),
            "u_h": vec(self.u_h),
            "u_g": vec(self.u_g),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExtendedMatrixInstance":
        H = LimitSymMatrix.from_dict(data["H"])
        G = LimitSymMatrix.from_dict(data["G"])
        d = H.dim
        fh = np.asarray(data.get("frame_h", np.eye(d).tolist()), dtype=float).reshape(-1, d).T
        fg = np.asarray(data.get("frame_g", np.eye(d).tolist()), dtype=float).reshape(-1, d).T
        u_h = data.get("u_h")
        u_g = data.get("u_g")
        return cls(
            H, G,
            np.asarray(data["w"], dtype=float), np.asarray(data["v"], dtype=float),
            H.pinv(fh), G.pinv(fg), fh, fg,
            None if u_h is None else np.asarray(u_h, dtype=float),
            None if u_g is None else np.asarray(u_g, dtype=float),
        )


def make_instance(H: LimitSymMatrix, G: LimitSymMatrix, w, v) -> ExtendedMatrixInstance:
    d = H.dim
    frame = np.eye(d)
    w = np.asarray(w, dtype=float)
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(w) - np.linalg.norm(v)) > 1e-9 * max(1.0, np.linalg.norm(w)):
        raise InputError("|w| and |v| differ")
    return ExtendedMatrixInstance(H, G, w, v, H.pinv(frame), G.pinv(frame), frame, frame.copy())


def shape_dims(n_h: int, n_g: int, shape: str) -> int:
    if shape == "balanced" and n_h == n_g:
        return n_h
    if shape == "pad_h_infinite" and n_g == n_h + 1:
        return n_g
    if shape == "pad_g_zero" and n_h == n_g + 1:
        return n_h
    if shape == "pad_both" and n_h == n_g:
        return n_h + 1
    raise InputError(f"shape {shape!r} does not fit n_h={n_h}, n_g={n_g}")


def build_instance(h: Assignment, g: Assignment, shape: str = "balanced", b: float = 0) -> ExtendedMatrixInstance:
    """Diagonal instance from the positive part h and negated negative part g.

    The padded slot (if any) is the last basis vector and carries a zero
    vector component; w = X_h^b sqrt(p_h), v = X_g^b sqrt(p_g).
    """
    if shape not in SHAPES:
        raise InputError(f"unknown shape {shape!r}")
    if set(h.coords) & set(g.coords):
        raise InputError("h and g supports overlap")
    d = shape_dims(len(h), len(g), shape)
    pad = np.zeros(d)
    pad[-1] = 1.0

    def side(a: Assignment):
        diag = np.zeros(d)
        vec = np.zeros(d)
        diag[: len(a)] = a.x
        vec[: len(a)] = np.sqrt(a.p) * a.x ** float(b) if b else np.sqrt(a.p)
        return np.diag(diag), vec

    Hf, w = side(h)
    Gf, v = side(g)
    H = LimitSymMatrix.from_parts(Hf, pad if shape in ("pad_h_infinite", "pad_both") else None)
    G = LimitSymMatrix.from_parts(Gf, None, pad if shape in ("pad_g_zero", "pad_both") else None)
    return make_instance(H, G, w, v)


# --- gaps and wiggle room -------------------------------------------------

def contact_gap(inst: ExtendedMatrixInstance) -> float:
    return _gap(inst.H.quad(inst.w, 1), inst.G.quad(inst.v, 1))


def component_gap(inst: ExtendedMatrixInstance) -> float:
    return _gap(inst.H.quad(inst.w, 2), inst.G.quad(inst.v, 2))


def gap_scale(inst: ExtendedMatrixInstance, power: int) -> float:
    a = inst.H.quad(inst.w, power)
    b = inst.G.quad(inst.v, power)
    return max(abs(a), abs(b))


def _gap(a: float, b: float) -> float:
    if np.isinf(a) and np.isinf(b):
        return float("nan")
    return a - b


def _room(M: LimitSymMatrix, x: np.ndarray) -> Optional[np.ndarray]:
    for j in range(M.D.shape[1]):
        d = M.D[:, j]
        if abs(float(d @ x)) <= DIR_TOL * max(1.0, float(np.linalg.norm(x))):
            return d
    return None


def wiggle_room(inst: ExtendedMatrixInstance, side: str = "w") -> Optional[np.ndarray]:
    """A divergent direction with no overlap with the probability vector."""
    return _room(inst.H, inst.w) if side == "w" else _room(inst.G, inst.v)


# --- single-side building blocks ---------------------------------------------

def _side_normal(M: LimitSymMatrix, x: np.ndarray, frame: np.ndarray) -> np.ndarray:
    if frame.shape[1] == 1:
        return _unit(project(frame, x))
    if M.touches_infinite(x):
        raise ScheduleError("normal requested for a vector overlapping an infinite direction")
    try:
        return _unit(project(frame, el.normal(M.finite, x)))
    except GeometryError as exc:
        raise ScheduleError(f"normal undefined: {exc}") from exc


def _pinv_after(M_new: LimitSymMatrix, M: LimitSymMatrix, Mp: LimitSymMatrix, x: np.ndarray,
                frame_new: np.ndarray, scale: float = 1.0) -> LimitSymMatrix:
    """Positive inverse of the iterated matrix, via the reverse Weingarten map.

    The reverse Weingarten formula needs x inside the range of the finite
    part; with a zero coordinate that can fail, and we invert directly.
    """
    back = Mp.finite @ (M.finite @ x)
    if np.linalg.norm(back - x) <= 1e-9 * max(1.0, np.linalg.norm(x)):
        fin = el.reverse_weingarten(M.finite, Mp.finite, x) / scale
        return LimitSymMatrix(fin, M_new.Z.copy(), M_new.D.copy()).restricted(frame_new)
    return M_new.pinv(frame_new)


def _plain_step(M: LimitSymMatrix, Mp: LimitSymMatrix, x: np.ndarray, frame: np.ndarray):
    if M.touches_infinite(x):
        raise ScheduleError("Weingarten step on a vector overlapping an infinite direction")
    u = _side_normal(M, x, frame)
    frame_new = remove_direction(frame, u)
    if frame_new.shape[1] == 0:
        empty = LimitSymMatrix(np.zeros_like(M.finite), np.zeros((M.dim, 0)), np.zeros((M.dim, 0)))
        return empty, empty, np.zeros_like(x), frame_new
    fin = el.weingarten(M.finite, x)
    M_new = LimitSymMatrix(fin, M.D, M.Z).restricted(frame_new)
    x_new = _unit(project(frame_new, x - (u @ x) * u))
    Mp_new = _pinv_after(M_new, M, Mp, x, frame_new)
    return M_new, Mp_new, x_new, frame_new


def _wiggle_step(M: LimitSymMatrix, Mp: LimitSymMatrix, x: np.ndarray, u_side: np.ndarray,
                 frame: np.ndarray):
    """Limit form of W^-|(M, N(M^-| u_side)) when u_side = c u + s t, t in D.

    As eps -> 0 the contact direction tends to N(M^-| u); the finite part
    becomes c * W^-|(M_fin, N(M^-| u)) on the complement of u, and the
    divergent direction t rotates to t' = -s u + c t, orthogonal to u_side.
    """
    a = M.D.T @ u_side
    s_vec = M.D @ a
    cu = u_side - s_vec
    c = float(np.linalg.norm(cu))
    s = float(np.linalg.norm(s_vec))
    if c <= 1e-12:
        raise ScheduleError("|M^-| u| vanishes; wiggle iteration undefined")
    frame_new = remove_direction(frame, u_side)
    x_new = _unit(project(frame_new, x - (u_side @ x) * u_side))
    if s <= 1e-14:
        M_new, Mp_new, _, _ = _plain_step(M, Mp, x, frame)
        return M_new, Mp_new, x_new, frame_new
    u = cu / c
    t = s_vec / s
    y = _unit(Mp.finite @ u)
    j = int(np.argmax(np.abs(a)))
    t_new = -s * u + c * t
    if M.D.shape[1] > 1 and np.max(np.abs(np.delete(a, j))) > 1e-12:
        raise ScheduleError("normal overlaps several infinite directions")
    # only the wiggle direction rotates; the rest of D is untouched
    D_new = M.D.copy()
    D_new[:, j] = t_new
    if frame_new.shape[1] == 0:
        empty = LimitSymMatrix(np.zeros_like(M.finite), np.zeros((M.dim, 0)), np.zeros((M.dim, 0)))
        return empty, empty, x_new, frame_new
    fin = c * el.weingarten(M.finite, y)
    M_new = LimitSymMatrix(fin, D_new, M.Z).restricted(frame_new)
    Mp_new = _pinv_after(M_new, M, Mp, y, frame_new, scale=c)
    return M_new, Mp_new, x_new, frame_new


# --- the maps -------------------------------------------------------------------

def normal_init(inst: ExtendedMatrixInstance) -> ExtendedMatrixInstance:
    """U: attach u_h = u(H, w) and u_g = u(G, v).

    At rank one the subspace is a line and the normal is the unit vector
    along the probability vector.
    """
    u_h = _side_normal(inst.H, inst.w, inst.frame_h)
    u_g = _side_normal(inst.G, inst.v, inst.frame_g)
    return replace(inst, u_h=u_h, u_g=u_g)


def weingarten_iterate(inst: ExtendedMatrixInstance) -> ExtendedMatrixInstance:
    """W: move both sides to the tangent subspace, u-slots blanked."""
    H, Hp, w, fh = _plain_step(inst.H, inst.H_pinv, inst.w, inst.frame_h)
    G, Gp, v, fg = _plain_step(inst.G, inst.G_pinv, inst.v, inst.frame_g)
    return ExtendedMatrixInstance(H, G, w, v, Hp, Gp, fh, fg)


def _wiggle_cos(num: float, den: float) -> float:
    if den == 0:
        raise ScheduleError("degenerate wiggle angle")
    c = num / den
    if abs(c) > 1 + 1e-10:
        raise ScheduleError(f"wiggle geometry infeasible: cos(theta) = {c:.12g}")
    return float(np.clip(c, -1.0, 1.0))


def wiggle_normal_init_w(inst: ExtendedMatrixInstance) -> ExtendedMatrixInstance:
    t = wiggle_room(inst, "w")
    if t is None:
        raise ScheduleError("no wiggle-w room")
    u = _side_normal(inst.H, inst.w, inst.frame_h)
    u_g = _side_normal(inst.G, inst.v, inst.frame_g)
    c = _wiggle_cos(float(inst.v @ u_g), float(inst.w @ u))
    u_h = c * u + np.sqrt(1.0 - c * c) * t
    return replace(inst, u_h=u_h, u_g=u_g)


def wiggle_normal_init_v(inst: ExtendedMatrixInstance) -> ExtendedMatrixInstance:
    t = wiggle_room(inst, "v")
    if t is None:
        raise ScheduleError("no wiggle-v room")
    u_h = _side_normal(inst.H, inst.w, inst.frame_h)
    u = _side_normal(inst.G, inst.v, inst.frame_g)
    c = _wiggle_cos(float(inst.w @ u_h), float(inst.v @ u))
    u_g = c * u + np.sqrt(1.0 - c * c) * t
    return replace(inst, u_h=u_h, u_g=u_g)


def wiggle_iterate_w(inst: ExtendedMatrixInstance) -> ExtendedMatrixInstance:
    if inst.u_h is None:
        raise ScheduleError("wiggle iteration needs a completely specified instance")
    if inst.H.D.shape[1] == 0:
        raise ScheduleError("no wiggle direction on the H side")
    H, Hp, w, fh = _wiggle_step(inst.H, inst.H_pinv, inst.w, inst.u_h, inst.frame_h)
    G, Gp, v, fg = _plain_step(inst.G, inst.G_pinv, inst.v, inst.frame_g)
    return ExtendedMatrixInstance(H, G, w, v, Hp, Gp, fh, fg)


def wiggle_iterate_v(inst: ExtendedMatrixInstance) -> ExtendedMatrixInstance:
    if inst.u_g is None:
        raise ScheduleError("wiggle iteration needs a completely specified instance")
    if inst.G.D.shape[1] == 0:
        raise ScheduleError("no wiggle direction on the G side")
    H, Hp, w, fh = _plain_step(inst.H, inst.H_pinv, inst.w, inst.frame_h)
    G, Gp, v, fg = _wiggle_step(inst.G, inst.G_pinv, inst.v, inst.u_g, inst.frame_g)
    return ExtendedMatrixInstance(H, G, w, v, Hp, Gp, fh, fg)


def flip(inst: ExtendedMatrixInstance) -> ExtendedMatrixInstance:
    """F: swap each matrix with its positive inverse."""
    return replace(inst, H=inst.H_pinv, H_pinv=inst.H, G=inst.G_pinv, G_pinv=inst.G)


def terminal_normals(inst: ExtendedMatrixInstance) -> tuple[np.ndarray, np.ndarray]:
    """Rank-one normals e(u_h, w), e(u_g, v) of a completely specified rank-2 instance."""
    if not inst.completely_specified:
        raise ScheduleError("terminal step needs a completely specified instance")
    return el.orth_component(inst.u_h, inst.w), el.orth_component(inst.u_g, inst.v)
