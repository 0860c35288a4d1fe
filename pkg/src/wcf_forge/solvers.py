"""Schedules and end-to-end constructions of O = sum_k |u_h^k><u_g^k|.

Power bookkeeping: each instance along a schedule corresponds to a pair of
moments <x^mu> of the f0-assignment on the same coordinates, one for the
contact condition and one for the component condition.  A condition holds
exactly when 0 <= mu <= N - 2.  Upward Weingarten steps raise the upper end
of the tracked power range by two, downward steps (after a flip) lower the
lower end by two, and each direction keeps its own counter.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import instances as ins
from .assignments import Assignment, PolySpec, lagrange_weights, monomial, split_h_g
from .errors import InputError, ScheduleError
from .verify import SolutionCertificate, StepRecord, VerifyConfig, verify_solution

TERMINAL = "terminal-orth-component"
EMITTING = frozenset({"U", "U_w", "U_v", TERMINAL})
CASES = (
    "f0-balanced",
    "f0-unbalanced",
    "monomial-aligned",
    "monomial-misaligned",
    "monomial-unbalanced-wv",
    "monomial-unbalanced-ww",
    "simplest-monomial",
)
SHAPE_OF = {
    "f0-balanced": "balanced",
    "f0-unbalanced": "pad_h_infinite",
    "monomial-aligned": "balanced",
    "simplest-monomial": "balanced",
    "monomial-misaligned": "pad_both",
    "monomial-unbalanced-wv": "pad_g_zero",
    "monomial-unbalanced-ww": "pad_h_infinite",
}


@dataclass(frozen=True)
class ScheduleStep:
    tag: str
    rank: int
    contact_power: int
    component_power: int


@dataclass(frozen=True)
class IterationSchedule:
    case: str
    n_points: int
    m: int
    steps: tuple[ScheduleStep, ...]

    @property
    def shape(self) -> str:
        return SHAPE_OF[self.case]

    @property
    def tags(self) -> list[str]:
        return [s.tag for s in self.steps]

    @property
    def start_rank(self) -> int:
        return self.steps[0].rank

    @property
    def emissions(self) -> int:
        return sum(s.tag in EMITTING for s in self.steps)

    def vanishes(self, mu: int) -> bool:
        return 0 <= mu <= self.n_points - 2

    def first_failure(self) -> Optional[int]:
        """Index of the first step whose instance breaks a predicted condition."""
        for i, s in enumerate(self.steps):
            if not (self.vanishes(s.contact_power) and self.vanishes(s.component_power)):
                return i
        return None

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "n_points": self.n_points,
            "m": self.m,
            "steps": [
                {"tag": s.tag, "rank": s.rank, "contact_power": s.contact_power,
                 "component_power": s.component_power}
                for s in self.steps
            ],
        }


def resolve_case(case: str, n_points: int, m: int) -> str:
    """Map the umbrella names onto the concrete cases."""
    N = n_points
    if case == "monomial-balanced":
        if N % 2:
            raise InputError("balanced case needs an even number of points")
        if m == 0:
            return "f0-balanced"
        if m == N - 2:
            return "simplest-monomial"
        return "monomial-aligned" if m % 2 == 0 else "monomial-misaligned"
    if case == "monomial-unbalanced":
        if N % 2 == 0:
            raise InputError("unbalanced case needs an odd number of points")
        if m == 0:
            return "f0-unbalanced"
        return "monomial-unbalanced-wv" if m % 2 else "monomial-unbalanced-ww"
    if case not in CASES:
        raise InputError(f"unknown case {case!r}")
    return case


def _chain(case: str, N: int, m: int) -> tuple[list[str], int]:
    UW = ["U", "W"]
    if case in ("f0-balanced", "monomial-aligned", "simplest-monomial", "monomial-misaligned"):
        if N % 2:
            raise InputError(f"{case} needs an even number of points")
        n = N // 2
    else:
        if N % 2 == 0:
            raise InputError(f"{case} needs an odd number of points")
        n = (N + 1) // 2
    if case == "f0-balanced":
        if m != 0:
            raise InputError("f0 case has m = 0")
        return UW * (n - 1) + ["U"], n
    if case == "f0-unbalanced":
        if m != 0:
            raise InputError("f0 case has m = 0")
        return UW * (n - 2) + ["U_w", TERMINAL], n
    if case == "simplest-monomial":
        if m != N - 2:
            raise InputError("simplest monomial needs m = N - 2")
        return ["F"] + UW * (n - 1) + ["U"], n
    if case == "monomial-aligned":
        if m % 2 or not 2 <= m <= 2 * n - 4:
            raise InputError("aligned case needs even m in [2, 2n-4]")
        k = (2 * n - 2 - m) // 2
        return UW * k + ["F"] + UW * (n - k - 1) + ["U"], n
    if case == "monomial-misaligned":
        if m % 2 == 0 or not 1 <= m <= 2 * n - 3:
            raise InputError("misaligned case needs odd m in [1, 2n-3]")
        eta = n + 1
        k = (2 * n - 3 - m) // 2
        tail = ["U_v", "W_v", "F", "U_w", TERMINAL]
        return UW * k + ["F"] + UW * (eta - k - 3) + tail, eta
    if case == "monomial-unbalanced-wv":
        if m % 2 == 0 or not 1 <= m <= 2 * n - 3:
            raise InputError("wiggle-v case needs odd m in [1, 2n-3]")
        k = (2 * n - 3 - m) // 2
        return UW * k + ["F"] + UW * (n - k - 2) + ["U_v", TERMINAL], n
    if case == "monomial-unbalanced-ww":
        if m % 2 or not 2 <= m <= 2 * n - 4:
            raise InputError("wiggle-w case needs even m in [2, 2n-4]")
        k = m // 2
        return ["F"] + UW * k + ["F"] + UW * (n - k - 2) + ["U_w", TERMINAL], n
    raise InputError(f"unknown case {case!r}")


def plan_schedule(case: str, n_points: int, m: int = 0) -> IterationSchedule:
    if n_points < 2:
        raise InputError("need at least two points")
    if not 0 <= m <= n_points - 2:
        raise InputError(f"m = {m} out of range [0, {n_points - 2}]")
    case = resolve_case(case, n_points, m)
    tags, rank = _chain(case, n_points, m)
    up, base_up, base_down = True, m, m
    steps = []
    for tag in tags:
        mu_c, mu_p = (base_up + 1, base_up + 2) if up else (base_down - 1, base_down - 2)
        steps.append(ScheduleStep(tag, rank, mu_c, mu_p))
        if tag in ("W", "W_w", "W_v"):
            rank -= 1
            if up:
                base_up += 2
            else:
                base_down -= 2
        elif tag == "F":
            up = not up
    sched = IterationSchedule(case, n_points, m, tuple(steps))
    _check_plan(sched)
    return sched


def _check_plan(s: IterationSchedule) -> None:
    if s.emissions != s.start_rank:
        raise ScheduleError("schedule emits the wrong number of normals")
    for st in s.steps:
        both = s.vanishes(st.contact_power) and s.vanishes(st.component_power)
        if st.tag == "W" or (st.tag == "U" and st.rank > 1):
            if not both:
                raise ScheduleError(f"{st.tag} at rank {st.rank} lacks its moment conditions")
        if st.tag in ("U_w", "U_v"):
            if not s.vanishes(st.contact_power) or s.vanishes(st.component_power):
                raise ScheduleError("wiggle init must see contact without component")


# --- execution -------------------------------------------------------------------

_MAPS: dict[str, Callable] = {
    "U": ins.normal_init,
    "W": ins.weingarten_iterate,
    "U_w": ins.wiggle_normal_init_w,
    "U_v": ins.wiggle_normal_init_v,
    "W_w": ins.wiggle_iterate_w,
    "W_v": ins.wiggle_iterate_v,
    "F": ins.flip,
}


@dataclass(frozen=True, eq=False)
class RunResult:
    O: np.ndarray
    normals: tuple[tuple[np.ndarray, np.ndarray], ...]
    step_log: tuple[StepRecord, ...]


def run_schedule(inst: ins.ExtendedMatrixInstance, schedule: IterationSchedule, gap_tol: float = 1e-7) -> RunResult:
    """Apply the maps in order; a predicted contact that is not met raises ScheduleError."""
    normals = []
    log = []
    for st in schedule.steps:
        if inst.rank != st.rank:
            raise ScheduleError(f"rank {inst.rank} where the plan expects {st.rank}")
        cg, pg = ins.contact_gap(inst), ins.component_gap(inst)
        cs, ps = ins.gap_scale(inst, 1), ins.gap_scale(inst, 2)
        log.append(StepRecord(st.tag, inst.rank, cg, pg, cs, ps, st.contact_power, st.component_power))
        if st.tag in ("W", "U_w", "U_v", "W_v", "W_w") and schedule.vanishes(st.contact_power):
            if not abs(cg) <= gap_tol * max(cs, 1e-300):
                raise ScheduleError(f"contact condition fails at {st.tag}, rank {st.rank}: gap {cg:.3g}")
        if st.tag == TERMINAL:
            normals.append(ins.terminal_normals(inst))
            continue
        inst = _MAPS[st.tag](inst)
        if st.tag in EMITTING:
            normals.append((inst.u_h, inst.u_g))
    O = sum(np.outer(a, b) for a, b in normals)
    return RunResult(np.asarray(O, dtype=float), tuple(normals), tuple(log))


# --- solvers ---------------------------------------------------------------------

def _expect_proportional(t: Assignment, ref: np.ndarray, what: str) -> None:
    if len(t) != ref.size:
        raise InputError(f"assignment is not {what} on its coordinates")
    ratio = t.p / ref
    if np.any(ratio <= 0) or np.max(np.abs(ratio / ratio[0] - 1)) > 1e-8:
        raise InputError(f"assignment is not {what} on its coordinates")


def _monomial_ref(x: np.ndarray, m: int) -> np.ndarray:
    ref = lagrange_weights(x, monomial(m))
    if len(ref) != x.size:
        raise InputError("monomial weights vanish at a zero coordinate")
    return ref.p


def _effective_ref(x: np.ndarray, k: int) -> np.ndarray:
    if np.any(x <= 0):
        raise InputError("effectively monomial assignments need positive coordinates")
    omega = 1.0 / x[::-1]
    return -lagrange_weights(omega, monomial(k)).p[::-1]


def solve_case(t: Assignment, case: str, m: int = 0, config: VerifyConfig = VerifyConfig()):
    """Run the schedule of `case` on the diagonal instance of t."""
    sched = plan_schedule(case, len(t), m)
    h, g = split_h_g(t)
    inst = ins.build_instance(h, g, sched.shape)
    run = run_schedule(inst, sched, config.schedule_tol)
    cert = verify_solution(inst, run.O, config, run.step_log, sched.case)
    return run.O, cert


def solve_f0_balanced(t: Assignment, config: VerifyConfig = VerifyConfig()):
    if len(t) % 2:
        raise InputError("balanced f0 needs an even number of points")
    _expect_proportional(t, lagrange_weights(t.coords).p, "an f0 assignment")
    return solve_case(t, "f0-balanced", 0, config)


def solve_f0_unbalanced(t: Assignment, config: VerifyConfig = VerifyConfig()):
    if len(t) % 2 == 0:
        raise InputError("unbalanced f0 needs an odd number of points")
    _expect_proportional(t, lagrange_weights(t.coords).p, "an f0 assignment")
    return solve_case(t, "f0-unbalanced", 0, config)


def solve_f0(t: Assignment, config: VerifyConfig = VerifyConfig()):
    return solve_f0_balanced(t, config) if len(t) % 2 == 0 else solve_f0_unbalanced(t, config)


def solve_simplest_monomial(t: Assignment, config: VerifyConfig = VerifyConfig()):
    """m = N - 2 by descending through the inverted instance."""
    N = len(t)
    if N % 2 or np.any(t.x <= 0):
        raise InputError("simplest monomial needs an even number of positive coordinates")
    _expect_proportional(t, _monomial_ref(t.x, N - 2), f"the monomial-{N - 2} assignment")
    return solve_case(t, "simplest-monomial", N - 2, config)


def solve_monomial_balanced(t: Assignment, m: int, config: VerifyConfig = VerifyConfig()):
    N = len(t)
    if N % 2:
        raise InputError("balanced case needs an even number of points")
    if not 0 <= m <= N - 2:
        raise InputError(f"m = {m} out of range")
    if m == 0:
        return solve_f0_balanced(t, config)
    _expect_proportional(t, _monomial_ref(t.x, m), f"the monomial-{m} assignment")
    if m == N - 2:
        return _transpose_route(t, 0, config)
    case = "monomial-aligned" if m % 2 == 0 else "monomial-misaligned"
    return solve_case(t, case, m, config)


def solve_monomial_unbalanced(t: Assignment, m: int, config: VerifyConfig = VerifyConfig()):
    N = len(t)
    if N % 2 == 0:
        raise InputError("unbalanced case needs an odd number of points")
    if not 0 <= m <= N - 2:
        raise InputError(f"m = {m} out of range")
    if m == 0:
        return solve_f0_unbalanced(t, config)
    _expect_proportional(t, _monomial_ref(t.x, m), f"the monomial-{m} assignment")
    if m == N - 2:
        return _transpose_route(t, 0, config)
    case = "monomial-unbalanced-wv" if m % 2 else "monomial-unbalanced-ww"
    return solve_case(t, case, m, config)


def solve_monomial(t: Assignment, m: int, config: VerifyConfig = VerifyConfig()):
    if len(t) % 2 == 0:
        return solve_monomial_balanced(t, m, config)
    return solve_monomial_unbalanced(t, m, config)


def effectively_monomial(coords, k: int) -> Assignment:
    """sum_i (-1/x_i)^k / prod_{j != i} (1/x_j - 1/x_i) [x_i]."""
    x = np.asarray(coords, dtype=float)
    return Assignment.from_arrays(x, _effective_ref(x, k))


def solve_effectively_monomial(t: Assignment, k: int, config: VerifyConfig = VerifyConfig()):
    """Solve the monomial assignment on 1/x and transpose back."""
    _expect_proportional(t, _effective_ref(t.x, k), f"the effectively monomial-{k} assignment")
    return _transpose_route(t, k, config)


_DUAL_SHAPE = {
    (False, False): "balanced",
    (True, False): "pad_g_zero",
    (False, True): "pad_h_infinite",
    (True, True): "pad_both",
}


def _index_of(coords: np.ndarray, targets: np.ndarray) -> list[int]:
    out = []
    for c in targets:
        j = int(np.argmin(np.abs(coords - c)))
        if not np.isclose(coords[j], c, rtol=1e-9, atol=0):
            raise ScheduleError("basis correspondence lost while transposing")
        out.append(j)
    return out


def _transpose_route(t: Assignment, k: int, config: VerifyConfig):
    """t(x_i) is a negative multiple of m_k(1/x_i); if O' solves the latter, O'^T solves t."""
    x = t.x
    if np.any(x <= 0):
        raise InputError("inversion needs positive coordinates")
    omega = 1.0 / x[::-1]
    tp = lagrange_weights(omega, monomial(k))
    O_p, cert_p = solve_monomial(tp, k, config)
    ip = cert_p.instance
    shape = _DUAL_SHAPE[(ip.H.D.shape[1] > 0, ip.G.Z.shape[1] > 0)]
    h, g = split_h_g(t)
    inst = ins.build_instance(h, g, shape)
    hp, gp = split_h_g(tp)
    d = inst.dim
    # H of t pairs with G' of t' and vice versa; padded slots sit last in both
    row = _index_of(gp.x, 1.0 / h.x) + list(range(len(h), d))
    col = _index_of(hp.x, 1.0 / g.x) + list(range(len(g), d))
    O = O_p[np.ix_(col, row)].T
    cert = verify_solution(inst, O, config, cert_p.step_log, f"transpose({cert_p.case})")
    return O, cert
