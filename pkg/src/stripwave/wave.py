"""Standing-wave driver: constrained solve plus constraint-removal diagnostics."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .comparison import (ComparisonReport, DecayFit, DecayWindowError,
                         TailBoundCheck, decay_fit, verify_comparison,
                         verify_tail_bounds)
from .energy import as_field, energy, face_differences, slab_energy
from .geometry import DiscreteDomain, StripSpec, build_mask, translate_field_by_period
from .minimizer import (ConstraintSpec, MinimizeReport, SolverOptions,
                        build_affine_initial, constraint_activity, minimize)
from .potential import (DegenerateMinimumError, Potential, RadialBoundFn,
                        build_f, compute_g)


@dataclass
class TransitionDiagnostics:
    """Sections s = hL, |h| <= N - 2, and how far u is from both minima there."""

    r: float
    delta: float
    sections: list              # h values examined
    section_distance: list      # max over the section of min_a |u - a|
    flagged: list               # h with distance >= r
    transition_free: list       # h with distance < r
    Z: int
    w0_estimate: Optional[float]
    w0_source: str              # "flagged" or "all-sections"
    j_affine: float
    bound: Optional[float]      # J(u_bar) / w0_estimate

    @property
    def passed(self) -> bool:
        if self.Z == 0:
            return True
        return (self.w0_estimate is not None and self.w0_estimate > 0
                and self.Z <= self.bound)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["passed"] = self.passed
        return d


def section_distance(D: DiscreteDomain, u, P: Potential, s_sec: float) -> float:
    """max over the section at s_sec of min(|u - a_-|, |u - a_+|).

    A section at a multiple of L lies on a face of the grid, so both
    adjacent columns are used.
    """
    u = as_field(u, P.m)
    i = D.column_index(s_sec)
    cols = [c for c in (i - 1, i) if 0 <= c < D.nx]
    cells = np.concatenate([D.cross_section(c) for c in cols])
    dm = np.linalg.norm(u[cells] - P.a_minus, axis=1)
    dp = np.linalg.norm(u[cells] - P.a_plus, axis=1)
    return float(np.max(np.minimum(dm, dp)))


def transition_diagnostics(D: DiscreteDomain, u, P: Potential, N: int,
                           j_affine: float, r: Optional[float] = None,
                           delta: Optional[float] = None) -> TransitionDiagnostics:
    r = P.r0 / 4 if r is None else r
    delta = D.L / 4 if delta is None else delta
    hs = list(range(-(N - 2), N - 1))
    dist = [section_distance(D, u, P, k * D.L) for k in hs]
    flagged = [k for k, d in zip(hs, dist) if d >= r]
    free = [k for k, d in zip(hs, dist) if d < r]
    pool = flagged if flagged else hs
    w0 = min(slab_energy(D, u, P, k * D.L, delta) for k in pool) if pool else None
    bound = j_affine / w0 if w0 else None
    return TransitionDiagnostics(
        r=r, delta=delta, sections=hs, section_distance=dist, flagged=flagged,
        transition_free=free, Z=len(flagged), w0_estimate=w0,
        w0_source="flagged" if flagged else "all-sections", j_affine=j_affine,
        bound=bound)


def interior_gradient_bound(D: DiscreteDomain, u, N: int) -> float:
    """max |u_A - u_B| / h over faces with both cells in |s| < (N - 1) L."""
    u = as_field(u)
    inside = np.abs(D.cell_s) < (N - 1) * D.L
    sel = inside[D.face_a] & inside[D.face_b]
    if not sel.any():
        return 0.0
    d = face_differences(D, u)[sel]
    return float(np.sqrt(np.max(np.einsum("ij,ij->i", d, d)))) / D.h


def active_sides(activity: dict) -> list:
    return [side for side in ("minus", "plus")
            if activity[side]["at_edge"] + activity[side]["tail"] > 0]


@dataclass
class SolveReport:
    """Everything the driver learned about one standing-wave run."""

    minimize: MinimizeReport
    first_pass: Optional[MinimizeReport]   # set when a translation happened
    translated: int                        # 0, +1 or -1
    activity: dict
    residual: float
    projected_residual: float
    energy_affine: float
    comparison: Optional[ComparisonReport]
    tail_bounds: list
    decay: dict
    transitions: TransitionDiagnostics
    gradient_bound: float
    f_mode: str
    existence_diagnostic_fail: bool
    notes: list = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def converged(self) -> bool:
        return self.minimize.converged

    @property
    def energy_trace(self) -> list:
        first = self.first_pass.energy_trace if self.first_pass else []
        return list(first) + list(self.minimize.energy_trace)

    def invariants(self) -> dict:
        """Pass/fail flags of the checks the driver runs."""
        flags = {
            "converged": self.converged,
            "energy_monotone": bool(all(
                np.diff(self.minimize.energy_trace) <= 0)) and (
                self.first_pass is None or bool(all(
                    np.diff(self.first_pass.energy_trace) <= 0))),
            "constraint_inactive": self.activity["total"] == 0,
            "energy_below_affine": self.minimize.final.total <= self.energy_affine,
            "transition_count": self.transitions.passed,
        }
        if self.comparison is not None:
            flags["slab_comparison"] = self.comparison.passed
        if self.tail_bounds:
            flags["tail_bounds"] = all(t.passed for t in self.tail_bounds)
        return flags

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "minimize": self.minimize.to_dict(),
            "first_pass": self.first_pass.to_dict() if self.first_pass else None,
            "translated": self.translated,
            "activity": self.activity,
            "residual_inf": self.residual,
            "projected_residual_inf": self.projected_residual,
            "energy_affine": self.energy_affine,
            "comparison": self.comparison.to_dict() if self.comparison else None,
            "tail_bounds": [t.__dict__ for t in self.tail_bounds],
            "decay": {k: (v.to_dict() if isinstance(v, DecayFit) else v)
                      for k, v in self.decay.items()},
            "transitions": self.transitions.to_dict(),
            "gradient_bound_interior": self.gradient_bound,
            "f_mode": self.f_mode,
            "existence_diagnostic": ("EXISTENCE-DIAGNOSTIC-FAIL"
                                     if self.existence_diagnostic_fail else "ok"),
            "invariants": self.invariants(),
            "notes": self.notes,
            "wall_time_s": self.wall_time,
        }


@dataclass
class WaveResult:
    domain: DiscreteDomain
    u: np.ndarray
    report: SolveReport
    f: Optional[RadialBoundFn] = None


def solve_standing_wave(P: Potential, strip: StripSpec, h: float, T: float,
                        N: int, opts: Optional[SolverOptions] = None,
                        k_range=(1, 2, 3), j_max: Optional[int] = None,
                        eps: Optional[float] = None,
                        diagnostics: bool = True) -> WaveResult:
    """Constrained minimization on the truncated strip, then the checks.

    If the ball constraint is active on exactly one side, the field is
    translated once by a period away from that side and minimized again.
    """
    t0 = time.perf_counter()
    opts = opts or SolverOptions()
    D = build_mask(strip, h, T)
    C = ConstraintSpec.for_potential(P, N, D.L)
    C.check_fits(D.T)
    u_bar = build_affine_initial(D, P)
    j_bar = energy(D, u_bar, P).total
    notes = []

    u, rep = minimize(D, u_bar, P, C, opts)
    first, moved = None, 0
    sides = active_sides(rep.activity)
    if len(sides) == 1:
        moved = -1 if sides[0] == "plus" else 1
        notes.append(f"constraint active on the {sides[0]} side; "
                     f"translated by {moved} period and re-minimized")
        first = rep
        v = translate_field_by_period(D, u, moved, P.a_minus, P.a_plus)
        u, rep = minimize(D, v, P, C, opts)
    elif len(sides) == 2:
        notes.append("constraint active on both sides; no translation applied")
    activity = constraint_activity(D, u, C)
    fail = activity["total"] > 0

    comp, tails, decay, f_mode = None, [], {}, "none"
    f = None
    if diagnostics:
        try:
            f = build_f(compute_g(P), "envelope")
            f_mode = f.mode
        except (DegenerateMinimumError, ValueError) as exc:
            notes.append(f"comparison function unavailable: {exc}")
        if f is not None:
            comp = verify_comparison(D, u, P, f, N, k_range, eps)
            jm = j_max if j_max is not None else max(
                0, min(4, int(math.floor(D.T / D.L + 1e-9)) - N - 1))
            tails = verify_tail_bounds(D, u, P, f, N, jm, eps)
        for side in ("minus", "plus"):
            try:
                decay[side] = decay_fit(D, u, P, side)
            except DecayWindowError as exc:
                decay[side] = {"error": str(exc)}
    trans = transition_diagnostics(D, u, P, N, j_bar)
    report = SolveReport(
        minimize=rep, first_pass=first, translated=moved, activity=activity,
        residual=rep.residual, projected_residual=rep.projected_residual,
        energy_affine=j_bar, comparison=comp, tail_bounds=tails, decay=decay,
        transitions=trans, gradient_bound=interior_gradient_bound(D, u, N),
        f_mode=f_mode, existence_diagnostic_fail=fail, notes=notes)
    report.wall_time = time.perf_counter() - t0
    return WaveResult(domain=D, u=u, report=report, f=f)
