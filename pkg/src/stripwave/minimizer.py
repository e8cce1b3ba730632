"""Constrained energy minimization over the discrete class X_N.

The descent direction is the residual (the energy gradient in the
h^n-weighted L2 metric), so the stopping quantity
``max|u_{k+1} - u_k| / step`` is a projected residual in PDE units.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .energy import (EnergyBreakdown, as_field, energy, energy_fast,
                     face_differences, residual, truncate_sup)
from .geometry import DiscreteDomain
from .potential import Potential


@dataclass(frozen=True)
class ConstraintSpec:
    """|u - a_+| <= r0/2 for s >= N L and |u - a_-| <= r0/2 for s <= -N L."""

    N: int
    L: float
    r0: float
    a_minus: np.ndarray
    a_plus: np.ndarray

    @classmethod
    def for_potential(cls, P: Potential, N: int, L: float) -> "ConstraintSpec":
        if N < 1:
            raise ValueError("N must be >= 1")
        return cls(N=int(N), L=float(L), r0=P.r0, a_minus=P.a_minus,
                   a_plus=P.a_plus)

    @property
    def radius(self) -> float:
        return 0.5 * self.r0

    @property
    def edge(self) -> float:
        return self.N * self.L

    def check_fits(self, T: float) -> None:
        if self.edge + 4 * self.L > T + 1e-12:
            raise ValueError(f"NL+4L <= T violated: N={self.N}, L={self.L}, T={T}")

    def zones(self, D: DiscreteDomain) -> tuple[np.ndarray, np.ndarray]:
        s = D.cell_s
        return s <= -self.edge, s >= self.edge


def _ball_project(u, center, radius):
    v = u - center
    n2 = np.einsum("ij,ij->i", v, v)
    out = n2 > radius * radius
    if not out.any():
        return u.copy()
    res = u.copy()
    res[out] = center + v[out] * (radius / np.sqrt(n2[out]))[:, None]
    return res


def _zone_slices(D: DiscreteDomain, C: ConstraintSpec) -> tuple[slice, slice]:
    """The constrained zones as slices (cells are ordered by column)."""
    left, right = C.zones(D)
    nl, nr = int(left.sum()), int(right.sum())
    if not (left[:nl].all() and right[D.n_cells - nr:].all()):
        raise AssertionError("constraint zones are not contiguous")
    return slice(0, nl), slice(D.n_cells - nr, D.n_cells)


def project_constraints(D: DiscreteDomain, u, C: ConstraintSpec) -> np.ndarray:
    """Radial projection onto the r0/2 balls in the constrained columns."""
    u = as_field(u)
    out = u.copy()
    left, right = C.zones(D)
    out[left] = _ball_project(u[left], C.a_minus, C.radius)
    out[right] = _ball_project(u[right], C.a_plus, C.radius)
    return out


def build_affine_initial(D: DiscreteDomain, P: Potential) -> np.ndarray:
    """Piecewise affine interpolation from a_- (s <= -L) to a_+ (s >= L)."""
    s = np.clip(D.cell_s / D.L, -1.0, 1.0)[:, None]
    return 0.5 * (1 - s) * P.a_minus + 0.5 * (1 + s) * P.a_plus


@dataclass
class SolverOptions:
    tol: float = 1e-6
    max_iter: int = 100000
    seed: int = 0
    max_halvings: int = 40
    step_min: float = 1e-14
    step_max: float = 1e6


@dataclass
class MinimizeReport:
    energy_trace: list
    final: EnergyBreakdown
    converged: bool
    stalled: bool
    iterations: int
    projected_residual: float
    residual: float
    activity: dict
    wall_time: float

    def to_dict(self) -> dict:
        return {
            "final_energy": self.final.to_dict(),
            "converged": self.converged,
            "stalled": self.stalled,
            "iterations": self.iterations,
            "projected_residual_inf": self.projected_residual,
            "residual_inf": self.residual,
            "activity": self.activity,
            "wall_time_s": self.wall_time,
        }


def constraint_activity(D: DiscreteDomain, u, C: ConstraintSpec,
                        margin: Optional[float] = None) -> dict:
    """Count cells within ``margin`` of the ball boundary, at +-NL and beyond.

    ``margin`` defaults to 1e-3 r0. The first constrained column on each side
    is reported as "at_edge"; the remaining constrained columns as "tail".
    """
    u = as_field(u)
    margin = 1e-3 * C.r0 if margin is None else margin
    left, right = C.zones(D)
    s = D.cell_s
    out = {"margin": margin}
    for name, zone, a, edge_cells in (
            ("minus", left, C.a_minus, left & (s > -C.edge - D.h)),
            ("plus", right, C.a_plus, right & (s < C.edge + D.h))):
        dist = np.linalg.norm(u - a, axis=1)
        active = zone & (dist >= C.radius - margin)
        out[name] = {
            "at_edge": int(np.sum(active & edge_cells)),
            "tail": int(np.sum(active & ~edge_cells)),
            "max_dist": float(dist[zone].max()) if zone.any() else 0.0,
            "slack": float(C.radius - dist[zone].max()) if zone.any() else C.radius,
        }
    out["total"] = (out["minus"]["at_edge"] + out["minus"]["tail"]
                    + out["plus"]["at_edge"] + out["plus"]["tail"])
    return out


def projected_residual(D: DiscreteDomain, u, P: Potential,
                       C: Optional[ConstraintSpec] = None,
                       free: Optional[np.ndarray] = None) -> np.ndarray:
    """Residual with outward components removed at active ball constraints."""
    u = as_field(u, P.m)
    r = residual(D, u, P)

    def clip_outward(sel, center, radius):
        v = u[sel] - center
        n = np.linalg.norm(v, axis=1)
        on = n >= radius * (1 - 1e-12)
        nrm = v / np.where(n > 0, n, 1.0)[:, None]
        out = np.sum(r[sel] * nrm, axis=1)
        fix = on & (out > 0)
        rs = r[sel]
        rs[fix] -= out[fix, None] * nrm[fix]
        r[sel] = rs

    clip_outward(np.ones(D.n_cells, dtype=bool), 0.0, P.M)
    if C is not None:
        left, right = C.zones(D)
        clip_outward(left, C.a_minus, C.radius)
        clip_outward(right, C.a_plus, C.radius)
    if free is not None:
        r[~free] = 0.0
    return r


def minimize(D: DiscreteDomain, u0, P: Potential,
             C: Optional[ConstraintSpec] = None,
             opts: Optional[SolverOptions] = None,
             free: Optional[np.ndarray] = None) -> tuple[np.ndarray, MinimizeReport]:
    """Projected gradient descent with Barzilai-Borwein steps.

    Every trial point is truncated to |u| <= M and projected onto the
    constraint balls; the step is halved until the energy does not
    increase. Cells outside ``free`` are held fixed.

    The energy trace starts at J(u0) and accumulates the accepted energy
    changes, each evaluated from local differences; it is non-increasing
    by construction and agrees with direct evaluation up to rounding.
    """
    opts = opts or SolverOptions()
    t_start = time.perf_counter()

    if C is not None:
        left, right = _zone_slices(D, C)

    def project(v):
        v = truncate_sup(v, P.M)
        if C is not None:
            v[left] = _ball_project(v[left], C.a_minus, C.radius)
            v[right] = _ball_project(v[right], C.a_plus, C.radius)
        if free is not None:
            v[~free] = u_fixed
        return v

    u0 = as_field(u0, P.m)
    u_fixed = u0[~free] if free is not None else None
    u = project(u0.copy())
    E = energy_fast(D, u, P)
    trace = [E]
    d_old = face_differences(D, u)
    w_old = P.value(u)

    def delta_energy(du, w_new):
        # J(u + du) - J(u) from local differences, so its rounding error
        # scales with the change rather than with J itself
        dd = face_differences(D, du)
        cross = dd * d_old
        dirichlet = D.face_weight * (np.sum(cross) + 0.5 * np.sum(dd * dd))
        dE = float(dirichlet + D.cell_volume * np.sum(w_new - w_old))
        noise = 16 * np.finfo(float).eps * float(
            D.face_weight * np.sum(np.abs(cross))
            + D.cell_volume * (np.sum(np.abs(w_new)) + np.sum(np.abs(w_old))))
        return dE, dd, noise

    def direction(v):
        r = residual(D, v, P)
        if free is not None:
            r[~free] = 0.0
        return r

    g = direction(u)
    step = min(opts.step_max, D.h ** 2 / (4 * D.dim))
    converged = stalled = False
    it = 0
    for it in range(1, opts.max_iter + 1):
        trial = step
        for _ in range(opts.max_halvings + 1):
            u_new = project(u + trial * g)
            du = u_new - u
            w_new = P.value(u_new)
            dE, dd, noise = delta_energy(du, w_new)
            g_new = None
            if abs(dE) <= noise:
                # the difference is lost in rounding; the trapezoid rule on
                # the gradient has no cancellation and is exact for quadratics
                g_new = direction(u_new)
                dE = -D.cell_volume * 0.5 * float(np.sum((g + g_new) * du))
            if dE <= 0:
                break
            trial *= 0.5
        else:
            stalled = True
            break
        crit = float(np.max(np.abs(du))) / trial
        if g_new is None:
            g_new = direction(u_new)
        dg = g - g_new          # gradient of J (up to h^n) changes by -dg
        sy = float(np.sum(du * dg))
        if sy > 0:
            step = float(np.clip(np.sum(du * du) / sy, opts.step_min, opts.step_max))
        else:
            step = min(opts.step_max, 2 * trial)
        u, g, w_old = u_new, g_new, w_new
        d_old = d_old + dd
        E = E + dE
        trace.append(E)
        if crit <= opts.tol:
            converged = True
            break

    pr = projected_residual(D, u, P, C, free)
    plain = residual(D, u, P)
    if free is not None:
        plain[~free] = 0.0
    pr_inf = float(np.max(np.abs(pr))) if pr.size else 0.0
    if stalled and pr_inf <= opts.tol:
        converged = True
    act = constraint_activity(D, u, C) if C is not None else {"total": 0}
    rep = MinimizeReport(
        energy_trace=trace, final=energy(D, u, P), converged=converged,
        stalled=stalled, iterations=it, projected_residual=pr_inf,
        residual=float(np.max(np.abs(plain))) if plain.size else 0.0,
        activity=act, wall_time=time.perf_counter() - t_start)
    return u, rep


def dirichlet_minimize_subdomain(D: DiscreteDomain, u, A: np.ndarray,
                                 P: Potential, opts: Optional[SolverOptions] = None
                                 ) -> tuple[np.ndarray, MinimizeReport]:
    """Minimize the energy over the cells of A with all other cells fixed."""
    A = np.asarray(A, dtype=bool)
    if not D.is_connected(A):
        raise ValueError("A must be edge-connected")
    return minimize(D, u, P, None, opts, free=A)
