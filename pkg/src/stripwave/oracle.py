"""One-dimensional heteroclinic oracle for u'' = W_u(u) and comparison with 2D waves.

The oracle minimizes the 1D discrete energy with the same code path as the
strip solver (a line domain with one cell per node), so it checks the 2D
pipeline through a different dimension and against closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .energy import as_field
from .geometry import DiscreteDomain, build_line
from .minimizer import (ConstraintSpec, MinimizeReport, SolverOptions,
                        build_affine_initial, minimize)
from .potential import Potential


class CenteringError(ValueError):
    """The profile never crosses the midpoint of the two minima."""


@dataclass
class OdeSolution:
    s: np.ndarray
    u: np.ndarray                  # shape (n, m)
    energy: float
    equipartition_defect: float
    h: float
    T: float
    report: MinimizeReport

    @property
    def converged(self) -> bool:
        return self.report.converged

    def endpoints_ok(self, P: Potential) -> bool:
        """u(-T), u(T) within r0/2 of a_-, a_+."""
        return bool(np.linalg.norm(self.u[0] - P.a_minus) <= P.r0 / 2
                    and np.linalg.norm(self.u[-1] - P.a_plus) <= P.r0 / 2)

    def to_dict(self) -> dict:
        return {"h": self.h, "T": self.T, "n": int(self.s.size),
                "energy": self.energy,
                "equipartition_defect": self.equipartition_defect,
                "minimize": self.report.to_dict()}


def equipartition_defect(s: np.ndarray, u: np.ndarray, P: Potential,
                         interior: Optional[float] = None) -> float:
    """max |1/2 |u'|^2 - W(u)| with u' and W taken at node midpoints.

    ``interior`` restricts the maximum to midpoints with |s| below it; the
    default skips one unit of length at each end.
    """
    u = as_field(u, P.m)
    h = s[1] - s[0]
    du = np.diff(u, axis=0) / h
    mid = 0.5 * (u[1:] + u[:-1])
    sm = 0.5 * (s[1:] + s[:-1])
    lim = (s[-1] - 1.0) if interior is None else interior
    sel = np.abs(sm) < lim
    d = np.abs(0.5 * np.sum(du * du, axis=1) - P.value(mid))
    return float(d[sel].max())


def solve_heteroclinic_1d(P: Potential, T: float = 8.0, h: float = 1 / 128,
                          tol: float = 1e-7, L_constraint: Optional[float] = None,
                          u0: Optional[np.ndarray] = None,
                          opts: Optional[SolverOptions] = None) -> OdeSolution:
    """Minimize sum (1/2 |Du/h|^2 + W(u)) h on (-T, T) under the N = 1 balls.

    The constraint period defaults to T/4, which keeps the constrained zone
    |s| >= T/4 away from the interface for the built-in potentials.
    """
    Lc = T / 4 if L_constraint is None else L_constraint
    D = build_line(T, h, L=Lc)
    C = ConstraintSpec.for_potential(P, 1, Lc)
    start = build_affine_initial(D, P) if u0 is None else as_field(u0, P.m)
    opts = opts or SolverOptions(tol=tol)
    u, rep = minimize(D, start, P, C, opts)
    return OdeSolution(s=D.s.copy(), u=u, energy=rep.final.total,
                       equipartition_defect=equipartition_defect(D.s, u, P),
                       h=D.h, T=D.T, report=rep)


def crossing_point(s: np.ndarray, u: np.ndarray, P: Potential) -> float:
    """Position where the coordinate along (a_+ - a_-) crosses the midpoint.

    Uses linear interpolation between the first pair of nodes that bracket
    the crossing.
    """
    u = as_field(u, P.m)
    e = P.a_plus - P.a_minus
    e = e / np.linalg.norm(e)
    c = (u - 0.5 * (P.a_minus + P.a_plus)) @ e
    idx = np.nonzero((c[:-1] < 0) & (c[1:] >= 0))[0]
    if idx.size == 0:
        raise CenteringError("profile does not cross the midpoint")
    k = idx[0]
    return float(s[k] - c[k] * (s[k + 1] - s[k]) / (c[k + 1] - c[k]))


def centered_profile(ode: OdeSolution, P: Potential):
    """Callable s -> u_ode(s + s*) with s* the midpoint crossing."""
    s_star = crossing_point(ode.s, ode.u, P)

    def profile(s):
        s = np.asarray(s, dtype=float) + s_star
        return np.stack([np.interp(s, ode.s, ode.u[:, k])
                         for k in range(ode.u.shape[1])], axis=-1)

    return profile


@dataclass
class ProfileComparison:
    deviation: float            # max over columns of max_y |u(s, y) - u_ode(s)|
    y_variation: float          # max over columns of max_y u - min_y u
    shift_2d: float
    shift_ode: float
    window: tuple

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def column_means(D: DiscreteDomain, u: np.ndarray) -> np.ndarray:
    counts = np.diff(D.col_start)
    return np.add.reduceat(u, D.col_start[:-1], axis=0) / counts[:, None]


def compare_to_2d(ode: OdeSolution, D: DiscreteDomain, u, P: Potential,
                  window: Optional[float] = None) -> ProfileComparison:
    """Center both profiles at their midpoint crossing and compare columnwise.

    ``window`` limits the comparison to |s - s*| <= window (default: the
    whole domain where the shifted oracle is defined).
    """
    u = as_field(u, P.m)
    s2 = crossing_point(D.s, column_means(D, u), P)
    prof = centered_profile(ode, P)
    s1 = crossing_point(ode.s, ode.u, P)
    rel = D.cell_s - s2
    lim = window if window is not None else min(D.T, ode.T) - abs(s1) - abs(s2)
    sel = np.abs(rel) <= lim
    dev = np.max(np.abs(u[sel] - prof(rel[sel])))
    hi = np.maximum.reduceat(u, D.col_start[:-1], axis=0)
    lo = np.minimum.reduceat(u, D.col_start[:-1], axis=0)
    return ProfileComparison(deviation=float(dev),
                             y_variation=float(np.max(hi - lo)),
                             shift_2d=s2, shift_ode=s1, window=(-lim, lim))
