"""Comparison functions on period slabs and exponential decay estimates.

The auxiliary problem on a slab omega = {|s - c| < L} is

    Delta phi = f(phi)   in omega,
    phi = t              on the two end sections (ghost-cell Dirichlet),
    d phi / dn = 0       on the lateral boundary (absent faces).

Its central-section maximum t_hat < t drives the contraction t_j -> 0 that
bounds rho^2 = |u - a_+|^2 on successive slabs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .energy import as_field
from .geometry import DiscreteDomain, build_mask, flat_cylinder
from .potential import Potential, RadialBoundFn, min_eig_hess


class PhiSolveError(RuntimeError):
    pass


class DecayWindowError(ValueError):
    """No tail columns in the fit window; the field has not decayed enough."""


# ---------------------------------------------------------------------------
# linear algebra

def pcg(apply: Callable[[np.ndarray], np.ndarray], b: np.ndarray,
        diag: np.ndarray, x0: Optional[np.ndarray] = None,
        rtol: float = 1e-12, maxiter: Optional[int] = None) -> tuple[np.ndarray, int]:
    """Jacobi-preconditioned conjugate gradients for an SPD operator."""
    x = np.zeros_like(b) if x0 is None else x0.copy()
    r = b - apply(x)
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros_like(b), 0
    z = r / diag
    p = z.copy()
    rz = r @ z
    maxiter = maxiter or 10 * b.size
    for k in range(1, maxiter + 1):
        if np.linalg.norm(r) <= rtol * bnorm:
            return x, k - 1
        Ap = apply(p)
        alpha = rz / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        z = r / diag
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    if np.linalg.norm(r) > 1e3 * rtol * bnorm:
        raise PhiSolveError(f"CG did not converge in {maxiter} iterations")
    return x, maxiter


# ---------------------------------------------------------------------------
# slabs

@dataclass
class Slab:
    domain: DiscreteDomain
    center: float
    cells: np.ndarray            # indices into the parent domain
    face_a: np.ndarray           # local indices
    face_b: np.ndarray
    dirichlet: np.ndarray        # local bool: end cells with a ghost value
    central: np.ndarray          # local indices of the two central columns

    @property
    def h(self) -> float:
        return self.domain.h

    @property
    def n(self) -> int:
        return self.cells.size

    @property
    def s(self) -> np.ndarray:
        return self.domain.cell_s[self.cells]

    @property
    def degree(self) -> np.ndarray:
        return (np.bincount(self.face_a, minlength=self.n)
                + np.bincount(self.face_b, minlength=self.n))

    def apply_laplacian_operator(self, phi: np.ndarray) -> np.ndarray:
        """-Delta_h phi with zero ghost values (the SPD part)."""
        d = phi[self.face_a] - phi[self.face_b]
        out = (np.bincount(self.face_a, d, minlength=self.n)
               - np.bincount(self.face_b, d, minlength=self.n))
        out += 2.0 * self.dirichlet * phi
        return out / self.h ** 2


def make_slab(D: DiscreteDomain, center: float) -> Slab:
    """Slab of cells with center in (center - L, center + L)."""
    L = D.L
    if center - L < -D.T - 1e-9 or center + L > D.T + 1e-9:
        raise ValueError(f"slab around {center} does not fit in [-{D.T}, {D.T}]")
    cols = D.columns_in(center - L, center + L)
    if cols.size != 2 * D.period_shift_cells:
        raise ValueError("slab columns do not match the period")
    cells = np.arange(D.col_start[cols[0]], D.col_start[cols[-1] + 1])
    local = -np.ones(D.n_cells, dtype=np.int64)
    local[cells] = np.arange(cells.size)
    inside = (local[D.face_a] >= 0) & (local[D.face_b] >= 0)
    fa = local[D.face_a[inside]]
    fb = local[D.face_b[inside]]
    first, last = cols[0], cols[-1]
    rows_both = D.mask[first] & D.mask[last]
    ci, cj = D.cell_i[cells], D.cell_j[cells]
    dirichlet = ((ci == first) | (ci == last)) & rows_both[cj]
    mid = cols.size // 2
    central = np.nonzero((ci == cols[mid - 1]) | (ci == cols[mid]))[0]
    return Slab(domain=D, center=float(center), cells=cells, face_a=fa,
                face_b=fb, dirichlet=dirichlet, central=central)


def flat_slab(L: float = 1.0, h: float = 1 / 32, height: float = 1.0) -> Slab:
    D = build_mask(flat_cylinder(L, height), h, T=L)
    return make_slab(D, 0.0)


# ---------------------------------------------------------------------------
# the phi problem

@dataclass
class PhiProblem:
    slab: Slab
    f: RadialBoundFn
    t: float


@dataclass
class PhiSolution:
    phi: np.ndarray
    t: float
    residual: float
    iterations: int
    method: str
    bounds_ok: bool
    slab: Slab = field(repr=False)


def _phi_residual(prob: PhiProblem, phi: np.ndarray) -> np.ndarray:
    sl = prob.slab
    b = 2.0 * prob.t * sl.dirichlet / sl.h ** 2
    return sl.apply_laplacian_operator(phi) + prob.f.f(phi) - b


def solve_phi(prob: PhiProblem, tol: float = 1e-10, max_newton: int = 50,
              max_picard: int = 500) -> PhiSolution:
    """Damped Newton with CG inner solves; monotone Picard as a fallback.

    Convergence: max |Delta_h phi - f(phi)| <= tol * 2 t / h^2.
    """
    sl, t = prob.slab, float(prob.t)
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return PhiSolution(np.zeros(sl.n), 0.0, 0.0, 0, "trivial", True, sl)
    scale = 2.0 * t / sl.h ** 2
    b = scale * sl.dirichlet
    base_diag = (sl.degree + 2.0 * sl.dirichlet) / sl.h ** 2
    phi = np.full(sl.n, t)
    F = _phi_residual(prob, phi)
    res = float(np.max(np.abs(F)))
    method = "newton"
    it = 0
    for it in range(1, max_newton + 1):
        if res <= tol * scale:
            break
        fp = prob.f.f_prime(phi)
        delta, _ = pcg(lambda x: sl.apply_laplacian_operator(x) + fp * x,
                       -F, base_diag + fp, rtol=1e-13)
        lam, nrm = 1.0, np.linalg.norm(F)
        for _ in range(31):
            trial = phi + lam * delta
            F_trial = _phi_residual(prob, trial)
            if np.linalg.norm(F_trial) < nrm:
                break
            lam *= 0.5
        else:
            method = "picard"
            break
        phi, F = trial, F_trial
        res = float(np.max(np.abs(F)))
    if res > tol * scale:
        method = "picard"
        phi = np.full(sl.n, t)
        for it in range(1, max_picard + 1):
            phi, _ = pcg(sl.apply_laplacian_operator, b - prob.f.f(phi),
                         base_diag, x0=phi, rtol=1e-13)
            res = float(np.max(np.abs(_phi_residual(prob, phi))))
            if res <= tol * scale:
                break
        else:
            raise PhiSolveError(f"phi solve stalled at residual {res:.3g}")
    slack = 1e-9 * t
    ok = bool(phi.min() >= -slack and phi.max() <= t + slack)
    return PhiSolution(phi=phi, t=t, residual=res, iterations=it, method=method,
                       bounds_ok=ok, slab=sl)


def t_hat(sol: PhiSolution) -> float:
    """Max of phi over the central section (the two columns straddling it)."""
    return float(np.max(sol.phi[sol.slab.central]))


@dataclass
class TjSequence:
    t: list
    theta: Optional[float]
    theta_defect: Optional[float]    # max |t_j - theta^j t_0| in linear mode
    strictly_decreasing: bool


def iterate_tj(slab: Slab, f: RadialBoundFn, t0: float, j_max: int,
               tol: float = 1e-10) -> TjSequence:
    """t_0 = t0, t_j = t_hat(phi(., t_{j-1}))."""
    ts = [float(t0)]
    for _ in range(j_max):
        sol = solve_phi(PhiProblem(slab, f, ts[-1]), tol=tol)
        ts.append(t_hat(sol))
    dec = all(b < a for a, b in zip(ts, ts[1:])) if t0 > 0 else False
    theta = defect = None
    if f.mode == "linear" and t0 > 0:
        theta = ts[1] / ts[0]
        defect = max(abs(tj - theta ** j * t0) for j, tj in enumerate(ts))
    return TjSequence(t=ts, theta=theta, theta_defect=defect,
                      strictly_decreasing=dec)


# ---------------------------------------------------------------------------
# comparison with the computed wave

@dataclass
class SlabCheck:
    side: str
    k: int
    center: float
    t: float
    t_hat: float
    worst_violation: float      # max of rho^2 - phi - eps over the slab
    passed: bool


@dataclass
class ComparisonReport:
    eps: float
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def worst_violation(self) -> float:
        return max((c.worst_violation for c in self.checks), default=-math.inf)

    def to_dict(self) -> dict:
        return {"eps": self.eps, "passed": self.passed,
                "worst_violation": self.worst_violation,
                "slabs": [c.__dict__ for c in self.checks]}


def _end_columns(D: DiscreteDomain, center: float) -> list:
    cols = D.columns_in(center - D.L, center + D.L)
    out = [cols[0], cols[-1]]
    if cols[0] > 0:
        out.append(cols[0] - 1)
    if cols[-1] < D.nx - 1:
        out.append(cols[-1] + 1)
    return out


def verify_comparison(D: DiscreteDomain, u, P: Potential, f: RadialBoundFn,
                      N: int, k_range: Sequence[int] = (1, 2, 3),
                      eps: Optional[float] = None) -> ComparisonReport:
    """Check rho^2 <= phi_k + eps on the slabs omega_k on both sides.

    t for slab k is the max of rho^2 over the columns on either side of
    its two end sections.
    """
    u = as_field(u, P.m)
    eps = 4 * D.h ** 2 if eps is None else eps
    checks = []
    for side, a, sign in (("plus", P.a_plus, 1), ("minus", P.a_minus, -1)):
        rho2 = np.sum((u - a) ** 2, axis=1)
        for k in k_range:
            center = sign * (N + k) * D.L
            slab = make_slab(D, center)
            t = 0.0
            for c in _end_columns(D, center):
                t = max(t, float(rho2[D.col_start[c]:D.col_start[c + 1]].max()))
            sol = solve_phi(PhiProblem(slab, f, t))
            worst = float(np.max(rho2[slab.cells] - sol.phi - eps))
            checks.append(SlabCheck(side=side, k=int(k), center=center, t=t,
                                    t_hat=t_hat(sol), worst_violation=worst,
                                    passed=worst <= 0))
    return ComparisonReport(eps=eps, checks=checks)


@dataclass
class TailBoundCheck:
    side: str
    t: list
    worst_violation: float      # max over j of max rho^2 - t_j - eps beyond (N+j)L
    passed: bool


def verify_tail_bounds(D: DiscreteDomain, u, P: Potential, f: RadialBoundFn,
                       N: int, j_max: int, eps: Optional[float] = None
                       ) -> list[TailBoundCheck]:
    """rho^2 <= t_j on every section beyond (N + j) L, t_0 = r0^2 / 4."""
    u = as_field(u, P.m)
    eps = 4 * D.h ** 2 if eps is None else eps
    slab = make_slab(D, (N + 1) * D.L)
    seq = iterate_tj(slab, f, P.r0 ** 2 / 4, j_max)
    out = []
    s = D.cell_s
    for side, a, sign in (("plus", P.a_plus, 1), ("minus", P.a_minus, -1)):
        rho2 = np.sum((u - a) ** 2, axis=1)
        worst = -math.inf
        for j, tj in enumerate(seq.t):
            sel = sign * s > (N + j) * D.L
            if sel.any():
                worst = max(worst, float(rho2[sel].max() - tj - eps))
        out.append(TailBoundCheck(side=side, t=seq.t, worst_violation=worst,
                                  passed=worst <= 0 and seq.strictly_decreasing))
    return out


# ---------------------------------------------------------------------------
# decay fits

@dataclass
class DecayFit:
    side: str
    k0: float
    K0: float
    s_lo: float
    s_hi: float
    fit_residual: float
    n_points: int
    k0_linear: Optional[float] = None   # sqrt of the smallest Hessian eigenvalue

    @property
    def relative_gap(self) -> Optional[float]:
        if not self.k0_linear:
            return None
        return abs(self.k0 - self.k0_linear) / self.k0_linear

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["relative_gap"] = self.relative_gap
        return d


def fit_decay_profile(dist: np.ndarray, amplitude: np.ndarray, lo: float,
                      hi: float, side: str = "plus") -> DecayFit:
    """Least-squares fit of log amplitude = log K0 - k0 dist on the window.

    ``dist`` is the distance along the tail (|s|), increasing; the window is
    the contiguous run starting where the amplitude first drops to ``hi`` and
    ending before it drops below ``lo``.
    """
    dist = np.asarray(dist, dtype=float)
    amp = np.asarray(amplitude, dtype=float)
    order = np.argsort(dist)
    dist, amp = dist[order], amp[order]
    below_hi = np.nonzero(amp <= hi)[0]
    if below_hi.size == 0:
        raise DecayWindowError("amplitude never drops below the upper threshold")
    start = below_hi[0]
    stop = start
    while stop < amp.size and amp[stop] >= lo:
        stop += 1
    if stop - start < 3:
        raise DecayWindowError(
            f"fit window has {stop - start} points; increase T or refine h")
    x, yv = dist[start:stop], np.log(amp[start:stop])
    slope, intercept = np.polyfit(x, yv, 1)
    resid = yv - (slope * x + intercept)
    return DecayFit(side=side, k0=float(-slope), K0=float(np.exp(intercept)),
                    s_lo=float(x[0]), s_hi=float(x[-1]),
                    fit_residual=float(np.sqrt(np.mean(resid ** 2))),
                    n_points=int(x.size))


def column_amplitude(D: DiscreteDomain, u, a) -> np.ndarray:
    """max over each column of |u - a|."""
    u = as_field(u)
    d = np.linalg.norm(u - np.asarray(a, dtype=float), axis=1)
    return np.maximum.reduceat(d, D.col_start[:-1])


def decay_fit(D: DiscreteDomain, u, P: Potential, side: str = "plus",
              lo: Optional[float] = None, hi: Optional[float] = None) -> DecayFit:
    """Fit |u - a| <= K0 exp(-k0 |s|) on the tail of the given side.

    Default window: column amplitudes in [10 h^2, r0 / 2].
    """
    a = P.a_plus if side == "plus" else P.a_minus
    amp = column_amplitude(D, u, a)
    sel = D.s > 0 if side == "plus" else D.s < 0
    lo = 10 * D.h ** 2 if lo is None else lo
    hi = P.r0 / 2 if hi is None else hi
    fit = fit_decay_profile(np.abs(D.s[sel]), amp[sel], lo, hi, side)
    info = min_eig_hess(P, a)
    fit.k0_linear = None if info.degenerate else info.k0_candidate
    return fit


def contraction_rate(seq: TjSequence, L: float) -> list:
    """Per-unit-length decay rates -log(t_{j+1} / t_j) / L of the bound on rho^2."""
    return [-math.log(b / a) / L for a, b in zip(seq.t, seq.t[1:]) if a > 0 and b > 0]


def contraction_consistent(seq: TjSequence, L: float, k0: float,
                           band: float = 0.2) -> bool:
    """The t_j bound on rho^2 must not decay faster than the fitted 2 k0."""
    rates = contraction_rate(seq, L)
    return bool(rates) and max(rates) <= (1 + band) * 2 * k0
