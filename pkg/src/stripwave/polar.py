"""Polar form u = a + rho nu, radial truncations and the cut-off replacement.

Subsets of cells are boolean arrays over the active cells of a domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .energy import as_field, energy
from .geometry import DiscreteDomain
from .potential import Potential


class CutoffPreconditionError(ValueError):
    """The field leaves the r-ball on the inner boundary layer of A."""


@dataclass
class PolarField:
    rho: np.ndarray          # (n,)
    nu: np.ndarray           # (n, m); NaN rows where rho == 0
    a: np.ndarray

    @property
    def positive(self) -> np.ndarray:
        return self.rho > 0

    def recompose(self) -> np.ndarray:
        out = np.tile(self.a, (self.rho.size, 1))
        pos = self.positive
        out[pos] = self.a + self.rho[pos, None] * self.nu[pos]
        return out


def polar_decompose(u, a) -> PolarField:
    u = as_field(u)
    a = np.atleast_1d(np.asarray(a, dtype=float))
    v = u - a
    rho = np.linalg.norm(v, axis=1)
    nu = np.full_like(v, np.nan)
    pos = rho > 0
    nu[pos] = v[pos] / rho[pos, None]
    return PolarField(rho=rho, nu=nu, a=a)


@dataclass(frozen=True)
class PolarIdentity:
    lhs: float
    rhs: float
    radial: float
    angular: float
    angular_product: float   # same sum with rho_A rho_B in place of rbar^2

    @property
    def gap(self) -> float:
        return self.lhs - self.rhs

    @property
    def product_gap(self) -> float:
        """lhs minus the per-face exact form; zero up to rounding."""
        return self.lhs - self.radial - self.angular_product


def polar_energy_identity_check(D: DiscreteDomain, u, a) -> PolarIdentity:
    """Compare sum |grad u|^2 with sum |grad rho|^2 + sum rho^2 |grad nu|^2.

    The angular term on a face uses the arithmetic mean of rho times
    |nu_A - nu_B|^2 and is zero on faces touching a cell with rho = 0.
    Sums are over faces, scaled by h^(n-2) (the integral of the squared
    gradient). With rho_A rho_B in place of the squared mean the identity
    holds face by face: |u_A - u_B|^2 = (rho_A - rho_B)^2 + rho_A rho_B |nu_A - nu_B|^2.
    """
    u = as_field(u)
    pf = polar_decompose(u, a)
    A, B = D.faces[:, 0], D.faces[:, 1]
    w = D.face_weight
    lhs = w * math.fsum(np.sum((u[A] - u[B]) ** 2, axis=1).tolist())
    radial = w * math.fsum(((pf.rho[A] - pf.rho[B]) ** 2).tolist())
    both = pf.positive[A] & pf.positive[B]
    rbar = 0.5 * (pf.rho[A] + pf.rho[B])
    dnu = np.zeros(A.size)
    dnu[both] = np.sum((pf.nu[A[both]] - pf.nu[B[both]]) ** 2, axis=1)
    angular = w * math.fsum((rbar ** 2 * dnu).tolist())
    product = w * math.fsum((pf.rho[A] * pf.rho[B] * dnu).tolist())
    return PolarIdentity(lhs=lhs, rhs=radial + angular, radial=radial,
                         angular=angular, angular_product=product)


def truncation_factor(rho, r: float):
    """The Lipschitz factor (s + r - |s - r|) / (2s) for s > 0, and 1 for s <= 0."""
    rho = np.asarray(rho, dtype=float)
    safe = np.where(rho > 0, rho, 1.0)
    return np.where(rho > 0, (rho + r - np.abs(rho - r)) / (2 * safe), 1.0)


def _settle_in_ball(out: np.ndarray, idx: np.ndarray, a: np.ndarray,
                    r: float) -> None:
    """Shrink rows ``idx`` of ``out`` until |out - a| <= r holds in floating point.

    Scaling by r / rho can land outside the ball after adding back ``a``,
    whose rounding is relative to |a| rather than r; each pass moves the
    offending rows inward by a margin of that size, doubled every pass.
    """
    ulp = np.finfo(float).eps * (1.0 + float(np.max(np.abs(a), initial=0.0)) / r)
    for p in range(16):
        v = out[idx] - a
        n = np.linalg.norm(v, axis=1)
        bad = n > r
        if not bad.any():
            return
        k = idx[bad]
        out[k] = a + v[bad] * (r / n[bad] * (1 - 2 ** p * ulp))[:, None]


def radial_truncate(u, a, r: float) -> np.ndarray:
    """a + min(rho, r) nu on {rho > 0}, a on {rho = 0}."""
    if r < 0:
        raise ValueError("r must be nonnegative")
    u = as_field(u)
    a = np.atleast_1d(np.asarray(a, dtype=float))
    rho = np.linalg.norm(u - a, axis=1)
    out = u.copy()
    big = rho > r
    out[big] = a + (r / rho[big])[:, None] * (u[big] - a)
    _settle_in_ball(out, np.nonzero(big)[0], a, r)
    return out


def alpha(tau, r: float):
    tau = np.asarray(tau, dtype=float)
    return np.clip((2 * r - tau) / r, 0.0, 1.0)


def cutoff_alpha(u, a, r: float) -> np.ndarray:
    """a + min(rho, r) alpha(rho) nu; cells with rho >= 2r go to a."""
    if r <= 0:
        raise ValueError("r must be positive")
    u = as_field(u)
    a = np.atleast_1d(np.asarray(a, dtype=float))
    rho = np.linalg.norm(u - a, axis=1)
    out = u.copy()
    big = rho > r
    new_rho = np.minimum(rho[big], r) * alpha(rho[big], r)
    out[big] = a + (new_rho / rho[big])[:, None] * (u[big] - a)
    _settle_in_ball(out, np.nonzero(big)[0], a, r)
    return out


@dataclass
class CutoffResult:
    field: np.ndarray
    step: int                # 1: radial truncation, 2: alpha cut-off
    changed: bool            # some cell of A had rho > r
    max_rho_before: float
    max_rho_after: float


def cutoff_replace(D: DiscreteDomain, u, A: np.ndarray, a, r: float,
                   P: Optional[Potential] = None) -> CutoffResult:
    """Replace u on A so that |u - a| <= r there, leaving the rest untouched.

    Step 1 (max_A rho <= 2r) truncates radially at r; Step 2 uses the alpha
    cut-off. ``P`` is only used to validate 2r <= r0.
    """
    u = as_field(u)
    A = np.asarray(A, dtype=bool)
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if P is not None and 2 * r > P.r0 + 1e-15:
        raise CutoffPreconditionError(f"2r = {2 * r} exceeds r0 = {P.r0}")
    rho = np.linalg.norm(u - a, axis=1)
    layer = D.boundary_layer(A)
    if layer.any() and rho[layer].max() > r:
        k = np.nonzero(layer & (rho > r))[0][0]
        raise CutoffPreconditionError(
            f"|u - a| = {rho[k]:.6g} > r = {r} on the boundary layer of A "
            f"(cell {k})")
    rho_A = rho[A]
    max_before = float(rho_A.max()) if rho_A.size else 0.0
    step = 1 if max_before <= 2 * r else 2
    out = u.copy()
    if step == 1:
        out[A] = radial_truncate(u[A], a, r)
    else:
        out[A] = cutoff_alpha(u[A], a, r)
    max_after = float(np.linalg.norm(out[A] - a, axis=1).max()) if A.any() else 0.0
    return CutoffResult(field=out, step=step, changed=bool(max_before > r),
                        max_rho_before=max_before, max_rho_after=max_after)


@dataclass
class MaxPrincipleReport:
    sup: float
    r: float
    tol: float
    converged: bool
    energy_before: float
    energy_after: float

    @property
    def passed(self) -> bool:
        return self.sup <= self.r + self.tol


def max_principle_test(D: DiscreteDomain, P: Potential, A: np.ndarray,
                       boundary_data: np.ndarray, a, r: float,
                       tol: float, rng: np.random.Generator,
                       opts=None, start_radius: Optional[float] = None
                       ) -> MaxPrincipleReport:
    """Minimize J_A with Dirichlet data outside A from a random start inside.

    ``boundary_data`` is a full field; its values outside A are the Dirichlet
    data and must lie in the closed r-ball about ``a``.
    """
    from .minimizer import SolverOptions, dirichlet_minimize_subdomain

    a = np.atleast_1d(np.asarray(a, dtype=float))
    A = np.asarray(A, dtype=bool)
    if 2 * r > P.r0 + 1e-15:
        raise ValueError(f"2r = {2 * r} exceeds r0 = {P.r0}")
    data = as_field(boundary_data, P.m)
    if np.linalg.norm(data[~A] - a, axis=1).max(initial=0.0) > r + 1e-12:
        raise ValueError("boundary data leave the r-ball")
    radius = P.r0 if start_radius is None else start_radius
    u0 = data.copy()
    k = int(A.sum())
    v = rng.standard_normal((k, P.m))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    u0[A] = a + radius * rng.uniform(0, 1, (k, 1)) ** (1 / P.m) * v
    opts = opts or SolverOptions(tol=1e-8, max_iter=20000)
    before = energy(D, u0, P).total
    u, rep = dirichlet_minimize_subdomain(D, u0, A, P, opts)
    sup = float(np.linalg.norm(u[A] - a, axis=1).max())
    return MaxPrincipleReport(sup=sup, r=r, tol=tol, converged=rep.converged,
                              energy_before=before,
                              energy_after=energy(D, u, P).total)
