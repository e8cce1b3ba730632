"""Finite-volume energy, its gradient and the Euler-Lagrange residual.

A field is an array of shape ``(n_cells, m)`` over the active cells of a
:class:`~stripwave.geometry.DiscreteDomain`. The discrete energy is

    J(u) = 1/2 sum_faces |u_A - u_B|^2 h^(n-2) + sum_cells W(u_c) h^n

Faces to inactive cells are simply absent, which is the homogeneous
Neumann condition. The residual is exactly ``-grad J / h^n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import DiscreteDomain
from .potential import Potential


@dataclass(frozen=True)
class EnergyBreakdown:
    dirichlet: float
    potential: float

    @property
    def total(self) -> float:
        return self.dirichlet + self.potential

    def to_dict(self) -> dict:
        return {"dirichlet": self.dirichlet, "potential": self.potential,
                "total": self.total}


def as_field(u, m: Optional[int] = None) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    if m is not None and u.shape[1] != m:
        raise ValueError(f"field has {u.shape[1]} components, expected {m}")
    return u


def constant_field(D: DiscreteDomain, a) -> np.ndarray:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    return np.tile(a, (D.n_cells, 1))


def face_differences(D: DiscreteDomain, u: np.ndarray) -> np.ndarray:
    return np.take(u, D.face_a, axis=0) - np.take(u, D.face_b, axis=0)


def _window_masks(D: DiscreteDomain, window):
    if window is None:
        return None, None
    cells = D.window_cells(*window)
    # a face between columns j and j+1 belongs to the window holding column j
    return cells, cells[D.faces[:, 0]]


def energy(D: DiscreteDomain, u, P: Potential,
           window: Optional[tuple[float, float]] = None) -> EnergyBreakdown:
    """Energy with correctly rounded summation (math.fsum), optionally on a window."""
    u = as_field(u, P.m)
    cells, faces = _window_masks(D, window)
    d2 = np.sum(face_differences(D, u) ** 2, axis=1)
    w = P.value(u)
    if cells is not None:
        d2 = d2[faces]
        w = w[cells]
    dirichlet = 0.5 * D.face_weight * math.fsum(d2.tolist())
    pot = D.cell_volume * math.fsum(w.tolist())
    return EnergyBreakdown(dirichlet=dirichlet, potential=pot)


def energy_fast(D: DiscreteDomain, u: np.ndarray, P: Potential) -> float:
    """Total energy with numpy pairwise summation; used inside solver loops."""
    d = face_differences(D, u)
    return float(0.5 * D.face_weight * np.sum(d * d)
                 + D.cell_volume * np.sum(P.value(u)))


def laplacian(D: DiscreteDomain, u: np.ndarray) -> np.ndarray:
    """sum over active neighbors of (u_nbr - u_cell) / h^2."""
    u = as_field(u)
    d = face_differences(D, u)
    a, b = D.face_a, D.face_b
    out = np.empty_like(u)
    for k in range(u.shape[1]):
        out[:, k] = (np.bincount(b, d[:, k], minlength=D.n_cells)
                     - np.bincount(a, d[:, k], minlength=D.n_cells))
    return out / D.h ** 2


def residual(D: DiscreteDomain, u, P: Potential) -> np.ndarray:
    """Delta_h u - W_u(u) per active cell, zero flux through missing faces."""
    u = as_field(u, P.m)
    return laplacian(D, u) - P.grad(u)


def energy_gradient(D: DiscreteDomain, u, P: Potential) -> np.ndarray:
    """Euclidean gradient of J with respect to the cell values."""
    return -D.cell_volume * residual(D, u, P)


def slab_energy(D: DiscreteDomain, u, P: Potential, s_bar: float,
                delta: float) -> float:
    """Energy of the cells with center in (s_bar - delta, s_bar + delta)."""
    lo, hi = s_bar - delta, s_bar + delta
    if lo < -D.T - 1e-12 or hi > D.T + 1e-12:
        raise ValueError(f"slab ({lo}, {hi}) leaves the domain [-{D.T}, {D.T}]")
    return energy(D, u, P, window=(lo, hi)).total


def truncate_sup(u, M: float) -> np.ndarray:
    """Radial projection onto the ball |u| <= M, cell by cell."""
    if M <= 0:
        raise ValueError("M must be positive")
    u = as_field(u)
    norm = np.sqrt(np.einsum("ij,ij->i", u, u))
    if not (norm > M).any():
        return u.copy()
    scale = np.where(norm > M, M / np.where(norm > 0, norm, 1.0), 1.0)
    return u * scale[:, None]
