"""Periodic strip domains and their masked cell-centered discretization.

Cells are ordered column-major: all active cells of column 0 (smallest s)
first, bottom to top, then column 1, and so on. Faces are stored as index
pairs ``(A, B)`` with ``A < B``, so for s-faces ``A`` is the left cell and for
y-faces ``A`` is the lower cell.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import ndimage


class GeometryError(ValueError):
    pass


@dataclass
class StripSpec:
    """Periodic strip {g_-(s) < y < g_+(s)} with period L and |y| <= R."""

    L: float = 1.0
    R: float = 1.0
    kind: str = "flat"
    lower: float = 0.0
    upper: float = 1.0
    amplitude: float = 0.0
    phase: float = 0.0
    table_s: Optional[list] = None
    table_lower: Optional[list] = None
    table_upper: Optional[list] = None

    @property
    def flat(self) -> bool:
        return self.kind == "flat"

    def g_minus(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "table":
            return np.interp(s, self.table_s, self.table_lower, period=self.L)
        return np.full_like(s, self.lower)

    def g_plus(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "flat":
            return np.full_like(s, self.upper)
        if self.kind == "sinusoidal":
            return self.upper + self.amplitude * np.sin(2 * np.pi * s / self.L
                                                        + self.phase)
        if self.kind == "table":
            return np.interp(s, self.table_s, self.table_upper, period=self.L)
        raise GeometryError(f"unknown strip kind {self.kind!r}")

    def check(self, n_samples: int = 997) -> dict:
        """Sampled checks of periodicity, boundedness and positive width."""
        s = np.linspace(-self.L, self.L, n_samples)
        lo, hi = self.g_minus(s), self.g_plus(s)
        per = max(float(np.max(np.abs(self.g_minus(s + self.L) - lo))),
                  float(np.max(np.abs(self.g_plus(s + self.L) - hi))))
        bound = float(max(np.max(np.abs(lo)), np.max(np.abs(hi))))
        width = float(np.min(hi - lo))
        return {"periodicity_defect": per, "sup_abs_boundary": bound,
                "min_width": width,
                "pass": per < 1e-9 and bound <= self.R + 1e-12 and width > 0}


def flat_cylinder(L: float = 1.0, height: float = 1.0) -> StripSpec:
    return StripSpec(L=L, R=max(1.0, height), kind="flat", lower=0.0, upper=height)


def sinusoidal_strip(L: float = 1.0, amplitude: float = 0.2,
                     phase: float = 0.0) -> StripSpec:
    return StripSpec(L=L, R=1.0 + abs(amplitude), kind="sinusoidal", lower=0.0,
                     upper=1.0, amplitude=amplitude, phase=phase)


PRESETS: dict[str, Callable[[], StripSpec]] = {
    "flat": flat_cylinder,
    "sinusoidal": sinusoidal_strip,
}


def snap_h(L: float, h: float) -> tuple[float, bool]:
    """Snap h to L / round(L / h); returns (h, changed)."""
    n = max(1, int(round(L / h)))
    hs = L / n
    return hs, abs(hs - h) > 1e-9 * L


@dataclass
class DiscreteDomain:
    h: float
    T: float
    L: float
    dim: int                  # 2 for strips, 1 for line domains
    s: np.ndarray             # column centers, shape (nx,)
    y: np.ndarray             # row centers, shape (ny,)
    mask: np.ndarray          # (nx, ny) bool
    cell_i: np.ndarray        # column index per active cell
    cell_j: np.ndarray        # row index per active cell
    index: np.ndarray         # (nx, ny) -> active cell id or -1
    faces: np.ndarray         # (nf, 2) int
    face_axis: np.ndarray     # 0 for s-faces, 1 for y-faces
    col_start: np.ndarray     # cells of column i are col_start[i]:col_start[i+1]
    spec: Optional[StripSpec] = field(default=None, repr=False)

    def __post_init__(self):
        self.face_a = np.ascontiguousarray(self.faces[:, 0])
        self.face_b = np.ascontiguousarray(self.faces[:, 1])

    @property
    def n_cells(self) -> int:
        return self.cell_i.size

    @property
    def nx(self) -> int:
        return self.s.size

    @property
    def ny(self) -> int:
        return self.y.size

    @property
    def period_shift_cells(self) -> int:
        return int(round(self.L / self.h))

    @property
    def cell_s(self) -> np.ndarray:
        return self.s[self.cell_i]

    @property
    def cell_y(self) -> np.ndarray:
        return self.y[self.cell_j]

    @property
    def cell_volume(self) -> float:
        return self.h ** self.dim

    @property
    def face_weight(self) -> float:
        return self.h ** (self.dim - 2)

    def cross_section(self, i: int) -> np.ndarray:
        return np.arange(self.col_start[i], self.col_start[i + 1])

    def column_index(self, s: float) -> int:
        """Column whose cell contains s; a face position goes to the right."""
        return int(np.clip(np.floor((s + self.T) / self.h + 1e-9), 0, self.nx - 1))

    def columns_in(self, lo: float, hi: float) -> np.ndarray:
        """Columns with center in the open interval (lo, hi)."""
        return np.nonzero((self.s > lo) & (self.s < hi))[0]

    def window_cells(self, lo: float, hi: float) -> np.ndarray:
        cs = self.cell_s
        return (cs > lo) & (cs < hi)

    def neighbor_count(self) -> np.ndarray:
        return (np.bincount(self.faces[:, 0], minlength=self.n_cells)
                + np.bincount(self.faces[:, 1], minlength=self.n_cells))

    def boundary_layer(self, A: np.ndarray) -> np.ndarray:
        """Cells of A having a face to an active cell outside A."""
        a, b = self.faces[:, 0], self.faces[:, 1]
        cross = A[a] != A[b]
        out = np.zeros(self.n_cells, dtype=bool)
        out[a[cross & A[a]]] = True
        out[b[cross & A[b]]] = True
        return out

    def is_connected(self, A: np.ndarray) -> bool:
        """Edge-connectedness of a cell subset."""
        grid = np.zeros(self.mask.shape, dtype=bool)
        grid[self.cell_i[A], self.cell_j[A]] = True
        _, n = ndimage.label(grid)
        return n == 1

    def mask_csv(self) -> str:
        rows = [",".join(str(int(v)) for v in self.mask[:, j])
                for j in range(self.ny - 1, -1, -1)]
        return "\n".join(rows) + "\n"


def _assemble(h, T, L, dim, s, y, mask, spec=None) -> DiscreteDomain:
    if not mask.any():
        raise GeometryError("empty mask")
    ci, cj = np.nonzero(mask)          # row-major over (i, j): column-major cells
    index = -np.ones(mask.shape, dtype=np.int64)
    index[ci, cj] = np.arange(ci.size)
    faces, axes = [], []
    both = mask[:-1, :] & mask[1:, :]
    fi, fj = np.nonzero(both)
    faces.append(np.stack([index[fi, fj], index[fi + 1, fj]], axis=1))
    axes.append(np.zeros(fi.size, dtype=np.int8))
    both = mask[:, :-1] & mask[:, 1:]
    fi, fj = np.nonzero(both)
    faces.append(np.stack([index[fi, fj], index[fi, fj + 1]], axis=1))
    axes.append(np.ones(fi.size, dtype=np.int8))
    faces = np.concatenate(faces).astype(np.int64)
    axes = np.concatenate(axes)
    order = np.lexsort((faces[:, 1], faces[:, 0]))
    faces, axes = faces[order], axes[order]
    counts = np.bincount(ci, minlength=mask.shape[0])
    col_start = np.concatenate([[0], np.cumsum(counts)])
    D = DiscreteDomain(h=h, T=T, L=L, dim=dim, s=s, y=y, mask=mask, cell_i=ci,
                       cell_j=cj, index=index, faces=faces, face_axis=axes,
                       col_start=col_start, spec=spec)
    if ci.size > 1:
        isolated = D.neighbor_count() == 0
        if isolated.any():
            k = int(np.argmax(isolated))
            raise GeometryError(f"isolated active cell at (i={ci[k]}, j={cj[k]})")
    return D


def build_mask(spec: StripSpec, h: float, T: float) -> DiscreteDomain:
    """Cell (i, j) is active iff g_-(s_i) < y_j < g_+(s_i) and |s_i| < T."""
    h, _ = snap_h(spec.L, h)
    ratio = T / spec.L
    if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
        raise GeometryError(f"T={T} must be a positive integer multiple of L={spec.L}")
    nx = int(round(2 * T / h))
    ny = int(np.ceil(2 * spec.R / h - 1e-9))
    s = -T + (np.arange(nx) + 0.5) * h
    y = -spec.R + (np.arange(ny) + 0.5) * h
    lo = spec.g_minus(s)[:, None]
    hi = spec.g_plus(s)[:, None]
    mask = (lo < y[None, :]) & (y[None, :] < hi) & (np.abs(s)[:, None] < T)
    empty = ~mask.any(axis=1)
    if empty.any():
        raise GeometryError(f"empty section at s={s[np.argmax(empty)]:.6g}")
    return _assemble(h, float(T), float(spec.L), 2, s, y, mask, spec)


def build_line(T: float, h: float, L: float = 1.0) -> DiscreteDomain:
    """One-dimensional domain (-T, T) with cell-centered nodes."""
    h, _ = snap_h(L, h)
    nx = int(round(2 * T / h))
    s = -T + (np.arange(nx) + 0.5) * h
    mask = np.ones((nx, 1), dtype=bool)
    return _assemble(h, float(T), float(L), 1, s, np.zeros(1), mask)


def domain_from_mask(mask: np.ndarray, h: float, L: float = 1.0,
                     T: Optional[float] = None) -> DiscreteDomain:
    """Domain from an explicit (nx, ny) mask; used for hand-built geometries."""
    mask = np.asarray(mask, dtype=bool)
    nx, ny = mask.shape
    T = nx * h / 2 if T is None else T
    s = -T + (np.arange(nx) + 0.5) * h
    y = (np.arange(ny) + 0.5) * h
    return _assemble(h, float(T), float(L), 2, s, y, mask)


def check_connectedness(D: DiscreteDomain, i: int) -> bool:
    """True iff the active cells of column i form one edge-connected run."""
    col = D.mask[i]
    if not col.any():
        raise GeometryError(f"column {i} is empty")
    _, n = ndimage.label(col)
    return n == 1


def mask_is_periodic(D: DiscreteDomain) -> bool:
    p = D.period_shift_cells
    return bool(np.array_equal(D.mask[:-p], D.mask[p:])) if p < D.nx else True


def translate_field_by_period(D: DiscreteDomain, u: np.ndarray, direction: int,
                              a_minus, a_plus) -> np.ndarray:
    """Shift u by one period: direction +1 gives v(s) = u(s - L), -1 gives u(s + L).

    Cells whose source lies outside the truncation (or is inactive) are
    filled with a_- on the s < 0 side and a_+ on the s > 0 side.
    """
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    u = np.asarray(u, dtype=float)
    p = D.period_shift_cells
    src_i = D.cell_i - direction * p
    ok = (src_i >= 0) & (src_i < D.nx)
    src = np.full(D.n_cells, -1)
    src[ok] = D.index[src_i[ok], D.cell_j[ok]]
    out = np.where((D.cell_s < 0)[:, None], np.asarray(a_minus, dtype=float),
                   np.asarray(a_plus, dtype=float))
    have = src >= 0
    out[have] = u[src[have]]
    return out
