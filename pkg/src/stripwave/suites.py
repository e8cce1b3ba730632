"""Randomized trial suites for the cut-off replacement and the maximum principle.

Each trial draws from its own generator seeded by ``(seed, branch, index)``,
so results do not depend on the number of workers.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .energy import energy
from .geometry import DiscreteDomain, build_mask, flat_cylinder
from .minimizer import SolverOptions
from .polar import cutoff_replace, max_principle_test
from .potential import Potential, ProductWell

BRANCHES = {"step1": 1, "step2": 2, "identity": 3, "maxprinciple": 4}


def trial_domain(h: float, L: float = 1.0, height: float = 1.0) -> DiscreteDomain:
    """A short flat cylinder (-L, L) x (0, height)."""
    return build_mask(flat_cylinder(L, height), h, T=L)


def disk_subset(D: DiscreteDomain, center=(0.0, 0.5), radius: float = 0.35) -> np.ndarray:
    A = (D.cell_s - center[0]) ** 2 + (D.cell_y - center[1]) ** 2 < radius ** 2
    if not D.is_connected(A):
        raise ValueError("disk subset is not edge-connected")
    return A


def _random_directions(rng, n: int, m: int) -> np.ndarray:
    v = rng.standard_normal((n, m))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def random_cutoff_field(D: DiscreteDomain, A: np.ndarray, a, r: float,
                        peak: Optional[float], rng: np.random.Generator) -> np.ndarray:
    """u = a + rho nu with rho < r on the boundary layer of A and outside A.

    With ``peak`` set, a Gaussian bump of height ``peak`` is centered on a
    random cell of A off its boundary layer.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    n, m = D.n_cells, a.size
    rho = 0.95 * r * rng.uniform(0.0, 1.0, n)
    if peak is not None:
        inner = np.nonzero(A & ~D.boundary_layer(A))[0]
        c = inner[rng.integers(inner.size)]
        width = rng.uniform(0.05, 0.15)
        d2 = (D.cell_s - D.cell_s[c]) ** 2 + (D.cell_y - D.cell_y[c]) ** 2
        bump = peak * np.exp(-d2 / width ** 2)
        rho = np.maximum(rho, np.where(A, bump, 0.0))
        layer = D.boundary_layer(A)
        rho[layer] = np.minimum(rho[layer], 0.99 * r)
    return a + rho[:, None] * _random_directions(rng, n, m)


@dataclass
class CutoffTrial:
    branch: str
    index: int
    step: int
    changed: bool
    energy_before: float
    energy_after: float
    max_rho_after: float
    identity: bool

    @property
    def decrease(self) -> float:
        return self.energy_before - self.energy_after


def _cutoff_trial(args) -> CutoffTrial:
    branch, k, seed, h, r, P = args
    rng = np.random.default_rng([seed, BRANCHES[branch], k])
    D = trial_domain(h)
    A = disk_subset(D)
    a = P.a_plus
    peak = {"step1": rng.uniform(1.05 * r, 2.0 * r),
            "step2": rng.uniform(2.05 * r, 6.0 * r),
            "identity": None}[branch]
    u = random_cutoff_field(D, A, a, r, peak, rng)
    res = cutoff_replace(D, u, A, a, r, P)
    return CutoffTrial(branch=branch, index=k, step=res.step, changed=res.changed,
                       energy_before=energy(D, u, P).total,
                       energy_after=energy(D, res.field, P).total,
                       max_rho_after=res.max_rho_after,
                       identity=bool(np.array_equal(res.field, u)))


@dataclass
class CutoffSuiteReport:
    trials: list = field(repr=False)
    r: float = 0.0
    h: float = 0.0
    wall_time: float = 0.0

    def by_branch(self, branch: str) -> list:
        return [t for t in self.trials if t.branch == branch]

    def branch_ok(self, branch: str) -> bool:
        ts = self.by_branch(branch)
        if branch == "identity":
            return all(t.identity and not t.changed
                       and t.energy_after == t.energy_before for t in ts)
        want = BRANCHES[branch]
        return all(t.step == want and t.changed and t.decrease > 0
                   and t.max_rho_after <= self.r for t in ts)

    @property
    def passed(self) -> bool:
        return all(self.branch_ok(b) for b in ("step1", "step2", "identity"))

    def to_dict(self) -> dict:
        out = {"r": self.r, "h": self.h, "passed": self.passed,
               "wall_time_s": self.wall_time, "branches": {}}
        for b in ("step1", "step2", "identity"):
            ts = self.by_branch(b)
            dec = [t.decrease for t in ts]
            out["branches"][b] = {
                "trials": len(ts),
                "passed": self.branch_ok(b),
                "min_energy_decrease": min(dec) if dec else None,
                "max_rho_after": max((t.max_rho_after for t in ts), default=None),
                "step_counts": {s: sum(t.step == s for t in ts) for s in (1, 2)},
            }
        return out


def _run(fn, jobs, workers: int):
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def cutoff_suite(P: Optional[Potential] = None, trials: int = 200,
                 identity_trials: int = 50, h: float = 1 / 16, r: float = 0.2,
                 seed: int = 0, workers: int = 1) -> CutoffSuiteReport:
    P = P or ProductWell()
    if 2 * r > P.r0 + 1e-15:
        raise ValueError(f"2r = {2 * r} exceeds r0 = {P.r0}")
    t0 = time.perf_counter()
    jobs = ([("step1", k, seed, h, r, P) for k in range(trials)]
            + [("step2", k, seed, h, r, P) for k in range(trials)]
            + [("identity", k, seed, h, r, P) for k in range(identity_trials)])
    res = _run(_cutoff_trial, jobs, workers)
    return CutoffSuiteReport(trials=res, r=r, h=h,
                             wall_time=time.perf_counter() - t0)


@dataclass
class MaxPrincipleSuiteReport:
    h: float
    r: float
    tol: float
    sups: list
    converged: list
    wall_time: float

    @property
    def failures(self) -> int:
        return sum(s > self.r + self.tol for s in self.sups)

    @property
    def passed(self) -> bool:
        return self.failures == 0 and all(self.converged)

    def to_dict(self) -> dict:
        return {"h": self.h, "r": self.r, "tol": self.tol,
                "trials": len(self.sups), "failures": self.failures,
                "max_sup": max(self.sups), "all_converged": all(self.converged),
                "passed": self.passed, "wall_time_s": self.wall_time}


def _mp_trial(args):
    k, seed, h, r, P = args
    rng = np.random.default_rng([seed, BRANCHES["maxprinciple"], k,
                                 int(round(1 / h))])
    D = trial_domain(h)
    A = disk_subset(D)
    a = P.a_plus
    data = random_cutoff_field(D, A, a, r, None, rng)
    rep = max_principle_test(D, P, A, data, a, r, 2 * h, rng,
                             opts=SolverOptions(tol=1e-8, max_iter=50000))
    return rep.sup, rep.converged


def max_principle_suite(P: Optional[Potential] = None, trials: int = 50,
                        h: float = 1 / 16, r: float = 0.2, seed: int = 0,
                        workers: int = 1) -> MaxPrincipleSuiteReport:
    """Dirichlet minimizations on a disk with boundary data in the r-ball."""
    P = P or ProductWell()
    t0 = time.perf_counter()
    res = _run(_mp_trial, [(k, seed, h, r, P) for k in range(trials)], workers)
    return MaxPrincipleSuiteReport(h=h, r=r, tol=2 * h,
                                   sups=[s for s, _ in res],
                                   converged=[c for _, c in res],
                                   wall_time=time.perf_counter() - t0)
