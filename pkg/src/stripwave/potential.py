"""Double-well potentials W: R^m -> R and the radial bound functions g, f.

All evaluation methods are vectorized over leading axes: ``u`` has shape
``(..., m)`` and ``value`` returns shape ``(...)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class DegenerateMinimumError(ValueError):
    """Raised when a construction needs a nondegenerate minimum and gets none."""


class HypothesisViolation(ValueError):
    """Raised when a sampled hypothesis on W fails where it is a precondition."""


class Potential:
    """Base class. Subclasses implement ``value``, ``grad`` and ``hess``."""

    name = "potential"

    def __init__(self, a_minus, a_plus, r0: float, M: float):
        self.a_minus = np.atleast_1d(np.asarray(a_minus, dtype=float))
        self.a_plus = np.atleast_1d(np.asarray(a_plus, dtype=float))
        if self.a_minus.shape != self.a_plus.shape:
            raise ValueError("a_minus and a_plus must have the same dimension")
        if np.array_equal(self.a_minus, self.a_plus):
            raise ValueError("a_minus and a_plus must be distinct")
        self.m = self.a_minus.size
        self.r0 = float(r0)
        self.M = float(M)

    @property
    def minima(self) -> tuple[np.ndarray, np.ndarray]:
        return self.a_minus, self.a_plus

    def value(self, u) -> np.ndarray:
        raise NotImplementedError

    def grad(self, u) -> np.ndarray:
        raise NotImplementedError

    def hess(self, u) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, u):
        return self.value(u)

    def params(self) -> dict:
        return {
            "family": self.name,
            "a_minus": self.a_minus.tolist(),
            "a_plus": self.a_plus.tolist(),
            "r0": self.r0,
            "M": self.M,
        }

    def __repr__(self):
        return (f"{type(self).__name__}(a_minus={self.a_minus.tolist()}, "
                f"a_plus={self.a_plus.tolist()}, r0={self.r0}, M={self.M})")


class ScalarQuartic(Potential):
    """W(u) = (1 - u^2)^2 / 4 with minima at -1 and +1 (m = 1)."""

    name = "scalar_quartic"

    def __init__(self, r0: float = 0.5, M: float = 2.0):
        super().__init__([-1.0], [1.0], r0, M)

    def value(self, u):
        u = np.asarray(u, dtype=float)[..., 0]
        w = 1.0 - u * u
        return 0.25 * w * w

    def grad(self, u):
        u = np.asarray(u, dtype=float)
        return u * (u * u - 1.0)

    def hess(self, u):
        u = np.asarray(u, dtype=float)
        return (3.0 * u ** 2 - 1.0)[..., None]


def _sqnorm(v):
    return np.einsum("...i,...i->...", v, v)


class _TwoWell(Potential):
    """|u - a_-|^(2p) |u - a_+|^(2q) with p, q in {1, 2}."""

    p = 1
    q = 1

    def value(self, u):
        u = np.asarray(u, dtype=float)
        dm = _sqnorm(u - self.a_minus)
        dp = _sqnorm(u - self.a_plus)
        if self.p == 1 and self.q == 1:
            return dm * dp
        return dm ** self.p * dp ** self.q

    def grad(self, u):
        u = np.asarray(u, dtype=float)
        vm = u - self.a_minus
        vp = u - self.a_plus
        dm = _sqnorm(vm)[..., None]
        dp = _sqnorm(vp)[..., None]
        p, q = self.p, self.q
        if p == 1 and q == 1:
            return 2.0 * (dp * vm + dm * vp)
        return (2 * p * dm ** (p - 1) * dp ** q * vm
                + 2 * q * dm ** p * dp ** (q - 1) * vp)

    def hess(self, u):
        u = np.asarray(u, dtype=float)
        vm = u - self.a_minus
        vp = u - self.a_plus
        dm = np.sum(vm ** 2, axis=-1)[..., None, None]
        dp = np.sum(vp ** 2, axis=-1)[..., None, None]
        p, q = self.p, self.q
        eye = np.eye(self.m)
        mm = vm[..., :, None] * vm[..., None, :]
        pp = vp[..., :, None] * vp[..., None, :]
        mp = vm[..., :, None] * vp[..., None, :]
        pm = np.swapaxes(mp, -1, -2)

        def pw(x, k):
            # x**k with the convention 0**0 = 1 and 0**(-1) never used
            return x ** k if k >= 0 else np.zeros_like(x)

        H = 2 * p * pw(dm, p - 1) * dp ** q * eye
        H = H + 4 * p * (p - 1) * pw(dm, p - 2) * dp ** q * mm
        H = H + 4 * p * q * pw(dm, p - 1) * pw(dp, q - 1) * (mp + pm)
        H = H + 2 * q * dm ** p * pw(dp, q - 1) * eye
        H = H + 4 * q * (q - 1) * dm ** p * pw(dp, q - 2) * pp
        return H


class ProductWell(_TwoWell):
    """W(u) = |u - a_-|^2 |u - a_+|^2."""

    name = "product_well"

    def __init__(self, a_minus=(-1.0, 0.0), a_plus=(1.0, 0.0),
                 r0: float = 0.5, M: float = 2.0):
        super().__init__(a_minus, a_plus, r0, M)


class DegenerateWell(_TwoWell):
    """W(u) = |u - a_-|^2 |u - a_+|^4; quartic contact at a_+."""

    name = "degenerate_well"
    q = 2

    def __init__(self, a_minus=(-1.0, 0.0), a_plus=(1.0, 0.0),
                 r0: float = 0.5, M: float = 2.0):
        super().__init__(a_minus, a_plus, r0, M)


class CustomPotential(Potential):
    """Potential from user-supplied callables acting on arrays of shape (..., m).

    ``hess`` may be omitted; it is then approximated by central differences
    of ``grad``.
    """

    name = "custom"

    def __init__(self, value: Callable, grad: Callable, a_minus, a_plus,
                 r0: float, M: float, hess: Optional[Callable] = None):
        super().__init__(a_minus, a_plus, r0, M)
        self._value = value
        self._grad = grad
        self._hess = hess

    def value(self, u):
        return np.asarray(self._value(np.asarray(u, dtype=float)), dtype=float)

    def grad(self, u):
        return np.asarray(self._grad(np.asarray(u, dtype=float)), dtype=float)

    def hess(self, u):
        if self._hess is not None:
            return np.asarray(self._hess(np.asarray(u, dtype=float)), dtype=float)
        return fd_hessian(self.grad, u)


FAMILIES = {
    "scalar_quartic": ScalarQuartic,
    "product_well": ProductWell,
    "degenerate_well": DegenerateWell,
}


def make_potential(family: str, **params) -> Potential:
    try:
        cls = FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown potential family {family!r}; "
                         f"expected one of {sorted(FAMILIES)}") from None
    return cls(**params)


# ---------------------------------------------------------------------------
# finite-difference helpers (oracles for grad/hess)

def fd_gradient(fun: Callable, u, eps: float = 1e-6) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    g = np.empty_like(u)
    for k in range(u.shape[-1]):
        e = np.zeros(u.shape[-1])
        e[k] = eps
        g[..., k] = (fun(u + e) - fun(u - e)) / (2 * eps)
    return g


def fd_hessian(grad: Callable, u, eps: float = 1e-6) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    m = u.shape[-1]
    H = np.empty(u.shape + (m,))
    for k in range(m):
        e = np.zeros(m)
        e[k] = eps
        H[..., :, k] = (grad(u + e) - grad(u - e)) / (2 * eps)
    return 0.5 * (H + np.swapaxes(H, -1, -2))


# ---------------------------------------------------------------------------
# nondegeneracy

@dataclass(frozen=True)
class HessianInfo:
    mu: float
    degenerate: bool

    @property
    def k0_candidate(self) -> float:
        return float(np.sqrt(max(self.mu, 0.0)))


def min_eig_hess(P: Potential, a, tol: float = 1e-8) -> HessianInfo:
    """Smallest eigenvalue of D^2 W(a); flagged degenerate when mu <= tol."""
    H = np.asarray(P.hess(np.asarray(a, dtype=float)), dtype=float)
    mu = float(np.linalg.eigvalsh(0.5 * (H + H.T))[0])
    return HessianInfo(mu=mu, degenerate=mu <= tol)


# ---------------------------------------------------------------------------
# sphere sampling

def sphere_directions(m: int) -> np.ndarray:
    """Deterministic direction set on S^{m-1}, shape (k, m)."""
    if m == 1:
        return np.array([[-1.0], [1.0]])
    if m == 2:
        th = 2 * np.pi * np.arange(720) / 720
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    if m == 3:
        n = 2048
        i = np.arange(n) + 0.5
        z = 1 - 2 * i / n
        phi = np.pi * (1 + 5 ** 0.5) * i
        rr = np.sqrt(1 - z * z)
        return np.stack([rr * np.cos(phi), rr * np.sin(phi), z], axis=1)
    rng = np.random.default_rng(12345)
    v = rng.standard_normal((4096, m))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# hypothesis checks

@dataclass
class HypothesisReport:
    h1_pass: bool
    h1_min_value: float        # min of W over samples away from the minima
    h1_minima_values: tuple    # (W(a_-), W(a_+))
    h2_pass: bool
    h2_min_slope: float        # min radial difference quotient on (0, r0]
    h3_pass: bool
    h3_min_margin: float       # min of W(su) - W(u), |u| = M, s in [1, s_max]

    @property
    def all_pass(self) -> bool:
        return self.h1_pass and self.h2_pass and self.h3_pass

    def to_dict(self) -> dict:
        return {
            "H1": {"pass": self.h1_pass, "min_value": self.h1_min_value,
                   "minima_values": list(self.h1_minima_values)},
            "H2": {"pass": self.h2_pass, "min_slope": self.h2_min_slope},
            "H3": {"pass": self.h3_pass, "min_margin": self.h3_min_margin},
            "all_pass": self.all_pass,
        }


def check_hypotheses(P: Potential, samples: int = 4000, s_max: float = 4.0,
                     seed: int = 0, atol: float = 1e-12) -> HypothesisReport:
    """Sample the bistability, radial monotonicity and growth hypotheses."""
    rng = np.random.default_rng(seed)
    m = P.m
    box = max(P.M, float(np.max(np.abs(np.concatenate(P.minima)))) + P.r0)

    # H1: zero at the minima, positive elsewhere (excluding tiny balls)
    wmin = (float(P.value(P.a_minus)), float(P.value(P.a_plus)))
    u = rng.uniform(-box, box, size=(samples, m))
    # include points on segments between and around the minima
    t = rng.uniform(-0.5, 1.5, size=(samples, 1))
    u = np.concatenate([u, P.a_minus + t * (P.a_plus - P.a_minus)])
    dist = np.minimum(np.linalg.norm(u - P.a_minus, axis=1),
                      np.linalg.norm(u - P.a_plus, axis=1))
    u = u[dist > 1e-6]
    h1_min = float(np.min(P.value(u)))
    h1_pass = abs(wmin[0]) <= atol and abs(wmin[1]) <= atol and h1_min > 0

    # H2: positive radial difference quotients on (0, r0]
    nus = sphere_directions(m)
    r = np.linspace(0.0, P.r0, 257)
    slopes = []
    for a in P.minima:
        pts = a + r[None, :, None] * nus[:, None, :]
        W = P.value(pts)
        slopes.append(np.diff(W, axis=1) / np.diff(r))
    h2_min = float(np.min(slopes))
    h2_pass = h2_min > 0

    # H3: W(su) >= W(u) on the sphere of radius M
    dirs = nus if m > 1 else np.array([[-1.0], [1.0]])
    s = np.linspace(1.0, s_max, 64)
    base = P.M * dirs
    Wb = P.value(base)
    Ws = P.value(s[:, None, None] * base[None, :, :])
    h3_min = float(np.min(Ws - Wb[None, :]))
    h3_pass = h3_min >= -atol * max(1.0, float(np.max(np.abs(Wb))))

    return HypothesisReport(h1_pass, h1_min, wmin, h2_pass, h2_min,
                            h3_pass, h3_min)


# ---------------------------------------------------------------------------
# radial bound functions g and f

@dataclass
class RadialBoundFn:
    """Tabulated g on [0, r0] and, once built, f on [0, r0^2].

    ``f`` is stored on the nodes ``t = r**2``; between nodes it is linear,
    below 0 it is 0 and above r0^2 it is constant (a nondecreasing
    extension). In linear mode ``f(t) = linear_c2 * t``.
    """

    r: np.ndarray
    g: np.ndarray
    f_nodes: Optional[np.ndarray] = None
    mode: Optional[str] = None
    linear_c2: Optional[float] = None
    blend: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def r0(self) -> float:
        return float(self.r[-1])

    @property
    def t_nodes(self) -> np.ndarray:
        return self.r ** 2

    def g_at(self, r):
        return np.interp(r, self.r, self.g)

    def f(self, t):
        t = np.asarray(t, dtype=float)
        if self.mode == "linear":
            return self.linear_c2 * np.maximum(t, 0.0)
        if self.f_nodes is None:
            raise ValueError("f has not been built; call build_f first")
        return np.interp(t, self.t_nodes, self.f_nodes,
                         left=0.0, right=self.f_nodes[-1])

    def f_prime(self, t):
        t = np.asarray(t, dtype=float)
        if self.mode == "linear":
            return np.where(t >= 0, self.linear_c2, 0.0)
        tn = self.t_nodes
        slopes = np.diff(self.f_nodes) / np.diff(tn)
        k = np.clip(np.searchsorted(tn, t, side="right") - 1, 0, len(slopes) - 1)
        out = slopes[k]
        return np.where((t < 0) | (t > tn[-1]), 0.0, out)


def radial_slope_min(P: Potential, r: np.ndarray, nus: Optional[np.ndarray] = None):
    """min over directions and both minima of <W_u(a + r nu), nu>, per r."""
    if nus is None:
        nus = sphere_directions(P.m)
    out = np.full(r.shape, np.inf)
    for a in P.minima:
        pts = a + r[:, None, None] * nus[None, :, :]
        d = np.einsum("ijk,jk->ij", P.grad(pts), nus)
        out = np.minimum(out, d.min(axis=1))
    return out


def compute_g(P: Potential, n_r: int = 512, n_sphere: Optional[int] = None,
              nus: Optional[np.ndarray] = None) -> RadialBoundFn:
    """Tabulate g(r) = min_{r <= r' <= r0} min_{nu, a} <W_u(a + r' nu), nu>.

    ``n_sphere`` overrides the default direction set with a seeded random
    one of that size (mainly for tests).
    """
    if nus is None and n_sphere is not None and P.m > 1:
        rng = np.random.default_rng(0)
        v = rng.standard_normal((n_sphere, P.m))
        nus = v / np.linalg.norm(v, axis=1, keepdims=True)
    r = np.linspace(0.0, P.r0, n_r)
    slope = radial_slope_min(P, r, nus)
    # suffix minimum over [r, r0]
    g = np.minimum.accumulate(slope[::-1])[::-1].copy()
    g[0] = 0.0 if abs(g[0]) < 1e-12 else g[0]
    if np.any(g[1:] <= 0):
        bad = float(r[1:][g[1:] <= 0][0])
        raise HypothesisViolation(
            f"radial derivative not positive at r={bad:.4g} (r0={P.r0}); "
            "reduce r0")
    return RadialBoundFn(r=r, g=g)


def build_f(rb: RadialBoundFn, mode: str = "envelope",
            degeneracy_rtol: float = 1e-3) -> RadialBoundFn:
    """Build f with 0 <= f(r^2) <= 2 r g(r).

    envelope: the largest nondecreasing function below t -> 2 sqrt(t) g(sqrt(t))
    on the nodes; linear: f(t) = c^2 t with c^2 = min 2 g(r) / r.
    """
    r, g = rb.r, rb.g
    if np.any(g[1:] <= 0):
        raise HypothesisViolation("g must be positive on (0, r0]")
    if mode == "linear":
        q = 2 * g[1:] / r[1:]
        # extrapolated limit of 2g(r)/r at r -> 0 from the first two nodes
        q0 = q[0] - (q[1] - q[0]) * r[1] / (r[2] - r[1]) if len(q) > 1 else q[0]
        c2 = float(np.min(q))
        if c2 <= 0 or q0 <= degeneracy_rtol * float(np.max(q)):
            raise DegenerateMinimumError(
                "inf 2g(r)/r is zero: minimum is degenerate, use envelope mode")
        return RadialBoundFn(r=r, g=g, f_nodes=c2 * r ** 2, mode="linear",
                             linear_c2=c2)
    if mode != "envelope":
        raise ValueError(f"unknown mode {mode!r}")
    v = 2 * r * g
    f = np.minimum.accumulate(v[::-1])[::-1].copy()
    f[0] = 0.0
    notes = []
    blend = 0.0
    if np.any(np.diff(f) <= 0):
        blend = 1e-12
        f = f + blend * r ** 2
        notes.append(f"ties in envelope; blended {blend:g}*t for strict increase")
        if np.any(np.diff(f) <= 0):
            raise HypothesisViolation("could not make f strictly increasing")
    return RadialBoundFn(r=r, g=g, f_nodes=f, mode="envelope", blend=blend,
                         notes=notes)


def linear_bound(c2: float, r0: float = 1.0, n_r: int = 512) -> RadialBoundFn:
    """f(t) = c^2 t with the matching g(r) = c^2 r / 2 tabulated on [0, r0]."""
    if c2 < 0:
        raise ValueError("c2 must be nonnegative")
    r = np.linspace(0.0, r0, n_r)
    return RadialBoundFn(r=r, g=0.5 * c2 * r, f_nodes=c2 * r ** 2, mode="linear",
                         linear_c2=float(c2))
