"""Derived observables of the determinant: u, p, the eigenfunction, integrals.

Everything here is a finite-difference functional of the two smooth scalar
fields the operator module provides — log det(I - K) as a function of (x, t)
and the continued eigenfunction phi(z; x, t):

    u = d^2/dx^2 log Q + x/(2t)          (solves KdV  u_t + 2 u u_x + u_xxx/6 = 0)
    p = d/dx   log Q + x^2/(4t)          (u = p_x;  u = -2q - p^2 with q = d/dx log Q)
    phi_sq_int = integral phi^2 d sigma  (equals x/2 - t u exactly)

Differentiation scheme (``FDScheme``): centred stencils of order 2 or 4 with
optional Richardson extrapolation in x; in t the stencil is additive above
``t_multiplicative_below`` and multiplicative (geometric nodes t rho^k, exact
Fornberg weights) below it, so no stencil ever crosses t = 0.  Higher
derivatives of u (a 3rd derivative of u is a 5th of log Q) use widened steps:
the determinant is smooth to ~1e-13, and a 5-th difference amplifies that
noise by h^-5, so ``third_mult`` trades truncation error against noise.

The ``Engine`` memoizes, per weight, every determinant build keyed by the
exact (x, t) floats — stencils are laid out on commensurate lattices so
nested derivatives re-hit the same keys.  An LRU of built operators bounds
memory; bare log-det values are kept for the whole engine lifetime.
"""

import threading
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .fredholm import Resolution, build_operator
from .sigma import integrate_dsigma

__all__ = [
    "FDScheme",
    "ObservableSet",
    "Engine",
    "observe",
    "u_profile",
    "fd_weights",
    "parallel_map",
]


def fd_weights(xs, x0, m):
    """Finite-difference weights for the m-th derivative at x0 on nodes xs.

    Fornberg's recursion; works for arbitrary (e.g. geometric) node layouts.
    """
    xs = np.asarray(xs, dtype=float)
    n = xs.size
    if n <= m:
        raise ValueError("need more nodes than the derivative order")
    w = np.zeros((m + 1, n))
    w[0, 0] = 1.0
    c1 = 1.0
    c4 = xs[0] - x0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = xs[i] - x0
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    w[k, i] = c1 * (k * w[k - 1, i - 1] - c5 * w[k, i - 1]) / c2
                w[0, i] = -c1 * c5 * w[0, i - 1] / c2
            for k in range(mn, 0, -1):
                w[k, j] = (c4 * w[k, j] - k * w[k - 1, j]) / c3
            w[0, j] = c4 * w[0, j] / c3
        c1 = c2
    return w[m]


@dataclass(frozen=True)
class FDScheme:
    """Finite-difference policy.

    ``h_x``/``h_t`` default to 5e-3 * max(1, t^(1/3)) and 5e-3 * t.  The wide
    multipliers apply to the 3rd x-derivative of u resp. of phi.  Stencils in
    t are multiplicative below ``t_multiplicative_below``.
    """

    h_x: float | None = None
    h_t: float | None = None
    order: int = 4
    richardson: bool = True
    slope_mult: float = 4.0
    third_mult: float = 8.0
    phi_third_mult: float = 2.0
    t_multiplicative_below: float = 0.05

    def __post_init__(self):
        if self.order not in (2, 4):
            raise ValueError("order must be 2 or 4")
        for name in ("h_x", "h_t"):
            v = getattr(self, name)
            if v is not None and not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v!r}")

    def step_x(self, t: float) -> float:
        return self.h_x if self.h_x is not None else 5e-3 * max(1.0, t ** (1.0 / 3.0))

    def third_step(self, t: float) -> float:
        # Solution features live on the x-scale t^(1/3); below t ~ 0.4 a
        # full-width stencil for the 3rd derivative starts to feel the
        # curvature of that profile, so shrink the step with the feature
        # scale instead of keeping it fixed.
        return self.third_mult * self.step_x(t) * min(1.0, (t / 0.4) ** (1.0 / 3.0))

    def step_t(self, t: float) -> float:
        h = self.h_t if self.h_t is not None else 5e-3 * t
        if t >= self.t_multiplicative_below and 2.0 * h >= t:
            raise ValueError(f"additive t-stencil would cross t = 0 (h_t = {h}, t = {t})")
        return h

    def t_nodes(self, t: float) -> np.ndarray:
        half = 1 if self.order == 2 else 2
        h = self.step_t(t)
        if t >= self.t_multiplicative_below:
            return t + h * np.arange(-half, half + 1, dtype=float)
        rho = 1.0 + h / t
        return t * rho ** np.arange(-half, half + 1, dtype=float)


def _npoints(m: int, order: int) -> int:
    # centred stencils: odd point count, one parity order for free on even m
    return m + order - 1 if m % 2 == 0 else m + order


def _uniform_derivative(f, x0, h, m, order, richardson):
    half = (_npoints(m, order) - 1) // 2
    offs = np.arange(-half, half + 1, dtype=float)

    def apply(hh):
        xs = x0 + hh * offs
        w = fd_weights(xs, x0, m)
        return float(sum(wi * f(xi) for wi, xi in zip(w, xs) if wi != 0.0))

    if not richardson:
        return apply(h)
    factor = 2.0**order
    return (factor * apply(0.5 * h) - apply(h)) / (factor - 1.0)


def _time_derivative(f, t, fd: FDScheme):
    ts = fd.t_nodes(t)
    w = fd_weights(ts, t, 1)
    return float(sum(wi * f(ti) for wi, ti in zip(w, ts) if wi != 0.0))


@dataclass(frozen=True)
class ObservableSet:
    """The point observables at one (x, t)."""

    x: float
    t: float
    log_q: float
    q: float
    u: float
    p: float
    phi_sq_int: float


class Engine:
    """Per-weight cache of operator builds and determinant values.

    Thread-safe for concurrent readers: builds happen outside the lock and
    insertion is idempotent (identical inputs produce identical floats), so a
    rare duplicated build costs time, never determinism.
    """

    def __init__(self, sigma, res: Resolution | None = None, max_ops: int = 40,
                 max_cached_elements: float = 4e7):
        self.sigma = sigma
        self.res = res if res is not None else Resolution()
        self.max_ops = max_ops
        # Cap on total stored factorization entries (sum of n^2 over cached
        # operators, ~320 MB at the default): deep-gap grids reach n ~ 2500
        # where a count-only LRU would hold gigabytes.
        self.max_cached_elements = max_cached_elements
        self._logq: dict[tuple, float] = {}
        self._phi2: dict[tuple, float] = {}
        self._ops: OrderedDict[tuple, object] = OrderedDict()
        self._cached_elements = 0
        self._lock = threading.Lock()

    # -- raw fields ---------------------------------------------------------
    def operator(self, x: float, t: float):
        key = (float(x), float(t))
        with self._lock:
            op = self._ops.get(key)
            if op is not None:
                self._ops.move_to_end(key)
                return op
        op = build_operator(self.sigma, x, t, self.res)
        with self._lock:
            self._logq[key] = op.logdet
            if key not in self._ops:
                self._ops[key] = op
                self._cached_elements += op.n_nodes**2
            while len(self._ops) > self.max_ops or (
                self._cached_elements > self.max_cached_elements and len(self._ops) > 1
            ):
                _, old = self._ops.popitem(last=False)
                self._cached_elements -= old.n_nodes**2
        return op

    def log_q(self, x: float, t: float) -> float:
        key = (float(x), float(t))
        val = self._logq.get(key)
        if val is None:
            val = self.operator(x, t).logdet
        return val

    def phi(self, z, x: float, t: float):
        return self.operator(x, t).phi(z)

    def phi_sq_int(self, x: float, t: float) -> float:
        key = (float(x), float(t))
        val = self._phi2.get(key)
        if val is None:
            op = self.operator(x, t)
            lo, hi = op.phi_sq_integrand()
            val = integrate_dsigma(lambda r: op.phi(r) ** 2, self.sigma, lo, hi)
            with self._lock:
                self._phi2[key] = val
        return val

    # -- derived fields -----------------------------------------------------
    def u(self, x, t, fd: FDScheme = FDScheme()):
        return self._u_fixed(x, t, fd, fd.step_x(t))

    def _u_fixed(self, x, t, fd, h):
        d2 = _uniform_derivative(
            lambda xx: self.log_q(xx, t), x, h, 2, fd.order, fd.richardson
        )
        return d2 + x / (2.0 * t)

    def p(self, x, t, fd: FDScheme = FDScheme()):
        d1 = _uniform_derivative(
            lambda xx: self.log_q(xx, t), x, fd.step_x(t), 1, fd.order, fd.richardson
        )
        return d1 + x * x / (4.0 * t)

    def dx_u(self, x, t, fd: FDScheme = FDScheme()):
        h = fd.step_x(t)
        return _uniform_derivative(
            lambda xx: self._u_fixed(xx, t, fd, h), x, fd.slope_mult * h, 1, fd.order, False
        )

    def dxxx_u(self, x, t, fd: FDScheme = FDScheme()):
        h = fd.step_x(t)
        return _uniform_derivative(
            lambda xx: self._u_fixed(xx, t, fd, h), x, fd.third_step(t), 3, fd.order, False
        )

    def dt_u(self, x, t, fd: FDScheme = FDScheme()):
        h = fd.step_x(t)
        return _time_derivative(lambda tt: self._u_fixed(x, tt, fd, h), t, fd)

    def dx_p(self, x, t, fd: FDScheme = FDScheme()):
        h = fd.step_x(t)
        return _uniform_derivative(
            lambda xx: self.p(xx, t, fd), x, fd.slope_mult * h, 1, fd.order, False
        )

    # -- eigenfunction derivatives (z held fixed) ----------------------------
    def dx_phi(self, z, x, t, fd: FDScheme = FDScheme()):
        return _uniform_derivative(
            lambda xx: self.phi(z, xx, t), x, fd.step_x(t), 1, fd.order, fd.richardson
        )

    def dxx_phi(self, z, x, t, fd: FDScheme = FDScheme()):
        return _uniform_derivative(
            lambda xx: self.phi(z, xx, t), x, fd.step_x(t), 2, fd.order, fd.richardson
        )

    def dxxx_phi(self, z, x, t, fd: FDScheme = FDScheme()):
        return _uniform_derivative(
            lambda xx: self.phi(z, xx, t), x, fd.phi_third_mult * fd.step_x(t), 3, fd.order, False
        )

    def dt_phi(self, z, x, t, fd: FDScheme = FDScheme()):
        return _time_derivative(lambda tt: self.phi(z, x, tt), t, fd)

    def dx_phi_sq_int(self, x, t, fd: FDScheme = FDScheme()):
        return _uniform_derivative(
            lambda xx: self.phi_sq_int(xx, t), x, fd.step_x(t), 1, fd.order, fd.richardson
        )

    def observe(self, x, t, fd: FDScheme = FDScheme()) -> ObservableSet:
        raw = self.log_q(x, t)
        log_q = min(raw, 0.0)  # clip factorization round-off above 0
        return ObservableSet(
            x=float(x),
            t=float(t),
            log_q=log_q,
            q=float(np.exp(log_q)),
            u=self.u(x, t, fd),
            p=self.p(x, t, fd),
            phi_sq_int=self.phi_sq_int(x, t),
        )


def observe(sigma, x, t, fd: FDScheme = FDScheme(), res: Resolution | None = None,
            engine: Engine | None = None) -> ObservableSet:
    """Point observables at (x, t); pass an ``Engine`` to amortize builds."""
    eng = engine if engine is not None else Engine(sigma, res)
    return eng.observe(x, t, fd)


def parallel_map(fn, items, threads: int = 1):
    """Ordered map with an optional thread pool; results keep input order."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def u_profile(sigma, xs, t, fd: FDScheme = FDScheme(), res: Resolution | None = None,
              engine: Engine | None = None, threads: int = 1):
    """Observables along an x-grid at fixed t, in grid order."""
    eng = engine if engine is not None else Engine(sigma, res)
    return parallel_map(lambda x: eng.observe(x, t, fd), list(xs), threads)
