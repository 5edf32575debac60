"""Composite Gauss-Legendre quadrature and operator-domain truncation.

The discretized operators live on a truncated interval [a, b] in the spectral
variable u.  This module owns:

* ``gauss_legendre(n)`` — nodes/weights on [-1, 1], computed by Newton
  iteration on the degree-n Legendre polynomial from Chebyshev-type initial
  guesses (no library quadrature call; residual |P_n(node)| <= 1e-14).
* ``composite_rule`` — affine images of the base rule over a panel list.
  The rule is open: no node ever lands on a panel edge, which is what lets
  panel edges sit exactly on jump locations of the weight.
* ``truncation_bounds`` — [a, b] from the weight's decay envelope and the
  Airy decay: below a the weight is smaller than ``tail_tol`` (or exactly
  zero when the weight has a hard lower support edge), above b the kernel
  mass exp(-(4/3) b^(3/2)) is smaller than ``tail_tol``; since the weight is
  bounded by 1 the Airy decay is the binding upper cut.
* ``panel_breakpoints`` — panel edges: {a, mapped jump locations, mapped
  origin, 0, b}, subdivided so that 48-node panels resolve both the Airy
  oscillation at depth |u| and the weight's transition zone at small t.

Coordinate maps between the weight's argument z and the spectral variable u:
u = map_z_to_u(z) = t^(2/3) z - x t^(-1/3) and its inverse map_u_to_z.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "QuadratureRule",
    "gauss_legendre",
    "composite_rule",
    "truncation_bounds",
    "panel_breakpoints",
    "map_z_to_u",
    "map_u_to_z",
]

_MAX_NODES = 512
_DEDUP_TOL = 1e-12

_gl_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(n: int):
    """Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].

    Roots of P_n by Newton iteration from the Chebyshev-like initial guesses
    cos(pi (4i+3)/(4n+2)); weights 2 / ((1 - x^2) P_n'(x)^2).  Results are
    cached and returned read-only.
    """
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= _MAX_NODES:
        raise ValueError(f"gauss_legendre: n must be an integer in [1, {_MAX_NODES}], got {n!r}")
    n = int(n)
    if n in _gl_cache:
        return _gl_cache[n]
    i = np.arange(n)
    x = np.cos(np.pi * (4 * i + 3) / (4 * n + 2))
    for _ in range(100):
        p0 = np.ones_like(x)
        p1 = x.copy()
        for k in range(2, n + 1):
            p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
        if n == 1:
            dp = np.ones_like(x)
        else:
            dp = n * (p0 - x * p1) / (1.0 - x * x)
        dx = p1 / dp
        x -= dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    # final derivative for the weights
    p0 = np.ones_like(x)
    p1 = x.copy()
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = np.ones_like(x) if n == 1 else n * (p0 - x * p1) / (1.0 - x * x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    x, w = x[order], w[order]
    # enforce the exact +/- symmetry of the rule (kills asymmetric round-off)
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    x.flags.writeable = False
    w.flags.writeable = False
    _gl_cache[n] = (x, w)
    return x, w


@dataclass(frozen=True)
class QuadratureRule:
    """Concatenated panel rule: nodes/weights plus the panel edges used."""

    nodes: np.ndarray
    weights: np.ndarray
    breakpoints: np.ndarray

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def a(self) -> float:
        return float(self.breakpoints[0])

    @property
    def b(self) -> float:
        return float(self.breakpoints[-1])


def composite_rule(breakpoints, n_per_panel: int) -> QuadratureRule:
    """Affine-mapped Gauss-Legendre rule on each panel of ``breakpoints``."""
    bp = np.asarray(breakpoints, dtype=float)
    if bp.ndim != 1 or bp.size < 2:
        raise ValueError("composite_rule: need at least two breakpoints")
    if not np.all(np.isfinite(bp)) or np.any(np.diff(bp) <= 0):
        raise ValueError("composite_rule: breakpoints must be finite and strictly increasing")
    xi, wi = gauss_legendre(n_per_panel)
    nodes = []
    weights = []
    for p, q in zip(bp[:-1], bp[1:]):
        mid = 0.5 * (p + q)
        rad = 0.5 * (q - p)
        nodes.append(mid + rad * xi)
        weights.append(rad * wi)
    return QuadratureRule(np.concatenate(nodes), np.concatenate(weights), bp)


def map_z_to_u(z, x, t):
    """Weight argument z -> spectral coordinate u = t^(2/3) z - x t^(-1/3)."""
    return t ** (2.0 / 3.0) * np.asarray(z, dtype=float) - x * t ** (-1.0 / 3.0)


def map_u_to_z(u, x, t):
    """Spectral coordinate u -> weight argument z = t^(-2/3) u + x/t."""
    return t ** (-2.0 / 3.0) * np.asarray(u, dtype=float) + x / t


def _validate_xt(x, t):
    if not np.isfinite(x):
        raise ValueError(f"x must be finite, got {x!r}")
    if not (np.isfinite(t) and t > 0):
        raise ValueError(f"t must be positive and finite, got {t!r}")


def truncation_bounds(sigma, x: float, t: float, tail_tol: float = 1e-16):
    """Truncation interval [a, b] for the operator at (x, t).

    a: image of the weight's lower support edge when it has one, otherwise of
    -Z* where the decay envelope c1 exp(-c2 Z*) first drops below tail_tol.
    b: where the kernel's own mass exp(-(4/3) b^(3/2)) drops below tail_tol;
    the weight is <= 1, so this cut needs no reference to the weight at all.
    """
    _validate_xt(x, t)
    if not (0.0 < tail_tol <= 1e-6):
        raise ValueError(f"tail_tol must lie in (0, 1e-6], got {tail_tol!r}")
    if sigma.support_min is not None:
        z_lo = sigma.support_min
    else:
        c1, c2 = sigma.decay.c1, sigma.decay.c2
        z_lo = -max(np.log(c1 / tail_tol) / c2, 0.0)
    a = float(map_z_to_u(z_lo, x, t))
    b = float((0.75 * np.log(1.0 / tail_tol)) ** (2.0 / 3.0))
    if b < a + 1.0:
        # deep pure-gap configuration: the determinant is ~1 there, but keep
        # a non-degenerate grid so downstream code never sees an empty rule
        b = a + 2.0
    return a, b


def _panel_target(p: float, q: float) -> float:
    """Max panel length resolving Ai oscillation at depth max(|p|,|q|) below 0."""
    depth = max(0.0, -min(p, q))
    if depth > 0.0:
        # wavelength of Ai(u) at depth d is 2*pi/sqrt(d); keep >= ~7 of the 48
        # nodes per wavelength
        return float(np.clip(16.0 / np.sqrt(max(depth, 1.0)), 1.25, 6.0))
    return 5.0


def panel_breakpoints(sigma, x, t, a, b, refine: int = 1):
    """Panel edges on [a, b]: weight structure points plus resolution splits."""
    if refine < 1 or refine > 64:
        raise ValueError(f"refine must be in [1, 64], got {refine!r}")
    pts = [a, b, 0.0]
    pts.append(float(map_z_to_u(0.0, x, t)))
    for loc, _mass in sigma.atoms:
        pts.append(float(map_z_to_u(loc, x, t)))

    # transition zone of a smooth weight: where sigma still varies, mapped to
    # u.  Its edges are breakpoints too — at small t the zone shrinks like
    # t^(2/3) and the fine target below must not leak into the long flat
    # stretches on either side, where sigma is constant to machine precision.
    trans = None
    if sigma.has_density:
        zs = np.log(max(sigma.decay.c1, 1.0) / 1e-16) / sigma.decay.c2 + sigma.decay.C
        lo = float(map_z_to_u(-zs, x, t))
        hi = float(map_z_to_u(+zs, x, t))
        trans = (lo, hi, 6.0 * t ** (2.0 / 3.0) / sigma.decay.c2)
        pts.extend([lo, hi])

    pts = [p for p in pts if a <= p <= b]
    pts = np.array(sorted(pts))
    keep = [pts[0]]
    for p in pts[1:]:
        if p - keep[-1] > _DEDUP_TOL:
            keep.append(p)
    base = np.array(keep)
    if base[-1] < b:  # b was deduped away; never drop the endpoints
        base[-1] = b

    out = []
    for p, q in zip(base[:-1], base[1:]):
        target = _panel_target(p, q)
        if trans is not None and min(q, trans[1]) - max(p, trans[0]) > _DEDUP_TOL:
            target = min(target, max(trans[2], 1e-3))
        m = max(int(np.ceil((q - p) / target)), 1) * refine
        out.append(np.linspace(p, q, m + 1)[:-1])
    out.append([base[-1]])
    return np.concatenate(out)
