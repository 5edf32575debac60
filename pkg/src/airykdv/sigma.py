"""Admissible weight profiles and integration against their induced measure.

A weight is a non-decreasing function sigma: R -> [0, 1] with sigma(-inf) = 0
and sigma(+inf) = gamma <= 1, carried as a ``SigmaWeight``: a vectorized
``value`` callable (right-continuous at jumps), the absolutely continuous part
``density`` = sigma', the jump part ``atoms`` = ((location, mass), ...), and a
decay envelope ``decay`` with |sigma(r) - gamma*chi_(0,inf)(r)| <= c1 exp(-c2 |r|)
plus the derivative bound |sigma'(r)| <= c3 r^-2 for |r| > C.

Factories cover the profiles used throughout: sharp steps, the Fermi factor
1/(1+exp(-r/theta)) (the KPZ weight at theta = 1), its tanh rescaling, and
monotone staircases.  ``make_zero`` builds the degenerate sigma == 0 used as
an exactness probe by the tests.

``integrate_dsigma`` evaluates  integral f d sigma = sum_j m_j f(r_j)
+ integral sigma'(r) f(r) dr;  ``sigma_gap_integral`` evaluates the mean-zero
gap integral I_sigma = integral (chi_(0,inf) - sigma) dr, which is finite only
for gamma = 1 and enters the small-x law of the regime-iii profile.
"""

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .quadrature import composite_rule

__all__ = [
    "DecayEnvelope",
    "SigmaWeight",
    "make_step",
    "make_fermi",
    "make_kpz",
    "make_tanh",
    "make_piecewise",
    "make_zero",
    "sigma_gap_integral",
    "integrate_dsigma",
    "sigma_from_json",
]


@dataclass(frozen=True)
class DecayEnvelope:
    """Constants of the tail bounds: c1 e^{-c2|r|} for the value gap,
    c3 |r|^{-2} for the density beyond |r| > C."""

    c1: float
    c2: float
    c3: float
    C: float

    def __post_init__(self):
        if min(self.c1, self.c2, self.c3, self.C) <= 0:
            raise ValueError("decay constants must all be positive")


def _zero_fn(r):
    return np.zeros_like(np.asarray(r, dtype=float))


@dataclass(frozen=True)
class SigmaWeight:
    value: callable
    density: callable
    atoms: tuple
    gamma: float
    decay: DecayEnvelope
    antisymmetric: bool = False
    has_density: bool = True
    support_min: float | None = None
    label: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 <= self.gamma <= 1.0):
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma!r}")
        for loc, mass in self.atoms:
            if not (np.isfinite(loc) and np.isfinite(mass) and mass >= 0):
                raise ValueError(f"invalid atom ({loc!r}, {mass!r})")

    def describe(self) -> dict:
        return {"type": self.label, **self.params}


def make_step(gamma: float = 1.0) -> SigmaWeight:
    """Sharp step gamma * chi_[0, inf) — one atom of mass gamma at the origin."""
    if not (0.0 < gamma <= 1.0):
        raise ValueError(f"step weight needs gamma in (0, 1], got {gamma!r}")

    def value(r):
        return np.where(np.asarray(r, dtype=float) >= 0.0, gamma, 0.0)

    return SigmaWeight(
        value=value,
        density=_zero_fn,
        atoms=((0.0, gamma),),
        gamma=gamma,
        decay=DecayEnvelope(1.0, 1.0, 1.0, 1.0),
        antisymmetric=(gamma == 1.0),  # sigma(-r) = 1 - sigma(r) a.e.
        has_density=False,
        support_min=0.0,
        label="step",
        params={"gamma": gamma},
    )


def make_fermi(theta: float, label: str = "fermi") -> SigmaWeight:
    """Fermi factor 1/(1 + exp(-r/theta)): smooth, antisymmetric, gamma = 1."""
    if not (np.isfinite(theta) and theta > 0):
        raise ValueError(f"fermi weight needs theta > 0, got {theta!r}")
    th = float(theta)

    def value(r):
        a = np.asarray(r, dtype=float) / th
        with np.errstate(over="ignore", under="ignore"):
            e = np.exp(-np.abs(a))
        pos = 1.0 / (1.0 + e)
        return np.where(a >= 0, pos, 1.0 - pos)

    def density(r):
        a = np.asarray(r, dtype=float) / th
        with np.errstate(over="ignore", under="ignore"):
            e = np.exp(-np.abs(a))
        return e / (th * (1.0 + e) ** 2)

    # max_{s>20} s^3 e^-s is attained at s = 20, giving the r^-3-strength
    # envelope theta^2 * 20^3 e^-20 beyond C = 20 theta (comfortably covers
    # the required r^-2 bound as well)
    c3 = max(8000.0 * np.exp(-20.0) * th**2, 1.0 / (4.0 * th))
    return SigmaWeight(
        value=value,
        density=density,
        atoms=(),
        gamma=1.0,
        decay=DecayEnvelope(1.0, 1.0 / th, c3, 20.0 * th),
        antisymmetric=True,
        has_density=True,
        support_min=None,
        label=label,
        params={"theta": theta},
    )


def make_kpz() -> SigmaWeight:
    """The weight of the narrow-wedge KPZ generating function: Fermi at theta = 1."""
    return replace(make_fermi(1.0, label="kpz"), params={})


def make_tanh(theta: float) -> SigmaWeight:
    """(1 + tanh(r/theta))/2 — identical to the Fermi factor at theta/2."""
    if not (np.isfinite(theta) and theta > 0):
        raise ValueError(f"tanh weight needs theta > 0, got {theta!r}")
    return replace(make_fermi(theta / 2.0, label="tanh"), params={"theta": theta})


def make_piecewise(steps) -> SigmaWeight:
    """Monotone staircase from ((location, level), ...) pairs.

    Levels are the values of sigma *from that location on* (right-continuous),
    must be positive, non-decreasing, and end at gamma <= 1.
    """
    steps = [(float(a), float(b)) for a, b in steps]
    if not steps:
        raise ValueError("piecewise weight needs at least one step")
    locs = np.array([a for a, _ in steps])
    levels = np.array([b for _, b in steps])
    if np.any(np.diff(locs) <= 0):
        raise ValueError("piecewise step locations must be strictly increasing")
    if levels[0] <= 0 or np.any(np.diff(levels) < 0) or levels[-1] > 1.0:
        raise ValueError("piecewise levels must be positive, non-decreasing, and <= 1")
    with_floor = np.concatenate([[0.0], levels])
    masses = np.diff(with_floor)
    atoms = tuple((float(l), float(m)) for l, m in zip(locs, masses) if m > 0)

    def value(r):
        idx = np.searchsorted(locs, np.asarray(r, dtype=float), side="right")
        return with_floor[idx]

    return SigmaWeight(
        value=value,
        density=_zero_fn,
        atoms=atoms,
        gamma=float(levels[-1]),
        decay=DecayEnvelope(1.0, 1.0, 1.0, max(1.0, float(np.max(np.abs(locs))))),
        antisymmetric=False,
        has_density=False,
        support_min=float(locs[0]),
        label="piecewise",
        params={"steps": [[a, b] for a, b in steps]},
    )


def make_zero() -> SigmaWeight:
    """sigma == 0: the operator vanishes identically.  Diagnostic use only."""
    return SigmaWeight(
        value=_zero_fn,
        density=_zero_fn,
        atoms=(),
        gamma=0.0,
        decay=DecayEnvelope(1e-300, 1.0, 1e-300, 1.0),
        antisymmetric=False,
        has_density=False,
        support_min=None,
        label="zero",
        params={},
    )


def _chunked_panels(edges, max_len):
    """Subdivide [edges] so no panel exceeds max_len."""
    out = []
    for p, q in zip(edges[:-1], edges[1:]):
        m = max(int(np.ceil((q - p) / max_len)), 1)
        out.append(np.linspace(p, q, m + 1)[:-1])
    out.append([edges[-1]])
    return np.concatenate(out)


def sigma_gap_integral(sigma: SigmaWeight, tol: float = 1e-12) -> float:
    """I_sigma = integral (chi_(0,inf)(r) - sigma(r)) dr.

    Finite only when gamma = 1 (otherwise the positive tail integrand tends
    to 1 - gamma and the integral diverges — raises ValueError).  Absolute
    accuracy ~1e-10: panels split at 0 and at every atom, tails truncated
    where the decay envelope is below ``tol``.
    """
    if sigma.gamma != 1.0:
        raise ValueError(
            f"gap integral diverges for gamma = {sigma.gamma!r} < 1 "
            "(positive tail does not vanish)"
        )
    d = sigma.decay
    R = max(d.C, np.log(max(d.c1, 1.0) / tol) / d.c2, 10.0)
    if sigma.atoms:
        R = max(R, np.max(np.abs([loc for loc, _ in sigma.atoms])) + 1.0)
    edges = sorted({-R, 0.0, R, *(loc for loc, _ in sigma.atoms if -R < loc < R)})
    rule = composite_rule(_chunked_panels(np.array(edges), 4.0 / d.c2), 48)
    vals = np.where(rule.nodes > 0.0, 1.0, 0.0) - sigma.value(rule.nodes)
    return float(rule.weights @ vals)


def integrate_dsigma(f, sigma: SigmaWeight, lo: float = None, hi: float = None) -> float:
    """integral f d sigma over [lo, hi] (default: the weight's whole support).

    Atom part is the exact sum; the density part is composite Gauss-Legendre
    with panels split at 0 and capped at min(4/c2, 2) so that both the weight
    transition and a mildly oscillatory f are resolved.  Raises if f returns
    non-finite values on the integration nodes.
    """
    d = sigma.decay
    total = 0.0
    for loc, mass in sigma.atoms:
        if (lo is None or loc >= lo) and (hi is None or loc <= hi):
            fv = float(np.asarray(f(np.array([loc])))[0])
            if not np.isfinite(fv):
                raise ValueError(f"integrand not finite at atom r = {loc!r}")
            total += mass * fv
    if not sigma.has_density:
        return total
    R = d.C + np.log(1e18) / d.c2
    a = -R if lo is None else max(lo, -R)
    b = R if hi is None else min(hi, R)
    if b <= a:
        return total
    edges = np.array(sorted({a, b, *([0.0] if a < 0.0 < b else [])}))
    rule = composite_rule(_chunked_panels(edges, min(4.0 / d.c2, 2.0)), 48)
    fv = np.asarray(f(rule.nodes), dtype=float)
    if not np.all(np.isfinite(fv)):
        raise ValueError("integrand not finite on density nodes")
    return total + float(rule.weights @ (sigma.density(rule.nodes) * fv))


_FACTORIES = {
    "step": (make_step, {"gamma": 1.0}),
    "fermi": (make_fermi, {"theta": None}),
    "kpz": (make_kpz, {}),
    "tanh": (make_tanh, {"theta": None}),
    "piecewise": (make_piecewise, {"steps": None}),
    "zero": (make_zero, {}),
}


def sigma_from_json(spec) -> SigmaWeight:
    """Build a weight from a JSON object (or already-parsed dict).

    Accepted shapes:
      {"type": "step", "gamma": 0.5}
      {"type": "kpz"}
      {"type": "fermi", "theta": 0.5}
      {"type": "tanh", "theta": 1.0}
      {"type": "piecewise", "steps": [[-1.0, 0.3], [0.0, 1.0]]}
      {"type": "zero"}
    """
    if isinstance(spec, (str, bytes)):
        try:
            spec = json.loads(spec)
        except json.JSONDecodeError as e:
            raise ValueError(f"weight spec is not valid JSON: {e}") from None
    if not isinstance(spec, dict) or "type" not in spec:
        raise ValueError('weight spec must be a JSON object with a "type" key')
    kind = spec["type"]
    if kind not in _FACTORIES:
        raise ValueError(f"unknown weight type {kind!r}; expected one of {sorted(_FACTORIES)}")
    factory, defaults = _FACTORIES[kind]
    kwargs = {}
    for name, default in defaults.items():
        val = spec.get(name, default)
        if val is None:
            raise ValueError(f"weight type {kind!r} requires field {name!r}")
        kwargs[name] = val
    extra = set(spec) - {"type", *defaults}
    if extra:
        raise ValueError(f"unexpected fields for weight type {kind!r}: {sorted(extra)}")
    return factory(**kwargs)
