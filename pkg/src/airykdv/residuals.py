"""Finite-difference residuals of the exact identities of the theory.

Every identity the determinant data is known to satisfy in exact arithmetic
is re-evaluated here as a numeric residual.  Each check returns a
``ResidualReport`` with the raw residual, the size of the largest constituent
term (the natural scale), and their ratio — the ``normalized`` residual the
tolerances refer to.  A tiny normalized residual on an identity that mixes
several independently computed quantities is strong evidence the whole
pipeline (grid, determinant, derivatives, integrals) is consistent.

Checked identities (all at fixed weight sigma):

  kdv           u_t + 2 u u_x + (1/6) u_xxx = 0
  schrodinger   phi_xx = (z - 2 u) phi
  idpii         phi_xx = (z - x/t + (2/t) I2) phi,  I2 = integral phi^2 dsigma
  evolution     phi_t = -((2/3) z + (2/3) u) phi_x + (1/3) u_x phi
  mkdv          -phi_t = (2/3) phi_xxx + phi/(2t) + (x/t) phi_x
                         - (2/t) phi I11 - (2/t) phi_x I2,
                I11 = integral phi phi_x dsigma = (1/2) d/dx I2
  phi_identity  I2 = x/2 - t u
  cyl_kdv       U_T + (1/12) U_ppp + U U_p + U/(2T) = 0 for
                U(p, T) = d^2/dp^2 log Q(-p T^(-1/2), T^(-1/2))
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .observables import Engine, FDScheme, _uniform_derivative, _time_derivative

__all__ = [
    "ResidualReport",
    "kdv_residual",
    "schrodinger_residual",
    "idpii_residual",
    "evolution_residual",
    "mkdv_residual",
    "phi_identity_gap",
    "cyl_kdv_residual",
    "cyl_consistency_gap",
    "RESIDUAL_NAMES",
]


@dataclass(frozen=True)
class ResidualReport:
    name: str
    raw: float
    scale: float
    normalized: float
    meta: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "name": self.name,
                "raw": self.raw,
                "scale": self.scale,
                "normalized": self.normalized,
                "meta": self.meta,
            }
        )


def _report(name, terms, meta):
    raw = float(sum(terms))
    scale = float(max(abs(tv) for tv in terms))
    normalized = abs(raw) / scale if scale > 0.0 else 0.0
    return ResidualReport(name=name, raw=raw, scale=scale, normalized=normalized, meta=meta)


def _engine(sigma, engine, res=None):
    return engine if engine is not None else Engine(sigma, res)


def _meta(e, x, t, fd, **extra):
    return {
        "x": x,
        "t": t,
        "h_x": fd.step_x(t),
        "h_t": fd.step_t(t),
        "n_nodes": e.operator(x, t).n_nodes,
        **extra,
    }


def kdv_residual(sigma, x, t, fd: FDScheme = FDScheme(), engine: Engine | None = None,
                 res=None) -> ResidualReport:
    e = _engine(sigma, engine, res)
    u = e.u(x, t, fd)
    terms = (e.dt_u(x, t, fd), 2.0 * u * e.dx_u(x, t, fd), e.dxxx_u(x, t, fd) / 6.0)
    return _report("kdv", terms, _meta(e, x, t, fd, u=u))


def schrodinger_residual(sigma, x, t, z, fd: FDScheme = FDScheme(),
                         engine: Engine | None = None, res=None) -> ResidualReport:
    e = _engine(sigma, engine, res)
    u = e.u(x, t, fd)
    phi = e.phi(z, x, t)
    terms = (e.dxx_phi(z, x, t, fd), -(z - 2.0 * u) * phi)
    return _report("schrodinger", terms, _meta(e, x, t, fd, z=z, phi=phi))


def idpii_residual(sigma, x, t, z, fd: FDScheme = FDScheme(),
                   engine: Engine | None = None, res=None) -> ResidualReport:
    e = _engine(sigma, engine, res)
    i2 = e.phi_sq_int(x, t)
    phi = e.phi(z, x, t)
    terms = (e.dxx_phi(z, x, t, fd), -(z - x / t + 2.0 * i2 / t) * phi)
    return _report("idpii", terms, _meta(e, x, t, fd, z=z, phi_sq_int=i2))


def evolution_residual(sigma, x, t, z, fd: FDScheme = FDScheme(),
                       engine: Engine | None = None, res=None) -> ResidualReport:
    e = _engine(sigma, engine, res)
    u = e.u(x, t, fd)
    phi = e.phi(z, x, t)
    dxp = e.dx_phi(z, x, t, fd)
    terms = (
        e.dt_phi(z, x, t, fd),
        (2.0 / 3.0) * (z + u) * dxp,
        -(1.0 / 3.0) * e.dx_u(x, t, fd) * phi,
    )
    return _report("evolution", terms, _meta(e, x, t, fd, z=z))


def mkdv_residual(sigma, x, t, z, fd: FDScheme = FDScheme(),
                  engine: Engine | None = None, res=None) -> ResidualReport:
    e = _engine(sigma, engine, res)
    phi = e.phi(z, x, t)
    dxp = e.dx_phi(z, x, t, fd)
    i2 = e.phi_sq_int(x, t)
    i11 = 0.5 * e.dx_phi_sq_int(x, t, fd)  # integral phi phi_x dsigma
    terms = (
        e.dt_phi(z, x, t, fd),
        (2.0 / 3.0) * e.dxxx_phi(z, x, t, fd),
        phi / (2.0 * t),
        x * dxp / t,
        -2.0 * phi * i11 / t,
        -2.0 * dxp * i2 / t,
    )
    return _report("mkdv", terms, _meta(e, x, t, fd, z=z))


def phi_identity_gap(sigma, x, t, fd: FDScheme = FDScheme(),
                     engine: Engine | None = None, res=None) -> ResidualReport:
    """I2 - (x/2 - t u): exact identity linking the integral to u."""
    e = _engine(sigma, engine, res)
    i2 = e.phi_sq_int(x, t)
    u = e.u(x, t, fd)
    raw = i2 - (0.5 * x - t * u)
    scale = max(1.0, abs(i2), abs(0.5 * x), abs(t * u))
    return ResidualReport(
        name="phi_identity",
        raw=float(raw),
        scale=float(scale),
        normalized=abs(raw) / scale,
        meta=_meta(e, x, t, fd, phi_sq_int=i2, u=u),
    )


def cyl_kdv_residual(sigma, rho, tcap, fd: FDScheme = FDScheme(),
                     engine: Engine | None = None, res=None) -> ResidualReport:
    """Residual of U_T + (1/12) U_ppp + U U_p + U/(2T) at (rho, T).

    U is the second rho-derivative of the determinant along the cylindrical
    slice (x, t) = (-rho T^(-1/2), T^(-1/2)).
    """
    e = _engine(sigma, engine, res)
    t = tcap**-0.5
    h_rho = fd.step_x(t) * max(1.0, tcap**0.5)
    u_of = lambda rr, tc: _uniform_derivative(
        lambda r2: e.log_q(-r2 * tc**-0.5, tc**-0.5), rr, h_rho, 2, fd.order, fd.richardson
    )
    u0 = u_of(rho, tcap)
    dT = _time_derivative(lambda tc: u_of(rho, tc), tcap, fd)
    dp = _uniform_derivative(lambda rr: u_of(rr, tcap), rho, fd.slope_mult * h_rho, 1, fd.order, False)
    h3_rho = fd.third_step(t) * max(1.0, tcap**0.5)
    dppp = _uniform_derivative(lambda rr: u_of(rr, tcap), rho, h3_rho, 3, fd.order, False)
    terms = (dT, dppp / 12.0, u0 * dp, u0 / (2.0 * tcap))
    meta = {"rho": rho, "T": tcap, "h_rho": h_rho, "x": -rho * t, "t": t}
    return _report("cyl_kdv", terms, meta)


def cyl_consistency_gap(sigma, rho, tcap, fd: FDScheme = FDScheme(),
                        engine: Engine | None = None, res=None) -> ResidualReport:
    """U(rho, T) against T^(-1) u(x*, t*) + rho/(2T) on the mapped slice."""
    e = _engine(sigma, engine, res)
    t = tcap**-0.5
    x = -rho * t
    h_rho = fd.step_x(t) * max(1.0, tcap**0.5)
    u_cyl = _uniform_derivative(
        lambda rr: e.log_q(-rr * tcap**-0.5, t), rho, h_rho, 2, fd.order, fd.richardson
    )
    u_pt = e.u(x, t, fd)
    raw = u_cyl - (u_pt / tcap + rho / (2.0 * tcap))
    scale = max(1.0, abs(u_cyl))
    return ResidualReport(
        name="cyl_consistency",
        raw=float(raw),
        scale=float(scale),
        normalized=abs(raw) / scale,
        meta={"rho": rho, "T": tcap, "x": x, "t": t},
    )


RESIDUAL_NAMES = (
    "kdv",
    "schrodinger",
    "idpii",
    "evolution",
    "mkdv",
    "phi_identity",
    "cyl_kdv",
)
