"""Equilibrium fundamental diagrams and derived wave quantities.

A fundamental diagram pairs an equilibrium speed law ``v(rho)`` with its
flow ``q(rho) = rho * v(rho)``. Six families are provided; each carries
closed-form first derivatives (flux classification is sensitive to the
derivative sign near the critical density, so finite differences are kept
to the test suite) and, where a closed form exists, the velocity-flux
potential used by the variable-sound-speed second-order model.

All evaluation methods accept floats or numpy arrays and are pure, so they
are safe to share across threads and processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from ._roots import bracketed_root
from .errors import DomainError, RootBracketError

FAMILIES = (
    "greenshields",
    "polynomial",
    "greenberg",
    "underwood",
    "newell",
    "kerner",
)


@dataclass(frozen=True)
class FundamentalDiagram:
    """One equilibrium speed-density law with its parameters.

    Construct via the family helpers (``newell(...)``, ``greenshields(...)``,
    ...) rather than directly; they fill the derived fields.

    Fields
    ------
    family : str
        One of FAMILIES.
    v_free : float
        Free-flow speed (the rho -> 0 speed limit; Greenberg has none and
        stores the speed scale v0 here).
    rho_jam : float
        Jam density parameter of the family.
    wave_back : float
        Magnitude of the jam wave speed (Newell only; 0 otherwise).
    exponent : float
        Polynomial exponent n (polynomial family only).
    sigmoid : tuple
        (scale, center, width, offset) for the sigmoid family.
    rho_max : float
        Upper edge of the valid density domain (concavity can bound it
        below the jam parameter, and the sigmoid's zero-speed density
        sits slightly above its nominal scale).
    """

    family: str
    v_free: float = 0.0
    rho_jam: float = 0.0
    wave_back: float = 0.0
    exponent: float = 0.0
    sigmoid: tuple = ()
    rho_max: float = 0.0
    phi_anchor: float = field(default=0.0, compare=False)

    # -- evaluation ---------------------------------------------------------

    def speed(self, rho, validate=True):
        """Equilibrium speed v(rho). rho may be a float or an array."""
        if validate:
            self.validate_density(rho)
        return self._speed(np.asarray(rho, dtype=float)) if np.ndim(rho) else float(
            self._speed(np.asarray(rho, dtype=float))
        )

    def flow(self, rho, validate=True):
        """Equilibrium flow q(rho) = rho * v(rho)."""
        if validate:
            self.validate_density(rho)
        rho_arr = np.asarray(rho, dtype=float)
        out = rho_arr * self._speed(rho_arr)
        return out if np.ndim(rho) else float(out)

    def speed_slope(self, rho, validate=True):
        """dv/drho, negative on the interior of the domain."""
        if validate:
            self.validate_density(rho)
        out = self._speed_slope(np.asarray(rho, dtype=float))
        return out if np.ndim(rho) else float(out)

    def wave_speed(self, rho, validate=True):
        """Kinematic wave speed q'(rho) = v + rho * dv/drho."""
        if validate:
            self.validate_density(rho)
        rho_arr = np.asarray(rho, dtype=float)
        out = self._speed(rho_arr) + rho_arr * self._speed_slope(rho_arr)
        return out if np.ndim(rho) else float(out)

    def sound_speed(self, rho, validate=True):
        """Traffic sound speed c(rho) = -rho * dv/drho >= 0."""
        if validate:
            self.validate_density(rho)
        rho_arr = np.asarray(rho, dtype=float)
        out = -rho_arr * self._speed_slope(rho_arr)
        return out if np.ndim(rho) else float(out)

    def velocity_flux(self, rho, validate=True):
        """Velocity-flux potential phi(rho) with phi'(rho) = rho * (dv/drho)^2.

        Closed forms per family; the sigmoid family has no tabulated form
        and falls back to adaptive quadrature of phi' anchored at
        ``phi_anchor`` (additive constants cancel wherever phi is used,
        since only differences enter the shock loci).
        """
        if validate:
            self.validate_density(rho)
        rho_arr = np.asarray(rho, dtype=float)
        out = self._velocity_flux(rho_arr)
        return out if np.ndim(rho) else float(out)

    def validate_density(self, rho):
        rho_arr = np.asarray(rho, dtype=float)
        lo_ok = rho_arr >= 0.0 if self.family != "greenberg" else rho_arr > 0.0
        hi_ok = rho_arr <= self.rho_max * (1.0 + 1e-12)
        if not bool(np.all(lo_ok & hi_ok)):
            raise DomainError(
                f"density outside [{0.0}, {self.rho_max}] for family "
                f"{self.family!r}: {rho_arr!r}"
            )

    # -- derived points -----------------------------------------------------

    def critical_density(self):
        """The unique density where the kinematic wave speed vanishes.

        Found by bracketed bisection/secant to ~1e-10 relative; concavity of
        the flow makes the root unique and the flow maximal there.
        """
        return _critical_density_cached(self)

    def capacity(self):
        """Maximum equilibrium flow q(critical_density)."""
        return self.flow(self.critical_density())

    # -- family internals ---------------------------------------------------

    def _speed(self, rho):
        if self.family == "greenshields":
            return self.v_free * (1.0 - rho / self.rho_jam)
        if self.family == "polynomial":
            return self.v_free * (1.0 - (rho / self.rho_jam) ** self.exponent)
        if self.family == "greenberg":
            return self.v_free * np.log(self.rho_jam / rho)
        if self.family == "underwood":
            return self.v_free * np.exp(-rho / self.rho_jam)
        if self.family == "newell":
            return self.v_free * (1.0 - self._newell_exp(rho))
        if self.family == "kerner":
            scale, center, width, offset = self.sigmoid
            return scale * (1.0 / (1.0 + np.exp((rho - center) / width)) - offset)
        raise DomainError(f"unknown family {self.family!r}")

    def _speed_slope(self, rho):
        if self.family == "greenshields":
            return np.full_like(np.asarray(rho, dtype=float), -self.v_free / self.rho_jam)
        if self.family == "polynomial":
            n = self.exponent
            return -self.v_free * n * rho ** (n - 1.0) / self.rho_jam**n
        if self.family == "greenberg":
            return -self.v_free / rho
        if self.family == "underwood":
            return -(self.v_free / self.rho_jam) * np.exp(-rho / self.rho_jam)
        if self.family == "newell":
            expo = self._newell_exp(rho)
            with np.errstate(divide="ignore", invalid="ignore"):
                slope = -self.wave_back * self.rho_jam * expo / np.square(rho)
            return np.where(rho > 0.0, slope, 0.0)
        if self.family == "kerner":
            scale, center, width, offset = self.sigmoid
            z = np.exp((rho - center) / width)
            return -scale * z / (width * np.square(1.0 + z))
        raise DomainError(f"unknown family {self.family!r}")

    def _newell_exp(self, rho):
        # exp{(|c_j|/v_f) (1 - rho_j/rho)}; the rho -> 0 limit is 0, giving
        # speed v_free there, which is the convention adopted for rho = 0.
        ratio = self.wave_back / self.v_free
        with np.errstate(divide="ignore"):
            arg = ratio * (1.0 - self.rho_jam / np.asarray(rho, dtype=float))
        return np.where(np.asarray(rho) > 0.0, np.exp(arg), 0.0)

    def _velocity_flux(self, rho):
        if self.family == "greenshields":
            return 0.5 * (self.v_free / self.rho_jam) ** 2 * np.square(rho)
        if self.family == "polynomial":
            n = self.exponent
            return 0.5 * n * self.v_free**2 * (rho / self.rho_jam) ** (2.0 * n)
        if self.family == "greenberg":
            return self.v_free**2 * np.log(rho)
        if self.family == "underwood":
            u = rho / self.rho_jam
            return -0.25 * self.v_free**2 * (1.0 + 2.0 * u) * np.exp(-2.0 * u)
        if self.family == "newell":
            b = self.wave_back / self.v_free
            with np.errstate(divide="ignore", invalid="ignore"):
                e2 = np.exp(2.0 * b * (1.0 - self.rho_jam / np.asarray(rho, dtype=float)))
                val = 0.5 * self.v_free**2 * (b * self.rho_jam / rho + 0.5) * e2
            return np.where(np.asarray(rho) > 0.0, val, 0.0)
        if self.family == "kerner":
            return _phi_quadrature(self, rho)
        raise DomainError(f"unknown family {self.family!r}")


def greenshields(v_free, rho_jam):
    return FundamentalDiagram("greenshields", v_free=v_free, rho_jam=rho_jam,
                              rho_max=rho_jam)


def polynomial(v_free, rho_jam, n):
    if n <= 1.0:
        raise DomainError("polynomial exponent must exceed 1")
    return FundamentalDiagram("polynomial", v_free=v_free, rho_jam=rho_jam,
                              exponent=float(n), rho_max=rho_jam)


def greenberg(v0, rho_jam):
    return FundamentalDiagram("greenberg", v_free=v0, rho_jam=rho_jam,
                              rho_max=rho_jam)


def underwood(v_free, rho_jam):
    # Flow concavity fails past 2*rho_jam, so the valid domain stops there.
    return FundamentalDiagram("underwood", v_free=v_free, rho_jam=rho_jam,
                              rho_max=2.0 * rho_jam)


def newell(v_free, wave_back, rho_jam):
    """Newell's law v = v_f (1 - exp{(|c_j|/v_f)(1 - rho_j/rho)}).

    ``wave_back`` is the jam wave speed c_j; its sign is ignored.
    The normalized form newell(1, 1, 1) gives v = 1 - exp(1 - 1/rho).
    """
    return FundamentalDiagram("newell", v_free=v_free, wave_back=abs(wave_back),
                              rho_jam=rho_jam, rho_max=rho_jam)


def kerner_sigmoid(scale=5.0461, center=0.25, width=0.06, offset=3.72e-6):
    """Sigmoid speed law; defaults are the constants used for the
    constant-sound-speed model studies."""
    # Zero-speed density: where the sigmoid output hits the offset.
    rho0 = center + width * math.log(1.0 / offset - 1.0)
    return FundamentalDiagram("kerner", v_free=scale * (1.0 / (1.0 + math.exp(-center / width)) - offset),
                              sigmoid=(scale, center, width, offset), rho_max=rho0)


def normalized_newell():
    return newell(1.0, 1.0, 1.0)


@lru_cache(maxsize=None)
def _critical_density_cached(fd):
    lo = fd.rho_max * 1e-9 if fd.family == "greenberg" else fd.rho_max * 1e-12
    hi = fd.rho_max

    def g(rho):
        return fd.wave_speed(rho, validate=False)

    g_lo = g(lo)
    g_hi = g(hi)
    if g_lo * g_hi > 0.0:
        raise RootBracketError(
            f"wave speed does not change sign on the domain of {fd.family!r}"
        )
    return bracketed_root(g, lo, hi, residual_tol=abs(g_lo) * 1e-14 + 1e-300)


def _phi_quadrature(fd, rho):
    def phi_one(r):
        return _phi_point_cached(fd, float(r))

    rho_arr = np.asarray(rho, dtype=float)
    if rho_arr.ndim == 0:
        return np.float64(phi_one(rho_arr))
    return np.array([phi_one(r) for r in rho_arr.ravel()]).reshape(rho_arr.shape)


@lru_cache(maxsize=4096)
def _phi_point_cached(fd, rho):
    def dphi(r):
        return r * fd.speed_slope(r, validate=False) ** 2

    val, _ = quad(dphi, fd.phi_anchor if fd.phi_anchor > 0.0 else fd.rho_max * 1e-6,
                  rho, epsabs=1e-13, epsrel=1e-12, limit=200)
    return val


@dataclass(frozen=True)
class WaveSpeeds:
    """Characteristic speeds of one state under one model."""

    lambda_star: float
    sound_speed: float
    lambda1: float
    lambda2: float


def wave_speeds(fd, rho, v, model="lwr", c0=None):
    """Characteristic speeds at (rho, v).

    model = "lwr":   lambda1 = lambda2 = lambda_star = q'(rho).
    model = "zhang": lambda1,2 = v -+ c(rho) with c = -rho dv/drho, so
                     lambda1 = v + rho dv/drho is the smaller.
    model = "pw":    lambda1,2 = v -+ c0 (requires c0).
    """
    lam_star = fd.wave_speed(rho)
    c = fd.sound_speed(rho)
    if model == "lwr":
        return WaveSpeeds(lam_star, c, lam_star, lam_star)
    if model == "zhang":
        return WaveSpeeds(lam_star, c, v - c, v + c)
    if model == "pw":
        if c0 is None or c0 <= 0.0:
            raise DomainError("the constant-sound-speed model needs c0 > 0")
        return WaveSpeeds(lam_star, c0, v - c0, v + c0)
    raise DomainError(f"unknown model {model!r}")


def pw_stability_bounds(fd, c0, scan_points=4096):
    """The two densities where rho * dv/drho + c0 = 0.

    They bracket the band where the sub-characteristic leaves the cone of
    the constant-sound-speed model's characteristics (the linearly unstable
    band). Exactly two sign changes must appear on a scanned mesh; each root
    is then refined to 1e-6.
    """
    rho = np.linspace(fd.rho_max * 1e-6, fd.rho_max, scan_points)
    g = rho * fd.speed_slope(rho, validate=False) + c0
    signs = np.sign(g)
    flips = np.nonzero(signs[:-1] * signs[1:] < 0)[0]
    if len(flips) != 2:
        raise RootBracketError(
            f"expected exactly 2 sign changes of rho*v'(rho)+c0, found {len(flips)}"
        )

    def h(r):
        return float(r * fd.speed_slope(r, validate=False) + c0)

    roots = []
    for i in flips:
        r = bracketed_root(h, float(rho[i]), float(rho[i + 1]), residual_tol=1e-12)
        # Polish the bracket down to the stated 1e-6 absolute tolerance.
        roots.append(r)
    return roots[0], roots[1]
