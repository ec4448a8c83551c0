"""Closed-loop vector fields for scalar adaptive stabilization.

The plant is dy/dt = a*y + b*u with a, b unknown to the controller and the
sign of b possibly unknown as well. Every controller here adapts a scalar
gain k online, so the closed-loop state is (y, k). The dithered designs
("proposed" and "swapped") inject a zero-mean oscillation whose amplitude
grows like sqrt(omega); their behavior for large omega is captured by the
averaged system exposed as `lie_bracket_rhs`.

Controller blindness is structural: the control laws (`*_control`) never
receive plant parameters. The `*_rhs` wrappers combine a control law with
the plant to produce the closed-loop derivative.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

__all__ = [
    "PlantParams",
    "State",
    "PolarState",
    "ControllerVariant",
    "ControllerSpec",
    "RhsEval",
    "s_cos_s",
    "proposed_control",
    "swapped_control",
    "nussbaum_control",
    "willems_byrnes_control",
    "proposed_rhs",
    "swapped_rhs",
    "nussbaum_rhs",
    "willems_byrnes_rhs",
    "lie_bracket_rhs",
    "to_polar",
    "from_polar",
    "polar_closed_loop_rhs",
    "polar_lbs_rhs",
    "closed_loop",
    "lie_bracket_loop",
    "polar_closed_loop",
]


@dataclass(frozen=True)
class PlantParams:
    """Scalar plant dy/dt = a*y + b*u.

    Parameters
    ----------
    a : float
        Open-loop pole. Positive values make the plant unstable.
    b : float
        Input gain. Must be nonzero; its sign is what the adaptive
        designs do not get to know.
    """

    a: float
    b: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError("PlantParams: a and b must be finite")
        if self.b == 0.0:
            raise ValueError("PlantParams: b must be nonzero")

    @property
    def center(self) -> float:
        """Gain value a/b at which the averaged feedback cancels the pole."""
        return self.a / self.b


@dataclass(frozen=True)
class State:
    """Closed-loop state: plant output y and adaptive gain k."""

    y: float
    k: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.y) and math.isfinite(self.k)):
            raise ValueError("State: y and k must be finite")

    def as_tuple(self) -> tuple[float, float]:
        return (self.y, self.k)


@dataclass(frozen=True)
class PolarState:
    """State in polar coordinates about the point (y, k) = (0, a/b).

    r is the distance to that point and phi the angle measured so that
    y = r*cos(phi), k = a/b + r*sin(phi). `degenerate` marks the exact
    center, where the angle is not defined and is reported as 0.
    """

    r: float
    phi: float
    degenerate: bool = False

    def __post_init__(self) -> None:
        if not (math.isfinite(self.r) and math.isfinite(self.phi)):
            raise ValueError("PolarState: r and phi must be finite")
        if self.r < 0.0:
            raise ValueError("PolarState: r must be nonnegative")

    def as_tuple(self) -> tuple[float, float]:
        return (self.r, self.phi)


class ControllerVariant(enum.Enum):
    PROPOSED = "proposed"
    SWAPPED = "swapped"
    NUSSBAUM = "nussbaum"
    WILLEMS_BYRNES = "willems_byrnes"

    @classmethod
    def from_name(cls, name: str) -> "ControllerVariant":
        try:
            return cls(name)
        except ValueError:
            valid = ", ".join(v.value for v in cls)
            raise ValueError(
                f"unknown controller variant {name!r} (expected one of: {valid})"
            ) from None


def s_cos_s(s: float) -> float:
    """Default Nussbaum-type gain shape h(s) = s*cos(s)."""
    return s * math.cos(s)


@dataclass(frozen=True)
class ControllerSpec:
    """Controller selection plus the parameters that variant needs.

    omega is required (positive) for the dithered variants. nussbaum_fn
    defaults to `s_cos_s` and is read only by the Nussbaum variant.
    sign_b must be -1 or +1 and is read only by the Willems-Byrnes
    variant; no other controller gets access to it.
    """

    variant: ControllerVariant
    omega: float | None = None
    nussbaum_fn: Callable[[float], float] | None = None
    sign_b: int | None = None

    def __post_init__(self) -> None:
        if self.variant in (ControllerVariant.PROPOSED, ControllerVariant.SWAPPED):
            if self.omega is None or not math.isfinite(self.omega) or self.omega <= 0:
                raise ValueError(
                    f"ControllerSpec: variant {self.variant.value!r} requires omega > 0"
                )
        if self.variant is ControllerVariant.NUSSBAUM and self.nussbaum_fn is None:
            object.__setattr__(self, "nussbaum_fn", s_cos_s)
        if self.variant is ControllerVariant.WILLEMS_BYRNES:
            if self.sign_b not in (-1, 1):
                raise ValueError(
                    "ControllerSpec: variant 'willems_byrnes' requires sign_b in {-1, +1}"
                )


class RhsEval(NamedTuple):
    """Closed-loop derivative plus the control value used to produce it."""

    dy: float
    dk: float
    u: float


# -- control laws (plant-blind) ---------------------------------------------


def proposed_control(s: State, t: float, omega: float) -> tuple[float, float]:
    """Primary dither design: u = -k*y - y*sqrt(w)*sin(wt), dk = y^2*sqrt(w)*cos(wt)."""
    sw = math.sqrt(omega)
    u = -s.k * s.y - s.y * sw * math.sin(omega * t)
    dk = s.y * s.y * sw * math.cos(omega * t)
    return u, dk


def swapped_control(s: State, t: float, omega: float) -> tuple[float, float]:
    """Role-swapped dither design with the same averaged behavior.

    The quadratic term moves from the gain law into the input:
    u = -k*y - 2*y^2*sqrt(w)*sin(wt), dk = y*sqrt(w)*cos(wt).
    """
    sw = math.sqrt(omega)
    u = -s.k * s.y - 2.0 * s.y * s.y * sw * math.sin(omega * t)
    dk = s.y * sw * math.cos(omega * t)
    return u, dk


def nussbaum_control(
    s: State, t: float, h: Callable[[float], float] = s_cos_s
) -> tuple[float, float]:
    """Classical Nussbaum-gain law: u = h(k)*k*y, dk = y^2."""
    u = h(s.k) * s.k * s.y
    dk = s.y * s.y
    return u, dk


def willems_byrnes_control(s: State, sign_b: int) -> tuple[float, float]:
    """Known-direction adaptive law: u = -k*y, dk = sign(b)*y^2.

    The only controller here that is allowed to read the sign of b.
    """
    u = -s.k * s.y
    dk = float(sign_b) * s.y * s.y
    return u, dk


# -- closed-loop right-hand sides --------------------------------------------


def proposed_rhs(p: PlantParams, s: State, t: float, omega: float) -> RhsEval:
    u, dk = proposed_control(s, t, omega)
    return RhsEval(p.a * s.y + p.b * u, dk, u)


def swapped_rhs(p: PlantParams, s: State, t: float, omega: float) -> RhsEval:
    u, dk = swapped_control(s, t, omega)
    return RhsEval(p.a * s.y + p.b * u, dk, u)


def nussbaum_rhs(
    p: PlantParams, s: State, t: float, h: Callable[[float], float] = s_cos_s
) -> RhsEval:
    u, dk = nussbaum_control(s, t, h)
    return RhsEval(p.a * s.y + p.b * u, dk, u)


def willems_byrnes_rhs(p: PlantParams, s: State, t: float, sign_b: int) -> RhsEval:
    u, dk = willems_byrnes_control(s, sign_b)
    return RhsEval(p.a * s.y + p.b * u, dk, u)


def lie_bracket_rhs(p: PlantParams, s: State) -> tuple[float, float]:
    """Averaged system for both dithered designs.

    dy = (a - b*k)*y, dk = b*y^2. Time-invariant; all points with y = 0
    are equilibria, and trajectories with y != 0 move along circular arcs
    centered at (0, a/b).
    """
    return ((p.a - p.b * s.k) * s.y, p.b * s.y * s.y)


# -- polar coordinates about (0, a/b) ----------------------------------------


def to_polar(p: PlantParams, s: State) -> PolarState:
    """Polar coordinates of s about the averaged-orbit center (0, a/b).

    Exactly at the center the angle is undefined; that case returns
    r = 0, phi = 0 with the degenerate flag set.
    """
    dy = s.y
    dk = s.k - p.center
    r = math.hypot(dy, dk)
    if r == 0.0:
        return PolarState(0.0, 0.0, degenerate=True)
    # clamp guards asin against |dk/r| exceeding 1 by rounding
    ratio = max(-1.0, min(1.0, dk / r))
    if dy >= 0.0:
        phi = math.asin(ratio)
    else:
        phi = math.pi - math.asin(ratio)
    return PolarState(r, phi)


def from_polar(p: PlantParams, ps: PolarState) -> State:
    return State(ps.r * math.cos(ps.phi), ps.r * math.sin(ps.phi) + p.center)


def polar_closed_loop_rhs(
    p: PlantParams, ps: PolarState, t: float, omega: float
) -> tuple[float, float]:
    """Closed loop of the primary dither design in polar coordinates.

    Equivalent to transporting `proposed_rhs` through `to_polar`, which is
    how the tests cross-check it.
    """
    b = p.b
    r, phi = ps.r, ps.phi
    sw = math.sqrt(omega)
    sp, cp = math.sin(phi), math.cos(phi)
    swt, cwt = math.sin(omega * t), math.cos(omega * t)
    dr = (
        -b * r * r * sp * cp * cp
        - b * r * cp * cp * sw * swt
        + r * r * sp * cp * cp * sw * cwt
    )
    dphi = (
        b * r * sp * sp * cp
        + b * sp * cp * sw * swt
        + r * cp * cp * cp * sw * cwt
    )
    return (dr, dphi)


def polar_lbs_rhs(p: PlantParams, ps: PolarState) -> tuple[float, float]:
    """Averaged system in polar coordinates: dr = 0, dphi = b*r*cos(phi).

    The zero radial rate is the conservation law behind the circular
    averaged orbits.
    """
    return (0.0, p.b * ps.r * math.cos(ps.phi))


# -- tuple-state closures for the integrators --------------------------------

Rhs2 = Callable[[tuple[float, float], float], tuple[float, float]]
InputFn = Callable[[tuple[float, float], float], float]


def closed_loop(p: PlantParams, spec: ControllerSpec) -> tuple[Rhs2, InputFn]:
    """Bind plant and controller into plain-tuple callables.

    Returns (rhs, control) where rhs((y, k), t) -> (dy, dk) and
    control((y, k), t) -> u. These avoid per-step dataclass construction
    and are what the fixed-step integrators consume.
    """
    a, b = p.a, p.b
    v = spec.variant
    if v is ControllerVariant.PROPOSED:
        sw = math.sqrt(spec.omega)
        w = spec.omega

        def control(s: tuple[float, float], t: float) -> float:
            y, k = s
            return -k * y - y * sw * math.sin(w * t)

        def rhs(s: tuple[float, float], t: float) -> tuple[float, float]:
            y, k = s
            u = -k * y - y * sw * math.sin(w * t)
            return (a * y + b * u, y * y * sw * math.cos(w * t))

    elif v is ControllerVariant.SWAPPED:
        sw = math.sqrt(spec.omega)
        w = spec.omega

        def control(s: tuple[float, float], t: float) -> float:
            y, k = s
            return -k * y - 2.0 * y * y * sw * math.sin(w * t)

        def rhs(s: tuple[float, float], t: float) -> tuple[float, float]:
            y, k = s
            u = -k * y - 2.0 * y * y * sw * math.sin(w * t)
            return (a * y + b * u, y * sw * math.cos(w * t))

    elif v is ControllerVariant.NUSSBAUM:
        h = spec.nussbaum_fn

        def control(s: tuple[float, float], t: float) -> float:
            y, k = s
            return h(k) * k * y

        def rhs(s: tuple[float, float], t: float) -> tuple[float, float]:
            y, k = s
            return (a * y + b * (h(k) * k * y), y * y)

    elif v is ControllerVariant.WILLEMS_BYRNES:
        sb = float(spec.sign_b)

        def control(s: tuple[float, float], t: float) -> float:
            y, k = s
            return -k * y

        def rhs(s: tuple[float, float], t: float) -> tuple[float, float]:
            y, k = s
            return (a * y - b * k * y, sb * y * y)

    else:  # pragma: no cover
        raise ValueError(f"unhandled variant {v!r}")

    return rhs, control


def lie_bracket_loop(p: PlantParams) -> Rhs2:
    """Averaged system as a plain-tuple callable for the integrators."""
    a, b = p.a, p.b

    def rhs(s: tuple[float, float], t: float) -> tuple[float, float]:
        y, k = s
        return ((a - b * k) * y, b * y * y)

    return rhs


def polar_closed_loop(p: PlantParams, omega: float) -> Rhs2:
    """Polar closed loop of the primary design as a plain-tuple callable.

    Unlike `polar_closed_loop_rhs` this skips PolarState validation, so an
    integrator that momentarily steps r below zero is not rejected.
    """
    b = p.b
    sw = math.sqrt(omega)

    def rhs(s: tuple[float, float], t: float) -> tuple[float, float]:
        r, phi = s
        sp, cp = math.sin(phi), math.cos(phi)
        swt, cwt = math.sin(omega * t), math.cos(omega * t)
        dr = (
            -b * r * r * sp * cp * cp
            - b * r * cp * cp * sw * swt
            + r * r * sp * cp * cp * sw * cwt
        )
        dphi = (
            b * r * sp * sp * cp
            + b * sp * cp * sw * swt
            + r * cp * cp * cp * sw * cwt
        )
        return (dr, dphi)

    return rhs
