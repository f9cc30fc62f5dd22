"""Effective capacity of a full-duplex link over exponential fading.

A link delivers an instantaneous rate ``bw * log2(1 + sinr)`` where the power
gain is exponential with mean ``Z`` and the receiver also sees the leaked
power ``mu * p_other`` of its own co-located transmitter. Under a QoS exponent
``theta`` the sustainable constant arrival rate is

    R = ln V / (theta * tc),   V = 1 / E[exp(-theta * tc * rate)].

``V`` can be very large, so the kernels work with ``ln V`` and the public
functions convert at the edge.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._backend import kernels
from .errors import DomainError, InfeasibleError


@lru_cache(maxsize=None)
def _laguerre(order: int):
    return np.polynomial.laguerre.laggauss(order)


@dataclass(frozen=True)
class ChannelModel:
    """Exponentially distributed power gain.

    Parameters
    ----------
    mean_gain : float
        Mean ``Z`` of the gain.
    quadrature_order : int
        Gauss-Legendre nodes per panel of the fading expectation.
    deterministic : bool
        Replace the fading by the constant gain ``Z``. Handy for closed-form
        checks and for the no-fading limit.
    """

    mean_gain: float
    quadrature_order: int = 10
    deterministic: bool = False

    def __post_init__(self):
        if not (self.mean_gain > 0 and math.isfinite(self.mean_gain)):
            raise DomainError(f"mean_gain must be positive and finite, got {self.mean_gain}")
        if int(self.quadrature_order) != self.quadrature_order or not 2 <= self.quadrature_order <= 64:
            raise DomainError(f"quadrature_order must be an integer in [2, 64], got {self.quadrature_order}")

    def expectation(self, f, order: int = 64) -> float:
        """``E[f(gamma)]`` by Gauss-Laguerre quadrature.

        Suitable for smooth ``f``. The effective-capacity kernel does not go
        through here: its integrand is too sharply peaked near zero gain for a
        global rule, so it has its own panel quadrature.
        """
        if self.deterministic:
            return float(f(np.asarray(self.mean_gain)))
        x, w = _laguerre(order)
        return float(np.dot(w, f(self.mean_gain * x)))


@dataclass(frozen=True)
class LinkRadioParams:
    """Radio constants for one receiving user.

    ``mu_other`` is the suppression factor of the interfering co-located
    transmitter, i.e. the partner's power leaks in scaled by it. Zero stands
    for perfect cancellation.
    """

    theta: float
    mu_other: float
    n0: float
    tc: float

    def __post_init__(self):
        if not self.theta > 0:
            raise DomainError(f"theta must be positive, got {self.theta}")
        if not 0 <= self.mu_other <= 1:
            raise DomainError(f"mu_other must lie in [0, 1], got {self.mu_other}")
        if not self.n0 > 0:
            raise DomainError(f"n0 must be positive, got {self.n0}")
        if not self.tc > 0:
            raise DomainError(f"tc must be positive, got {self.tc}")


def _check(p_own, p_other, bw):
    if p_own < 0 or p_other < 0:
        raise DomainError(f"powers must be nonnegative, got p_own={p_own}, p_other={p_other}")
    if bw < 0:
        raise DomainError(f"bandwidth must be nonnegative, got {bw}")
    if any(math.isnan(v) for v in (p_own, p_other, bw)):
        raise DomainError("NaN input")


def _args(radio: LinkRadioParams, ch: ChannelModel):
    return (radio.theta, radio.mu_other, radio.n0, radio.tc, ch.mean_gain,
            int(ch.quadrature_order), bool(ch.deterministic))


def log_v_value(p_own: float, p_other: float, bw: float,
                radio: LinkRadioParams, ch: ChannelModel) -> float:
    """Natural log of :func:`v_value`; finite even when ``V`` overflows."""
    _check(p_own, p_other, bw)
    return kernels.ln_v(float(p_own), float(p_other), float(bw), *_args(radio, ch))


def v_value(p_own: float, p_other: float, bw: float,
            radio: LinkRadioParams, ch: ChannelModel) -> float:
    """Inverse fading moment ``V >= 1`` of one link.

    ``V`` equals 1 when ``p_own`` is zero and, by continuity, at zero bandwidth.

    Raises
    ------
    DomainError
        On a negative power or bandwidth.
    """
    return math.exp(log_v_value(p_own, p_other, bw, radio, ch))


def effective_capacity(p_own: float, p_other: float, bw: float,
                       radio: LinkRadioParams, ch: ChannelModel) -> float:
    """Effective capacity in bit/s."""
    return log_v_value(p_own, p_other, bw, radio, ch) / (radio.theta * radio.tc)


def _ln_target(target_v):
    if not target_v >= 1:
        raise DomainError(f"target V must be >= 1, got {target_v}")
    return math.log(target_v)


def invert_v_for_power(target_v: float, fixed_other_power: float, bw: float,
                       radio: LinkRadioParams, ch: ChannelModel, p_max: float) -> float:
    """Own power in ``[0, p_max]`` at which the link reaches ``target_v``.

    Raises
    ------
    InfeasibleError
        If even ``p_max`` falls short.
    """
    t = _ln_target(target_v)
    _check(p_max, fixed_other_power, bw)
    p = kernels.power_for_ln_v(t, float(fixed_other_power), float(bw), *_args(radio, ch), float(p_max))
    if math.isinf(p):
        raise InfeasibleError("power-cap", f"V={target_v} needs more than p_max={p_max} at bw={bw}")
    return p


def invert_v_for_bandwidth(target_v: float, p_own: float, p_other: float,
                           radio: LinkRadioParams, ch: ChannelModel,
                           bw_hint: float | None = None) -> float:
    """Bandwidth at which the link reaches ``target_v``.

    ``V`` grows with bandwidth but saturates (the SNR per Hz vanishes), so
    some targets are out of reach at any bandwidth. The search stops at
    ``bw_hint`` when given, otherwise at 1e15 Hz.

    Raises
    ------
    InfeasibleError
        If the target is not reached below the ceiling.
    """
    t = _ln_target(target_v)
    _check(p_own, p_other, 0.0)
    if t > 0 and not p_own > 0:
        raise DomainError("p_own must be positive to reach V > 1")
    ceiling = 1e15 if bw_hint is None else float(bw_hint)
    bw = kernels.bw_for_ln_v(t, float(p_own), float(p_other), *_args(radio, ch), ceiling)
    if math.isinf(bw):
        raise InfeasibleError("bandwidth-ceiling", f"V={target_v} not reached below {ceiling} Hz")
    return bw
