"""Logarithmic PSNR-rate model.

PSNR in dB is ``a * ln(rate) + b`` with the rate in kbit/s. Effective
capacities elsewhere in the package are in bit/s; the conversion happens only
here (``rate_bps`` arguments and the factor 1000 inside :func:`v_min`).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from .errors import DomainError

KBIT = 1000.0


@dataclass(frozen=True)
class QualityModel:
    """Coefficients of the log model plus the PSNR floor.

    Parameters
    ----------
    a : float
        dB per unit of ln(kbit/s); must be positive.
    b : float
        dB at 1 kbit/s.
    q_min : float
        Minimum acceptable PSNR in dB. ``-inf`` disables the floor.
    """

    a: float
    b: float
    q_min: float = 20.0

    def __post_init__(self):
        if not (self.a > 0 and math.isfinite(self.a)):
            raise DomainError(f"a must be positive and finite, got {self.a}")
        if not math.isfinite(self.b):
            raise DomainError(f"b must be finite, got {self.b}")
        if math.isnan(self.q_min) or self.q_min == math.inf:
            raise DomainError(f"q_min must be a number below +inf, got {self.q_min}")


def psnr(rate_kbps: float, model: QualityModel) -> float:
    """PSNR in dB at ``rate_kbps``."""
    if not rate_kbps > 0:
        raise DomainError(f"rate must be positive, got {rate_kbps}")
    return model.a * math.log(rate_kbps) + model.b


def psnr_from_bps(rate_bps: float, model: QualityModel) -> float:
    return psnr(rate_bps / KBIT, model)


def rate_for_psnr(q_db: float, model: QualityModel) -> float:
    """Rate in kbit/s that yields ``q_db``."""
    return math.exp((q_db - model.b) / model.a)


def ln_v_min(model: QualityModel, theta: float, tc: float) -> float:
    """Natural log of :func:`v_min`; 0 when the floor is disabled."""
    if not (theta > 0 and tc > 0):
        raise DomainError("theta and tc must be positive")
    if model.q_min == -math.inf:
        return 0.0
    return theta * tc * KBIT * rate_for_psnr(model.q_min, model)


def v_min(model: QualityModel, theta: float, tc: float) -> float:
    """Smallest ``V`` at which the user meets ``q_min``.

    ``V = exp(theta * tc * R)`` with ``R`` in bit/s, hence the factor 1000 on
    the kbit/s model rate. Returns ``inf`` when ``V`` exceeds double range;
    :func:`ln_v_min` stays finite there.
    """
    ln_v = ln_v_min(model, theta, tc)
    return math.exp(ln_v) if ln_v < 709.0 else math.inf


def fit_log_model(samples) -> tuple[float, float]:
    """Least-squares ``(a, b)`` from ``(rate_kbps, psnr_db)`` samples.

    Raises
    ------
    DomainError
        Fewer than two samples, a nonpositive rate, or all rates equal.
    """
    arr = np.asarray(list(samples), dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
        raise DomainError("need at least two (rate, psnr) samples")
    rate, q = arr[:, 0], arr[:, 1]
    if np.any(rate <= 0):
        raise DomainError("rates must be positive")
    x = np.log(rate)
    if np.ptp(x) == 0:
        raise DomainError("all rates are equal; slope is undetermined")
    design = np.column_stack([x, np.ones_like(x)])
    (a, b), *_ = np.linalg.lstsq(design, q, rcond=None)
    return float(a), float(b)


@lru_cache(maxsize=None)
def load_presets() -> dict[str, tuple[float, float]]:
    """Video name -> ``(a, b)`` for the shipped sequences."""
    text = resources.files("fdalloc").joinpath("data/video_presets.json").read_text()
    return {name: (v["a"], v["b"]) for name, v in json.loads(text).items()}


def preset(name: str, q_min: float = 20.0) -> QualityModel:
    """QualityModel for a shipped video sequence (case-insensitive name)."""
    table = {k.lower(): v for k, v in load_presets().items()}
    try:
        a, b = table[name.lower()]
    except KeyError:
        raise DomainError(f"unknown video preset {name!r}; known: {sorted(load_presets())}") from None
    return QualityModel(a, b, q_min)
