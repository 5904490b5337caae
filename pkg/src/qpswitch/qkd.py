"""BB84 secret-key rate over a packet-switched path.

The rate per transmitted signal is ``R = K * Q * (1 - f*H2(e_Z) - H2(e_X))``
where ``K = P**n * (T_Q - n*T_P) / T_Q`` accounts for the ``n`` switches: each
must have its output free (probability ``P``) and each eats a ``T_P`` slice
of the ``T_Q`` long payload while it processes the header.

Gain and error rate come from the usual single-photon channel model with
two detectors, so the vacuum yield is ``Y0 = 2 * p_dark``.
"""

from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class QkdParams:
    L: float = 0.0
    n: int = 0
    alpha: float = 0.2
    eta_det: float = 0.5
    p_dark: float = 1e-6
    f: float = 1.15
    e_d: float = 0.01
    P: float = 0.5
    tq_over_tp: float = 100.0

    def __post_init__(self) -> None:
        if self.L < 0 or self.alpha < 0:
            raise ValueError("length and attenuation must be non-negative")
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 0:
            raise ValueError(f"switch count must be a non-negative integer, got {self.n}")
        for name in ("eta_det", "p_dark", "P"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value} outside [0, 1]")
        if not 0.0 <= self.e_d <= 0.5:
            raise ValueError(f"e_d={self.e_d} outside [0, 0.5]")
        if self.f < 1.0:
            raise ValueError(f"reconciliation inefficiency f={self.f} must be >= 1")
        if not self.tq_over_tp > 0:
            raise ValueError("tq_over_tp must be positive")


@dataclass(frozen=True)
class QkdResult:
    L_km: float
    n: int
    Q: float
    e_Z: float
    e_X: float
    K: float
    R: float


def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary entropy argument {x} outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def k_factor(P: float, n: int, tq_over_tp: float) -> float:
    """Fraction of the payload that survives ``n`` switches on average."""
    if not 0.0 <= P <= 1.0:
        raise ValueError(f"availability {P} outside [0, 1]")
    if n < 0 or tq_over_tp <= 0:
        raise ValueError("need n >= 0 and a positive T_Q/T_P ratio")
    k = P**n * (tq_over_tp - n) / tq_over_tp
    return min(1.0, max(0.0, k))


def gain_qber(params: QkdParams) -> tuple[float, float]:
    """Return ``(Q, e)`` for the channel; the error rate is the same in both bases."""
    eta = params.eta_det * 10.0 ** (-params.alpha * params.L / 10.0)
    y0 = 2.0 * params.p_dark
    q = 1.0 - (1.0 - y0) * (1.0 - eta)
    if q <= 0.0:
        return 0.0, 0.5
    e = (0.5 * y0 + params.e_d * eta) / q
    return q, min(0.5, e)


def secret_key_rate(params: QkdParams) -> QkdResult:
    q, e = gain_qber(params)
    k = k_factor(params.P, params.n, params.tq_over_tp)
    h = binary_entropy(e)
    bracket = 1.0 - params.f * h - h
    r = k * q * bracket if bracket > 0 else 0.0
    return QkdResult(params.L, params.n, q, e, e, k, r)


def monte_carlo_k(P: float, n: int, tq_over_tp: float, trials: int, seed: int | None = 0) -> float:
    """Estimate K by sending ``trials`` frames through ``n`` switches.

    A frame is lost outright if any switch is busy; otherwise each switch
    truncates ``T_P / T_Q`` of the payload.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    if not 0.0 <= P <= 1.0:
        raise ValueError(f"availability {P} outside [0, 1]")
    rng = np.random.default_rng(seed)
    passed = np.all(rng.random((trials, n)) < P, axis=1)
    surviving = max(0.0, 1.0 - n / tq_over_tp)
    return float(np.mean(passed) * surviving)


def qkd_sweep(L_grid: Iterable[float], n_list: Iterable[int], params: QkdParams | None = None) -> list[QkdResult]:
    """Rate table ordered by ``n`` then ``L``."""
    base = params if params is not None else QkdParams()
    L_grid, n_list = list(L_grid), list(n_list)
    if not L_grid or not n_list:
        raise ValueError("sweep grids must be non-empty")
    return [secret_key_rate(replace(base, L=float(L), n=int(n))) for n in n_list for L in L_grid]
