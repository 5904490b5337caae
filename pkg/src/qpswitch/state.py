"""Two-qubit density matrices, the noise channels acting on them, and EPR fidelity.

States are plain ``numpy`` arrays of shape (2, 2) or (4, 4). For two-qubit
states qubit 0 is the first tensor factor, so basis index ``2*a + b`` holds
``|a>|b>``.

All functions are pure: inputs are never modified and a new array is returned.
"""

from __future__ import annotations

import math

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10


class InvalidStateError(ValueError):
    """Raised when an array is not a valid one- or two-qubit density matrix."""


class UnphysicalChannelError(ValueError):
    """Raised for channel parameters that do not define a CPTP map."""


_I2 = np.eye(2, dtype=complex)


def check_density_matrix(rho) -> np.ndarray:
    """Validate ``rho`` and return it as a complex array.

    Raises:
        InvalidStateError: wrong shape, not Hermitian, trace not one, or a
            negative eigenvalue below ``-PSD_TOL``.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape not in ((2, 2), (4, 4)):
        raise InvalidStateError(f"expected a 2x2 or 4x4 matrix, got shape {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise InvalidStateError("matrix has non-finite entries")
    asym = np.max(np.abs(rho - rho.conj().T))
    if asym > HERMITIAN_TOL:
        raise InvalidStateError(f"matrix is not Hermitian (max deviation {asym:.3e})")
    tr = np.trace(rho)
    if abs(tr - 1.0) > TRACE_TOL:
        raise InvalidStateError(f"trace is {tr.real:.15g}, expected 1")
    lowest = np.linalg.eigvalsh(rho)[0]
    if lowest < -PSD_TOL:
        raise InvalidStateError(f"matrix is not positive semidefinite (eigenvalue {lowest:.3e})")
    return rho


def make_epr() -> np.ndarray:
    """Return the projector onto (|00> + |11>)/sqrt(2)."""
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = rho[0, 3] = rho[3, 0] = rho[3, 3] = 0.5
    return rho


def werner(weight: float) -> np.ndarray:
    """Mixture ``weight * |Phi+><Phi+| + (1 - weight) * I/4``."""
    return weight * make_epr() + (1.0 - weight) * np.eye(4, dtype=complex) / 4.0


def depolar_prob(length: float, p_l: float) -> float:
    """Depolarizing probability accumulated over ``length`` km of fiber.

    ``p_l`` is the per-km decay exponent: the surviving weight after the fiber
    is ``10 ** (-length * p_l)``.
    """
    if length < 0 or p_l < 0:
        raise ValueError(f"length and p_l must be non-negative, got {length}, {p_l}")
    p = 1.0 - 10.0 ** (-length * p_l)
    return min(1.0, max(0.0, p))


def _check_qubit(rho: np.ndarray, qubit: int) -> None:
    valid = (0,) if rho.shape == (2, 2) else (0, 1)
    if qubit not in valid:
        raise ValueError(f"qubit index {qubit} is invalid for a {rho.shape[0]}-dim state")


def _lift(op: np.ndarray, qubit: int, dim: int) -> np.ndarray:
    if dim == 2:
        return op
    return np.kron(op, _I2) if qubit == 0 else np.kron(_I2, op)


def _apply_kraus(rho: np.ndarray, kraus: list[np.ndarray], qubit: int) -> np.ndarray:
    dim = rho.shape[0]
    out = np.zeros_like(rho)
    for k in kraus:
        big = _lift(k, qubit, dim)
        out += big @ rho @ big.conj().T
    # kill rounding asymmetry so outputs stay Hermitian to machine precision
    return (out + out.conj().T) / 2.0


def apply_depolarizing(rho, qubit: int, p: float) -> np.ndarray:
    """Replace ``qubit`` by the maximally mixed state with probability ``p``.

    ``rho -> (1 - p) rho + p * (I/2 on qubit) (x) Tr_qubit(rho)``
    """
    rho = check_density_matrix(rho)
    _check_qubit(rho, qubit)
    if not 0.0 <= p <= 1.0:
        raise UnphysicalChannelError(f"depolarizing probability {p} outside [0, 1]")
    if p == 0.0:
        return rho.copy()
    if rho.shape == (2, 2):
        replaced = np.trace(rho) * _I2 / 2.0
    else:
        t = rho.reshape(2, 2, 2, 2)
        if qubit == 0:
            rest = np.einsum("iaib->ab", t)
            replaced = np.kron(_I2 / 2.0, rest)
        else:
            rest = np.einsum("aibi->ab", t)
            replaced = np.kron(rest, _I2 / 2.0)
    out = (1.0 - p) * rho + p * replaced
    return (out + out.conj().T) / 2.0


def t1t2_kraus(t: float, t1: float, t2: float) -> list[np.ndarray]:
    """Single-qubit Kraus operators for ``t`` ns of T1/T2 memory decoherence.

    Amplitude damping toward |0> with ``gamma = 1 - exp(-t/T1)`` followed by
    pure dephasing chosen so the coherence decays by exactly ``exp(-t/T2)``.
    Infinite ``t1``/``t2`` switch the corresponding process off.
    """
    if t < 0:
        raise ValueError(f"elapsed time must be non-negative, got {t}")
    if t1 <= 0 or t2 <= 0 or math.isnan(t1) or math.isnan(t2):
        raise UnphysicalChannelError(f"T1 and T2 must be positive, got {t1}, {t2}")
    if t2 > 2.0 * t1:
        raise UnphysicalChannelError(f"T2={t2} exceeds 2*T1={2.0 * t1}")

    inv_t1 = 0.0 if math.isinf(t1) else 1.0 / t1
    inv_t2 = 0.0 if math.isinf(t2) else 1.0 / t2
    gamma = -math.expm1(-t * inv_t1)
    # sqrt(1 - gamma) without the cancellation of forming 1 - gamma
    keep = math.exp(-0.5 * t * inv_t1)
    # extra decay on top of the factor keep that damping already applies
    lam = min(1.0, math.exp(-t * (inv_t2 - 0.5 * inv_t1)))

    damp = [
        np.array([[1.0, 0.0], [0.0, keep]], dtype=complex),
        np.array([[0.0, math.sqrt(gamma)], [0.0, 0.0]], dtype=complex),
    ]
    dephase = [
        math.sqrt((1.0 + lam) / 2.0) * _I2,
        math.sqrt((1.0 - lam) / 2.0) * np.diag([1.0, -1.0]).astype(complex),
    ]
    return [a @ b for a in damp for b in dephase]


def apply_t1t2(rho, qubit: int, t: float, t1: float, t2: float) -> np.ndarray:
    """Let ``qubit`` sit in a T1/T2 memory for ``t`` ns (see :func:`t1t2_kraus`)."""
    rho = check_density_matrix(rho)
    _check_qubit(rho, qubit)
    kraus = t1t2_kraus(t, t1, t2)
    if t == 0:
        return rho.copy()
    return _apply_kraus(rho, kraus, qubit)


def fidelity(rho) -> float:
    """Fidelity of a two-qubit state with (|00> + |11>)/sqrt(2).

    The target is pure, so this is the overlap ``<Phi+|rho|Phi+>``; it equals
    :func:`uhlmann_fidelity` against the target projector.
    """
    rho = check_density_matrix(rho)
    if rho.shape != (4, 4):
        raise InvalidStateError("fidelity is defined for two-qubit states only")
    value = 0.5 * float(np.real(rho[0, 0] + rho[0, 3] + rho[3, 0] + rho[3, 3]))
    return min(1.0, max(0.0, value))


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(m)
    # numerically-zero eigenvalues would otherwise contribute sqrt(1e-17) ~ 3e-9
    vals = np.where(vals > 1e-12 * max(vals[-1], 0.0), vals, 0.0)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def uhlmann_fidelity(rho, sigma) -> float:
    """General fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``.

    Slow path used to cross-check :func:`fidelity`.
    """
    rho = check_density_matrix(rho)
    sigma = check_density_matrix(sigma)
    root = _psd_sqrt(rho)
    inner = root @ sigma @ root
    inner = (inner + inner.conj().T) / 2.0
    return float(np.real(np.trace(_psd_sqrt(inner))) ** 2)
