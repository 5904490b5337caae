"""Independent reference implementations used only by the tests.

Nothing here imports the package's channel code: each routine is a separate
derivation of the same physics so that agreement means something.
"""

from __future__ import annotations

import math

import numpy as np

PAULIS = [
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]


def random_density_matrix(rng: np.random.Generator, dim: int = 4, rank: int | None = None) -> np.ndarray:
    """Ginibre-ensemble mixed state, optionally rank-deficient."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    rho = rho / np.trace(rho)
    return (rho + rho.conj().T) / 2


def epr_projector() -> np.ndarray:
    psi = np.zeros(4, dtype=complex)
    psi[0] = psi[3] = 1 / math.sqrt(2)
    return np.outer(psi, psi.conj())


def depolarize_twirl(rho: np.ndarray, qubit: int, p: float) -> np.ndarray:
    """Replacement channel written as a Pauli mixture: (1-3p/4) rho + p/4 sum P rho P."""
    out = (1 - 3 * p / 4) * rho
    for pauli in PAULIS[1:]:
        if rho.shape == (2, 2):
            op = pauli
        else:
            op = np.kron(pauli, PAULIS[0]) if qubit == 0 else np.kron(PAULIS[0], pauli)
        out = out + (p / 4) * op @ rho @ op.conj().T
    return out


def t1t2_elementwise(rho: np.ndarray, qubit: int, t: float, t1: float, t2: float) -> np.ndarray:
    """Closed-form T1/T2 action on the target qubit's 2x2 blocks.

    rho_00 += gamma rho_11, rho_11 *= (1-gamma), rho_01 *= exp(-t/T2).
    """
    gamma = 0.0 if math.isinf(t1) else 1 - math.exp(-t / t1)
    coh = 1.0 if math.isinf(t2) else math.exp(-t / t2)
    if rho.shape == (2, 2):
        blocks = rho.reshape(2, 1, 2, 1).copy()
    else:
        blocks = rho.reshape(2, 2, 2, 2).copy()
        if qubit == 1:
            blocks = blocks.transpose(1, 0, 3, 2)
    out = np.empty_like(blocks)
    # blocks[a, r, b, s]: a, b index the target qubit
    out[0, :, 0, :] = blocks[0, :, 0, :] + gamma * blocks[1, :, 1, :]
    out[1, :, 1, :] = (1 - gamma) * blocks[1, :, 1, :]
    out[0, :, 1, :] = coh * blocks[0, :, 1, :]
    out[1, :, 0, :] = coh * blocks[1, :, 0, :]
    if rho.shape == (4, 4) and qubit == 1:
        out = out.transpose(1, 0, 3, 2)
    return out.reshape(rho.shape)


def werner_fidelity(weight: float) -> float:
    return weight + (1 - weight) / 4


def assert_valid_state(rho: np.ndarray) -> None:
    assert np.max(np.abs(rho - rho.conj().T)) <= 1e-12
    assert abs(np.trace(rho) - 1) <= 1e-12
    assert np.linalg.eigvalsh(rho).min() >= -1e-10


def h2(x: float) -> float:
    """Binary entropy through natural logs."""
    if x in (0.0, 1.0):
        return 0.0
    return -(x * math.log(x) + (1 - x) * math.log1p(-x)) / math.log(2)


def bb84_rate(L, n, *, alpha=0.2, eta_det=0.5, p_dark=1e-6, f=1.15, e_d=0.01, P=0.5, ratio=100.0) -> float:
    """Scalar rate written out from the textbook single-photon model."""
    transmittance = eta_det * math.exp(-alpha * L * math.log(10) / 10)
    y0 = 2 * p_dark
    # detection if either the signal or a dark count fires
    q = y0 + transmittance - y0 * transmittance
    e = (y0 / 2 + e_d * transmittance) / q
    k = P**n * (1 - n / ratio)
    return max(0.0, k * q * (1 - (1 + f) * h2(e)))


def _epr_after(stages) -> float:
    """Apply (qubit, 'dep', p) / (qubit, 'mem', t, T1, T2) steps to the EPR pair and return the overlap."""
    rho = epr_projector()
    for step in stages:
        if step[1] == "dep":
            rho = depolarize_twirl(rho, step[0], step[2])
        else:
            rho = t1t2_elementwise(rho, step[0], *step[2:])
    psi = np.array([1, 0, 0, 1]) / math.sqrt(2)
    return float(np.real(psi @ rho @ psi))


def _path(q, p, hops, pause, t1, t2):
    # span, relay, span, relay, ..., span
    steps = [(q, "dep", p)]
    for _ in range(hops):
        steps += [(q, "mem", pause, t1, t2), (q, "dep", p)]
    return steps


def central_fidelity(length, hops, t1, t2, pause, p_l) -> float:
    """Symmetric central source: each half crosses length/2 split into hops+1 spans."""
    p = 1 - 10 ** (-(length / 2 / (hops + 1)) * p_l)
    steps = []
    for q in (0, 1):
        steps += _path(q, p, hops, pause, t1, t2)
    return _epr_after(steps)


def sender_fidelity(length, hops, t1, t2, pause, p_l) -> float:
    """Sender keeps qubit 0 for the flight time plus every relay pause."""
    p = 1 - 10 ** (-(length / (hops + 1)) * p_l)
    held = round(length * 5000) + hops * pause
    steps = _path(1, p, hops, pause, t1, t2) + [(0, "mem", held, t1, t2)]
    return _epr_after(steps)
