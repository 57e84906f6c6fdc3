"""Direct three-level integrator used to check the two-level rotating-frame engine.

The NV Hamiltonian is diagonalised and the state is propagated in the
interaction picture of the bare levels with fixed-step RK4, halving the step
until populations stop changing. The drive is co-rotating at frequency
f_transition + detuning and couples the ground level to the addressed level;
with ``spectator=True`` it couples the ground level to the other level too, at
the same Rabi frequency, which exposes the error of the two-level reduction.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .core import TWO_PI, MaterialParams
from .nv import NVConfig, hamiltonian


@dataclass(frozen=True)
class ThreeLevelResult:
    populations: np.ndarray  # over eigenstates, ascending energy
    steps: int
    change: float


def _integrate(rhs, y0, duration, n):
    # classic RK4 on a tuple of Python complex numbers; numpy overhead dominates for 3 components
    h = duration / n
    y = tuple(complex(v) for v in y0)
    for i in range(n):
        t = i * h
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, tuple(v + 0.5 * h * k for v, k in zip(y, k1)))
        k3 = rhs(t + 0.5 * h, tuple(v + 0.5 * h * k for v, k in zip(y, k2)))
        k4 = rhs(t + h, tuple(v + h * k for v, k in zip(y, k3)))
        y = tuple(v + (h / 6.0) * (p + 2 * q + 2 * r + s) for v, p, q, r, s in zip(y, k1, k2, k3, k4))
    return np.array(y)


def three_level_populations(nv: NVConfig, params: MaterialParams, omega: float, detuning: float,
                            duration: float, branch: str = "lower", spectator: bool = False,
                            tol: float = 1e-10, n0: int = 64, max_steps: int = 2 ** 20) -> ThreeLevelResult:
    """Eigenstate populations after a square drive of ``duration`` us."""
    energies = np.linalg.eigvalsh(hamiltonian(nv, params))
    a = 1 if branch == "lower" else 2
    other = 2 if a == 1 else 1
    f_drive = (energies[a] - energies[0]) + detuning
    # interaction-picture phases of |j><0| couplings
    nu = {a: energies[a] - energies[0] - f_drive, other: energies[other] - energies[0] - f_drive}
    targets = [a, other] if spectator else [a]
    half = 0.5 * omega
    w = {j: TWO_PI * nu[j] for j in targets}

    def rhs(t, y):
        # i dy/dt = 2 pi H_I(t) y
        out = [0j, 0j, 0j]
        for j in targets:
            ph = cmath.exp(1j * w[j] * t)
            out[j] += half * ph * y[0]
            out[0] += half * ph.conjugate() * y[j]
        return tuple(-1j * TWO_PI * v for v in out)

    y0 = np.array([1.0, 0.0, 0.0], dtype=complex)
    if duration == 0:
        return ThreeLevelResult(np.abs(y0) ** 2, 0, 0.0)
    fastest = max([abs(omega)] + [abs(nu[j]) for j in targets]) + abs(omega)
    n = max(n0, int(math.ceil(duration * fastest * 8)))
    prev = np.abs(_integrate(rhs, y0, duration, n)) ** 2
    while True:
        n *= 2
        cur = np.abs(_integrate(rhs, y0, duration, n)) ** 2
        change = float(np.max(np.abs(cur - prev)))
        if change < tol or n >= max_steps:
            return ThreeLevelResult(cur, n, change)
        prev = cur


def two_level_population(omega: float, detuning: float, duration: float) -> float:
    """Excited population of the rotating-frame two-level model."""
    eff2 = omega * omega + detuning * detuning
    if eff2 == 0:
        return 0.0
    return omega * omega / eff2 * math.sin(math.pi * math.sqrt(eff2) * duration) ** 2
