"""Mapping between grid wavefunctions and ion motional-state amplitudes.

Grid point j and motional eigenstate j share the index: c_j = psi(x_j) sqrt(dx),
so the qubit population |c_j|^2 equals the localization probability
|psi(x_j)|^2 dx.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .gridsim import Grid, GridWavepacket

NORM_TOL = 1e-10


@dataclass
class QubitAmplitudes:
    """Amplitudes over the motional eigenstates chi_0 .. chi_{N-1}."""

    c: np.ndarray
    delta_x: float

    @property
    def n(self) -> int:
        return len(self.c)

    def populations(self) -> np.ndarray:
        return np.abs(self.c) ** 2


def encode(psi: GridWavepacket) -> QubitAmplitudes:
    """Map a grid-normalized wavepacket onto qubit amplitudes."""
    n2 = psi.norm2()
    if abs(n2 - 1.0) > NORM_TOL:
        raise ValidationError(f"wavepacket norm^2 = {n2!r}, expected 1 within {NORM_TOL}")
    c = psi.amplitudes * np.sqrt(psi.grid.delta_x)
    return QubitAmplitudes(c.astype(complex), psi.grid.delta_x)


def decode(q: QubitAmplitudes) -> np.ndarray:
    """Localization probabilities |psi(x_j)|^2 = |c_j|^2 / dx."""
    total = float(np.sum(np.abs(q.c) ** 2))
    if abs(total - 1.0) > NORM_TOL:
        raise ValidationError(f"amplitudes norm^2 = {total!r}, expected 1 within {NORM_TOL}")
    return np.abs(q.c) ** 2 / q.delta_x


def to_wavepacket(q: QubitAmplitudes, grid: Grid) -> GridWavepacket:
    """Rebuild the grid wavepacket psi(x_j) = c_j / sqrt(dx)."""
    if grid.n != q.n or abs(grid.delta_x - q.delta_x) > 1e-15:
        raise ValidationError("grid does not match the encoded amplitudes")
    return GridWavepacket(q.c / np.sqrt(q.delta_x), grid)
