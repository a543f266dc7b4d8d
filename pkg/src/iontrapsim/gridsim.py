"""Simulated one-particle system on a spatial grid.

Provides the grid convention x_j = x_min + (j+1)*dx, Gaussian initial
packets, Strang split-operator stepping through the momentum grid, the
elementary evolution operator built as a matrix, and exact harmonic
reference evolutions used as oracles.
"""

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NumericalError, ValidationError

UNITARITY_FATAL = 1e-8
BOUNDARY_LEAK_WARN = 1e-6


@dataclass(frozen=True)
class Grid:
    """Uniform spatial grid; x_min itself is excluded, x_max is the last point."""

    x_min: float
    x_max: float
    n: int
    delta_x: float = field(init=False)
    points: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.x_min >= self.x_max:
            raise ValidationError("x_min must be below x_max")
        if self.n < 2:
            raise ValidationError("need at least two grid points")
        dx = (self.x_max - self.x_min) / self.n
        pts = self.x_min + (np.arange(self.n) + 1) * dx
        pts.setflags(write=False)
        object.__setattr__(self, "delta_x", dx)
        object.__setattr__(self, "points", pts)

    @property
    def momenta(self) -> np.ndarray:
        """Discrete momentum grid in the standard DFT frequency layout."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.delta_x)


def make_grid(x_min: float, x_max: float, n: int) -> Grid:
    """Build a Grid; non-power-of-two sizes work but are flagged."""
    grid = Grid(x_min, x_max, n)
    if n & (n - 1):
        warnings.warn(f"grid size {n} is not a power of two", stacklevel=2)
    return grid


def harmonic_potential(x):
    return 0.5 * np.asarray(x) ** 2


@dataclass(frozen=True)
class SimSystem:
    """The simulated particle: mass and potential (both in a.u.)."""

    mass: float = 1.0
    potential: Callable[[np.ndarray], np.ndarray] = harmonic_potential
    label: str = "harmonic"

    def sample_potential(self, grid: Grid) -> np.ndarray:
        v = np.asarray(self.potential(grid.points), dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValidationError("potential is not finite on the grid")
        return v


@dataclass
class GridWavepacket:
    """Complex amplitudes psi(x_j) on a grid, density-normalized where noted."""

    amplitudes: np.ndarray
    grid: Grid

    def norm2(self) -> float:
        """Sum |psi|^2 dx."""
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.delta_x)

    def densities(self) -> np.ndarray:
        """|psi(x_j)|^2."""
        return np.abs(self.amplitudes) ** 2

    def populations(self) -> np.ndarray:
        """|psi(x_j)|^2 dx, the qubit-state populations after encoding."""
        return self.densities() * self.grid.delta_x


def gaussian_packet(grid: Grid, sigma: float, x0: float) -> GridWavepacket:
    """Sample (sigma/pi)^(1/4) exp(-(x-x0)^2 / 2 sigma) and renormalize.

    Renormalization makes the discrete populations sum to one exactly,
    which the ion-state encoding requires.  Warns when the packet carries
    weight at the grid edge.
    """
    if sigma <= 0:
        raise ValidationError("sigma must be positive")
    x = grid.points
    psi = (sigma / np.pi) ** 0.25 * np.exp(-((x - x0) ** 2) / (2.0 * sigma))
    psi = psi.astype(complex)
    n2 = np.sum(np.abs(psi) ** 2) * grid.delta_x
    if n2 <= 0:
        raise ValidationError("packet vanished on the grid")
    psi /= np.sqrt(n2)
    edge = max(abs(psi[0]) ** 2, abs(psi[-1]) ** 2) * grid.delta_x
    if edge > BOUNDARY_LEAK_WARN:
        warnings.warn(
            f"packet leaks off-grid: boundary population {edge:.2e}", stacklevel=2
        )
    return GridWavepacket(psi, grid)


def _split_factors(system: SimSystem, grid: Grid, dt_sub: float):
    v = system.sample_potential(grid)
    half_v = np.exp(-0.5j * v * dt_sub)
    kin = np.exp(-0.5j * grid.momenta**2 * dt_sub / system.mass)
    return half_v, kin


def _apply_split(columns: np.ndarray, half_v, kin, k_steps: int) -> np.ndarray:
    for _ in range(k_steps):
        columns = half_v[:, None] * columns
        columns = np.fft.ifft(kin[:, None] * np.fft.fft(columns, axis=0), axis=0)
        columns = half_v[:, None] * columns
    return columns


def split_step(psi: GridWavepacket, system: SimSystem, dt_sub: float) -> GridWavepacket:
    """One Strang step exp(-iV dt/2) F^-1 exp(-iT dt) F exp(-iV dt/2)."""
    if dt_sub < 0:
        raise ValidationError("dt_sub must be non-negative")
    half_v, kin = _split_factors(system, psi.grid, dt_sub)
    out = _apply_split(psi.amplitudes[:, None].astype(complex), half_v, kin, 1)
    return GridWavepacket(out[:, 0], psi.grid)


@dataclass
class GateMatrix:
    """The elementary evolution operator U_s(delta_t) as an N x N matrix."""

    entries: np.ndarray
    delta_t: float
    k_substeps: int
    label: str = ""

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def dt_sub(self) -> float:
        return self.delta_t / self.k_substeps if self.k_substeps else 0.0

    def unitarity_defect(self) -> float:
        u = self.entries
        return float(np.abs(u.conj().T @ u - np.eye(self.n)).max())


def elementary_gate(system: SimSystem, grid: Grid, delta_t: float, k_substeps: int) -> GateMatrix:
    """Build U_s(delta_t) = (U_s(delta_t/K))^K column by column.

    Columns are the images of delta packets, so the matrix acts directly on
    the c_j amplitude convention.
    """
    if k_substeps < 1:
        raise ValidationError("k_substeps must be >= 1")
    dt_sub = delta_t / k_substeps
    half_v, kin = _split_factors(system, grid, dt_sub)
    u = _apply_split(np.eye(grid.n, dtype=complex), half_v, kin, k_substeps)
    gate = GateMatrix(u, delta_t, k_substeps, label=system.label)
    defect = gate.unitarity_defect()
    if defect > UNITARITY_FATAL:
        raise NumericalError(f"gate unitarity defect {defect:.2e} exceeds {UNITARITY_FATAL}")
    return gate


def classic_propagate(psi0: GridWavepacket, gate: GateMatrix, n_pulses: int) -> list[GridWavepacket]:
    """Apply the gate n_pulses times; returns [psi0, psi1, ..., psi_Np]."""
    if gate.n != psi0.grid.n:
        raise ValidationError("gate size does not match the grid")
    out = [psi0]
    amp = psi0.amplitudes
    for _ in range(n_pulses):
        amp = gate.entries @ amp
        out.append(GridWavepacket(amp, psi0.grid))
    return out


def analytic_coherent_evolution(
    system: SimSystem, grid: Grid, sigma: float, x0: float, t: float
) -> GridWavepacket:
    """Exact |psi(x,t)|^2 of a Gaussian in the harmonic default potential.

    Center moves as x0 cos(t), squared-width parameter as
    s(t) = sigma cos^2 t + (1/sigma) sin^2 t (m = omega = hbar = 1).
    The returned amplitudes are the real square roots of the density;
    phases are not modeled.
    """
    v = system.sample_potential(grid)
    if not np.allclose(v, harmonic_potential(grid.points), atol=1e-12) or system.mass != 1.0:
        raise ValidationError("analytic evolution is defined for the harmonic default only")
    center = x0 * np.cos(t)
    s = sigma * np.cos(t) ** 2 + (1.0 / sigma) * np.sin(t) ** 2
    dens = np.exp(-((grid.points - center) ** 2) / s) / np.sqrt(np.pi * s)
    dens /= np.sum(dens) * grid.delta_x
    return GridWavepacket(np.sqrt(dens).astype(complex), grid)
