"""Post-processing: spectra, filtering, mean positions, fidelity traces.

The band-pass filter works in the interior sine basis (DST-I), whose basis
functions vanish at both pulse ends.  Masking sine components is an exact
projection, so filtering twice equals filtering once and the output always
switches on and off at zero field.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .gridsim import Grid
from .propagator import ControlField, DissipationModel, QuantumState
from .trap import EigenBasis
from .units import TIME_AU_S


@dataclass
class Spectrum:
    """One-sided power spectrum |S(nu)|^2, normalized to unit peak."""

    frequencies_hz: np.ndarray
    power: np.ndarray
    raw_power: np.ndarray

    def peak_frequencies(self, rel_threshold: float = 0.01) -> np.ndarray:
        """Frequencies of local maxima above rel_threshold * max power."""
        p = self.power
        keep = (p[1:-1] >= p[:-2]) & (p[1:-1] > p[2:]) & (p[1:-1] >= rel_threshold)
        return self.frequencies_hz[1:-1][keep]

    @property
    def bin_width_hz(self) -> float:
        return float(self.frequencies_hz[1] - self.frequencies_hz[0])


def spectrum(field: ControlField) -> Spectrum:
    """Discrete Fourier power spectrum of the sampled field."""
    if len(field.samples) < 2:
        raise ValidationError("field is empty")
    coeff = np.fft.rfft(field.samples)
    power = np.abs(coeff) ** 2
    dt_s = field.dt * TIME_AU_S
    freqs = np.fft.rfftfreq(len(field.samples), d=dt_s)
    peak = power.max()
    if peak <= 0:
        return Spectrum(freqs, power, power.copy())
    return Spectrum(freqs, power / peak, power)


def _dst1(y: np.ndarray) -> np.ndarray:
    """Type-I discrete sine transform via odd extension and rFFT."""
    m = len(y)
    ext = np.zeros(2 * m + 2)
    ext[1 : m + 1] = y
    ext[m + 2 :] = -y[::-1]
    return -np.fft.rfft(ext).imag[1 : m + 1]


def bandpass_filter(field: ControlField, keep_band) -> ControlField:
    """Keep only sine components with frequency inside [lo, hi] Hz.

    The endpoints are structurally zero in the sine basis; applying the
    filter twice gives the same field back (projection).
    """
    lo, hi = keep_band
    dt_s = field.dt * TIME_AU_S
    nyquist = 0.5 / dt_s
    if not 0 <= lo <= hi:
        raise ValidationError("need 0 <= lo <= hi")
    if hi > nyquist:
        raise ValidationError(f"band edge {hi:.3e} Hz beyond Nyquist {nyquist:.3e} Hz")
    interior = field.samples[1:-1]
    m = len(interior)
    coeff = _dst1(interior)
    # sine mode n has frequency n / (2 (m+1) dt)
    freqs = np.arange(1, m + 1) / (2.0 * (m + 1) * dt_s)
    coeff[(freqs < lo) | (freqs > hi)] = 0.0
    out = np.zeros_like(field.samples)
    out[1:-1] = _dst1(coeff) / (2.0 * m + 2.0)
    return ControlField(out, field.dt)


def default_filter_band(basis: EigenBasis) -> tuple:
    """[0.5 MHz, 1.05 x highest delta-nu = 3 transition frequency] in Hz."""
    n = basis.n_qubits
    top = (basis.energies[n - 1] - basis.energies[n - 4]) / (2 * np.pi * TIME_AU_S)
    return (0.5e6, 1.05 * float(top))


def mean_position_ion(state: QuantumState, basis: EigenBasis, t: float = 0.0) -> float:
    """<z> in a.u. with interaction-picture phases restored at time t."""
    z = basis.z_matrix[: state.dim, : state.dim]
    phase = np.exp(-1j * basis.energies[: state.dim] * t)
    if state.is_matrix:
        rho = phase[:, None] * state.data * phase.conj()[None, :]
        return float(np.trace(rho @ z).real)
    c = phase * state.data
    return float((c.conj() @ z @ c).real)


def mean_position_sim(probabilities: np.ndarray, grid: Grid) -> float:
    """<x> = sum x_j |psi(x_j)|^2 dx from decoded localization probabilities."""
    p = np.asarray(probabilities, dtype=float)
    if len(p) != grid.n:
        raise ValidationError("probability vector does not match the grid")
    return float(np.sum(grid.points * p) * grid.delta_x)


def periodicity_residual(population_trajectory) -> float:
    """Max over l = 0..4 of the max-norm difference between the pulse-l and
    pulse-(10-l) population vectors of a ten-pulse run."""
    traj = [np.asarray(p, dtype=float) for p in population_trajectory]
    if len(traj) != 11:
        raise ValidationError("expected populations after pulses 0..10")
    return max(float(np.abs(traj[l] - traj[10 - l]).max()) for l in range(5))


class _LindbladUnitPropagator:
    """Lindblad generator acting on a stack of (not necessarily Hermitian)
    matrices, used to push the matrix-unit basis through pulses."""

    def __init__(self, basis: EigenBasis, diss: DissipationModel):
        self.energies = basis.energies
        self.mu = basis.dipole
        self.gamma = diss.gamma
        self.out_rates = diss.total_out_rates()

    def rhs(self, t, x, e_field):
        p = np.exp(1j * self.energies * t)
        mu_i = (p[:, None] * self.mu) * p.conj()[None, :]
        comm = np.einsum("ij,tjk->tik", mu_i, x) - np.einsum("tij,jk->tik", x, mu_i)
        dx = 1j * e_field * comm
        pops = np.einsum("tii->ti", x)
        dx -= 0.5 * (self.out_rates[None, :, None] + self.out_rates[None, None, :]) * x
        idx = np.arange(x.shape[1])
        dx[:, idx, idx] += pops @ self.gamma.T
        return dx

    def pulse(self, x, field: ControlField):
        # every pulse replays the waveform in the rotating frame (t from 0),
        # which is what makes stroboscopic concatenation exact
        dt = field.dt
        s = field.samples
        for n in range(len(s) - 1):
            t = n * dt
            ea, ec = s[n], s[n + 1]
            eb = 0.5 * (ea + ec)
            k1 = self.rhs(t, x, ea)
            k2 = self.rhs(t + dt / 2, x + 0.5 * dt * k1, eb)
            k3 = self.rhs(t + dt / 2, x + 0.5 * dt * k2, eb)
            k4 = self.rhs(t + dt, x + dt * k3, ec)
            x = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        return x


def fidelity_trace(
    gate_field: ControlField,
    basis: EigenBasis,
    diss: DissipationModel,
    n_pulses: int,
    gate,
) -> np.ndarray:
    """Process fidelity of the cumulative realized map against U_s^l.

    Propagates the N^2 matrix units through successive Lindblad pulses and
    evaluates (1/N^2) sum_jk <U^l j| Phi_l(|j><k|) |U^l k>, which equals the
    gate fidelity |Tr(U_s^dag U_P)|^2/N^2 whenever the map is unitary.
    """
    us = getattr(gate, "entries", gate)
    n = us.shape[0]
    d = basis.n_states
    prop = _LindbladUnitPropagator(basis, diss)

    units = np.zeros((n * n, d, d), dtype=complex)
    for j in range(n):
        for k in range(n):
            units[j * n + k, j, k] = 1.0

    fids = np.empty(n_pulses)
    x = units
    target = np.eye(n, dtype=complex)
    for pulse in range(n_pulses):
        x = prop.pulse(x, gate_field)
        target = us @ target
        acc = 0.0
        for j in range(n):
            for k in range(n):
                acc += (target[:, j].conj() @ x[j * n + k, :n, :n] @ target[:, k]).real
        fids[pulse] = acc / n**2
    return fids
