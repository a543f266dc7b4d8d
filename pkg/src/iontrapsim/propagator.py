"""Ion-state propagation under the control field.

Closed-system amplitudes follow the interaction-picture equation

    dc_j/dt = (i/hbar) E(t) sum_k mu_jk exp(i w_jk t) c_k

integrated by fourth-order Runge-Kutta with the field linearly
interpolated at half-steps.  Open-system density matrices follow the
Lindblad master equation; for projector jump operators the dissipator is
identical in the interaction and Schroedinger pictures, so the frame
change touches only the driving term.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .trap import EigenBasis
from .units import FIELD_AU_V_PER_M, TIME_AU_S

NORM_DRIFT_TOL = 1e-8
TRACE_TOL = 1e-8
HERMITICITY_TOL = 1e-10


@dataclass
class ControlField:
    """Uniformly sampled real field E(t_i), atomic units."""

    samples: np.ndarray
    dt: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1 or len(self.samples) < 2:
            raise ValidationError("field needs at least two samples")
        if not np.all(np.isfinite(self.samples)):
            raise ValidationError("field samples must be finite")
        if self.dt <= 0:
            raise ValidationError("sample spacing must be positive")

    @property
    def t_pulse(self) -> float:
        return (len(self.samples) - 1) * self.dt

    @property
    def n_steps(self) -> int:
        return len(self.samples) - 1

    def times(self) -> np.ndarray:
        return np.arange(len(self.samples)) * self.dt

    def fluence(self) -> float:
        """Integral of E^2 dt over the pulse (trapezoid)."""
        return float(np.trapezoid(self.samples**2, dx=self.dt))

    def peak_v_per_m(self) -> float:
        return float(np.abs(self.samples).max() * FIELD_AU_V_PER_M)


@dataclass
class QuantumState:
    """Ion state in the eigenbasis: amplitude vector or density matrix."""

    data: np.ndarray
    picture: str = "interaction"

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.ndim not in (1, 2):
            raise ValidationError("state must be a vector or a square matrix")
        if self.data.ndim == 2 and self.data.shape[0] != self.data.shape[1]:
            raise ValidationError("density matrix must be square")

    @property
    def is_matrix(self) -> bool:
        return self.data.ndim == 2

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def validate(self) -> None:
        if self.is_matrix:
            rho = self.data
            if np.abs(rho - rho.conj().T).max() > HERMITICITY_TOL:
                raise ValidationError("density matrix is not Hermitian")
            if abs(np.trace(rho).real - 1.0) > TRACE_TOL:
                raise ValidationError("density matrix trace differs from 1")
            if np.linalg.eigvalsh(rho).min() < -1e-8:
                raise ValidationError("density matrix has a negative eigenvalue")
        else:
            if abs(np.linalg.norm(self.data) - 1.0) > 1e-8:
                raise ValidationError("state vector is not normalized")

    @classmethod
    def basis_state(cls, dim: int, j: int) -> "QuantumState":
        c = np.zeros(dim, dtype=complex)
        c[j] = 1.0
        return cls(c)

    def to_matrix(self) -> "QuantumState":
        if self.is_matrix:
            return self
        return QuantumState(np.outer(self.data, self.data.conj()), self.picture)


@dataclass
class DissipationModel:
    """Phenomenological heating model: rates gamma_jk = kappa |mu_jk|."""

    kappa: float
    pairs: np.ndarray            # (n_pairs, 2) ordered (j, k): jump |j><k|
    rates: np.ndarray            # (n_pairs,)
    gamma: np.ndarray            # (D, D) rate matrix, gamma[j, k] for |j><k|
    mean_rate: float             # arithmetic mean over the averaging pair set

    @property
    def mean_heating_time(self) -> float:
        """1/gamma_bar in a.u.; inf when all rates vanish."""
        return 1.0 / self.mean_rate if self.mean_rate > 0 else np.inf

    @property
    def mean_heating_time_s(self) -> float:
        t = self.mean_heating_time
        return t * TIME_AU_S if np.isfinite(t) else np.inf

    def total_out_rates(self) -> np.ndarray:
        """Gamma_k = sum_j gamma_jk, total departure rate from state k."""
        return self.gamma.sum(axis=0)


def build_dissipation(
    basis: EigenBasis, kappa: float, deltas=(1, 3), avg_states: int | None = None
) -> DissipationModel:
    """Rates for all |j-k| in deltas with j, k below the dynamical size.

    The mean heating rate is averaged over the pairs inside the
    computational window (avg_states, default the qubit count), the set the
    guess-field transitions are drawn from.
    """
    if kappa < 0:
        raise ValidationError("kappa must be non-negative")
    deltas = sorted({abs(int(d)) for d in deltas})
    if not deltas or deltas[0] == 0:
        raise ValidationError("deltas must be nonzero integers")
    d_size = basis.n_states
    if avg_states is None:
        avg_states = basis.n_qubits

    pairs = []
    rates = []
    gamma = np.zeros((d_size, d_size))
    for d in deltas:
        for j in range(d_size - d):
            k = j + d
            r = kappa * abs(basis.dipole[j, k])
            for a, b in ((j, k), (k, j)):
                pairs.append((a, b))
                rates.append(r)
                gamma[a, b] = r
    pairs = np.array(pairs, dtype=int)
    rates = np.array(rates)

    in_window = (pairs[:, 0] < avg_states) & (pairs[:, 1] < avg_states)
    mean_rate = float(rates[in_window].mean()) if in_window.any() else 0.0
    return DissipationModel(kappa, pairs, rates, gamma, mean_rate)


class InteractionFrame:
    """Phase bookkeeping exp(i E_j t) for a basis, shared by the propagators."""

    def __init__(self, basis: EigenBasis):
        self.energies = basis.energies
        self.mu = basis.dipole

    def phases(self, t: float) -> np.ndarray:
        return np.exp(1j * self.energies * t)

    def mu_at(self, t: float) -> np.ndarray:
        p = self.phases(t)
        return (p[:, None] * self.mu) * p.conj()[None, :]

    def apply_mu(self, t: float, x: np.ndarray) -> np.ndarray:
        """mu_I(t) @ x without forming the dressed matrix."""
        p = self.phases(t)
        if x.ndim == 1:
            return p * (self.mu @ (p.conj() * x))
        return p[:, None] * (self.mu @ (p.conj()[:, None] * x))


def _rk4_vector_sweep(frame, field, psi, dt, t0, store_every, out):
    """Shared RK4 loop for vectors or column stacks with linear field interp."""
    samples = field.samples
    n_steps = len(samples) - 1
    stored = 0
    if out is not None:
        out[stored] = psi
    for n in range(n_steps):
        t = t0 + n * dt
        ea = samples[n]
        ec = samples[n + 1]
        eb = 0.5 * (ea + ec)
        k1 = 1j * ea * frame.apply_mu(t, psi)
        k2 = 1j * eb * frame.apply_mu(t + 0.5 * dt, psi + 0.5 * dt * k1)
        k3 = 1j * eb * frame.apply_mu(t + 0.5 * dt, psi + 0.5 * dt * k2)
        k4 = 1j * ec * frame.apply_mu(t + dt, psi + dt * k3)
        psi = psi + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if out is not None and (n + 1) % store_every == 0:
            stored += 1
            out[stored] = psi
    return psi


def propagate_tdse(
    state: QuantumState,
    fieldspec: ControlField,
    basis: EigenBasis,
    store_every: int = 0,
    t0: float = 0.0,
):
    """Propagate an amplitude vector through one pulse.

    Returns (final QuantumState, times, stored) where `stored` is an array of
    amplitude snapshots every `store_every` steps (empty when 0).  Raises
    NumericalError if the norm drifts beyond tolerance.
    """
    if state.is_matrix:
        raise ValidationError("propagate_tdse expects an amplitude vector")
    state.validate()
    if state.dim != basis.n_states:
        raise ValidationError("state dimension does not match the basis")
    frame = InteractionFrame(basis)
    dt = fieldspec.dt

    if store_every:
        n_stored = fieldspec.n_steps // store_every + 1
        stored = np.empty((n_stored, state.dim), dtype=complex)
        times = t0 + np.arange(n_stored) * store_every * dt
    else:
        stored = np.empty((0, state.dim), dtype=complex)
        times = np.empty(0)

    norm_in = np.linalg.norm(state.data)
    final = _rk4_vector_sweep(
        frame, fieldspec, state.data.copy(), dt, t0, max(store_every, 1),
        stored if store_every else None,
    )
    drift = abs(np.linalg.norm(final) - norm_in)
    if drift > NORM_DRIFT_TOL:
        raise NumericalError(
            f"norm drift {drift:.2e} over the pulse; reduce the time step"
        )
    return QuantumState(final), times, stored


def evolution_operator(
    fieldspec: ControlField, basis: EigenBasis, n_states: int, t0: float = 0.0
) -> np.ndarray:
    """Realized gate P U(t_pulse) P on the first n_states (may be sub-unitary)."""
    if n_states > basis.n_states:
        raise ValidationError("n_states exceeds the dynamical basis")
    frame = InteractionFrame(basis)
    cols = np.zeros((basis.n_states, n_states), dtype=complex)
    cols[:n_states, :n_states] = np.eye(n_states)
    final = _rk4_vector_sweep(frame, fieldspec, cols, fieldspec.dt, t0, 1, None)
    col_norms = np.linalg.norm(final, axis=0)
    if np.abs(col_norms - 1.0).max() > NORM_DRIFT_TOL:
        raise NumericalError("column norm drift beyond tolerance in gate propagation")
    return final[:n_states, :]


def lindblad_rhs(rho, e_field, frame, t, gamma, out_rates):
    """d rho/dt in the interaction picture with projector jump operators."""
    mu_rho = frame.apply_mu(t, rho)
    comm = mu_rho - mu_rho.conj().T  # [mu_I, rho] for Hermitian rho
    drho = 1j * e_field * comm
    pops = np.real(np.diag(rho))
    gain = gamma @ pops
    drho = drho - 0.5 * (out_rates[:, None] + out_rates[None, :]) * rho
    drho[np.diag_indices_from(drho)] += gain
    return drho


def adjoint_lindblad_rhs(eta, e_field, frame, t, gamma, out_rates):
    """d eta/dt for the backward multiplier; keeps Tr(eta^dag rho) constant."""
    mu_eta = frame.apply_mu(t, eta)
    comm = mu_eta - mu_eta.conj().T
    deta = 1j * e_field * comm
    pops = np.real(np.diag(eta))
    gain = gamma.T @ pops
    deta = deta + 0.5 * (out_rates[:, None] + out_rates[None, :]) * eta
    deta[np.diag_indices_from(deta)] -= gain
    return deta


def _rk4_matrix_sweep(rhs, field, rho, dt, t0, gamma, out_rates, frame,
                      store_every=0, out=None):
    samples = field.samples
    n_steps = len(samples) - 1
    stored = 0
    if out is not None:
        out[stored] = rho
    for n in range(n_steps):
        t = t0 + n * dt
        ea = samples[n]
        ec = samples[n + 1]
        eb = 0.5 * (ea + ec)
        k1 = rhs(rho, ea, frame, t, gamma, out_rates)
        k2 = rhs(rho + 0.5 * dt * k1, eb, frame, t + 0.5 * dt, gamma, out_rates)
        k3 = rhs(rho + 0.5 * dt * k2, eb, frame, t + 0.5 * dt, gamma, out_rates)
        k4 = rhs(rho + dt * k3, ec, frame, t + dt, gamma, out_rates)
        rho = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if out is not None and store_every and (n + 1) % store_every == 0:
            stored += 1
            out[stored] = rho
    return rho


def propagate_lindblad(
    state: QuantumState,
    fieldspec: ControlField,
    basis: EigenBasis,
    diss: DissipationModel,
    store_every: int = 0,
    t0: float = 0.0,
):
    """Propagate a density matrix through one pulse with dissipation.

    Returns (final QuantumState, times, stored snapshots).  Trace and
    Hermiticity are enforced as hard checks at the end of the pulse.
    """
    rho_state = state.to_matrix()
    rho_state.validate()
    if rho_state.dim != basis.n_states:
        raise ValidationError("state dimension does not match the basis")
    frame = InteractionFrame(basis)
    gamma = diss.gamma
    out_rates = diss.total_out_rates()
    dt = fieldspec.dt

    if store_every:
        n_stored = fieldspec.n_steps // store_every + 1
        stored = np.empty((n_stored, rho_state.dim, rho_state.dim), dtype=complex)
        times = t0 + np.arange(n_stored) * store_every * dt
    else:
        stored = np.empty((0, rho_state.dim, rho_state.dim), dtype=complex)
        times = np.empty(0)

    trace_in = np.trace(rho_state.data).real
    final = _rk4_matrix_sweep(
        lindblad_rhs, fieldspec, rho_state.data.copy(), dt, t0, gamma, out_rates,
        frame, store_every, stored if store_every else None,
    )
    trace_err = abs(np.trace(final).real - trace_in)
    herm_err = np.abs(final - final.conj().T).max()
    if trace_err > TRACE_TOL or herm_err > HERMITICITY_TOL:
        raise NumericalError(
            f"Lindblad step-size failure: trace error {trace_err:.2e}, "
            f"Hermiticity error {herm_err:.2e}"
        )
    return QuantumState(final), times, stored


def zero_field(t_pulse: float, n_steps: int) -> ControlField:
    """An identically zero field with the given duration and step count."""
    return ControlField(np.zeros(n_steps + 1), t_pulse / n_steps)
