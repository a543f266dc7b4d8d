"""Multi-target optimal control of the ion gate field.

One iteration of the monotonically convergent scheme propagates Lagrange
multipliers backward from the target states under the current field, then
sweeps forward with an immediate per-time-step correction

    E_new(t) = E_old(t) - (sin^2(pi t / T) / alpha0) * Im[ ... ],

where the bracket couples all trajectories.  The transition-probability
functional (P) drives the N basis-state targets plus one superposition
target that pins a common gate phase; the trace functional (F) drives N
targets through a phase-coherent trace product.  The recorded objective is
the functional's main term (the fluence is recorded separately); it is the
quantity the incremental scheme increases monotonically.

The field is frozen within each time step, and the backward sweep steps
with the same frozen-field rule, which keeps the discrete iteration
consistent between the two sweeps.

The dissipative variant replaces amplitude vectors by density matrices
propagated with the Lindblad generator and its adjoint, pairing
trajectories through Tr(eta^dag (mu rho - rho mu)).  With all rates zero
it reproduces the closed-system iteration exactly (same fields, same
objective column).
"""

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .errors import ConvergenceError, NumericalError, ValidationError
from .propagator import ControlField, DissipationModel
from .trap import EigenBasis, transition_table
from .units import hz_to_angular_freq_au

MONOTONE_SLACK = 1e-10
GUESS_AMPLITUDE_AU = 1.945e-13   # 0.1 V/m per spectral component


@dataclass
class OctConfig:
    """Optimization parameters; times in a.u."""

    t_pulse: float
    dt: float
    alpha0: float
    functional: str = "P"
    max_iterations: int = 500
    fidelity_goal: float = 0.99999
    include_superposition_target: bool = True
    guess_amplitude: float = GUESS_AMPLITUDE_AU
    guess_deltas: tuple = (1, 3)
    stall_improvement: float = 1e-12
    stall_iterations: int = 20

    def __post_init__(self):
        if self.alpha0 <= 0:
            raise ValidationError("alpha0 must be positive")
        if not 0 < self.fidelity_goal <= 1:
            raise ValidationError("fidelity_goal must be in (0, 1]")
        if self.functional not in ("F", "P"):
            raise ValidationError("functional must be 'F' or 'P'")
        if self.functional == "P" and not self.include_superposition_target:
            raise ValidationError("the P functional requires the superposition target")
        n = self.t_pulse / self.dt
        if abs(n - round(n)) > 1e-9 * n or round(n) < 2:
            raise ValidationError("t_pulse must be an integer multiple (>= 2) of dt")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_pulse / self.dt))


@dataclass
class TargetSet:
    """The gate to realize, expanded into per-trajectory initial/target pairs."""

    gate: np.ndarray
    include_superposition: bool = True

    def __post_init__(self):
        self.gate = np.asarray(getattr(self.gate, "entries", self.gate), dtype=complex)
        n = self.gate.shape[0]
        if np.abs(self.gate.conj().T @ self.gate - np.eye(n)).max() > 1e-8:
            raise ValidationError("target gate is not unitary")

    @property
    def n(self) -> int:
        return self.gate.shape[0]

    def trajectories(self, dim: int, with_superposition: bool):
        """Initial and target column stacks embedded in a dim-state space."""
        n = self.n
        if dim < n:
            raise ValidationError("dynamical space smaller than the gate")
        n_traj = n + 1 if with_superposition else n
        init = np.zeros((dim, n_traj), dtype=complex)
        targ = np.zeros((dim, n_traj), dtype=complex)
        init[:n, :n] = np.eye(n)
        targ[:n, :n] = self.gate
        if with_superposition:
            sup = np.ones(n) / np.sqrt(n)
            init[:n, n] = sup
            targ[:n, n] = self.gate @ sup
        return init, targ


@dataclass
class OctTrace:
    """Per-iteration convergence record."""

    iterations: list = dataclass_field(default_factory=list)
    objectives: list = dataclass_field(default_factory=list)
    fidelities: list = dataclass_field(default_factory=list)
    fluences: list = dataclass_field(default_factory=list)
    status: str = "running"

    def append(self, iteration, objective, fid, fluence):
        self.iterations.append(int(iteration))
        self.objectives.append(float(objective))
        self.fidelities.append(float(fid))
        self.fluences.append(float(fluence))

    def __len__(self):
        return len(self.iterations)

    @property
    def final_fidelity(self) -> float:
        return self.fidelities[-1] if self.fidelities else 0.0

    def is_monotonic(self, slack: float = MONOTONE_SLACK) -> bool:
        j = self.objectives
        return all(
            j[i + 1] >= j[i] - slack * max(1.0, abs(j[i])) for i in range(len(j) - 1)
        )


def penalty(t: float, config: OctConfig) -> float:
    """alpha(t) = alpha0 / sin^2(pi t / t_pulse); +inf at the endpoints, so
    the update factor 1/alpha vanishes there and the field stays switched
    off at both ends."""
    if t < 0 or t > config.t_pulse:
        raise ValidationError("t outside the pulse")
    s = np.sin(np.pi * t / config.t_pulse) ** 2
    if s == 0.0 or t == 0.0 or t == config.t_pulse:
        return np.inf
    return config.alpha0 / s


def fidelity(u_target, u_realized) -> float:
    """Gate fidelity |Tr(U_s^dag U_P)|^2 / N^2, global-phase invariant."""
    us = np.asarray(getattr(u_target, "entries", u_target))
    up = np.asarray(getattr(u_realized, "entries", u_realized))
    n = us.shape[0]
    return float(abs(np.trace(us.conj().T @ up)) ** 2 / n**2)


def phase_spread(u_target, u_realized) -> float:
    """Largest deviation of per-transition phases arg<U_s j|U_P j> from the
    phase of the first transition, wrapped to [-pi, pi]."""
    us = np.asarray(getattr(u_target, "entries", u_target))
    up = np.asarray(getattr(u_realized, "entries", u_realized))
    phases = np.angle(np.einsum("dj,dj->j", us.conj(), up))
    rel = np.angle(np.exp(1j * (phases - phases[0])))
    return float(np.abs(rel).max())


def make_guess_field(basis: EigenBasis, config: OctConfig) -> ControlField:
    """Equal-amplitude sinusoids at every included transition frequency
    under the sin^2 switch-on/off envelope."""
    n = basis.n_qubits
    steps = config.n_steps
    t = np.arange(steps + 1) * config.dt
    env = np.sin(np.pi * t / config.t_pulse) ** 2
    samples = np.zeros(steps + 1)
    for _, _, freq_hz, _ in transition_table(basis, config.guess_deltas, n):
        samples += np.sin(hz_to_angular_freq_au(freq_hz) * t)
    samples *= config.guess_amplitude * env
    samples[0] = samples[-1] = 0.0
    return ControlField(samples, config.dt)


class _SweepContext:
    """Precomputed phases, envelope and dipole shared by one optimization."""

    def __init__(self, basis: EigenBasis, config: OctConfig):
        self.basis = basis
        self.config = config
        self.dim = basis.n_states
        self.dt = config.dt
        self.steps = config.n_steps
        tgrid = np.arange(self.steps + 1) * config.dt
        env = np.sin(np.pi * tgrid / config.t_pulse) ** 2
        env[0] = env[-1] = 0.0
        self.env = env
        half_t = np.arange(2 * self.steps + 1) * (config.dt / 2.0)
        self.phases = np.exp(1j * np.multiply.outer(half_t, basis.energies))
        self.mu = basis.dipole

    def apply_mu(self, half_idx: int, x: np.ndarray) -> np.ndarray:
        """mu_I(t_half) @ x for a column stack x."""
        p = self.phases[half_idx]
        return p[:, None] * (self.mu @ (p.conj()[:, None] * x))


def _run_iterations(ctx, config, sweep, evaluate, measure, initial_field, trace,
                    callback):
    """Iteration driver: stopping rules, trace recording, fault detection.

    Iteration 0 in the trace is the evaluation of the starting field; the
    monotonic sweeps are iterations 1..max_iterations.  A starting field
    that already meets the fidelity goal returns without any sweep.
    """
    if initial_field is not None:
        if len(initial_field.samples) != ctx.steps + 1:
            raise ValidationError("initial field sample count does not match config")
        field = initial_field.samples.copy()
    else:
        field = make_guess_field(ctx.basis, config).samples
    trace = trace if trace is not None else OctTrace()
    stall = 0
    if not len(trace):
        objective, fid = measure(evaluate(field))
        trace.append(0, objective, fid, float(np.trapezoid(field**2, dx=ctx.dt)))
        if fid >= config.fidelity_goal:
            trace.status = "converged"
            return ControlField(field, ctx.dt), trace
    start = trace.iterations[-1] + 1
    for it in range(start, config.max_iterations + start):
        field, finals = sweep(field)
        if not np.all(np.isfinite(field)):
            trace.status = "aborted: non-finite field"
            raise NumericalError("field update produced non-finite samples")
        objective, fid = measure(finals)
        fluence = float(np.trapezoid(field**2, dx=ctx.dt))
        prev = trace.objectives[-1]
        if objective < prev - MONOTONE_SLACK * max(1.0, abs(prev)):
            trace.status = f"aborted: objective decreased at iteration {it}"
            raise ConvergenceError(
                f"objective decreased from {prev!r} to {objective!r} at "
                f"iteration {it}; monotonic scheme violated"
            )
        if objective - prev < config.stall_improvement * max(1.0, abs(prev)):
            stall += 1
        else:
            stall = 0
        trace.append(it, objective, fid, fluence)
        if callback is not None:
            callback(it, ControlField(field.copy(), ctx.dt), trace)
        if fid >= config.fidelity_goal:
            trace.status = "converged"
            break
        if stall >= config.stall_iterations:
            trace.status = "stalled"
            break
    else:
        trace.status = "iteration budget exhausted"
    return ControlField(field, ctx.dt), trace


def _closed_backward(ctx, targets, field):
    lam = targets.copy()
    dt = ctx.dt
    for n in range(ctx.steps, 0, -1):
        f = 1j * field[n - 1]
        k1 = f * ctx.apply_mu(2 * n, lam)
        k2 = f * ctx.apply_mu(2 * n - 1, lam - 0.5 * dt * k1)
        k3 = f * ctx.apply_mu(2 * n - 1, lam - 0.5 * dt * k2)
        k4 = f * ctx.apply_mu(2 * n - 2, lam - dt * k3)
        lam = lam - (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return lam


def _closed_evaluate(ctx, initials, field):
    """Forward propagation of the trajectories with frozen-per-step fields."""
    x = initials.astype(complex).copy()
    dt = ctx.dt
    for n in range(ctx.steps):
        f = 1j * field[n]
        k1 = f * ctx.apply_mu(2 * n, x)
        k2 = f * ctx.apply_mu(2 * n + 1, x + 0.5 * dt * k1)
        k3 = f * ctx.apply_mu(2 * n + 1, x + 0.5 * dt * k2)
        k4 = f * ctx.apply_mu(2 * n + 2, x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


def _closed_forward_update(ctx, initials, lam0, old_field, functional, n_gate):
    """Forward sweep with immediate update; the multipliers ride along under
    the old field.  Returns (new field samples, final states)."""
    dt = ctx.dt
    n_traj = initials.shape[1]
    x = np.concatenate([initials.astype(complex), lam0], axis=1)
    fvec = np.empty(2 * n_traj)
    new_field = np.zeros_like(old_field)
    weight = ctx.env / ctx.config.alpha0
    for n in range(ctx.steps):
        mx = ctx.apply_mu(2 * n, x)
        psi = x[:, :n_traj]
        lam = x[:, n_traj:]
        overlaps = np.einsum("dj,dj->j", lam.conj(), psi)
        couplings = np.einsum("dj,dj->j", lam.conj(), mx[:, :n_traj])
        if functional == "P":
            bracket = float(np.sum((overlaps.conj() * couplings).imag))
        else:
            bracket = float(
                (np.sum(overlaps[:n_gate]).conj() * np.sum(couplings[:n_gate])).imag
            )
        e_new = old_field[n] - weight[n] * bracket
        new_field[n] = e_new
        fvec[:n_traj] = e_new
        fvec[n_traj:] = old_field[n]
        k1 = (1j * fvec) * mx
        k2 = (1j * fvec) * ctx.apply_mu(2 * n + 1, x + 0.5 * dt * k1)
        k3 = (1j * fvec) * ctx.apply_mu(2 * n + 1, x + 0.5 * dt * k2)
        k4 = (1j * fvec) * ctx.apply_mu(2 * n + 2, x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    new_field[-1] = old_field[-1]
    return new_field, x[:, :n_traj]


def optimize_gate(basis: EigenBasis, targets: TargetSet, config: OctConfig,
                  initial_field: ControlField | None = None,
                  trace: OctTrace | None = None, callback=None):
    """Synthesize the field driving the target gate among the qubit states.

    Returns (ControlField, OctTrace).  The trace records the functional's
    main objective, the gate fidelity of the projected propagator, and the
    field fluence for every iteration, plus a final status string.
    """
    with_sup = (config.functional == "P" and config.include_superposition_target
                and targets.include_superposition)
    ctx = _SweepContext(basis, config)
    init, targ = targets.trajectories(ctx.dim, with_sup)
    n_gate = targets.n

    def sweep(field):
        lam0 = _closed_backward(ctx, targ, field)
        return _closed_forward_update(ctx, init, lam0, field, config.functional, n_gate)

    def measure(finals):
        overlaps = np.einsum("dj,dj->j", targ.conj(), finals)
        if config.functional == "P":
            objective = float(np.sum(np.abs(overlaps) ** 2))
        else:
            objective = float(abs(np.sum(overlaps[:n_gate])) ** 2)
        return objective, fidelity(targets.gate, finals[:n_gate, :n_gate])

    def evaluate(field):
        return _closed_evaluate(ctx, init, field)

    return _run_iterations(ctx, config, sweep, evaluate, measure, initial_field,
                           trace, callback)


def optimize_state_prep(basis: EigenBasis, target_amplitudes, config: OctConfig,
                        initial_field: ControlField | None = None,
                        trace: OctTrace | None = None, callback=None):
    """Field preparing the encoded wavepacket from the motional ground state.

    Single-target variant; the reported fidelity is the population overlap
    |<target|psi(T)>|^2, insensitive to the global phase.
    """
    c = np.asarray(getattr(target_amplitudes, "c", target_amplitudes), dtype=complex)
    if abs(np.linalg.norm(c) - 1.0) > 1e-8:
        raise ValidationError("target amplitudes must be normalized")
    ctx = _SweepContext(basis, config)
    if len(c) > ctx.dim:
        raise ValidationError("target has more states than the dynamical basis")
    init = np.zeros((ctx.dim, 1), dtype=complex)
    init[0, 0] = 1.0
    targ = np.zeros((ctx.dim, 1), dtype=complex)
    targ[: len(c), 0] = c

    def sweep(field):
        lam0 = _closed_backward(ctx, targ, field)
        return _closed_forward_update(ctx, init, lam0, field, "P", 1)

    def measure(finals):
        overlap2 = float(abs(np.vdot(targ[:, 0], finals[:, 0])) ** 2)
        return overlap2, overlap2

    def evaluate(field):
        return _closed_evaluate(ctx, init, field)

    return _run_iterations(ctx, config, sweep, evaluate, measure, initial_field,
                           trace, callback)


# ---------------------------------------------------------------------------
# dissipative variant
# ---------------------------------------------------------------------------

class _DissContext(_SweepContext):
    """Adds Lindblad structure; `sign` selects the generator (+1) or its
    adjoint (-1), which keeps Tr(eta^dag rho) invariant under joint flow."""

    def __init__(self, basis, config, diss: DissipationModel):
        super().__init__(basis, config)
        self.gamma = diss.gamma
        self.out_rates = diss.total_out_rates()
        self._idx = np.arange(self.dim)

    def rhs(self, half_idx, x, e_field, sign):
        p = self.phases[half_idx]
        mu_x = p[None, :, None] * np.einsum(
            "ij,tjk->tik", self.mu, p.conj()[None, :, None] * x
        )
        comm = mu_x - mu_x.conj().transpose(0, 2, 1)   # x stays Hermitian
        dx = 1j * e_field * comm
        pops = np.einsum("tii->ti", x).real
        rate_sum = self.out_rates[None, :, None] + self.out_rates[None, None, :]
        if sign > 0:
            dx = dx - 0.5 * rate_sum * x
            dx[:, self._idx, self._idx] += pops @ self.gamma.T
        else:
            dx = dx + 0.5 * rate_sum * x
            dx[:, self._idx, self._idx] -= pops @ self.gamma
        return dx

    def rk4(self, half0, direction, x, e_field, sign):
        """One frozen-field step; stage times follow the integration
        direction (+1 forward, -1 backward)."""
        dt = direction * self.dt
        i1, i2 = half0 + direction, half0 + 2 * direction
        k1 = self.rhs(half0, x, e_field, sign)
        k2 = self.rhs(i1, x + 0.5 * dt * k1, e_field, sign)
        k3 = self.rhs(i1, x + 0.5 * dt * k2, e_field, sign)
        k4 = self.rhs(i2, x + dt * k3, e_field, sign)
        return x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def optimize_gate_dissipative(basis: EigenBasis, targets: TargetSet,
                              config: OctConfig, diss: DissipationModel,
                              initial_field: ControlField | None = None,
                              trace: OctTrace | None = None, callback=None):
    """Gate optimization with forward/backward Lindblad propagation.

    Trajectories are density matrices rho_j from the basis projectors (plus
    the superposition projector for the P functional); multipliers eta_j
    run backward from the target projectors under the adjoint generator.
    The objective is sum_j Tr(W_j rho_j(T)); the fidelity column reports
    the mean target population of the gate trajectories, the
    phase-insensitive surrogate available in the density formalism.
    """
    with_sup = (config.functional == "P" and config.include_superposition_target
                and targets.include_superposition)
    ctx = _DissContext(basis, config, diss)
    init_vecs, targ_vecs = targets.trajectories(ctx.dim, with_sup)
    rho0 = np.einsum("dt,et->tde", init_vecs, init_vecs.conj())
    eta_final = np.einsum("dt,et->tde", targ_vecs, targ_vecs.conj())
    n_gate = targets.n
    weight = ctx.env / config.alpha0

    def sweep(field):
        eta = eta_final.copy()
        for n in range(ctx.steps, 0, -1):
            eta = ctx.rk4(2 * n, -1, eta, field[n - 1], sign=-1)
        rho = rho0.copy()
        new_field = np.zeros_like(field)
        for n in range(ctx.steps):
            p = ctx.phases[2 * n]
            mu_rho = p[None, :, None] * np.einsum(
                "ij,tjk->tik", ctx.mu, p.conj()[None, :, None] * rho
            )
            comm = mu_rho - mu_rho.conj().transpose(0, 2, 1)
            pair = np.einsum("tde,tde->t", eta.conj(), comm)
            if config.functional == "P":
                bracket = 0.5 * float(np.sum(pair.imag))
            else:
                pops = np.einsum("tde,tde->t", eta.conj(), rho).real
                bracket = 0.5 * float(np.sum(pops[:n_gate]) * np.sum(pair[:n_gate].imag))
            e_new = field[n] - weight[n] * bracket
            new_field[n] = e_new
            rho = ctx.rk4(2 * n, +1, rho, e_new, sign=+1)
            eta = ctx.rk4(2 * n, +1, eta, field[n], sign=-1)
        new_field[-1] = field[-1]
        return new_field, rho

    def measure(rho):
        pops = np.einsum("tde,tde->t", eta_final.conj(), rho).real
        return float(np.sum(pops)), float(np.mean(pops[:n_gate]))

    def evaluate(field):
        rho = rho0.copy()
        for n in range(ctx.steps):
            rho = ctx.rk4(2 * n, +1, rho, field[n], sign=+1)
        return rho

    return _run_iterations(ctx, config, sweep, evaluate, measure, initial_field,
                           trace, callback)
