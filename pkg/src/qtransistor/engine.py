"""Repeated-collision propagation of the transistor working substance.

Every collision window follows the same pattern: fresh thermal ancillas
are attached to their terminals, the joint state evolves unitarily under
the total Hamiltonian for one window, intra-window samples are recorded,
and the ancillas are traced out and discarded.  Windows are back to
back; there is no free evolution between them.

The total Hamiltonian is diagonalized once per parameter set and cached,
so a collision costs a basis change plus elementwise phase evolution.
Heat currents come from the conserved-commutator form

    J_X = -Tr(rhodot_X H_X),   rhodot_X = Tr_rest(-i [H_tot, rho]),

with the sign chosen so that heat leaving qubit X is positive.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .linalg import hermitian_eig, kron, partial_trace
from .model import (ModelConfig, SpinOps, ancilla_thermal_state,
                    build_total_hamiltonian, embed)

BOUNDARY_SIDES = ("left", "right")

# currents are real observables; larger residues indicate a broken state
_IMAG_TOL = 1e-8


def initial_state(n_qubits: int = 3) -> np.ndarray:
    """|0...0><0...0| on the system qubits (each local sz = +1)."""
    if n_qubits < 1:
        raise ValueError(f"n_qubits must be >= 1, got {n_qubits}")
    d = 2 ** n_qubits
    rho = np.zeros((d, d), dtype=np.complex128)
    rho[0, 0] = 1.0
    return rho


def _ham_signature(config: ModelConfig) -> tuple:
    """Identity of H_tot: everything except temperatures and grids."""
    c, e = config.coupling, config.env
    eps = e.epsilon if e.kind == "qutrit-nonlinear" else 0.0
    return (config.n_qubits, c.omega_L, c.omega_M, c.omega_R,
            c.omega_ML, c.omega_MR, c.omega_LR,
            e.kind, e.delta, eps, config.attached_terminals, config.g)


class _Core:
    """Spectral data shared by every run with the same H_tot."""

    def __init__(self, config: ModelConfig):
        self.n_sys = config.n_qubits
        self.dims = config.joint_dims()
        self.d = int(np.prod(self.dims))
        self.d_sys = 2 ** self.n_sys
        self.d_env = self.d // self.d_sys
        self.terminals = config.system_terminals

        h_tot = build_total_hamiltonian(config)
        w, v = hermitian_eig(h_tot)
        self.w = w
        self.v = v
        self.vh = v.conj().T

        # current generators K_X = i [H_X, H_tot]; in the eigenbasis
        # K'_jk = i (H_X')_jk (w_k - w_j), so J_X = Tr(rho' K_X')
        gap = w[None, :] - w[:, None]
        rows = []
        for i, t in enumerate(self.terminals):
            h_x = -(config.splitting(t) / 2.0) * embed(
                SpinOps.sz_half, i, self.dims)
            h_x_eig = self.vh @ h_x @ self.v
            k_eig = 1j * h_x_eig * gap
            rows.append(k_eig.T.reshape(-1))  # flattened K^T for the GEMM
        self.k_flat = np.stack(rows)  # (n_terminals, d*d)

        self._lock = threading.Lock()
        self._phases: dict = {}
        self._maps: dict = {}

    def phases(self, sample_dt: float, n_steps: int) -> np.ndarray:
        """Stack of eigenbasis propagators for tau = sample_dt .. window."""
        key = (sample_dt, n_steps)
        with self._lock:
            if key not in self._phases:
                taus = sample_dt * np.arange(1, n_steps + 1)
                gap = self.w[:, None] - self.w[None, :]
                stack = np.exp(-1j * np.multiply.outer(taus, gap))
                if len(self._phases) >= 4:  # keep the cache small
                    self._phases.pop(next(iter(self._phases)))
                self._phases[key] = stack.reshape(n_steps, -1)
            return self._phases[key]

    def reduction_map(self, what) -> np.ndarray:
        """Map from eigenbasis rho' to a reduced state.

        ``what`` is "sys" for the full qubit register or a system site
        index for a single qubit.  Returns G with shape (d*d, k*k) so
        that vec(rho_red) = vec(rho') @ G.
        """
        with self._lock:
            if what not in self._maps:
                if what == "sys":
                    pre, k, post = 1, self.d_sys, self.d_env
                else:
                    site = int(what)
                    k = self.dims[site]
                    pre = int(np.prod(self.dims[:site])) if site else 1
                    post = int(np.prod(self.dims[site + 1:]))
                vg = self.v.reshape(pre, k, post, self.d)
                # G[jk,ab] = sum_{u,v} vg[u,a,v,j] conj(vg)[u,b,v,k];
                # contracting u,v first keeps it a single GEMM
                m = np.tensordot(vg, vg.conj(), axes=([0, 2], [0, 2]))
                g = m.transpose(1, 3, 0, 2)  # (a,j,b,k) -> (j,k,a,b)
                self._maps[what] = np.ascontiguousarray(
                    g.reshape(self.d * self.d, k * k))
            return self._maps[what]


_CORES: "OrderedDict[tuple, _Core]" = OrderedDict()
_CORES_LOCK = threading.Lock()
_CORE_CAPACITY = 8


def _core_for(config: ModelConfig) -> _Core:
    key = _ham_signature(config)
    with _CORES_LOCK:
        core = _CORES.get(key)
        if core is not None:
            _CORES.move_to_end(key)
            return core
    core = _Core(config)
    with _CORES_LOCK:
        _CORES[key] = core
        while len(_CORES) > _CORE_CAPACITY:
            _CORES.popitem(last=False)
    return core


def clear_caches() -> None:
    with _CORES_LOCK:
        _CORES.clear()


class Propagator:
    """Collision machinery bound to one ModelConfig."""

    def __init__(self, config: ModelConfig):
        self.config = config
        self.core = _core_for(config)
        self.n_steps = config.samples_per_collision
        self.phase_stack = self.core.phases(config.sample_dt, self.n_steps)
        fresh = [ancilla_thermal_state(config.env, t)
                 for t in config.attached_terminals]
        self.env_state = kron(*fresh) if fresh else np.eye(
            1, dtype=np.complex128)
        self.terminals = self.core.terminals

    def _to_eigenbasis(self, rho_sys: np.ndarray) -> np.ndarray:
        joint = np.kron(rho_sys, self.env_state)
        return self.core.vh @ joint @ self.core.v

    def currents_at_attach(self, rho_sys: np.ndarray) -> np.ndarray:
        """J_X the instant fresh ancillas are attached (tau = 0+)."""
        a = self._to_eigenbasis(rho_sys)
        return self._currents_from(a.reshape(1, -1))[0]

    def _currents_from(self, rho_flat: np.ndarray) -> np.ndarray:
        cur = rho_flat @ self.core.k_flat.T
        worst = float(np.max(np.abs(cur.imag))) if cur.size else 0.0
        if worst > _IMAG_TOL:
            raise FloatingPointError(
                f"current has imaginary residue {worst:.3e}")
        return np.ascontiguousarray(cur.real)

    def collision(self, rho_sys: np.ndarray, reduced=None):
        """Evolve one window from ``rho_sys``.

        Returns (rho_sys_end, currents, attach_currents, reduced_states)
        where currents has shape (n_steps, n_terminals) sampled at
        tau = sample_dt .. window, attach_currents is the tau = 0 row,
        and reduced_states holds per-sample reduced density matrices for
        ``reduced`` ("sys" or a terminal letter), or None.
        """
        core = self.core
        a = self._to_eigenbasis(rho_sys)
        a_flat = a.reshape(-1)

        # currents: J(tau_s) = sum_jk a_jk P_s,jk K_kj, precontract a*K
        weighted = a_flat[None, :] * core.k_flat
        cur = self.phase_stack @ weighted.T
        worst = float(np.max(np.abs(cur.imag))) if cur.size else 0.0
        if worst > _IMAG_TOL:
            raise FloatingPointError(
                f"current has imaginary residue {worst:.3e}")
        currents = np.ascontiguousarray(cur.real)
        attach = self._currents_from(a_flat.reshape(1, -1))[0]

        g_sys = core.reduction_map("sys")
        states = None
        if reduced == "sys":
            weights = a_flat[:, None] * g_sys
            block = self.phase_stack @ weights
            states = block.reshape(self.n_steps, core.d_sys, core.d_sys)
            rho_end = states[-1]
        elif reduced is not None:
            site = self.terminals.index(reduced)
            g_site = core.reduction_map(site)
            weights = a_flat[:, None] * g_site
            block = self.phase_stack @ weights
            k = self.config.joint_dims()[site]
            states = block.reshape(self.n_steps, k, k)
            end_flat = (a_flat * self.phase_stack[-1]) @ g_sys
            rho_end = end_flat.reshape(core.d_sys, core.d_sys)
        else:
            end_flat = (a_flat * self.phase_stack[-1]) @ g_sys
            rho_end = end_flat.reshape(core.d_sys, core.d_sys)

        rho_end = (rho_end + rho_end.conj().T) / 2.0
        if states is not None:
            states = (states + states.conj().transpose(0, 2, 1)) / 2.0
        return rho_end, currents, attach, states


@dataclass
class SimulationState:
    """Mutable cursor for stepping collision by collision."""

    rho_sys: np.ndarray
    time: float
    collisions: int
    propagator: Propagator = field(repr=False)


@dataclass
class CollisionBlock:
    """Samples produced by one collision window."""

    times: np.ndarray
    currents: dict
    system_states: Optional[np.ndarray]


def make_simulation_state(config: ModelConfig,
                          initial: Optional[np.ndarray] = None
                          ) -> SimulationState:
    rho = initial_state(config.n_qubits) if initial is None \
        else np.asarray(initial, dtype=np.complex128).copy()
    d = 2 ** config.n_qubits
    if rho.shape != (d, d):
        raise ValueError(
            f"initial state must be {d}x{d} for {config.n_qubits} qubits, "
            f"got {rho.shape}")
    return SimulationState(rho_sys=rho, time=0.0, collisions=0,
                           propagator=Propagator(config))


def step_collision(state: SimulationState, config: ModelConfig,
                   store_states: bool = False):
    """Advance one collision window; returns (new state, samples)."""
    if state.propagator.config != config:
        raise ValueError(
            "simulation state was prepared for a different configuration; "
            "rebuild it with make_simulation_state")
    prop = state.propagator
    reduced = "sys" if store_states else None
    rho_end, currents, _, states = prop.collision(state.rho_sys,
                                                  reduced=reduced)
    taus = config.sample_dt * np.arange(1, prop.n_steps + 1)
    block = CollisionBlock(
        times=state.time + taus,
        currents={t: np.ascontiguousarray(currents[:, i])
                  for i, t in enumerate(prop.terminals)},
        system_states=states)
    new_state = SimulationState(rho_sys=rho_end,
                                time=state.time + config.dt_collision,
                                collisions=state.collisions + 1,
                                propagator=prop)
    return new_state, block


@dataclass
class Trajectory:
    """Sampled history of one repeated-collision run."""

    config: ModelConfig
    boundary: str
    times: np.ndarray
    currents: dict  # terminal -> (n_samples,)
    collision_index: np.ndarray
    system_states: Optional[np.ndarray] = None  # (n_samples, d, d)
    qubit_states: Optional[dict] = None  # terminal -> (n_samples, 2, 2)

    def index_at(self, t: float) -> int:
        dt = self.config.sample_dt
        i = int(round(t / dt))
        if abs(t - i * dt) > 1e-9 or not 0 <= i < len(self.times):
            raise ValueError(
                f"t = {t} is not on the sample grid [0, "
                f"{self.times[-1]:g}] with spacing {dt}")
        return i

    def current(self, terminal: str, t: float) -> float:
        return float(self.currents[terminal][self.index_at(t)])


def _batched_qubit_marginal(states: np.ndarray, n_qubits: int,
                            site: int) -> np.ndarray:
    shape = (states.shape[0],) + (2,) * (2 * n_qubits)
    arr = states.reshape(shape)
    row = list(range(1, n_qubits + 1))
    col = [i if i - 1 != site else i + n_qubits for i in row]
    out = [0, 1 + site, 1 + site + n_qubits]
    return np.einsum(arr, [0] + row + col, out)


def evolve(config: ModelConfig, t_max: float, *,
           store_states: bool = False,
           marginal_terminal: Optional[str] = None,
           boundary: str = "left",
           initial: Optional[np.ndarray] = None) -> Trajectory:
    """Run repeated collisions from t = 0 to t = t_max.

    ``t_max`` must be a whole number of collision windows.  ``boundary``
    picks which one-sided limit is reported exactly at window edges:
    "left" keeps the end-of-window currents, "right" the fresh-ancilla
    values (the reduced states agree from both sides).  Full system
    snapshots are stored when ``store_states`` is set; a single qubit's
    reduced history can be requested more cheaply through
    ``marginal_terminal``.
    """
    if boundary not in BOUNDARY_SIDES:
        raise ValueError(f"boundary must be one of {BOUNDARY_SIDES}")
    if t_max < 0:
        raise ValueError(f"t_max must be >= 0, got {t_max}")
    n_col = t_max / config.dt_collision
    if abs(n_col - round(n_col)) > 1e-9 * max(1.0, abs(n_col)):
        raise ValueError(
            f"t_max = {t_max} is not a whole number of collision windows "
            f"of length {config.dt_collision}")
    n_col = int(round(n_col))
    if store_states and marginal_terminal is not None:
        raise ValueError("store_states already includes every marginal")
    if marginal_terminal is not None and \
            marginal_terminal not in config.system_terminals:
        raise ValueError(
            f"marginal terminal {marginal_terminal!r} not in "
            f"{config.system_terminals}")

    prop = Propagator(config)
    steps = prop.n_steps
    n_samples = n_col * steps + 1
    n_terms = len(prop.terminals)
    d_sys = 2 ** config.n_qubits

    rho = initial_state(config.n_qubits) if initial is None \
        else np.asarray(initial, dtype=np.complex128).copy()
    if rho.shape != (d_sys, d_sys):
        raise ValueError(
            f"initial state must be {d_sys}x{d_sys}, got {rho.shape}")

    currents = np.empty((n_samples, n_terms))
    times = config.sample_dt * np.arange(n_samples)
    sys_states = np.empty((n_samples, d_sys, d_sys),
                          dtype=np.complex128) if store_states else None
    marg = None
    if marginal_terminal is not None:
        site = config.system_terminals.index(marginal_terminal)
        marg = np.empty((n_samples, 2, 2), dtype=np.complex128)
        marg[0] = partial_trace(rho, [2] * config.n_qubits, [site])
    if store_states:
        sys_states[0] = rho

    reduced = "sys" if store_states else marginal_terminal
    for k in range(n_col):
        rho, block_cur, attach, states = prop.collision(rho, reduced=reduced)
        lo = k * steps + 1
        currents[lo:lo + steps] = block_cur
        if k == 0:
            currents[0] = attach
        elif boundary == "right":
            currents[lo - 1] = attach
        if store_states:
            sys_states[lo:lo + steps] = states
        elif marg is not None:
            marg[lo:lo + steps] = states
    if n_col == 0:
        currents[0] = prop.currents_at_attach(rho)
    elif boundary == "right":
        currents[-1] = prop.currents_at_attach(rho)

    if boundary == "left":
        collision_index = (np.arange(n_samples) + steps - 1) // steps
    else:
        collision_index = np.arange(n_samples) // steps + 1

    qubit_states = None
    if store_states:
        qubit_states = {
            t: _batched_qubit_marginal(sys_states, config.n_qubits, i)
            for i, t in enumerate(config.system_terminals)}
    elif marg is not None:
        qubit_states = {marginal_terminal: marg}

    return Trajectory(
        config=config, boundary=boundary, times=times,
        currents={t: np.ascontiguousarray(currents[:, i])
                  for i, t in enumerate(prop.terminals)},
        collision_index=collision_index,
        system_states=sys_states, qubit_states=qubit_states)


def local_heat_current(joint_state: np.ndarray, h_total: np.ndarray,
                       terminal: str, config: ModelConfig) -> float:
    """Reference heat current J_X = -Tr(rhodot_X H_X) from a joint state.

    Positive values mean energy leaving qubit X.  This is the direct
    commutator-plus-partial-trace evaluation; the propagator computes
    the same quantity through the cached eigenbasis.
    """
    if terminal not in config.system_terminals:
        raise ValueError(
            f"terminal {terminal!r} not in {config.system_terminals}")
    dims = config.joint_dims()
    d = int(np.prod(dims))
    if joint_state.shape != (d, d) or h_total.shape != (d, d):
        raise ValueError(
            f"joint state and H must be {d}x{d} for dims {dims}")
    site = config.system_terminals.index(terminal)
    rhodot = -1j * (h_total @ joint_state - joint_state @ h_total)
    rhodot_x = partial_trace(rhodot, dims, [site])
    h_x = -(config.splitting(terminal) / 2.0) * SpinOps.sz_half
    val = complex(np.trace(rhodot_x @ h_x))
    if abs(val.imag) > 1e-10:
        raise FloatingPointError(
            f"current has imaginary residue {abs(val.imag):.3e}")
    return -val.real
