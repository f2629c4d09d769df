"""Time evolution of the emitter/mode system and reduction to the emitters.

Two backends share one interface:

* ``exact``: the master equation only removes excitations, so the
  one-excitation block evolves as ``U rho_1 U^dag`` with
  ``U = exp(-i H_eff t)`` and the lost weight lands in ``|G>``. ``U`` is
  applied through an eigendecomposition of ``H_eff``; an adaptive RK
  integrator takes over when the eigenvector matrix is ill-conditioned.
* ``lindblad``: the full ``(N+3)^2`` master equation integrated with an
  adaptive Runge-Kutta scheme. Used as the independent oracle.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .model import ConfigurationError, QuantumState, SystemModel, build_dissipators, build_hamiltonian

logger = logging.getLogger(__name__)

__all__ = [
    "Backend",
    "PropagatorConfig",
    "Trajectory",
    "UnsupportedStateError",
    "evolve",
    "evolve_exact",
    "evolve_lindblad",
    "reduce_to_emitters",
    "steady_state",
]

CONDITION_LIMIT = 1e8
LINDBLAD_MODE_GUARD = 12

# emitter basis order used for every 4x4 matrix in the package
GG, GE, EG, EE = 0, 1, 2, 3


class UnsupportedStateError(ValueError):
    """Initial state outside the zero/one-excitation sectors."""


class Backend(enum.Enum):
    EXACT = "exact"
    LINDBLAD = "lindblad"


@dataclass(frozen=True)
class PropagatorConfig:
    backend: Backend = Backend.EXACT
    t_end: float = 1000.0
    dt_out: float = 0.25
    rtol: float = 1e-10
    atol: float = 1e-12
    frame: str = "rotating"
    max_lindblad_modes: int = LINDBLAD_MODE_GUARD

    def __post_init__(self):
        object.__setattr__(self, "backend", Backend(self.backend))
        if not self.t_end > 0:
            raise ConfigurationError(f"t_end must be > 0, got {self.t_end}")
        if not self.dt_out > 0:
            raise ConfigurationError(f"dt_out must be > 0, got {self.dt_out}")
        if self.frame not in ("rotating", "lab"):
            raise ConfigurationError(f"unknown frame {self.frame!r}")

    @property
    def times(self) -> np.ndarray:
        n = int(np.floor(self.t_end / self.dt_out + 1e-9))
        t = self.dt_out * np.arange(n + 1)
        if self.t_end - t[-1] > 1e-9 * self.t_end:
            t = np.append(t, self.t_end)
        return t


@dataclass(eq=False)
class Trajectory:
    """Reduced emitter states sampled on ``times`` (fs)."""

    times: np.ndarray
    reduced_rho: np.ndarray  # (T, 4, 4)
    ground_population: np.ndarray = None
    backend: Backend = Backend.EXACT
    meta: dict = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.reduced_rho[-1]

    def concurrence(self) -> np.ndarray:
        from .entanglement import concurrence

        return np.array([concurrence(r) for r in self.reduced_rho])

    def populations(self, dark=None) -> dict[str, np.ndarray]:
        from .entanglement import state_populations

        rows = [state_populations(r, dark) for r in self.reduced_rho]
        return {k: np.array([row[k] for row in rows]) for k in rows[0]}

    def at(self, t: float) -> np.ndarray:
        return self.reduced_rho[int(np.argmin(np.abs(self.times - t)))]


def _as_state(model: SystemModel, initial) -> QuantumState:
    if isinstance(initial, QuantumState):
        state = initial
    else:
        rho = np.asarray(initial, dtype=complex)
        if rho.shape != (model.dim, model.dim):
            raise UnsupportedStateError(
                f"initial density matrix has shape {rho.shape}, expected {(model.dim, model.dim)}"
            )
        state = QuantumState.from_density(rho)
    if state.columns.shape[0] != model.n_modes + 2:
        raise UnsupportedStateError(
            f"state is over {state.columns.shape[0] - 2} modes but the model has {model.n_modes}"
        )
    return state


def reduce_compact(columns: np.ndarray, coherence: np.ndarray, ground: float) -> np.ndarray:
    """Reduced 4x4 state from the compact representation (see :class:`QuantumState`)."""
    r = np.zeros((4, 4), dtype=complex)
    block = columns[:2] @ columns[:2].conj().T  # rows: |e,g>, |g,e>
    r[EG, EG] = block[0, 0]
    r[GE, GE] = block[1, 1]
    r[EG, GE] = block[0, 1]
    r[GE, EG] = block[1, 0]
    r[GG, GG] = ground + np.sum(np.abs(columns[2:]) ** 2)
    r[EG, GG] = coherence[0]
    r[GE, GG] = coherence[1]
    r[GG, EG] = np.conj(coherence[0])
    r[GG, GE] = np.conj(coherence[1])
    return r


def reduce_to_emitters(state) -> np.ndarray:
    """Partial trace over the modes.

    Accepts a :class:`QuantumState` or a dense ``(N+3) x (N+3)`` density
    matrix. The result is ordered ``(|g,g>, |g,e>, |e,g>, |e,e>)``.
    """
    if isinstance(state, QuantumState):
        return reduce_compact(state.columns, state.coherence, state.ground_population)
    rho = np.asarray(state, dtype=complex)
    r = np.zeros((4, 4), dtype=complex)
    emit = {0: GG, 1: EG, 2: GE}
    for i, a in emit.items():
        for j, b in emit.items():
            r[a, b] = rho[i, j]
    # |g,g,1_xi><g,g,1_xi| traces onto |g,g><g,g|; the other mode-diagonal
    # partners (|e,g,1_xi>, ...) are outside the truncated space
    r[GG, GG] += np.trace(rho[3:, 3:])
    return r


def _reduce_series(psi_t: np.ndarray, coh_t: np.ndarray, p_g: np.ndarray) -> np.ndarray:
    """Vectorised :func:`reduce_compact` over time; ``psi_t`` is ``(T, n, r)``."""
    T = psi_t.shape[0]
    out = np.zeros((T, 4, 4), dtype=complex)
    e = psi_t[:, :2, :]
    block = np.einsum("tir,tjr->tij", e, e.conj())
    out[:, EG, EG] = block[:, 0, 0]
    out[:, GE, GE] = block[:, 1, 1]
    out[:, EG, GE] = block[:, 0, 1]
    out[:, GE, EG] = block[:, 1, 0]
    out[:, GG, GG] = p_g + np.sum(np.abs(psi_t[:, 2:, :]) ** 2, axis=(1, 2))
    out[:, EG, GG] = coh_t[:, 0]
    out[:, GE, GG] = coh_t[:, 1]
    out[:, GG, EG] = coh_t[:, 0].conj()
    out[:, GG, GE] = coh_t[:, 1].conj()
    return out


def _propagate_eig(h_eff: np.ndarray, vecs: np.ndarray, times: np.ndarray):
    lam, V = np.linalg.eig(h_eff)
    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        return None, cond
    coeff = np.linalg.solve(V, vecs)  # (n, k)
    phase = np.exp(-1j * np.outer(times, lam))  # (T, n)
    out = np.einsum("ij,tj,jk->tik", V, phase, coeff)
    return out, cond


def _propagate_rk(h_eff: np.ndarray, vecs: np.ndarray, times: np.ndarray, rtol: float, atol: float):
    n, k = vecs.shape

    def rhs(t, y):
        return (-1j * (h_eff @ y.reshape(n, k))).ravel()

    sol = solve_ivp(rhs, (times[0], times[-1]), vecs.ravel(), method="DOP853", t_eval=times, rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"integrator failed: {sol.message}")
    return sol.y.T.reshape(len(times), n, k)


def evolve_exact(model: SystemModel, initial, config: PropagatorConfig = None, times=None) -> Trajectory:
    """Exact evolution through the non-Hermitian one-excitation Hamiltonian."""
    config = config or PropagatorConfig()
    state = _as_state(model, initial)
    times = config.times if times is None else np.asarray(times, dtype=float)
    h_eff = model.effective_hamiltonian(config.frame)

    # columns of the one-excitation block and the ground coherence evolve alike
    vecs = np.concatenate([state.columns, state.coherence[:, None]], axis=1)
    method = "eig"
    try:
        out, cond = _propagate_eig(h_eff, vecs, times)
    except np.linalg.LinAlgError as exc:
        out, cond = None, np.inf
        logger.warning("eigendecomposition failed (%s); falling back to RK integration", exc)
    if out is None:
        logger.info("eigenvector condition number %.3g > %.0e; using RK integration", cond, CONDITION_LIMIT)
        out = _propagate_rk(h_eff, vecs, times, config.rtol, config.atol)
        method = "rk"

    psi_t = out[:, :, :-1]
    coh_t = out[:, :, -1]
    norm = np.sum(np.abs(psi_t) ** 2, axis=(1, 2))
    p_g = state.trace - norm
    reduced = _reduce_series(psi_t, coh_t, p_g)
    return Trajectory(times, reduced, p_g, Backend.EXACT, {"method": method, "condition": float(cond)})


def lindblad_rhs(model: SystemModel, frame: str = "rotating"):
    """Right-hand side ``rho -> -i[H, rho] + D[rho]`` on flattened matrices."""
    H = build_hamiltonian(model, frame)
    jumps = build_dissipators(model)
    dim = model.dim
    L = np.array([a for a, _ in jumps]).reshape(-1, dim, dim)
    rates = np.array([k for _, k in jumps]).reshape(-1, 1, 1)
    LdL = np.einsum("kji,kjl->kil", L.conj(), L)
    Ld = L.conj().transpose(0, 2, 1)

    def rhs(t, y):
        rho = y.reshape(dim, dim)
        d = -1j * (H @ rho - rho @ H)
        if len(L):
            d = d + np.sum(rates * (L @ rho @ Ld - 0.5 * (LdL @ rho + rho @ LdL)), axis=0)
        return d.ravel()

    return rhs


def evolve_lindblad(model: SystemModel, initial, config: PropagatorConfig = None, times=None) -> Trajectory:
    """Integrate the full master equation for the dense density matrix."""
    config = config or PropagatorConfig(backend=Backend.LINDBLAD)
    if model.n_modes > config.max_lindblad_modes:
        raise ConfigurationError(
            f"{model.n_modes} modes exceeds the dense Lindblad guard of {config.max_lindblad_modes}; "
            "use the exact backend"
        )
    if isinstance(initial, QuantumState):
        rho0 = initial.to_density()
    else:
        rho0 = np.asarray(initial, dtype=complex)
    if rho0.shape != (model.dim, model.dim):
        raise UnsupportedStateError(f"initial state has shape {rho0.shape}, expected {(model.dim, model.dim)}")
    times = config.times if times is None else np.asarray(times, dtype=float)
    sol = solve_ivp(
        lindblad_rhs(model, config.frame),
        (times[0], times[-1]),
        rho0.ravel(),
        method="DOP853",
        t_eval=times,
        rtol=config.rtol,
        atol=config.atol,
    )
    if not sol.success:
        raise RuntimeError(f"Lindblad integration failed: {sol.message}")
    rhos = sol.y.T.reshape(len(times), model.dim, model.dim)
    reduced = np.array([reduce_to_emitters(r) for r in rhos])
    return Trajectory(
        times,
        reduced,
        rhos[:, 0, 0].real,
        Backend.LINDBLAD,
        {"trace": np.trace(rhos, axis1=1, axis2=2).real, "min_eig": np.array([np.linalg.eigvalsh(r).min() for r in rhos])},
    )


def evolve(model: SystemModel, initial, config: PropagatorConfig = None, times=None) -> Trajectory:
    config = config or PropagatorConfig()
    if config.backend is Backend.LINDBLAD:
        return evolve_lindblad(model, initial, config, times)
    return evolve_exact(model, initial, config, times)


def dark_projector(model: SystemModel, rel_tol: float = 1e-10) -> np.ndarray:
    """Orthogonal projector onto the null space of the rotating-frame ``H_eff``."""
    h_eff = model.effective_hamiltonian("rotating")
    _, s, vh = np.linalg.svd(h_eff)
    smax = s.max(initial=0.0)
    null = vh[s <= rel_tol * smax].conj().T if smax > 0 else np.eye(h_eff.shape[0], dtype=complex)
    return null @ null.conj().T


def steady_state(model: SystemModel, initial) -> np.ndarray:
    """Long-time reduced state without time integration.

    All population outside the dark subspace (null space of ``H_eff``) decays
    to ``|G>``; the dark component is frozen. With every ``kappa > 0`` the dark
    subspace and its orthogonal complement are both invariant under
    ``H_eff``, so the orthogonal projection is the spectral one.
    """
    if np.any(model.kappas <= 0):
        raise ConfigurationError("steady state needs every kappa > 0")
    state = _as_state(model, initial)
    P = dark_projector(model)
    cols = P @ state.columns
    coh = P @ state.coherence
    p_g = state.trace - float(np.sum(np.abs(cols) ** 2))
    return reduce_compact(cols, coh, p_g)
