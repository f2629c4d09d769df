import math

import numpy as np
import pytest

from conftest import OMEGA, make_model
from subradiant import (
    ConfigurationError,
    PropagatorConfig,
    QuantumState,
    UnsupportedStateError,
    concurrence,
    evolve,
    evolve_exact,
    evolve_lindblad,
    reduce_to_emitters,
    state_populations,
    steady_state,
)
from subradiant.dynamics import EE, EG, GE, GG
from subradiant.entanglement import bell_state

PSI_MINUS = np.outer(bell_state("psi-"), bell_state("psi-").conj())
GG_PROJ = np.diag([1, 0, 0, 0]).astype(complex)


def cfg(backend="exact", t_end=200.0, dt=0.25, frame="rotating"):
    return PropagatorConfig(backend, t_end, dt, frame=frame)


def test_decoupled_populations_constant():
    model = make_model([[0, 0], [0, 0]])
    traj = evolve_exact(model, QuantumState.excited(2), cfg())
    assert np.all(traj.reduced_rho[:, EG, EG].real == 1.0)


def test_lossless_rabi_matches_closed_form():
    g = 0.04
    model = make_model([[g, g]], kappas=[0.0])
    traj = evolve_exact(model, QuantumState.excited(1), cfg(t_end=500))
    pops = traj.populations()
    t = traj.times
    c = np.cos(math.sqrt(2) * g * t)
    np.testing.assert_allclose(pops["psi-"], 0.5, atol=1e-12)
    np.testing.assert_allclose(pops["psi+"], 0.5 * c**2, atol=1e-12)
    np.testing.assert_allclose(pops["eg"], ((1 + c) / 2) ** 2, atol=1e-12)


def test_symmetric_single_mode_relaxes_to_half_psi_minus():
    model = make_model([[0.05, 0.05]], kappas=[0.1])
    traj = evolve_exact(model, QuantumState.excited(1), cfg(t_end=1000, dt=1.0))
    np.testing.assert_allclose(traj.final, 0.5 * GG_PROJ + 0.5 * PSI_MINUS, atol=1e-9)
    assert concurrence(traj.final) == pytest.approx(0.5, abs=1e-9)


def test_lossless_lindblad_preserves_purity():
    model = make_model([[0.05, 0.02 + 0.01j], [0.01j, -0.03]], omegas=[OMEGA, OMEGA + 0.1], kappas=[0.0, 0.0])
    config = PropagatorConfig("lindblad", 1000.0, 5.0)
    rho0 = QuantumState.excited(2).to_density()
    from scipy.integrate import solve_ivp

    from subradiant.dynamics import lindblad_rhs

    sol = solve_ivp(lindblad_rhs(model), (0, 1000), rho0.ravel(), method="DOP853", t_eval=config.times, rtol=1e-10, atol=1e-12)
    rhos = sol.y.T.reshape(-1, 5, 5)
    purity = np.einsum("tij,tji->t", rhos, rhos).real
    np.testing.assert_allclose(purity, 1.0, atol=1e-8)
    traj = evolve_lindblad(model, rho0, config)
    np.testing.assert_allclose(traj.meta["trace"], 1.0, atol=1e-9)


def test_vacuum_is_stationary():
    model = make_model([[0.05, 0.02]])
    for backend in ("exact", "lindblad"):
        traj = evolve(model, QuantumState.ground(1), cfg(backend, t_end=50))
        np.testing.assert_allclose(traj.reduced_rho, np.broadcast_to(GG_PROJ, traj.reduced_rho.shape), atol=1e-14)


def test_reduce_examples():
    n = 2
    eg = QuantumState.excited(n).to_density()
    np.testing.assert_allclose(reduce_to_emitters(eg), np.diag([0, 0, 1, 0]))
    photon = np.zeros((5, 5))
    photon[3, 3] = 1
    np.testing.assert_allclose(reduce_to_emitters(photon), GG_PROJ)
    mix = 0.5 * eg + 0.5 * photon
    np.testing.assert_allclose(reduce_to_emitters(mix), np.diag([0.5, 0, 0.5, 0]))
    assert reduce_to_emitters(QuantumState.excited(n))[EE, EE] == 0


def test_reduce_is_trace_and_hermiticity_preserving(rng):
    from conftest import random_density

    rho = random_density(rng, 6)
    r = reduce_to_emitters(rho)
    assert np.trace(r).real == pytest.approx(1.0)
    np.testing.assert_allclose(r, r.conj().T)
    # compact and dense reductions agree
    np.testing.assert_allclose(reduce_to_emitters(QuantumState.from_density(rho)), r, atol=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_backends_agree_on_mixed_fixture(seed):
    rng = np.random.default_rng(seed)
    g = 0.05 * (rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2)))
    model = make_model(g, omegas=OMEGA + rng.uniform(-0.1, 0.1, 3), kappas=rng.uniform(0.05, 0.2, 3), ms=[0, 1, 2])
    exact = evolve_exact(model, QuantumState.excited(3), cfg())
    lind = evolve_lindblad(model, QuantumState.excited(3), cfg("lindblad"))
    assert np.max(np.abs(exact.reduced_rho - lind.reduced_rho)) < 1e-8
    assert np.max(np.abs(lind.meta["trace"] - 1)) < 1e-9
    assert np.min(lind.meta["min_eig"]) > -1e-9


def test_norm_monotone(rng):
    g = 0.05 * (rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2)))
    model = make_model(g, kappas=rng.uniform(0.05, 0.2, 4))
    traj = evolve_exact(model, QuantumState.excited(4), cfg(t_end=400))
    assert np.all(np.diff(traj.ground_population) >= -1e-13)


def test_frame_invariance_with_ground_coherence():
    model = make_model([[0.05, 0.03j], [0.02, -0.01]], omegas=[OMEGA, OMEGA + 0.08])
    init = QuantumState.from_emitter_state(np.array([1, 0, 1, 0]) / math.sqrt(2), 2)
    rot = evolve_exact(model, init, cfg(frame="rotating"))
    lab = evolve_exact(model, init, cfg(frame="lab"))
    for a, b in zip(rot.populations().values(), lab.populations().values()):
        np.testing.assert_allclose(a, b, atol=1e-9)
    np.testing.assert_allclose(rot.concurrence(), lab.concurrence(), atol=1e-9)
    phase = np.exp(1j * OMEGA * rot.times)
    np.testing.assert_allclose(lab.reduced_rho[:, EG, GG] * phase, rot.reduced_rho[:, EG, GG], atol=1e-9)


def test_steady_state_matches_long_evolution():
    model = make_model([[0.05, 0.03], [0.02, 0.012]], omegas=[OMEGA, OMEGA + 0.05], kappas=[0.1, 0.12])
    init = QuantumState.excited(2)
    t = 50 / model.kappas.min()
    traj = evolve_exact(model, init, times=[0.0, t])
    assert np.max(np.abs(steady_state(model, init) - traj.final)) < 1e-6


def test_steady_state_alpha_one():
    model = make_model([[0.05, 0.05]])
    np.testing.assert_allclose(steady_state(model, QuantumState.excited(1)), 0.5 * GG_PROJ + 0.5 * PSI_MINUS, atol=1e-12)


def test_opposite_parity_pair_has_no_dark_state():
    a, b = 0.04, 0.02
    model = make_model([[a, a], [b, -b]], omegas=[OMEGA, OMEGA + 0.1], ms=[0, 1])
    np.testing.assert_allclose(steady_state(model, QuantumState.excited(2)), GG_PROJ, atol=1e-12)


def test_steady_state_requires_loss():
    with pytest.raises(ConfigurationError):
        steady_state(make_model([[0.05, 0.05]], kappas=[0.0]), QuantumState.excited(1))


def _exceptional_point_model():
    kappa = 0.1
    g = kappa / (4 * math.sqrt(2))  # bright-state coupling equals kappa/4
    return make_model([[g, g]], kappas=[kappa])


def test_exceptional_point_is_ill_conditioned_but_accurate():
    model = _exceptional_point_model()
    exact = evolve_exact(model, QuantumState.excited(1), cfg())
    # rounding splits the degeneracy, leaving cond ~ 1/sqrt(eps)
    assert exact.meta["condition"] > 1e6
    lind = evolve_lindblad(model, QuantumState.excited(1), cfg("lindblad"))
    assert np.max(np.abs(exact.reduced_rho - lind.reduced_rho)) < 1e-7


def test_condition_limit_triggers_rk(monkeypatch, caplog):
    import subradiant.dynamics as dyn

    monkeypatch.setattr(dyn, "CONDITION_LIMIT", 1e3)
    model = _exceptional_point_model()
    with caplog.at_level("INFO", logger="subradiant.dynamics"):
        exact = evolve_exact(model, QuantumState.excited(1), cfg())
    assert exact.meta["method"] == "rk"
    assert "RK integration" in caplog.text
    lind = evolve_lindblad(model, QuantumState.excited(1), cfg("lindblad"))
    assert np.max(np.abs(exact.reduced_rho - lind.reduced_rho)) < 1e-8


def test_lindblad_guard():
    model = make_model(np.full((13, 2), 0.01))
    with pytest.raises(ConfigurationError, match="exact backend"):
        evolve_lindblad(model, QuantumState.excited(13), cfg("lindblad", t_end=1))


def test_unsupported_initial_state():
    model = make_model([[0.05, 0.05]])
    with pytest.raises(UnsupportedStateError):
        evolve_exact(model, np.eye(3) / 3, cfg())
    with pytest.raises(UnsupportedStateError):
        evolve_exact(model, QuantumState.excited(2), cfg())


def test_trajectory_observables():
    model = make_model([[0.05, 0.05]])
    traj = evolve_exact(model, QuantumState.excited(1), cfg(t_end=10, dt=1))
    assert traj.times.tolist() == list(range(11))
    pops = traj.populations(dark=None)
    assert set(pops) == {"eg", "ge", "psi-", "psi+"}
    np.testing.assert_array_equal(traj.at(3.2), traj.reduced_rho[3])
    assert state_populations(traj.final)["eg"] == pops["eg"][-1]
    np.testing.assert_allclose(traj.reduced_rho[0], np.diag([0, 0, 1, 0]), atol=1e-14)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        PropagatorConfig(t_end=0)
    with pytest.raises(ConfigurationError):
        PropagatorConfig(dt_out=-1)
    assert PropagatorConfig(t_end=1.0, dt_out=0.3).times[-1] == 1.0
