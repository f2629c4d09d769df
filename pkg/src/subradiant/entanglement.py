"""Two-emitter entanglement: concurrence, dark-state conditions, steady states.

All 4x4 matrices use the emitter basis ``(|g,g>, |g,e>, |e,g>, |e,e>)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import DarkStateSpec, SystemModel, build_hamiltonian

__all__ = [
    "InvalidStateError",
    "PersistenceReport",
    "bell_state",
    "concurrence",
    "check_persistence",
    "find_dark_state",
    "symmetric_persistence",
    "single_mode_steady_state",
    "state_populations",
    "hamiltonian_residual",
]

DEFAULT_TOL = 1e-9

_SYSY = np.array([[0, 0, 0, -1], [0, 0, 1, 0], [0, 1, 0, 0], [-1, 0, 0, 0]], dtype=complex)


class InvalidStateError(ValueError):
    """Matrix is not a valid density matrix within tolerance."""


def bell_state(which: str = "psi-") -> np.ndarray:
    """``|psi_-+> = (|e,g> -+ |g,e>)/sqrt(2)`` as an emitter-basis vector."""
    s = 1 / math.sqrt(2)
    sign = {"psi-": -1.0, "psi+": 1.0}[which]
    return np.array([0, sign * s, s, 0], dtype=complex)


def _validate(rho: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise InvalidStateError(f"expected a 4x4 matrix, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise InvalidStateError("matrix is not Hermitian")
    if abs(np.trace(rho).real - 1) > tol:
        raise InvalidStateError(f"trace {np.trace(rho).real:.12g} != 1")
    w = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if w[0] < -max(tol, 1e-9):
        raise InvalidStateError(f"matrix has negative eigenvalue {w[0]:.3e}")
    return rho


# eigenvalues of rho below this (relative to the trace) are treated as exact zeros
_RANK_TOL = 1e-13


def concurrence(rho, tol: float = 1e-8) -> float:
    """Wootters concurrence ``max(0, l1 - l2 - l3 - l4)``.

    ``l_i`` are the square roots of the eigenvalues of ``rho rho~`` with
    ``rho~ = (sy x sy) rho* (sy x sy)``. They are obtained as the singular
    values of ``A^T (sy x sy) A`` for ``rho = A A^dag``, which avoids taking
    square roots of round-off sized eigenvalues.
    """
    rho = _validate(rho, tol)
    w, v = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    keep = w > _RANK_TOL * max(w.sum(), 1.0)
    a = v[:, keep] * np.sqrt(w[keep])
    lam = np.zeros(4)
    if a.shape[1]:
        sv = np.linalg.svd(a.T @ _SYSY @ a, compute_uv=False)
        lam[: len(sv)] = sv
    lam = np.sort(lam)[::-1]
    return float(min(1.0, max(0.0, lam[0] - lam[1] - lam[2] - lam[3])))


def concurrence_eig(rho) -> float:
    """Textbook route through the eigenvalues of ``rho rho~``; a slower cross-check."""
    rho = np.asarray(rho, dtype=complex)
    ev = np.linalg.eigvals(rho @ (_SYSY @ rho.conj() @ _SYSY))
    lam = np.sort(np.sqrt(np.clip(ev.real, 0.0, None)))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


@dataclass(frozen=True)
class PersistenceReport:
    residuals: tuple[complex, ...]
    satisfied: tuple[bool, ...]
    threshold: float
    dark_state: DarkStateSpec | None
    violating_modes: tuple[str, ...]

    @property
    def all_satisfied(self) -> bool:
        return all(self.satisfied)


def check_persistence(model: SystemModel, spec: DarkStateSpec, tol: float = DEFAULT_TOL) -> PersistenceReport:
    """Per-mode residual ``g_1 cos(theta) + g_2 exp(i chi) sin(theta)``.

    A mode passes when ``|residual| < tol * max|g|``; ``spec`` is reported as
    a dark state only if every mode passes.
    """
    g = model.coupling.values
    a, b = spec.coefficients
    res = g[:, 0] * a + g[:, 1] * b
    gmax = float(np.max(np.abs(g), initial=0.0))
    thr = tol * gmax
    ok = tuple(bool(abs(r) < thr) or gmax == 0.0 for r in res)
    bad = tuple(m.id for m, s in zip(model.modes, ok) if not s)
    return PersistenceReport(
        residuals=tuple(complex(r) for r in res),
        satisfied=ok,
        threshold=thr,
        dark_state=spec if all(ok) else None,
        violating_modes=bad,
    )


def find_dark_state(model: SystemModel, tol: float = DEFAULT_TOL) -> DarkStateSpec | None:
    """Emitter state annihilated by every mode coupling, if one exists.

    Stacks the rows ``[g_xi1, g_xi2]`` and looks for a null vector of the
    resulting ``N x 2`` matrix. When every coupling vanishes the whole emitter
    space is dark and ``|e,g>`` (``theta = 0``) is returned.
    """
    g = np.asarray(model.coupling.values)
    if g.size == 0 or not np.any(g):
        return DarkStateSpec(0.0, 0.0)
    _, s, vh = np.linalg.svd(g, full_matrices=True)
    s_full = np.zeros(2)
    s_full[: len(s)] = s
    if s_full[1] >= tol * s_full[0]:
        return None
    a, b = vh[-1].conj()
    return DarkStateSpec.from_vector(a, b)


def symmetric_persistence(model: SystemModel, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, float | None]:
    """Parity-reduced check for symmetric placement (``|g_xi1| = |g_xi2|``).

    Returns the phase ``chi_xi`` each coupled mode demands
    (``exp(i chi) = -exp(i (phi_1 - phi_2))``) and the common ``chi`` if all
    coupled modes agree, else ``None``.
    """
    g = np.asarray(model.coupling.values)
    mags = np.abs(g)
    scale = float(mags.max(initial=0.0))
    coupled = mags.max(axis=1) > tol * scale if scale > 0 else np.zeros(len(g), bool)
    if np.any(np.abs(mags[coupled, 0] - mags[coupled, 1]) > tol * scale):
        raise ValueError("couplings are not symmetric in magnitude")
    chi = np.full(len(g), np.nan)
    chi[coupled] = np.mod(np.angle(-g[coupled, 0] * g[coupled, 1].conj()), 2 * np.pi)
    vals = chi[coupled]
    if len(vals) == 0:
        return chi, None
    d = np.angle(np.exp(1j * (vals - vals[0])))
    return chi, float(vals[0]) if np.all(np.abs(d) < 1e-9) else None


def hamiltonian_residual(model: SystemModel, spec: DarkStateSpec) -> float:
    """``|| H (|psi_D> (x) |0>) ||`` in the rotating frame."""
    return float(np.linalg.norm(build_hamiltonian(model, "rotating") @ spec.embedded(model.n_modes)))


def single_mode_steady_state(alpha: complex) -> tuple[np.ndarray, float, float]:
    """Closed-form single-mode steady state from the initial state ``|e,g>``.

    Returns ``(rho_ss, dark_population, fidelity)`` with the dark state
    ``(|e,g> - alpha |g,e>)/sqrt(1+|alpha|^2)``, population
    ``1/(1+|alpha|^2)`` and fidelity ``|1+alpha|^2 / (2 (1+|alpha|^2))`` to
    ``|psi_->``.
    """
    alpha = complex(alpha)
    norm = 1.0 + abs(alpha) ** 2
    dark = np.array([0, -alpha, 1, 0], dtype=complex) / math.sqrt(norm)
    pop = 1.0 / norm
    rho = (1 - pop) * np.diag([1, 0, 0, 0]).astype(complex) + pop * np.outer(dark, dark.conj())
    fid = abs(1 + alpha) ** 2 / (2 * norm)
    return rho, pop, fid


def state_populations(rho, dark: DarkStateSpec | None = None) -> dict[str, float]:
    """``<phi|rho|phi>`` for ``|e,g>, |g,e>, |psi->, |psi+>`` (and ``|psi_D>, |psi_B>``)."""
    rho = np.asarray(rho, dtype=complex)

    def pop(v):
        return float(np.vdot(v, rho @ v).real)

    out = {
        "eg": float(rho[2, 2].real),
        "ge": float(rho[1, 1].real),
        "psi-": pop(bell_state("psi-")),
        "psi+": pop(bell_state("psi+")),
    }
    if dark is not None:
        out["dark"] = pop(dark.dark_vector)
        out["bright"] = pop(dark.bright_vector)
    return out
