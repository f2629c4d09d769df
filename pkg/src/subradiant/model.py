"""Domain types and operator assembly for two emitters coupled to N lossy modes.

Hilbert-space layout (dimension ``N + 3``)::

    0        |g,g> (x) |0>      global ground
    1        |e,g> (x) |0>
    2        |g,e> (x) |0>
    3..N+2   |g,g> (x) |1_xi>   one quantum in mode xi, in mode order

Units: hbar = 1, frequencies and rates in rad/fs, time in fs, lengths in nm.
The global ground state has energy zero. In the rotating frame (the default)
every one-excitation state is additionally shifted by ``-omega_e``.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ConfigurationError",
    "Parity",
    "DirectCoupling",
    "ModeDescriptor",
    "EmitterDescriptor",
    "CouplingMatrix",
    "SystemModel",
    "QuantumState",
    "DarkStateSpec",
    "build_hamiltonian",
    "build_dissipators",
    "excitation_number",
    "basis_label",
    "basis_index",
]

REFERENCE_DIPOLE = 1e-28  # C m


class ConfigurationError(ValueError):
    """Raised when descriptors or a model violate their invariants."""


class Parity(enum.Enum):
    EVEN = "even"
    ODD = "odd"


@dataclass(frozen=True)
class DirectCoupling:
    """Explicit complex couplings ``(g_1, g_2)`` of one mode to the two emitters, rad/fs."""

    g: tuple[complex, complex]

    def __post_init__(self):
        if len(self.g) != 2:
            raise ConfigurationError(f"DirectCoupling needs 2 values, got {len(self.g)}")
        vals = tuple(complex(v) for v in self.g)
        if not all(cmath.isfinite(v) for v in vals):
            raise ConfigurationError(f"non-finite coupling {vals}")
        object.__setattr__(self, "g", vals)


@dataclass(frozen=True)
class ModeDescriptor:
    """One quasinormal mode with complex frequency ``omega - i kappa / 2``.

    ``coupling_source`` is either a :class:`DirectCoupling` or a field
    surrogate from :mod:`subradiant.fields` (anything with a
    ``field(l, m, x, y)`` method).
    """

    id: str
    l: int
    m: int
    omega: float
    kappa: float
    coupling_source: object = None

    def __post_init__(self):
        if int(self.l) != self.l or self.l < 1:
            raise ConfigurationError(f"mode {self.id}: l must be a positive integer, got {self.l}")
        if int(self.m) != self.m or abs(self.m) > self.l:
            raise ConfigurationError(f"mode {self.id}: need integer m with -l <= m <= l, got m={self.m}")
        if not (math.isfinite(self.omega) and self.omega > 0):
            raise ConfigurationError(f"mode {self.id}: omega must be > 0, got {self.omega}")
        # kappa = 0 is allowed as a lossless idealisation; file inputs demand kappa > 0
        if not (math.isfinite(self.kappa) and self.kappa >= 0):
            raise ConfigurationError(f"mode {self.id}: kappa must be >= 0, got {self.kappa}")
        object.__setattr__(self, "l", int(self.l))
        object.__setattr__(self, "m", int(self.m))

    @property
    def parity(self) -> Parity:
        return Parity.EVEN if abs(self.m) % 2 == 0 else Parity.ODD

    @property
    def complex_frequency(self) -> complex:
        return complex(self.omega, -0.5 * self.kappa)


@dataclass(frozen=True)
class EmitterDescriptor:
    """A two-level emitter. ``position`` in nm, ``dipole`` magnitude in C m."""

    omega_e: float
    dipole: float = REFERENCE_DIPOLE
    orientation: tuple[float, float, float] = (0.0, 0.0, 1.0)
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not (math.isfinite(self.omega_e) and self.omega_e > 0):
            raise ConfigurationError(f"omega_e must be > 0, got {self.omega_e}")
        if not (math.isfinite(self.dipole) and self.dipole > 0):
            raise ConfigurationError(f"dipole magnitude must be > 0, got {self.dipole}")
        orient = tuple(float(v) for v in self.orientation)
        pos = tuple(float(v) for v in self.position)
        if len(orient) != 3 or len(pos) != 3:
            raise ConfigurationError("orientation and position must be 3-vectors")
        if abs(math.hypot(*orient) - 1.0) > 1e-9:
            raise ConfigurationError(f"orientation must have unit norm, got {orient}")
        object.__setattr__(self, "orientation", orient)
        object.__setattr__(self, "position", pos)

    def moved_to(self, x: float, y: float = 0.0) -> "EmitterDescriptor":
        return EmitterDescriptor(self.omega_e, self.dipole, self.orientation, (x, y, self.position[2]))


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    """Complex couplings ``g[xi, j]`` (rad/fs), shape ``(N, 2)``."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex).reshape(-1, 2)
        if not np.all(np.isfinite(vals)):
            raise ConfigurationError("coupling matrix contains non-finite entries")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)

    @property
    def phase(self) -> np.ndarray:
        """Phases in ``[0, 2 pi)``."""
        return np.mod(np.angle(self.values), 2 * np.pi)

    @classmethod
    def from_polar(cls, magnitude, phase) -> "CouplingMatrix":
        return cls(np.asarray(magnitude) * np.exp(1j * np.asarray(phase)))

    def __getitem__(self, idx):
        return self.values[idx]

    def __len__(self):
        return self.values.shape[0]

    def __eq__(self, other):
        if not isinstance(other, CouplingMatrix):
            return NotImplemented
        return np.array_equal(self.values, other.values)


def _resolve_coupling(mode: ModeDescriptor, emitters) -> np.ndarray:
    # local import keeps model <- fields dependency one-way at import time
    from .fields import coupling_at

    return np.array([coupling_at(mode, e, j) for j, e in enumerate(emitters)], dtype=complex)


@dataclass(frozen=True, eq=False)
class SystemModel:
    """N modes and exactly two emitters with their coupling matrix.

    If ``coupling`` is omitted it is evaluated from each mode's coupling source
    at the emitter positions.
    """

    modes: tuple[ModeDescriptor, ...]
    emitters: tuple[EmitterDescriptor, EmitterDescriptor]
    coupling: CouplingMatrix = None

    def __post_init__(self):
        modes = tuple(self.modes)
        emitters = tuple(self.emitters)
        if len(emitters) != 2:
            raise ConfigurationError(f"exactly 2 emitters are supported, got {len(emitters)}")
        if not math.isclose(emitters[0].omega_e, emitters[1].omega_e, rel_tol=1e-12):
            raise ConfigurationError(
                f"emitters must share one transition frequency, got "
                f"{emitters[0].omega_e} and {emitters[1].omega_e}"
            )
        coupling = self.coupling
        if coupling is None:
            rows = [_resolve_coupling(mode, emitters) for mode in modes]
            coupling = CouplingMatrix(np.array(rows, dtype=complex).reshape(len(modes), 2))
        elif not isinstance(coupling, CouplingMatrix):
            coupling = CouplingMatrix(coupling)
        if len(coupling) != len(modes):
            raise ConfigurationError(
                f"coupling matrix has {len(coupling)} rows but there are {len(modes)} modes"
            )
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "emitters", emitters)
        object.__setattr__(self, "coupling", coupling)

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def dim(self) -> int:
        return self.n_modes + 3

    @property
    def omega_e(self) -> float:
        return self.emitters[0].omega_e

    @property
    def omegas(self) -> np.ndarray:
        return np.array([m.omega for m in self.modes], dtype=float)

    @property
    def kappas(self) -> np.ndarray:
        return np.array([m.kappa for m in self.modes], dtype=float)

    def with_coupling(self, coupling) -> "SystemModel":
        return SystemModel(self.modes, self.emitters, CouplingMatrix(coupling))

    def one_excitation_hamiltonian(self, frame: str = "rotating") -> np.ndarray:
        """Hermitian ``(N+2) x (N+2)`` block of H on indices ``1..N+2``."""
        return build_hamiltonian(self, frame)[1:, 1:]

    def effective_hamiltonian(self, frame: str = "rotating") -> np.ndarray:
        """Non-Hermitian ``H - (i/2) sum kappa a^dag a`` on the one-excitation sector."""
        h = self.one_excitation_hamiltonian(frame).astype(complex)
        idx = np.arange(2, self.n_modes + 2)
        h[idx, idx] -= 0.5j * self.kappas
        return h


def basis_label(index: int, n_modes: int) -> tuple[str, str, int | None]:
    """``index -> (emitter 1, emitter 2, excited mode or None)``."""
    if index == 0:
        return ("g", "g", None)
    if index == 1:
        return ("e", "g", None)
    if index == 2:
        return ("g", "e", None)
    if 3 <= index < n_modes + 3:
        return ("g", "g", index - 3)
    raise IndexError(f"basis index {index} out of range for {n_modes} modes")


def basis_index(label: tuple[str, str, int | None], n_modes: int) -> int:
    e1, e2, mode = label
    if mode is None:
        return {("g", "g"): 0, ("e", "g"): 1, ("g", "e"): 2}[(e1, e2)]
    if (e1, e2) != ("g", "g") or not 0 <= mode < n_modes:
        raise KeyError(f"label {label} is outside the <=1 excitation space")
    return 3 + mode


def excitation_number(n_modes: int) -> np.ndarray:
    diag = np.ones(n_modes + 3)
    diag[0] = 0.0
    return np.diag(diag)


def build_hamiltonian(model: SystemModel, frame: str = "rotating") -> np.ndarray:
    """System Hamiltonian in the fixed basis (see module docstring).

    ``frame="lab"`` keeps the bare energies ``omega_e`` and ``omega_xi``;
    ``frame="rotating"`` subtracts ``omega_e`` times the excitation number.
    Matrix element ``<1_xi| H |e_j> = g[xi, j]``.
    """
    if frame not in ("lab", "rotating"):
        raise ConfigurationError(f"unknown frame {frame!r}")
    n = model.n_modes
    g = model.coupling.values
    if g.shape != (n, 2):
        raise ConfigurationError(f"coupling shape {g.shape} does not match {n} modes")
    shift = model.omega_e if frame == "rotating" else 0.0
    h = np.zeros((n + 3, n + 3), dtype=complex)
    h[1, 1] = h[2, 2] = model.omega_e - shift
    idx = np.arange(3, n + 3)
    h[idx, idx] = model.omegas - shift
    h[idx, 1] = g[:, 0]
    h[idx, 2] = g[:, 1]
    h[1, idx] = g[:, 0].conj()
    h[2, idx] = g[:, 1].conj()
    return h


def build_dissipators(model: SystemModel) -> list[tuple[np.ndarray, float]]:
    """One ``(a_xi, kappa_xi)`` pair per mode; ``a_xi`` maps ``|1_xi>`` to ``|G>``."""
    out = []
    for k, mode in enumerate(model.modes):
        a = np.zeros((model.dim, model.dim), dtype=complex)
        a[0, 3 + k] = 1.0
        out.append((a, mode.kappa))
    return out


@dataclass(frozen=True, eq=False)
class QuantumState:
    """State confined to the zero- and one-excitation sectors.

    Stored compactly as ``rho = p_g |G><G| + C C^dag`` plus ground/one-excitation
    coherences, where the columns of ``columns`` (shape ``(N+2, r)``) are
    unnormalised one-excitation vectors and ``coherence`` holds
    ``<k|rho|G>`` for the one-excitation states ``k``.
    """

    columns: np.ndarray
    ground_population: float
    coherence: np.ndarray = None

    def __post_init__(self):
        cols = np.array(self.columns, dtype=complex)
        if cols.ndim == 1:
            cols = cols[:, None]
        coh = np.zeros(cols.shape[0], dtype=complex) if self.coherence is None else np.array(self.coherence, dtype=complex)
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "coherence", coh)
        object.__setattr__(self, "ground_population", float(self.ground_population))

    @property
    def n_modes(self) -> int:
        return self.columns.shape[0] - 2

    @property
    def excited_amplitudes(self) -> np.ndarray:
        """psi(t) for a pure one-excitation state (single column)."""
        if self.columns.shape[1] != 1:
            raise ValueError("state is not a single one-excitation vector")
        return self.columns[:, 0]

    @classmethod
    def pure(cls, amplitudes) -> "QuantumState":
        """Normalised one-excitation vector over indices ``1..N+2``; remaining weight goes to ``|G>``."""
        psi = np.asarray(amplitudes, dtype=complex)
        return cls(psi, 1.0 - float(np.vdot(psi, psi).real))

    @classmethod
    def excited(cls, n_modes: int, which: str = "eg") -> "QuantumState":
        psi = np.zeros(n_modes + 2, dtype=complex)
        psi[{"eg": 0, "ge": 1}[which]] = 1.0
        return cls.pure(psi)

    @classmethod
    def ground(cls, n_modes: int) -> "QuantumState":
        return cls(np.zeros((n_modes + 2, 0), dtype=complex), 1.0)

    @classmethod
    def from_emitter_state(cls, vec, n_modes: int) -> "QuantumState":
        """Emitter vector in the order ``(|g,g>, |g,e>, |e,g>, |e,e>)`` with the modes in vacuum."""
        vec = np.asarray(vec, dtype=complex)
        if abs(vec[3]) > 0:
            raise ValueError("|e,e> lies outside the supported excitation sectors")
        psi = np.zeros(n_modes + 2, dtype=complex)
        psi[0], psi[1] = vec[2], vec[1]
        return cls(psi, abs(vec[0]) ** 2, vec[0].conj() * psi)

    @classmethod
    def from_density(cls, rho, atol: float = 1e-12) -> "QuantumState":
        rho = np.asarray(rho, dtype=complex)
        block = rho[1:, 1:]
        w, v = np.linalg.eigh(0.5 * (block + block.conj().T))
        if w.min(initial=0.0) < -1e-10:
            raise ValueError(f"one-excitation block is not positive semidefinite (min eig {w.min():.3e})")
        keep = w > atol
        cols = v[:, keep] * np.sqrt(w[keep])
        return cls(cols, rho[0, 0].real, rho[1:, 0])

    def to_density(self) -> np.ndarray:
        n1 = self.columns.shape[0]
        rho = np.zeros((n1 + 1, n1 + 1), dtype=complex)
        rho[0, 0] = self.ground_population
        rho[1:, 1:] = self.columns @ self.columns.conj().T
        rho[1:, 0] = self.coherence
        rho[0, 1:] = self.coherence.conj()
        return rho

    @property
    def trace(self) -> float:
        return self.ground_population + float(np.sum(np.abs(self.columns) ** 2))


def _wrap_angle(x: float) -> float:
    x = math.fmod(x, 2 * math.pi)
    if x < 0:
        x += 2 * math.pi
    # fmod can return 2 pi after the shift for tiny negative inputs
    return 0.0 if x >= 2 * math.pi else x


@dataclass(frozen=True)
class DarkStateSpec:
    """Candidate dark state ``cos(theta)|e,g> + exp(i chi) sin(theta)|g,e>``.

    The ratio form ``|e,g> - alpha |g,e>`` is related by
    ``alpha = -exp(i chi) tan(theta)``.
    """

    theta: float
    chi: float = 0.0

    def __post_init__(self):
        if not -math.pi / 2 - 1e-12 <= self.theta <= math.pi / 2 + 1e-12:
            raise ConfigurationError(f"theta must lie in [-pi/2, pi/2], got {self.theta}")
        object.__setattr__(self, "chi", _wrap_angle(float(self.chi)))

    @classmethod
    def from_alpha(cls, alpha: complex) -> "DarkStateSpec":
        """Branch ``theta in [0, pi/2)``; the sign of ``alpha`` is absorbed into ``chi``."""
        alpha = complex(alpha)
        if not cmath.isfinite(alpha):
            raise ConfigurationError("alpha must be finite")
        if alpha == 0:
            return cls(0.0, 0.0)
        return cls(math.atan(abs(alpha)), cmath.phase(-alpha))

    @classmethod
    def from_vector(cls, a: complex, b: complex) -> "DarkStateSpec":
        """Spec for the (unnormalised) state ``a|e,g> + b|g,e>`` up to global phase."""
        a, b = complex(a), complex(b)
        if abs(a) == 0:
            return cls(math.pi / 2, cmath.phase(b))
        return cls(math.atan2(abs(b), abs(a)), cmath.phase(b / a))

    @property
    def alpha(self) -> complex:
        """Ratio-form parameter; infinite when ``theta = +-pi/2``."""
        if abs(math.cos(self.theta)) < 1e-15:
            return complex(math.inf, 0.0)
        return -cmath.exp(1j * self.chi) * math.tan(self.theta)

    @property
    def coefficients(self) -> tuple[complex, complex]:
        """``(c_eg, c_ge)`` of the normalised dark state."""
        return complex(math.cos(self.theta)), cmath.exp(1j * self.chi) * math.sin(self.theta)

    @property
    def dark_vector(self) -> np.ndarray:
        """Dark state in the emitter basis ``(|g,g>, |g,e>, |e,g>, |e,e>)``."""
        a, b = self.coefficients
        return np.array([0, b, a, 0], dtype=complex)

    @property
    def bright_vector(self) -> np.ndarray:
        """Orthogonal partner ``-exp(-i chi) sin(theta)|e,g> + cos(theta)|g,e>``."""
        return np.array(
            [0, math.cos(self.theta), -cmath.exp(-1j * self.chi) * math.sin(self.theta), 0],
            dtype=complex,
        )

    def embedded(self, n_modes: int) -> np.ndarray:
        """``|psi_D> (x) |0>`` as a vector over the full ``N + 3`` basis."""
        a, b = self.coefficients
        v = np.zeros(n_modes + 3, dtype=complex)
        v[1], v[2] = a, b
        return v

