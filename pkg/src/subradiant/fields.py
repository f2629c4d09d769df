"""Position-dependent couplings from analytic gap-field surrogates.

The surrogate for mode ``(l, m)`` at the gap mid-plane is

    E_z(r, phi) = A * J_|m|(k r) / max|J_|m|| * ang_m(phi)

with ``k`` chosen so that ``|J_|m|(k r)|`` has ``l`` anti-nodes in ``[0, a]``
(``a`` the facet radius), the outermost sitting on the facet edge, and ``ang_m = Re(u^m)`` for ``m >= 0``,
``Im(u^|m|)`` for ``m < 0`` where ``u = exp(i (phi - phi_0))``. The angular
factor is computed by repeated complex multiplication so that the parity law
``E(-x, -y) = (-1)^m E(x, y)`` holds bit-for-bit.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .model import (
    REFERENCE_DIPOLE,
    ConfigurationError,
    DirectCoupling,
    EmitterDescriptor,
    ModeDescriptor,
    Parity,
)

logger = logging.getLogger(__name__)

__all__ = [
    "DomainError",
    "FieldSurrogate",
    "HollowCylinderField",
    "Selector",
    "coupling_at",
    "classify_parity",
    "filter_modes",
    "hollow_cylinder_profile",
    "npom_modes",
]

DEFAULT_G_MAX = 0.05  # rad/fs
_CYLINDER_ZERO = float(special.jn_zeros(0, 1)[0])


class DomainError(ValueError):
    """Emitter position outside the region where a surrogate is defined."""


class Selector(enum.Enum):
    ALL = "all"
    EVEN_ONLY = "even"
    ODD_ONLY = "odd"
    SINGLE_DOMINANT = "single"


@lru_cache(maxsize=None)
def _radial_constants(n: int, l: int) -> tuple[float, float]:
    """``(k a, max |J_n|)`` for ``l`` anti-nodes in ``[0, a]``, the outermost on the edge."""
    if n == 0:
        # J_0 has its first anti-node at r = 0
        ka = 0.0 if l == 1 else float(special.jnp_zeros(0, l - 1)[-1])
        return ka, 1.0
    ka = float(special.jnp_zeros(n, l)[-1])
    peak = abs(float(special.jv(n, special.jnp_zeros(n, 1)[0])))
    return ka, peak


def _angular(m: int, x: float, y: float, r: float, phase_offset: float) -> float:
    if m == 0:
        return 1.0
    if r == 0.0:
        return 0.0
    u = complex(x, y) / r
    if phase_offset:
        u = u * complex(math.cos(phase_offset), -math.sin(phase_offset))
    p = u
    for _ in range(abs(m) - 1):
        p = p * u
    return p.real if m > 0 else p.imag


def _poly_angular(m: int, x: float, y: float, scale: float, phase_offset: float) -> float:
    """``(r/scale)^p * ang_m`` as a polynomial in ``x, y``; ``p = |m|`` or 2 for ``m = 0``."""
    if m == 0:
        return (x * x + y * y) / (scale * scale)
    u = complex(x, y) / scale
    if phase_offset:
        u = u * complex(math.cos(phase_offset), -math.sin(phase_offset))
    p = u
    for _ in range(abs(m) - 1):
        p = p * u
    return p.real if m > 0 else p.imag


@dataclass(frozen=True)
class FieldSurrogate:
    """Bessel-profile gap field for one mode.

    Parameters
    ----------
    facet_radius : float
        Radius ``a`` (nm) of the facet; positions with ``r > a`` are rejected.
    amplitude : float
        Coupling (rad/fs) at the field maximum for a z-oriented reference dipole.
        A negative value encodes a phase of pi.
    phase_offset : float
        Rotation of the azimuthal pattern, radians.
    """

    facet_radius: float
    amplitude: float
    phase_offset: float = 0.0

    def __post_init__(self):
        if not self.facet_radius > 0:
            raise ConfigurationError(f"facet_radius must be > 0, got {self.facet_radius}")
        if not math.isfinite(self.amplitude):
            raise ConfigurationError("surrogate amplitude must be finite")

    @property
    def domain_radius(self) -> float:
        return self.facet_radius

    def radial(self, l: int, m: int, r: float) -> float:
        n = abs(m)
        ka, peak = _radial_constants(n, l)
        return float(special.jv(n, ka * r / self.facet_radius)) / peak

    def field(self, l: int, m: int, x: float, y: float) -> float:
        r = math.hypot(x, y)
        if r > self.facet_radius:
            raise DomainError(f"position r={r:.4g} nm outside facet radius {self.facet_radius} nm")
        return self.amplitude * self.radial(l, m, r) * _angular(m, x, y, r, self.phase_offset)


@dataclass(frozen=True)
class HollowCylinderField:
    """Phenomenological field inside a hollow cylinder etched into the facet.

    The dominant mode keeps its full profile ``J_0(j_{0,1} r / r_cyl)``. Every
    other mode is scaled by ``1 / suppression`` and picks up a wall term
    ``wall_gain * (r / r_cyl)^p * exp(-(r_cyl - r) / wall_width)`` (also scaled
    by ``1 / suppression``) that grows towards the metallic wall.
    """

    base: FieldSurrogate
    cylinder_radius: float
    dominant: bool = False
    suppression: float = 10.0
    wall_gain: float = 20.0
    wall_width: float = 1.0

    def __post_init__(self):
        if not self.suppression >= 1:
            raise ConfigurationError(f"suppression factor must be >= 1, got {self.suppression}")
        if not 0 < self.cylinder_radius <= self.base.facet_radius:
            raise ConfigurationError("cylinder radius must lie inside the facet")
        if not self.wall_width > 0:
            raise ConfigurationError("wall_width must be > 0")

    @property
    def domain_radius(self) -> float:
        return self.cylinder_radius

    def field(self, l: int, m: int, x: float, y: float) -> float:
        r = math.hypot(x, y)
        rc = self.cylinder_radius
        if r > rc:
            raise DomainError(f"position r={r:.4g} nm outside hollow cylinder radius {rc} nm")
        amp = self.base.amplitude
        if self.dominant:
            return amp * float(special.jv(0, _CYLINDER_ZERO * r / rc))
        if math.isinf(self.suppression):
            return 0.0
        wall = self.wall_gain * math.exp(-(rc - r) / self.wall_width)
        inner = self.base.field(l, m, x, y)
        edge = amp * wall * _poly_angular(m, x, y, rc, self.base.phase_offset)
        return (inner + edge) / self.suppression


def coupling_at(mode: ModeDescriptor, emitter: EmitterDescriptor, emitter_index: int | None = None) -> complex:
    """Complex coupling ``g e^{i phi}`` of ``mode`` to ``emitter`` (rad/fs).

    Field surrogates are evaluated at the emitter position and projected on
    its dipole (only ``E_z`` is modelled). Direct couplings are stored per
    emitter slot, so ``emitter_index`` is required for them.
    """
    src = mode.coupling_source
    if isinstance(src, DirectCoupling):
        if emitter_index is None:
            raise ConfigurationError(f"mode {mode.id} has direct couplings; pass emitter_index")
        return src.g[emitter_index]
    if src is None or not hasattr(src, "field"):
        raise ConfigurationError(f"mode {mode.id} has no coupling source")
    x, y, _ = emitter.position
    dip = emitter.dipole / REFERENCE_DIPOLE * emitter.orientation[2]
    return complex(src.field(mode.l, mode.m, x, y) * dip)


def classify_parity(mode: ModeDescriptor) -> Parity:
    return Parity.EVEN if abs(mode.m) % 2 == 0 else Parity.ODD


def filter_modes(modes, selector, reference=None) -> list[ModeDescriptor]:
    """Stable-order sublist of ``modes`` matching ``selector``.

    ``SINGLE_DOMINANT`` keeps the mode with the largest ``|g|`` at the
    ``reference`` emitter (default: centre of the gap).
    """
    selector = Selector(selector)
    modes = list(modes)
    if selector is Selector.ALL:
        out = modes
    elif selector is Selector.EVEN_ONLY:
        out = [m for m in modes if classify_parity(m) is Parity.EVEN]
    elif selector is Selector.ODD_ONLY:
        out = [m for m in modes if classify_parity(m) is Parity.ODD]
    else:
        if reference is None:
            reference = EmitterDescriptor(omega_e=1.0)
        out = []
        if modes:
            mags = [abs(coupling_at(m, reference)) for m in modes]
            out = [modes[int(np.argmax(mags))]]
    if not out:
        logger.warning("mode selector %s left no modes", selector.value)
    return out


def mode_frequency(omega_e: float, l: int, m: int, radial_step: float, azimuthal_step: float) -> float:
    """Surrogate resonance: ``(1,0)`` at ``omega_e``, blue-shifting with ``l`` and ``|m|``."""
    return omega_e + radial_step * (l - 1) + azimuthal_step * abs(m)


def npom_modes(
    omega_e: float,
    l_max: int = 9,
    m_set: str = "all",
    facet_radius: float = 8.0,
    g_max: float = DEFAULT_G_MAX,
    radial_step: float = 0.12,
    azimuthal_step: float = 0.02,
    kappa_radiative: float = 0.07,
    kappa_ohmic: float = 0.06,
) -> list[ModeDescriptor]:
    """Synthetic nanoparticle-on-mirror mode set with surrogate fields.

    ``m_set="zero"`` keeps only the ``m = 0`` family (what emitters at the
    centre see); ``"all"`` enumerates ``-l <= m <= l``. Amplitudes follow a
    ``g_max / l`` envelope; ``m = 0`` modes carry extra (radiative) loss.
    """
    if m_set not in ("all", "zero"):
        raise ConfigurationError(f"m_set must be 'all' or 'zero', got {m_set!r}")
    out = []
    for l in range(1, l_max + 1):
        ms = [0] if m_set == "zero" else sorted(range(-l, l + 1), key=lambda v: (abs(v), -v))
        for m in ms:
            out.append(
                ModeDescriptor(
                    id=f"{l}{m}",
                    l=l,
                    m=m,
                    omega=mode_frequency(omega_e, l, m, radial_step, azimuthal_step),
                    kappa=kappa_radiative if m == 0 else kappa_ohmic,
                    coupling_source=FieldSurrogate(facet_radius, g_max / l),
                )
            )
    return out


def hollow_cylinder_profile(
    omega_m: float,
    n_modes: int = 40,
    cylinder_radius: float = 10.0,
    facet_radius: float = 15.0,
    suppression: float = 10.0,
    wall_gain: float = 20.0,
    wall_width: float = 1.0,
    g_max: float = DEFAULT_G_MAX,
    kappa_m: float = 0.15,
    kappa_other: float = 0.12,
    radial_step: float = 0.12,
    azimuthal_step: float = 0.04,
) -> list[ModeDescriptor]:
    """Mode set for the hollow-cylinder design: dominant even mode ``M`` first.

    The remaining ``n_modes - 1`` modes are the NPoM families ordered by
    ``(l, |m|)`` with amplitude envelope ``g_max / (l + 1)``; their fields are
    suppressed inside the cylinder except near its wall.
    """
    if not suppression >= 1:
        raise ConfigurationError(f"suppression factor must be >= 1, got {suppression}")
    if n_modes < 1:
        raise ConfigurationError("need at least the dominant mode")
    dominant = ModeDescriptor(
        id="M",
        l=1,
        m=0,
        omega=omega_m,
        kappa=kappa_m,
        coupling_source=HollowCylinderField(
            FieldSurrogate(facet_radius, g_max), cylinder_radius, True, suppression, wall_gain, wall_width
        ),
    )
    out = [dominant]
    l = 0
    while len(out) < n_modes:
        l += 1
        for m in sorted(range(-l, l + 1), key=lambda v: (abs(v), -v)):
            if len(out) == n_modes:
                break
            field = HollowCylinderField(
                FieldSurrogate(facet_radius, g_max / (l + 1)),
                cylinder_radius,
                False,
                suppression,
                wall_gain,
                wall_width,
            )
            out.append(
                ModeDescriptor(
                    id=f"{l}{m}",
                    l=l,
                    m=m,
                    omega=mode_frequency(omega_m, l, m, radial_step, azimuthal_step) - radial_step / 2,
                    kappa=kappa_other,
                    coupling_source=field,
                )
            )
    return out
