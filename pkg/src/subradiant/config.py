"""Run configuration: schema, loading and conversion to domain objects.

A config is a YAML (or JSON) document with the blocks ``system``,
``dynamics``, ``experiment`` and ``output``. Frequencies are strings with a
unit tag, e.g. ``"283 THz"`` or ``"0.07 rad/fs"``. Unknown keys are errors.
"""

from __future__ import annotations

from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .dynamics import PropagatorConfig
from .experiments import Scenario, SweepSpec
from .fields import FieldSurrogate, hollow_cylinder_profile, npom_modes
from .io import parse_complex, parse_mode_table, parse_quantity
from .model import ConfigurationError, DirectCoupling, EmitterDescriptor, ModeDescriptor, QuantumState, SystemModel

__all__ = ["RunConfig", "load_config", "dump_config", "build_modes", "build_model", "build_sweep_spec", "initial_state"]


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _frequency(v):
    parse_quantity(v, "frequency")
    return v


def _rate(v):
    if parse_quantity(v, "rate") <= 0:
        raise ValueError(f"decay rate must be > 0, got {v!r}")
    return v


class EmitterBlock(_Block):
    omega_e: str
    dipole: float = 1e-28
    orientation: tuple[float, float, float] = (0.0, 0.0, 1.0)
    position: tuple[float, float, float] = (0.0, 0.0, 0.0)

    _check_omega = field_validator("omega_e")(_frequency)


class SurrogateBlock(_Block):
    amplitude: float
    facet_radius: float = 8.0
    phase_offset: float = 0.0


class ModeBlock(_Block):
    id: str
    l: int
    m: int
    omega: str
    kappa: str
    g: Optional[tuple[str, str]] = None
    surrogate: Optional[SurrogateBlock] = None

    _check_omega = field_validator("omega")(_frequency)
    _check_kappa = field_validator("kappa")(_rate)

    @field_validator("g")
    @classmethod
    def _check_g(cls, v):
        if v is not None:
            for item in v:
                parse_complex(item)
        return v

    @model_validator(mode="after")
    def _one_source(self):
        if (self.g is None) == (self.surrogate is None):
            raise ValueError("give exactly one of 'g' or 'surrogate'")
        return self


class NpomGeometry(_Block):
    kind: Literal["npom"] = "npom"
    l_max: int = 9
    m_set: Literal["all", "zero"] = "all"
    facet_radius: float = 8.0
    g_max: float = 0.05
    radial_step: float = 0.12
    azimuthal_step: float = 0.02
    kappa_radiative: float = 0.07
    kappa_ohmic: float = 0.06


class CylinderGeometry(_Block):
    kind: Literal["hollow_cylinder"] = "hollow_cylinder"
    n_modes: int = 40
    cylinder_radius: float = 10.0
    facet_radius: float = 15.0
    suppression: float = 10.0
    wall_gain: float = 20.0
    wall_width: float = 1.0
    g_max: float = 0.05
    kappa_m: float = 0.15
    kappa_other: float = 0.12
    radial_step: float = 0.12
    azimuthal_step: float = 0.04


Geometry = Annotated[Union[NpomGeometry, CylinderGeometry], Field(discriminator="kind")]


class SystemBlock(_Block):
    emitters: tuple[EmitterBlock, EmitterBlock]
    modes: Optional[tuple[ModeBlock, ...]] = None
    mode_table: Optional[str] = None
    geometry: Optional[Geometry] = None
    initial: Literal["eg", "ge"] = "eg"

    @model_validator(mode="after")
    def _one_mode_source(self):
        given = [k for k in ("modes", "mode_table", "geometry") if getattr(self, k) is not None]
        if len(given) != 1:
            raise ValueError(f"give exactly one of modes, mode_table, geometry (got {given or 'none'})")
        return self


class DynamicsBlock(_Block):
    backend: Literal["exact", "lindblad"] = "exact"
    t_end: float = Field(1000.0, gt=0)
    dt_out: float = Field(0.25, gt=0)
    rtol: float = Field(1e-10, gt=0)
    atol: float = Field(1e-12, gt=0)
    frame: Literal["rotating", "lab"] = "rotating"


class GridBlock(_Block):
    start: float = 0.0
    stop: float = 8.0
    step: float = Field(0.5, gt=0)

    def values(self) -> tuple[float, ...]:
        n = int(round((self.stop - self.start) / self.step))
        return tuple(self.start + k * self.step for k in range(n + 1))


class ExperimentBlock(_Block):
    scenario: Literal["mode_count", "parity", "cylinder_symmetric", "cylinder_asymmetric"]
    grid: Union[GridBlock, tuple[float, ...]] = GridBlock()
    grid2: Union[GridBlock, tuple[float, ...], None] = None
    selectors: tuple[Literal["all", "even", "odd", "single"], ...] = ("even", "odd", "all")
    l_max_values: tuple[int, ...] = tuple(range(1, 10))
    t_eval: float = Field(1000.0, gt=0)
    coupling_scale: float = 1.0
    keep_series: bool = False


class OutputBlock(_Block):
    directory: str = "results"
    format: Literal["csv", "structured"] = "csv"
    stem: str = "sweep"


class RunConfig(_Block):
    system: SystemBlock
    dynamics: DynamicsBlock = DynamicsBlock()
    experiment: Optional[ExperimentBlock] = None
    output: OutputBlock = OutputBlock()


def load_config(path) -> tuple[RunConfig, Path]:
    """Parse and schema-validate a config file; returns it with its directory."""
    path = Path(path)
    data = yaml.safe_load(path.read_text())
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    return RunConfig.model_validate(data), path.resolve().parent


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.model_dump(mode="json"), sort_keys=False)


def _emitters(cfg: RunConfig) -> list[EmitterDescriptor]:
    return [
        EmitterDescriptor(parse_quantity(e.omega_e), e.dipole, e.orientation, e.position)
        for e in cfg.system.emitters
    ]


def build_modes(cfg: RunConfig, base_dir=Path(".")) -> list[ModeDescriptor]:
    sysb = cfg.system
    if sysb.mode_table is not None:
        table = Path(sysb.mode_table)
        return parse_mode_table(table if table.is_absolute() else Path(base_dir) / table)
    if sysb.modes is not None:
        out = []
        for mb in sysb.modes:
            if mb.g is not None:
                src = DirectCoupling(tuple(parse_complex(v) for v in mb.g))
            else:
                s = mb.surrogate
                src = FieldSurrogate(s.facet_radius, s.amplitude, s.phase_offset)
            out.append(ModeDescriptor(mb.id, mb.l, mb.m, parse_quantity(mb.omega), parse_quantity(mb.kappa, "rate"), src))
        return out
    omega_e = parse_quantity(sysb.emitters[0].omega_e)
    geo = sysb.geometry.model_dump(exclude={"kind"})
    if sysb.geometry.kind == "npom":
        return npom_modes(omega_e, **geo)
    return hollow_cylinder_profile(omega_e, **geo)


def build_model(cfg: RunConfig, base_dir=Path(".")) -> SystemModel:
    return SystemModel(build_modes(cfg, base_dir), _emitters(cfg))


def initial_state(cfg: RunConfig, model: SystemModel) -> QuantumState:
    return QuantumState.excited(model.n_modes, cfg.system.initial)


def propagator_config(cfg: RunConfig) -> PropagatorConfig:
    d = cfg.dynamics
    return PropagatorConfig(d.backend, d.t_end, d.dt_out, d.rtol, d.atol, d.frame)


def build_sweep_spec(cfg: RunConfig, base_dir=Path(".")) -> SweepSpec:
    exp = cfg.experiment
    if exp is None:
        raise ConfigurationError("config has no experiment block")
    grid = exp.grid.values() if isinstance(exp.grid, GridBlock) else exp.grid
    grid2 = exp.grid2.values() if isinstance(exp.grid2, GridBlock) else exp.grid2
    scenario = Scenario(exp.scenario)
    geometry, modes = {}, None
    if cfg.system.geometry is not None:
        want = "npom" if scenario in (Scenario.MODE_COUNT, Scenario.PARITY) else "hollow_cylinder"
        if cfg.system.geometry.kind != want:
            raise ConfigurationError(f"scenario {scenario.value} needs a {want!r} geometry")
        geometry = cfg.system.geometry.model_dump(exclude={"kind"})
        if scenario is Scenario.MODE_COUNT:
            geometry.pop("l_max")
            geometry.pop("m_set")
    elif scenario is Scenario.MODE_COUNT:
        raise ConfigurationError("mode_count sweeps generate their modes; use a geometry block")
    else:
        modes = tuple(build_modes(cfg, base_dir))
    emitters = _emitters(cfg)
    return SweepSpec(
        scenario=scenario,
        grid=grid,
        grid2=grid2,
        selectors=exp.selectors,
        l_max_values=exp.l_max_values,
        t_eval=exp.t_eval,
        omega_e=emitters[0].omega_e,
        coupling_scale=exp.coupling_scale,
        keep_series=exp.keep_series,
        config=propagator_config(cfg),
        geometry=geometry,
        modes=modes,
    )
