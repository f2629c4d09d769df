"""Sweep harness for the position and mode-set scenarios.

Every grid point is an independent model; points can be spread over worker
processes and results are always collated in grid order.
"""

from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .dynamics import PropagatorConfig, evolve
from .entanglement import (
    PersistenceReport,
    check_persistence,
    concurrence,
    find_dark_state,
    single_mode_steady_state,
    state_populations,
)
from .fields import DEFAULT_G_MAX, Selector, filter_modes, hollow_cylinder_profile, npom_modes
from .model import ConfigurationError, DarkStateSpec, EmitterDescriptor, QuantumState, SystemModel

logger = logging.getLogger(__name__)

__all__ = [
    "Scenario",
    "SweepSpec",
    "SweepResult",
    "Oscillation",
    "oscillation_frequency",
    "is_persistent",
    "run_mode_count_convergence",
    "run_parity_sweep",
    "run_cylinder_sweeps",
    "run_sweep",
]

OMEGA_10 = 2 * math.pi * 0.283  # 283 THz in rad/fs
OMEGA_730NM = 2 * math.pi * 299.792458 / 730.0  # rad/fs
POPULATION_KEYS = ("eg", "ge", "psi-", "psi+")


class Scenario(enum.Enum):
    MODE_COUNT = "mode_count"
    PARITY = "parity"
    CYLINDER_SYMMETRIC = "cylinder_symmetric"
    CYLINDER_ASYMMETRIC = "cylinder_asymmetric"
    SINGLE = "single"


@dataclass(frozen=True)
class SweepSpec:
    """What to sweep and how to evolve each point.

    ``grid`` holds symmetric displacements ``x`` (``x1 = x``, ``x2 = -x``;
    emitter 1 starts excited) except for the asymmetric scenario,
    which uses the Cartesian product ``grid x grid2`` for ``(x1, x2)``.
    ``geometry`` is forwarded to the mode-set builder; an explicit ``modes``
    tuple (surrogate-backed) replaces the generated set for the parity and
    cylinder scenarios, in which case ``coupling_scale`` is not applied.
    """

    scenario: Scenario
    grid: tuple[float, ...] = (0.0,)
    grid2: tuple[float, ...] | None = None
    selectors: tuple[Selector, ...] = (Selector.ALL,)
    l_max_values: tuple[int, ...] = tuple(range(1, 10))
    t_eval: float = 1000.0
    omega_e: float | None = None
    coupling_scale: float = 1.0
    keep_series: bool = False
    config: PropagatorConfig = field(default_factory=PropagatorConfig)
    geometry: dict = field(default_factory=dict)
    modes: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "scenario", Scenario(self.scenario))
        object.__setattr__(self, "selectors", tuple(Selector(s) for s in self.selectors))
        object.__setattr__(self, "grid", tuple(float(v) for v in self.grid))
        if self.grid2 is not None:
            object.__setattr__(self, "grid2", tuple(float(v) for v in self.grid2))
        if not self.grid:
            raise ConfigurationError("sweep grid must not be empty")
        if not self.t_eval > 0:
            raise ConfigurationError(f"t_eval must be > 0, got {self.t_eval}")
        if self.scenario is Scenario.MODE_COUNT and not self.l_max_values:
            raise ConfigurationError("mode-count sweep needs l_max values")

    @property
    def anchor(self) -> float:
        if self.omega_e is not None:
            return self.omega_e
        if self.scenario in (Scenario.CYLINDER_SYMMETRIC, Scenario.CYLINDER_ASYMMETRIC):
            return OMEGA_730NM
        return OMEGA_10


@dataclass(eq=False)
class SweepResult:
    scenario: Scenario
    x1: np.ndarray
    x2: np.ndarray
    labels: list[str]
    t_eval: float
    concurrence: np.ndarray
    populations: dict[str, np.ndarray]
    reports: list[PersistenceReport]
    times: np.ndarray | None = None
    concurrence_series: np.ndarray | None = None
    population_series: dict[str, np.ndarray] | None = None
    extras: dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self):
        return len(self.x1)

    def select(self, label: str) -> np.ndarray:
        return np.array([lab == label for lab in self.labels])

    def __eq__(self, other):
        if not isinstance(other, SweepResult):
            return NotImplemented

        def same(a, b):
            if a is None or b is None:
                return a is None and b is None
            return np.array_equal(np.asarray(a), np.asarray(b), equal_nan=True)

        def same_dict(a, b):
            if a is None or b is None:
                return a is None and b is None
            return a.keys() == b.keys() and all(same(a[k], b[k]) for k in a)

        return (
            self.scenario is other.scenario
            and same(self.x1, other.x1)
            and same(self.x2, other.x2)
            and list(self.labels) == list(other.labels)
            and self.t_eval == other.t_eval
            and same(self.concurrence, other.concurrence)
            and same_dict(self.populations, other.populations)
            and self.reports == other.reports
            and same(self.times, other.times)
            and same(self.concurrence_series, other.concurrence_series)
            and same_dict(self.population_series, other.population_series)
            and same_dict(self.extras, other.extras)
        )


class Oscillation(NamedTuple):
    frequency: float
    found: bool


def oscillation_frequency(series, dt: float) -> Oscillation:
    """Dominant angular frequency (rad per time unit) from zero crossings.

    The mean is subtracted, crossing times are located by linear
    interpolation and the frequency is ``pi / mean(crossing interval)``.
    Fewer than two crossings gives ``Oscillation(0.0, False)``.
    """
    s = np.asarray(series, dtype=float)
    mean = s.mean()
    s = s - mean
    if len(s) < 2 or np.ptp(s) <= 1e-12 * max(1.0, abs(mean)):
        return Oscillation(0.0, False)
    idx = np.nonzero(np.signbit(s[:-1]) != np.signbit(s[1:]))[0]
    idx = idx[(s[idx] != 0) | (s[idx + 1] != 0)]
    if len(idx) < 2:
        return Oscillation(0.0, False)
    frac = s[idx] / (s[idx] - s[idx + 1])
    tc = (idx + frac) * dt
    return Oscillation(float(math.pi / np.mean(np.diff(tc))), True)


def is_persistent(series, times, window: float = 100.0, tol: float = 1e-4) -> bool:
    """Population change below ``tol`` over the final ``window`` of the run."""
    series = np.asarray(series)
    tail = series[np.asarray(times) >= times[-1] - window]
    return bool(tail.max() - tail.min() < tol)


def dominant_mode_dark_state(model: SystemModel) -> DarkStateSpec | None:
    """State dark to the most strongly coupled mode (single-mode candidate)."""
    g = model.coupling.values
    if len(g) == 0:
        return None
    g1, g2 = g[int(np.argmax(np.linalg.norm(g, axis=1)))]
    if g1 == 0 and g2 == 0:
        return None
    return DarkStateSpec.from_vector(g2, -g1)


def _report(model: SystemModel) -> PersistenceReport:
    spec = find_dark_state(model) or dominant_mode_dark_state(model) or DarkStateSpec(math.pi / 4, math.pi)
    return check_persistence(model, spec)


@dataclass(frozen=True)
class _Point:
    modes: tuple
    x1: float
    x2: float
    label: str
    omega_e: float


def _evaluate(point: _Point, spec: SweepSpec) -> dict:
    em = EmitterDescriptor(point.omega_e)
    model = SystemModel(point.modes, (em.moved_to(point.x1), em.moved_to(point.x2)))
    initial = QuantumState.excited(model.n_modes, "eg")
    cfg = spec.config
    if spec.keep_series:
        times = cfg.times
        if spec.t_eval not in times:
            times = np.union1d(times, [spec.t_eval])
    else:
        times = np.array([0.0, spec.t_eval])
    traj = evolve(model, initial, cfg, times)
    k = int(np.argmin(np.abs(times - spec.t_eval)))
    rho = traj.reduced_rho[k]
    out = {
        "concurrence": concurrence(rho),
        "populations": state_populations(rho),
        "report": _report(model),
        "alpha": complex(model.coupling[0, 0] / model.coupling[0, 1]) if model.n_modes and model.coupling[0, 1] != 0 else complex(math.inf),
    }
    if spec.keep_series:
        out["times"] = traj.times
        out["concurrence_series"] = traj.concurrence()
        pops = traj.populations()
        out["population_series"] = {key: pops[key] for key in POPULATION_KEYS}
        out["final_rho"] = traj.final
    return out


def _run_points(points: Sequence[_Point], spec: SweepSpec, threads: int = 1) -> list[dict]:
    if threads <= 1 or len(points) < 2:
        return [_evaluate(p, spec) for p in points]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        # map keeps input order regardless of completion order
        return list(pool.map(_evaluate, points, [spec] * len(points), chunksize=max(1, len(points) // (4 * threads))))


def _collate(spec: SweepSpec, points: Sequence[_Point], rows: list[dict]) -> SweepResult:
    res = SweepResult(
        scenario=spec.scenario,
        x1=np.array([p.x1 for p in points]),
        x2=np.array([p.x2 for p in points]),
        labels=[p.label for p in points],
        t_eval=spec.t_eval,
        concurrence=np.array([r["concurrence"] for r in rows]),
        populations={k: np.array([r["populations"][k] for r in rows]) for k in POPULATION_KEYS},
        reports=[r["report"] for r in rows],
    )
    if spec.keep_series and rows:
        res.times = rows[0]["times"]
        res.concurrence_series = np.array([r["concurrence_series"] for r in rows])
        res.population_series = {k: np.array([r["population_series"][k] for r in rows]) for k in POPULATION_KEYS}
    return res


def _npom(spec: SweepSpec, **overrides) -> list:
    kw = dict(spec.geometry)
    kw.update(overrides)
    kw["g_max"] = kw.get("g_max", DEFAULT_G_MAX) * spec.coupling_scale
    return npom_modes(spec.anchor, **kw)


def run_mode_count_convergence(spec: SweepSpec, threads: int = 1) -> SweepResult:
    """Emitters at the centre, coupled to the ``(l, 0)`` modes for ``l <= l_max``.

    Extras: ``oscillation_frequency`` of ``pop(e,g) - pop(g,e)`` (requires
    ``keep_series``) and ``l_max``.
    """
    if spec.scenario is not Scenario.MODE_COUNT:
        raise ConfigurationError(f"expected a mode_count spec, got {spec.scenario.value}")
    x = spec.grid[0]
    points = [
        _Point(tuple(_npom(spec, l_max=l, m_set="zero")), x, 0.0 - x, f"lmax={l}", spec.anchor)
        for l in spec.l_max_values
    ]
    rows = _run_points(points, spec, threads)
    res = _collate(spec, points, rows)
    res.extras["l_max"] = np.array(spec.l_max_values, dtype=float)
    if spec.keep_series:
        freqs, found = [], []
        dt = float(res.times[1] - res.times[0])
        for k in range(len(points)):
            diff = res.population_series["eg"][k] - res.population_series["ge"][k]
            amp = np.abs(diff)
            # ignore the decayed tail where only round-off is left
            live = np.nonzero(amp > 1e-6 * amp.max())[0] if amp.max() > 0 else np.array([0])
            osc = oscillation_frequency(diff[: live[-1] + 1], dt)
            freqs.append(osc.frequency)
            found.append(osc.found)
        res.extras["oscillation_frequency"] = np.array(freqs)
        res.extras["oscillation_found"] = np.array(found, dtype=float)
    return res


def run_parity_sweep(spec: SweepSpec, threads: int = 1) -> SweepResult:
    """Symmetric displacement ``x1 = -x2 = x``, once per mode selector (labels = selector)."""
    if spec.scenario is not Scenario.PARITY:
        raise ConfigurationError(f"expected a parity spec, got {spec.scenario.value}")
    all_modes = list(spec.modes) if spec.modes is not None else _npom(spec)
    points = []
    for sel in spec.selectors:
        modes = tuple(filter_modes(all_modes, sel))
        points.extend(_Point(modes, x, 0.0 - x, sel.value, spec.anchor) for x in spec.grid)
    return _collate(spec, points, _run_points(points, spec, threads))


def run_cylinder_sweeps(spec: SweepSpec, threads: int = 1) -> SweepResult:
    """Hollow-cylinder sweeps; extras carry the single-mode prediction per point."""
    if spec.scenario is Scenario.CYLINDER_SYMMETRIC:
        pairs = [(x, 0.0 - x) for x in spec.grid]
    elif spec.scenario is Scenario.CYLINDER_ASYMMETRIC:
        grid2 = spec.grid if spec.grid2 is None else spec.grid2
        pairs = [(a, b) for a in spec.grid for b in grid2]
    else:
        raise ConfigurationError(f"expected a cylinder spec, got {spec.scenario.value}")
    if spec.modes is not None:
        modes = tuple(spec.modes)
    else:
        kw = dict(spec.geometry)
        kw["g_max"] = kw.get("g_max", DEFAULT_G_MAX) * spec.coupling_scale
        modes = tuple(hollow_cylinder_profile(spec.anchor, **kw))
    label = spec.scenario.value
    points = [_Point(modes, a, b, label, spec.anchor) for a, b in pairs]
    rows = _run_points(points, spec, threads)
    res = _collate(spec, points, rows)
    single = []
    for r in rows:
        alpha = r["alpha"]
        single.append(0.0 if not np.isfinite(alpha) else concurrence(single_mode_steady_state(alpha)[0]))
    res.extras["single_mode_concurrence"] = np.array(single)
    return res


def run_sweep(spec: SweepSpec, threads: int = 1) -> SweepResult:
    if spec.scenario is Scenario.MODE_COUNT:
        return run_mode_count_convergence(spec, threads)
    if spec.scenario is Scenario.PARITY:
        return run_parity_sweep(spec, threads)
    return run_cylinder_sweeps(spec, threads)
