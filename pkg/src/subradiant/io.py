"""Unit-tagged quantities, mode tables and sweep-result files."""

from __future__ import annotations

import csv
import json
import math
import re
from pathlib import Path

import numpy as np
from scipy import constants

from .entanglement import PersistenceReport
from .experiments import POPULATION_KEYS, Scenario, SweepResult
from .fields import FieldSurrogate
from .model import ConfigurationError, DarkStateSpec, DirectCoupling, ModeDescriptor

__all__ = [
    "ModeTableError",
    "parse_quantity",
    "parse_complex",
    "parse_mode_table",
    "write_results",
    "read_results",
    "CSV_COLUMNS",
]

C_NM_PER_FS = constants.c * 1e9 / 1e15
HBAR_EV_FS = constants.hbar / constants.e * 1e15

# every conversion lands in rad/fs
_FREQUENCY_UNITS = {
    "rad/fs": lambda v: v,
    "thz": lambda v: 2 * math.pi * v * 1e-3,
    "ev": lambda v: v / HBAR_EV_FS,
    "mev": lambda v: v * 1e-3 / HBAR_EV_FS,
    "nm": lambda v: 2 * math.pi * C_NM_PER_FS / v,
}
_RATE_UNITS = {k: f for k, f in _FREQUENCY_UNITS.items() if k != "nm"}
_COUPLING_UNITS = {"rad/fs": 1.0, "ev": 1 / HBAR_EV_FS, "mev": 1e-3 / HBAR_EV_FS}

CSV_COLUMNS = ("time_fs", "x1_nm", "x2_nm", "concurrence", "pop_eg", "pop_ge", "pop_psiminus", "pop_psiplus")
_POP_COLUMN = {"eg": "pop_eg", "ge": "pop_ge", "psi-": "pop_psiminus", "psi+": "pop_psiplus"}

_QUANTITY = re.compile(r"^\s*([-+0-9.eE]+|[-+]?inf|nan)\s*([A-Za-z/]+)?\s*$")
_HEADER = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\[\s*([^\]]+?)\s*\])?\s*$")


class ModeTableError(ConfigurationError):
    """Bad mode table content; the message names the row and column."""


def parse_quantity(text, kind: str = "frequency", default_unit: str | None = None) -> float:
    """Convert ``"730 nm"``, ``"283 THz"``, ``"0.08 rad/fs"`` ... to rad/fs.

    ``kind="rate"`` rejects wavelength units. A bare number is accepted only
    when ``default_unit`` is given.
    """
    units = _FREQUENCY_UNITS if kind == "frequency" else _RATE_UNITS
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        value, unit = float(text), None
    else:
        m = _QUANTITY.match(str(text))
        if not m:
            raise ValueError(f"cannot parse quantity {text!r}")
        value, unit = float(m.group(1)), m.group(2)
    unit = unit or default_unit
    if unit is None:
        raise ValueError(f"missing unit tag in {text!r}")
    conv = units.get(unit.lower())
    if conv is None:
        raise ValueError(f"bad unit tag {unit!r} for a {kind} (allowed: {', '.join(units)})")
    if not math.isfinite(value):
        raise ValueError(f"non-finite value in {text!r}")
    out = conv(value)
    if not math.isfinite(out):
        raise ValueError(f"non-finite value in {text!r}")
    return out


def parse_complex(text, default_unit: str = "rad/fs") -> complex:
    """``"0.05+0i"``, ``"g1=0.05-0.01j"``, ``"30 meV"`` -> complex rad/fs."""
    if isinstance(text, (int, float, complex)) and not isinstance(text, bool):
        return complex(text) * _COUPLING_UNITS[default_unit.lower()]
    s = str(text).strip()
    if "=" in s:
        s = s.split("=", 1)[1].strip()
    unit = default_unit
    m = re.match(r"^(.*?)\s*(rad/fs|meV|eV)$", s, flags=re.IGNORECASE)
    if m:
        s, unit = m.group(1), m.group(2)
    s = s.replace(" ", "")
    if s.endswith("i"):
        s = s[:-1] + "j"
    value = complex(s)
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise ValueError(f"non-finite coupling {text!r}")
    return value * _COUPLING_UNITS[unit.lower()]


def _split_header(cells):
    names, units = [], {}
    for cell in cells:
        m = _HEADER.match(cell)
        if not m:
            raise ModeTableError(f"header: cannot parse column {cell!r}")
        name = m.group(1).lower()
        names.append(name)
        if m.group(2):
            units[name] = m.group(2)
    return names, units


def parse_mode_table(path) -> list[ModeDescriptor]:
    """Read a comma-delimited mode table.

    The header names the columns, optionally with unit tags (``omega[THz]``).
    Required: ``id, l, m, omega, kappa`` and either ``g1, g2`` (direct complex
    couplings, rad/fs unless tagged) or ``amplitude`` with optional
    ``facet_radius`` (nm, default 8) and ``phase_offset`` (rad) for a field
    surrogate. ``omega``/``kappa`` need a unit tag in the header or the cell.
    Lines starting with ``#`` are skipped.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ModeTableError(f"{path}: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ModeTableError(f"{path}: empty mode table")
    rows = list(csv.reader(lines, skipinitialspace=True))
    names, units = _split_header(rows[0])
    for col in ("id", "l", "m", "omega", "kappa"):
        if col not in names:
            raise ModeTableError(f"{path}: missing column {col!r}")
    direct = "g1" in names and "g2" in names
    if not direct and "amplitude" not in names:
        raise ModeTableError(f"{path}: need columns g1,g2 or amplitude")
    modes = []
    for lineno, cells in enumerate(rows[1:], start=2):
        if len(cells) != len(names):
            raise ModeTableError(f"{path}: row {lineno}: expected {len(names)} cells, got {len(cells)}")
        row = dict(zip(names, (c.strip() for c in cells)))
        col = None
        try:
            col = "l"
            l = int(row["l"])
            col = "m"
            m = int(row["m"])
            col = "omega"
            omega = parse_quantity(row["omega"], "frequency", units.get("omega"))
            col = "kappa"
            kappa = parse_quantity(row["kappa"], "rate", units.get("kappa"))
            if kappa <= 0:
                raise ValueError(f"kappa must be > 0, got {row['kappa']!r}")
            if direct:
                col = "g1"
                g1 = parse_complex(row["g1"], units.get("g1", "rad/fs"))
                col = "g2"
                g2 = parse_complex(row["g2"], units.get("g2", "rad/fs"))
                source = DirectCoupling((g1, g2))
            else:
                col = "amplitude"
                amp = parse_complex(row["amplitude"], units.get("amplitude", "rad/fs"))
                if amp.imag != 0:
                    raise ValueError("surrogate amplitudes are real")
                col = "facet_radius"
                radius = float(row.get("facet_radius") or 8.0)
                col = "phase_offset"
                offset = float(row.get("phase_offset") or 0.0)
                source = FieldSurrogate(radius, amp.real, offset)
            col = None
            modes.append(ModeDescriptor(row["id"], l, m, omega, kappa, source))
        except (ValueError, KeyError) as exc:
            where = f"column {col!r}" if col else "mode invariants"
            raise ModeTableError(f"{path}: row {lineno}, {where}: {exc}") from exc
    return modes


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _csv_path(directory: Path, stem: str, label: str, many: bool) -> Path:
    if not many:
        return directory / f"{stem}.csv"
    safe = re.sub(r"[^A-Za-z0-9_.-]+", "_", label).strip("_") or "group"
    return directory / f"{stem}_{safe}.csv"


def write_results(result: SweepResult, directory, fmt: str = "csv", stem: str = "sweep") -> list[Path]:
    """Write ``result`` under ``directory``; returns the written paths.

    ``csv``: one row per (grid point, time sample), one file per label when a
    result mixes labels (e.g. the three parity selectors). ``structured``: a
    lossless JSON document.
    """
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        if fmt == "structured":
            path = directory / f"{stem}.json"
            path.write_text(json.dumps(result_to_dict(result), indent=1))
            return [path]
        if fmt != "csv":
            raise ConfigurationError(f"unknown output format {fmt!r}")
        groups: dict[str, list[int]] = {}
        for i, lab in enumerate(result.labels):
            groups.setdefault(lab, []).append(i)
        if not groups:
            groups = {"": []}
        many = len(groups) > 1
        paths = []
        for label, idx in groups.items():
            path = _csv_path(directory, stem, label, many)
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(CSV_COLUMNS)
                for i in idx:
                    w.writerows(_csv_rows(result, i))
            paths.append(path)
        return paths
    except OSError as exc:
        raise OSError(f"cannot write results to {directory}: {exc}") from exc


def _csv_rows(result: SweepResult, i: int):
    x1, x2 = _fmt(result.x1[i]), _fmt(result.x2[i])
    if result.times is None:
        pops = [result.populations[k][i] for k in POPULATION_KEYS]
        yield [_fmt(result.t_eval), x1, x2, _fmt(result.concurrence[i])] + [_fmt(p) for p in pops]
        return
    for k, t in enumerate(result.times):
        pops = [result.population_series[key][i, k] for key in POPULATION_KEYS]
        yield [_fmt(t), x1, x2, _fmt(result.concurrence_series[i, k])] + [_fmt(p) for p in pops]


def _cplx(z) -> list[float]:
    return [float(z.real), float(z.imag)]


def _report_to_dict(rep: PersistenceReport) -> dict:
    return {
        "residuals": [_cplx(r) for r in rep.residuals],
        "satisfied": list(rep.satisfied),
        "threshold": rep.threshold,
        "dark_state": None if rep.dark_state is None else [rep.dark_state.theta, rep.dark_state.chi],
        "violating_modes": list(rep.violating_modes),
    }


def _report_from_dict(d: dict) -> PersistenceReport:
    ds = d["dark_state"]
    return PersistenceReport(
        residuals=tuple(complex(a, b) for a, b in d["residuals"]),
        satisfied=tuple(bool(s) for s in d["satisfied"]),
        threshold=float(d["threshold"]),
        dark_state=None if ds is None else DarkStateSpec(ds[0], ds[1]),
        violating_modes=tuple(d["violating_modes"]),
    )


def _arr(a):
    return None if a is None else np.asarray(a).tolist()


def result_to_dict(result: SweepResult) -> dict:
    return {
        "scenario": result.scenario.value,
        "x1": _arr(result.x1),
        "x2": _arr(result.x2),
        "labels": list(result.labels),
        "t_eval": result.t_eval,
        "concurrence": _arr(result.concurrence),
        "populations": {k: _arr(v) for k, v in result.populations.items()},
        "reports": [_report_to_dict(r) for r in result.reports],
        "times": _arr(result.times),
        "concurrence_series": _arr(result.concurrence_series),
        "population_series": None
        if result.population_series is None
        else {k: _arr(v) for k, v in result.population_series.items()},
        "extras": {k: _arr(v) for k, v in result.extras.items()},
    }


def result_from_dict(d: dict) -> SweepResult:
    def arr(v):
        return None if v is None else np.asarray(v, dtype=float)

    return SweepResult(
        scenario=Scenario(d["scenario"]),
        x1=arr(d["x1"]),
        x2=arr(d["x2"]),
        labels=list(d["labels"]),
        t_eval=float(d["t_eval"]),
        concurrence=arr(d["concurrence"]),
        populations={k: arr(v) for k, v in d["populations"].items()},
        reports=[_report_from_dict(r) for r in d["reports"]],
        times=arr(d["times"]),
        concurrence_series=arr(d["concurrence_series"]),
        population_series=None
        if d["population_series"] is None
        else {k: arr(v) for k, v in d["population_series"].items()},
        extras={k: arr(v) for k, v in d["extras"].items()},
    )


def read_results(path) -> SweepResult:
    return result_from_dict(json.loads(Path(path).read_text()))
