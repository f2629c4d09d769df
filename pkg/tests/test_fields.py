import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subradiant import (
    ConfigurationError,
    DirectCoupling,
    DomainError,
    EmitterDescriptor,
    FieldSurrogate,
    HollowCylinderField,
    ModeDescriptor,
    Parity,
    Selector,
    classify_parity,
    coupling_at,
    filter_modes,
    hollow_cylinder_profile,
    npom_modes,
)

LM = [(l, m) for l in range(1, 10) for m in range(-l, l + 1)]


@settings(max_examples=1000, deadline=None)
@given(st.sampled_from(LM), st.floats(0, 1), st.floats(0, 2 * math.pi))
def test_parity_under_inversion(lm, s, phi):
    l, m = lm
    f = FieldSurrogate(8.0, 0.05, phase_offset=0.3)
    x, y = 8.0 * s * math.cos(phi), 8.0 * s * math.sin(phi)
    sign = 1 if m % 2 == 0 else -1
    assert f.field(l, m, -x, -y) == sign * f.field(l, m, x, y)


def test_odd_mode_vanishes_at_centre():
    f = FieldSurrogate(8.0, 0.05)
    assert f.field(1, 1, 0, 0) == 0
    assert f.field(1, 0, 0, 0) == pytest.approx(0.05)


@pytest.mark.parametrize("l,m", [(1, 0), (2, 1), (3, -2), (9, 9)])
def test_field_continuous(l, m):
    f = FieldSurrogate(8.0, 0.05)
    xs = np.linspace(-7.9, 7.9, 4001)
    vals = np.array([f.field(l, m, x, 0.3) for x in xs])
    assert np.max(np.abs(np.diff(vals))) < 0.05 * 0.02


@pytest.mark.parametrize("l,m", LM[:20])
def test_field_bounded_by_amplitude(l, m):
    f = FieldSurrogate(8.0, 0.05)
    rs = np.linspace(0, 8, 200)
    peak = max(abs(f.radial(l, m, r)) for r in rs)
    assert peak <= 1 + 1e-12


def test_outside_facet_rejected():
    with pytest.raises(DomainError):
        FieldSurrogate(8.0, 0.05).field(1, 0, 8.5, 0)


def test_coupling_scales_with_dipole_projection():
    mode = ModeDescriptor("10", 1, 0, 1.8, 0.1, FieldSurrogate(8.0, 0.05))
    e = EmitterDescriptor(1.8, dipole=2e-28, orientation=(0.6, 0, 0.8))
    assert coupling_at(mode, e) == pytest.approx(0.05 * 2 * 0.8)


def test_direct_coupling_requires_slot():
    mode = ModeDescriptor("a", 1, 0, 1.8, 0.1, DirectCoupling((0.1, 0.2j)))
    with pytest.raises(ConfigurationError):
        coupling_at(mode, EmitterDescriptor(1.8))
    assert coupling_at(mode, EmitterDescriptor(1.8), 1) == 0.2j


def test_classify_parity():
    assert classify_parity(ModeDescriptor("a", 3, 0, 1.0, 0.1)) is Parity.EVEN
    assert classify_parity(ModeDescriptor("a", 4, -2, 1.0, 0.1)) is Parity.EVEN
    assert classify_parity(ModeDescriptor("a", 5, 5, 1.0, 0.1)) is Parity.ODD


def test_filter_modes(caplog):
    modes = npom_modes(1.778, l_max=3)
    assert len(modes) == 3 + 5 + 7
    even = filter_modes(modes, Selector.EVEN_ONLY)
    odd = filter_modes(modes, "odd")
    assert len(even) + len(odd) == len(modes)
    assert [m.id for m in even] == [m.id for m in modes if m.m % 2 == 0]
    assert filter_modes(modes, "all") == modes
    assert [m.id for m in filter_modes(modes, "single")] == ["10"]
    with caplog.at_level("WARNING"):
        assert filter_modes(modes[:1], "odd") == []
    assert "left no modes" in caplog.text


def test_npom_modes_shape():
    modes = npom_modes(1.778)
    assert len(modes) == sum(2 * l + 1 for l in range(1, 10))
    assert modes[0].id == "10" and modes[0].omega == 1.778
    assert len(npom_modes(1.778, l_max=9, m_set="zero")) == 9
    with pytest.raises(ConfigurationError):
        npom_modes(1.778, m_set="odd")


def _cyl(dominant, **kw):
    return HollowCylinderField(FieldSurrogate(15.0, 0.05), 10.0, dominant, **kw)


def test_cylinder_suppresses_other_modes_at_centre():
    m_field = abs(_cyl(True).field(1, 0, 0, 0))
    for mode in hollow_cylinder_profile(1.778)[1:]:
        other = abs(mode.coupling_source.field(mode.l, mode.m, 0, 0))
        assert m_field >= 10 * other


def test_cylinder_wall_enhancement():
    f = _cyl(False)
    assert abs(f.field(2, 0, 9.8, 0)) > abs(f.field(2, 0, 5.0, 0))
    # wall term is zero at the centre
    assert f.field(2, 0, 0, 0) == pytest.approx(FieldSurrogate(15.0, 0.05).field(2, 0, 0, 0) / 10)


def test_cylinder_infinite_suppression():
    assert _cyl(False, suppression=math.inf).field(2, 1, 3.0, 1.0) == 0.0
    with pytest.raises(ConfigurationError):
        _cyl(False, suppression=0.5)
    with pytest.raises(DomainError):
        _cyl(True).field(1, 0, 10.5, 0)


def test_cylinder_profile_order():
    modes = hollow_cylinder_profile(1.778, n_modes=40)
    assert len(modes) == 40 and modes[0].id == "M"
    assert len({m.id for m in modes}) == 40
