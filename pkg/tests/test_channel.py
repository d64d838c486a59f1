import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mixfield import (
    ArrayGeometry,
    CsiModel,
    UserSpec,
    apply_csi_error,
    far_field_steering,
    los_channel,
    near_field_steering,
    rayleigh_distance,
    rician_channel,
)
from mixfield.channel import db_to_linear, dbm_to_watts, free_space_gain

GEOM = ArrayGeometry(64, 30e9)
angles = st.floats(-0.99, 0.99)
ranges = st.floats(0.5, 300.0)


def test_geometry_defaults_and_validation():
    g = ArrayGeometry(256, 30e9)
    assert g.element_spacing == pytest.approx(g.wavelength / 2)
    assert g.offsets[0] == -127.5 and g.offsets[-1] == 127.5
    for bad in (dict(num_antennas=0, carrier_freq=1e9), dict(num_antennas=4, carrier_freq=-1),
                dict(num_antennas=2.5, carrier_freq=1e9),
                dict(num_antennas=4, carrier_freq=1e9, element_spacing=0.0)):
        with pytest.raises(ValueError):
            ArrayGeometry(**bad)


def test_rayleigh_distance_at_broadside():
    g = ArrayGeometry(256, 30e9)
    assert rayleigh_distance(g, 0.0) == pytest.approx(120.0, rel=0.01)
    assert rayleigh_distance(g, 0.5) == pytest.approx(0.75 * rayleigh_distance(g, 0.0))
    with pytest.raises(ValueError):
        rayleigh_distance(g, 1.5)


def test_reference_gain_db():
    assert 10 * np.log10(free_space_gain(ArrayGeometry(8, 30e9))) == pytest.approx(-62.0, abs=0.1)
    assert dbm_to_watts(30.0) == pytest.approx(1.0)
    assert dbm_to_watts(-80.0) == pytest.approx(1e-11)
    assert db_to_linear(10.0) == pytest.approx(10.0)


@given(angles, ranges)
def test_steering_rows_have_unit_norm(theta, r):
    assert np.linalg.norm(near_field_steering(GEOM, theta, r)) == pytest.approx(1.0)
    assert np.linalg.norm(far_field_steering(GEOM, theta)) == pytest.approx(1.0)


@given(angles)
def test_near_steering_tends_to_planar_far_away(theta):
    b = near_field_steering(GEOM, theta, 1e6)
    a = far_field_steering(GEOM, theta)
    assert abs(np.vdot(a, b)) == pytest.approx(1.0, abs=1e-3)


@given(angles, ranges)
def test_field_label_follows_rayleigh_distance(theta, r):
    u = UserSpec(theta, r)
    assert u.label(GEOM) == ("near" if r < rayleigh_distance(GEOM, theta) else "far")
    assert u.located(GEOM).field_label == u.label(GEOM)


def test_user_validation():
    for bad in (dict(theta=1.2, r=1.0), dict(theta=0.0, r=0.0), dict(theta=0.0, r=1.0, weight=-1),
                dict(theta=0.0, r=1.0, field_label="mid")):
        with pytest.raises(ValueError):
            UserSpec(**bad)


@given(angles, ranges)
def test_los_entries_are_scaled_steering(theta, r):
    ch = los_channel(GEOM, UserSpec(theta, r))
    assert np.allclose(ch.entries, np.sqrt(64) * ch.gain * ch.steering)
    assert abs(ch.gain) ** 2 == pytest.approx(free_space_gain(GEOM) / r**2)


def test_rician_energy_and_limits():
    u = UserSpec(0.1, 20.0)
    los = los_channel(GEOM, u)
    assert np.array_equal(rician_channel(GEOM, u, rician_factor=np.inf).entries, los.entries)
    e_los = np.vdot(los.entries, los.entries).real
    e = [np.vdot(c.nlos, c.nlos).real for c in
         (rician_channel(GEOM, u, rician_factor=2.0, num_nlos=4, rng_seed=s) for s in range(400))]
    # scattered rows are not orthogonal, so allow a loose band around |LoS|^2 / kappa
    assert np.mean(e) == pytest.approx(e_los / 2.0, rel=0.25)
    a = rician_channel(GEOM, u, rician_factor=2.0, rng_seed=7)
    b = rician_channel(GEOM, u, rician_factor=2.0, rng_seed=7)
    assert np.array_equal(a.entries, b.entries)
    with pytest.raises(ValueError):
        rician_channel(GEOM, u, rician_factor=0.0)


@pytest.mark.parametrize("mode,scale", [("per_entry", 1.0), ("literal", 64.0)])
def test_csi_error_energy(mode, scale):
    ch = los_channel(GEOM, UserSpec(0.0, 30.0))
    energy = np.vdot(ch.entries, ch.entries).real
    model = CsiModel(0.1, mode)
    errs = [np.sum(np.abs(apply_csi_error(ch, model, s).entries - ch.entries) ** 2)
            for s in range(300)]
    assert np.mean(errs) == pytest.approx(0.01 * energy * scale, rel=0.1)
    assert apply_csi_error(ch, CsiModel(0.0), 1) is ch


def test_csi_per_user_levels_and_validation():
    assert CsiModel((0.0, 0.2)).level(1) == 0.2
    with pytest.raises(ValueError):
        CsiModel(-0.1)
    with pytest.raises(ValueError):
        CsiModel(0.1, "other")
