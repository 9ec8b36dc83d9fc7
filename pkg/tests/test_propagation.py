"""Angular-spectrum propagation identities.

Transfer samples are checked against the literal formula with explicit
loops, including a geometry coarse enough to expose the evanescent cut.
The operator identities (round trip, energy, composition) hold exactly for
the unpadded transform at the reference geometry, where every representable
frequency propagates.
"""

import numpy as np
import pytest

from holoem.grid import ComplexGrid2D
from holoem.propagation import TransferFunction, kernel_sums, propagate, transfer_function

from conftest import PITCH, WAVELENGTH


def transfer_oracle(shape, pitch_x, pitch_y, wavelength, z):
    """Direct per-sample evaluation of the band-limited transfer function."""
    height, width = shape
    vx = np.fft.fftfreq(width, d=pitch_x)
    vy = np.fft.fftfreq(height, d=pitch_y)
    k0 = 2.0 * np.pi / wavelength
    out = np.zeros((height, width), dtype=np.complex128)
    for i in range(height):
        for j in range(width):
            s = 1.0 - (wavelength * vx[j]) ** 2 - (wavelength * vy[i]) ** 2
            if s > 0.0:
                out[i, j] = np.exp(1j * k0 * z * np.sqrt(s))
    return out


def test_transfer_matches_formula_with_evanescent_cut():
    # pitch 0.6 um at wavelength 1.0 um: corner frequencies fall outside the
    # propagating band, axis frequencies stay inside
    shape, px, lam, z = (8, 8), 0.6e-6, 1.0e-6, 5e-6
    tf = transfer_function(shape, px, lam, z)
    expected = transfer_oracle(shape, px, px, lam, z)
    np.testing.assert_allclose(tf.values, expected, atol=1e-14)
    assert tf.values[4, 4] == 0.0  # diagonal Nyquist is evanescent
    assert tf.values[0, 4] != 0.0  # axis Nyquist propagates
    assert np.abs(tf.values).max() <= 1.0 + 1e-12


def test_transfer_anisotropic_pitch():
    tf = transfer_function((6, 4), (1.0e-6, 2.0e-6), WAVELENGTH, -3e-6)
    expected = transfer_oracle((6, 4), 1.0e-6, 2.0e-6, WAVELENGTH, -3e-6)
    np.testing.assert_allclose(tf.values, expected, atol=1e-14)
    assert tf.pitch_x == 1.0e-6 and tf.pitch_y == 2.0e-6


def test_backward_transfer_is_conjugate():
    z = 0.7e-3
    fwd = transfer_function((16, 12), PITCH, WAVELENGTH, z)
    bwd = transfer_function((16, 12), PITCH, WAVELENGTH, -z)
    np.testing.assert_allclose(bwd.values, np.conj(fwd.values), atol=1e-14)


def test_transfer_values_are_read_only():
    tf = transfer_function((8, 8), PITCH, WAVELENGTH, 1e-3)
    with pytest.raises(ValueError):
        tf.values[0, 0] = 0.0


def test_transfer_magnitude_guard():
    bad = np.full((4, 4), 1.5 + 0.0j)
    with pytest.raises(ValueError):
        TransferFunction(bad, 1e-3, WAVELENGTH, PITCH, PITCH)


def test_transfer_validation():
    with pytest.raises(ValueError):
        transfer_function((8, 8), PITCH, 0.0, 1e-3)
    with pytest.raises(ValueError):
        transfer_function((1, 8), PITCH, WAVELENGTH, 1e-3)
    with pytest.raises(ValueError):
        transfer_function((8, 8), -PITCH, WAVELENGTH, 1e-3)


def _random_field(rng, shape=(16, 16)):
    data = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return ComplexGrid2D(data, PITCH, PITCH)


def test_round_trip_unpadded(rng):
    f = _random_field(rng)
    z = 1.0e-3
    back = propagate(propagate(f, z, WAVELENGTH), -z, WAVELENGTH)
    assert np.max(np.abs(back.data - f.data)) < 1e-12


def test_energy_conservation_unpadded(rng):
    f = _random_field(rng)
    g = propagate(f, 0.8e-3, WAVELENGTH)
    e_in = np.sum(np.abs(f.data) ** 2)
    e_out = np.sum(np.abs(g.data) ** 2)
    assert abs(e_out - e_in) / e_in < 1e-12


def test_composition_unpadded(rng):
    f = _random_field(rng)
    z1, z2 = 0.4e-3, 0.9e-3
    two_hops = propagate(propagate(f, z1, WAVELENGTH), z2, WAVELENGTH)
    one_hop = propagate(f, z1 + z2, WAVELENGTH)
    assert np.max(np.abs(two_hops.data - one_hop.data)) < 1e-11


def test_plane_wave_phase():
    ones = ComplexGrid2D(np.ones((12, 12)), PITCH, PITCH)
    z = 1.3e-3
    out = propagate(ones, z, WAVELENGTH)
    expected = np.exp(1j * 2.0 * np.pi / WAVELENGTH * z)
    np.testing.assert_allclose(out.data, np.full((12, 12), expected), atol=1e-12)


def test_kernel_sums_match_spatial_sum():
    # the lattice sum of the point-spread kernel is the zero-frequency
    # transfer sample, so it must equal cos(k0 z) + j sin(k0 z)
    z = 1.0e-3
    tf = transfer_function((16, 16), PITCH, WAVELENGTH, z)
    kernel = np.fft.ifft2(tf.values)
    total = complex(kernel.sum())
    ks = kernel_sums(WAVELENGTH, z)
    assert abs(total.real - ks.l_re) < 1e-10
    assert abs(total.imag - ks.l_im) < 1e-10
    k0z = 2.0 * np.pi / WAVELENGTH * z
    assert ks.l_re == pytest.approx(np.cos(k0z), abs=1e-15)
    assert ks.l_im == pytest.approx(np.sin(k0z), abs=1e-15)


def test_kernel_sums_validation():
    with pytest.raises(ValueError):
        kernel_sums(0.0, 1e-3)


def test_padded_matches_manual_embed(rng):
    f = _random_field(rng, shape=(10, 14))
    z = 0.5e-3
    got = propagate(f, z, WAVELENGTH, pad=True)

    frame = np.zeros((20, 28), dtype=np.complex128)
    frame[5:15, 7:21] = f.data
    h = transfer_oracle((20, 28), PITCH, PITCH, WAVELENGTH, z)
    full = np.fft.ifft2(np.fft.fft2(frame) * h)
    np.testing.assert_allclose(got.data, full[5:15, 7:21], atol=1e-12)


def test_propagate_validation(rng):
    f = _random_field(rng, shape=(4, 4))
    with pytest.raises(ValueError):
        propagate(f, 1e-3, -WAVELENGTH)
