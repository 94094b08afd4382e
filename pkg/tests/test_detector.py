import numpy as np
import pytest
from hypothesis import given, strategies as st

from bec_optomech.detector import DetectorModel, TransmissionTrace, transmission_counts


def test_dead_time_example():
    assert DetectorModel().detected_rate(1.0) == pytest.approx(769230.769, rel=1e-9)


def test_saturation_limit():
    det = DetectorModel()
    r = det.detected_rate(1e5)
    assert r < 1 / det.dead_time
    assert r == pytest.approx(1 / det.dead_time, rel=1e-3)


@given(st.floats(0.0, 1e3), st.floats(0.0, 1e3))
def test_rate_monotone(a, b):
    det = DetectorModel()
    lo, hi = sorted((a, b))
    assert det.detected_rate(lo) <= det.detected_rate(hi)


def test_zero_photons_give_zero_counts():
    tr = transmission_counts(np.zeros(1000), 0.5e-6, DetectorModel())
    assert len(tr.counts) == 250
    assert not tr.counts.any()


def test_expected_counts_and_truncation():
    photons = np.full(1001, 2.0)
    tr = transmission_counts(photons, 0.5e-6, DetectorModel(dead_time=0.0))
    assert len(tr.counts) == 250
    assert np.allclose(tr.expected, 2.0 * 0.8e6 * 2e-6)


def test_seed_determinism():
    photons = 1 + np.sin(np.linspace(0, 30, 4000)) ** 2
    a = transmission_counts(photons, 0.5e-6, DetectorModel(seed=7))
    b = transmission_counts(photons, 0.5e-6, DetectorModel(seed=7))
    c = transmission_counts(photons, 0.5e-6, DetectorModel(seed=8))
    assert np.array_equal(a.counts, b.counts)
    assert not np.array_equal(a.counts, c.counts)


def test_poisson_statistics():
    tr = transmission_counts(np.full(400_000, 3.0), 0.5e-6, DetectorModel(seed=1))
    lam = tr.expected[0]
    assert tr.counts.mean() == pytest.approx(lam, rel=0.01)
    assert tr.counts.var() == pytest.approx(lam, rel=0.05)


def test_bin_must_be_multiple_of_dt():
    with pytest.raises(ValueError, match="multiple"):
        transmission_counts(np.ones(100), 0.3e-6, DetectorModel())


def test_csv_roundtrip(tmp_path):
    tr = transmission_counts(np.full(200, 1.5), 0.5e-6, DetectorModel(seed=3), t0=1e-3)
    path = tmp_path / "counts.csv"
    tr.to_csv(path)
    assert path.read_text().splitlines()[0] == "t_bin_start,counts"
    back = TransmissionTrace.from_csv(path)
    assert back.t0 == tr.t0
    assert back.bin_width == pytest.approx(tr.bin_width, rel=1e-12)
    assert np.array_equal(back.counts, tr.counts)


def test_non_uniform_bins_rejected(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t_bin_start,counts\n0,1\n2e-6,3\n5e-6,2\n")
    with pytest.raises(ValueError, match="uniformly"):
        TransmissionTrace.from_csv(path)


def test_validation():
    with pytest.raises(ValueError):
        DetectorModel(bin=0.0)
    with pytest.raises(ValueError):
        TransmissionTrace(0.0, 1e-6, np.array([1, -1]))
