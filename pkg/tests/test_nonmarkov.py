"""Trace-distance backflow detection on the reduced qubit dynamics."""

import math

import numpy as np
import pytest

from qtransistor import linalg as la
from qtransistor.model import ModelConfig
from qtransistor.nonmarkov import (BlochState, SearchConfig, blp_measure,
                                   blp_series, distance_series,
                                   growth_windows, qubit_reduced_dynamics)
from qtransistor import nonmarkov


def coarse(**over):
    return ModelConfig.default(sample_dt=0.1, **over)


SMALL = SearchConfig(grid_theta=6, grid_phi=8, refine_tol=5e-3)

Z_PLUS = BlochState(0.0, 0.0)
Z_MINUS = BlochState(math.pi, 0.0)
X_PLUS = BlochState(math.pi / 2, 0.0)


# ------------------------------------------------------------- Bloch states

def test_bloch_states_are_pure():
    for th, ph in ((0.0, 0.0), (math.pi / 3, 1.2), (math.pi, 5.9), (2.2, 0.1)):
        rho = BlochState(th, ph).density_matrix()
        assert abs(np.trace(rho) - 1.0) < 1e-14
        assert np.allclose(rho, rho.conj().T)
        assert abs(np.trace(rho @ rho) - 1.0) < 1e-12


def test_bloch_poles():
    assert np.allclose(Z_PLUS.density_matrix(), [[1, 0], [0, 0]])
    assert np.allclose(Z_MINUS.density_matrix(), [[0, 0], [0, 1]], atol=1e-15)
    assert np.allclose(X_PLUS.density_matrix(), [[0.5, 0.5], [0.5, 0.5]])


def test_bloch_angle_validation_and_wrapping():
    with pytest.raises(ValueError):
        BlochState(-0.1, 0.0)
    with pytest.raises(ValueError):
        BlochState(math.pi + 0.1, 0.0)
    assert BlochState(0.3, 2.0 * math.pi + 0.7).phi == pytest.approx(0.7)
    assert BlochState(0.3, -0.5).phi == pytest.approx(2.0 * math.pi - 0.5)


def test_antipode_negates_the_bloch_vector():
    for s in (Z_PLUS, X_PLUS, BlochState(1.1, 0.7)):
        assert np.allclose(s.antipode().bloch_vector, -s.bloch_vector,
                           atol=1e-15)
        back = s.antipode().antipode()
        assert np.allclose(back.bloch_vector, s.bloch_vector, atol=1e-15)


def test_search_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(grid_theta=1)
    with pytest.raises(ValueError):
        SearchConfig(refine_tol=0.0)


# ------------------------------------------------------------ distance data

def test_probe_marginals_are_density_matrices():
    states = qubit_reduced_dynamics(coarse(), "M", X_PLUS, 1.0)
    assert states.shape == (11, 2, 2)
    for rho in states:
        assert la.is_density_matrix(rho)


def test_unknown_probe_terminal_rejected():
    with pytest.raises(ValueError, match="unknown terminal"):
        qubit_reduced_dynamics(coarse(), "Q", X_PLUS, 1.0)
    with pytest.raises(ValueError, match="unknown terminal"):
        blp_measure(coarse(), "Q", 1.0, SMALL)


def test_identical_pair_stays_at_zero_distance():
    d = distance_series(coarse(), "L", (X_PLUS, X_PLUS), 0.5)
    assert np.max(d) == 0.0


def test_antipodal_pair_starts_fully_distinguishable():
    d = distance_series(coarse(), "L", (Z_PLUS, Z_MINUS), 0.5)
    assert d[0] == pytest.approx(1.0, abs=1e-12)


def test_distance_series_symmetric_in_the_pair():
    cfg = coarse()
    ab = distance_series(cfg, "M", (Z_PLUS, X_PLUS), 1.0)
    ba = distance_series(cfg, "M", (X_PLUS, Z_PLUS), 1.0)
    assert np.max(np.abs(ab - ba)) < 1e-12


def test_linear_map_reproduces_direct_simulation():
    # four basis evolutions determine the marginal of any initial probe
    cfg = coarse()
    rmap = nonmarkov._ReducedMap(cfg, "M", 1.0)
    for pair in ((Z_PLUS, Z_MINUS), (Z_PLUS, X_PLUS),
                 (BlochState(1.1, 0.7), BlochState(2.0, 4.0))):
        direct = distance_series(cfg, "M", pair, 1.0)
        fast = rmap.pair_distance(pair[0].bloch_vector - pair[1].bloch_vector)
        assert np.max(np.abs(direct - fast)) < 1e-10


def test_decoupled_probe_never_gains_distinguishability():
    cfg = coarse(g=0.0)
    d = distance_series(cfg, "M", (Z_PLUS, X_PLUS), 1.0)
    assert np.max(np.abs(d - d[0])) < 1e-12
    res = blp_measure(cfg, "M", 1.0, SMALL)
    assert res.value < 1e-12  # rounding noise only
    assert np.max(np.diff(res.distance_series)) < 1e-12


# ------------------------------------------------------------ growth windows

def test_growth_windows_mechanics():
    times = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
    series = np.array([0.0, 0.5, 0.3, 0.6, 0.6])
    assert growth_windows(times, series) == [(0.0, 1.0), (2.0, 3.0)]
    # growth running to the end closes at the last time
    assert growth_windows(times[:3], np.array([0.0, 0.1, 0.2])) == [(0.0, 2.0)]
    # increments at or below the threshold are ignored
    assert growth_windows(times, series, min_increment=0.4) == [(0.0, 1.0)]


# -------------------------------------------------------------- BLP measure

@pytest.fixture(scope="module")
def measured_M():
    return blp_measure(coarse(), "M", 1.5, SMALL)


def test_backflow_is_positive_for_every_probe(measured_M):
    assert measured_M.value > 0.01
    for term in ("L", "R"):
        assert blp_measure(coarse(), term, 1.5, SMALL).value > 0.01


def test_reported_value_comes_from_the_reported_series(measured_M):
    d = np.diff(measured_M.distance_series)
    assert measured_M.value == pytest.approx(d[d > 0].sum(), abs=1e-12)
    assert measured_M.growth_windows == growth_windows(
        measured_M.times, measured_M.distance_series)


def test_optimal_pair_is_antipodal(measured_M):
    s1, s2 = measured_M.optimal_pair
    assert np.allclose(s2.bloch_vector, -s1.bloch_vector, atol=1e-12)


def test_general_pair_search_never_loses_to_antipodal():
    cfg = coarse()
    anti = blp_measure(cfg, "M", 1.0, SMALL)
    general = blp_measure(
        cfg, "M", 1.0,
        SearchConfig(grid_theta=6, grid_phi=8, refine_tol=5e-3,
                     general_pairs=True))
    assert general.value >= anti.value - 1e-9


# --------------------------------------------------------------- BLP series

def test_series_cutoffs_validated():
    with pytest.raises(ValueError, match="ascending"):
        blp_series(coarse(), "M", [], SMALL)
    with pytest.raises(ValueError, match="ascending"):
        blp_series(coarse(), "M", [1.0, 0.5], SMALL)


def test_series_is_monotone_and_meets_the_full_measure(measured_M):
    ser = blp_series(coarse(), "M", [0.5, 1.0, 1.5], SMALL)
    assert ser.shape == (3,)
    assert np.all(np.diff(ser) >= -1e-12)
    assert ser[-1] == pytest.approx(measured_M.value, abs=1e-6)
