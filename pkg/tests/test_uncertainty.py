import numpy as np
import pytest

from reftraj.exceptions import InvalidArgumentError
from reftraj.uncertainty import (
    CostNoiseModel,
    confidence_interval,
    normal_quantile,
    simulate_coverage,
)


def test_zero_noise_collapses_interval():
    assert confidence_interval(3.0, CostNoiseModel(0.0, 10.0)) == (3.0, 3.0)


def test_reference_interval():
    lo, hi = confidence_interval(10.0, CostNoiseModel(1.0, 4.0), 0.95)
    assert lo == pytest.approx(6.080072, abs=1e-5)
    assert hi == pytest.approx(13.919928, abs=1e-5)


def test_quantile_against_known_values():
    assert normal_quantile(0.975) == pytest.approx(1.959963984540054, abs=1e-9)
    assert normal_quantile(0.5) == 0.0
    assert normal_quantile(0.995) == pytest.approx(2.5758293035489, abs=1e-9)


def test_interval_shrinks_as_confidence_vanishes():
    noise = CostNoiseModel(2.0, 9.0)
    widths = [np.diff(confidence_interval(0.0, noise, conf))[0] for conf in (0.5, 0.1, 1e-6)]
    assert widths[0] > widths[1] > widths[2]
    assert widths[2] < 1e-4


def test_width_scales_with_square_root_of_horizon():
    w1 = np.diff(confidence_interval(0.0, CostNoiseModel(0.3, 50.0)))[0]
    w2 = np.diff(confidence_interval(0.0, CostNoiseModel(0.3, 100.0)))[0]
    assert w2 / w1 == pytest.approx(np.sqrt(2.0), rel=1e-12)


@pytest.mark.parametrize("conf", [0.0, 1.0, 1.5, -0.2])
def test_invalid_confidence(conf):
    with pytest.raises(InvalidArgumentError):
        confidence_interval(0.0, CostNoiseModel(1.0, 1.0), conf)


def test_invalid_noise_model():
    with pytest.raises(InvalidArgumentError):
        CostNoiseModel(-1.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        CostNoiseModel(1.0, 0.0)


def test_simulated_coverage():
    cov = simulate_coverage(5.0, CostNoiseModel(0.7, 30.0), 0.95, n_rep=50_000, seed=3)
    assert 0.94 <= cov <= 0.96
