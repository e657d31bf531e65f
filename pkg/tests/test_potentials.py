import math

import numpy as np
import pytest

from cutofflab.potentials import finite_difference_error, gaussian_potential, logcosh, quadratic, quartic


@pytest.mark.parametrize("pot", [quadratic(2.0, 3), quartic(2), logcosh(4),
                                 gaussian_potential([1.0, -1.0], 0.5)])
def test_gradients_agree_with_central_differences(pot):
    pts = np.random.default_rng(1).uniform(-3, 3, (20, pot.dim))
    assert finite_difference_error(pot, pts) < 1e-6


def test_curvature_bounds_and_tags():
    q = quadratic(2.0, 1)
    assert (q.alpha, q.beta, q.quadratic_variance) == (0.5, 0.5, 2.0)
    assert quartic().beta == math.inf and not quartic().smooth
    assert gaussian_potential([1.0], 1.0).quadratic_variance is None


def test_logcosh_second_derivative_in_bounds():
    x = np.linspace(-20, 20, 2001)
    v2 = 1 + 1 / np.cosh(x) ** 2
    pot = logcosh()
    assert pot.alpha <= v2.min() and v2.max() <= pot.beta
    assert np.isfinite(pot.value(np.array([[800.0]]))).all()


def test_invalid_bounds_rejected():
    from cutofflab.potentials import Potential
    with pytest.raises(ValueError):
        Potential(1, lambda x: x, lambda x: x, alpha=2.0, beta=1.0)
