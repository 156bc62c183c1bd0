import numpy as np
import pytest

from polygauge import GaugeSpec


@pytest.fixture
def sup_path_case():
    """Tiny 2x3 sup-norm instance with a fully known path."""
    x = np.array([[1.0, 0.0, 2.0], [0.0, 1.0, 1.0]])
    beta = np.array([0.0, 2.0, 2.0])
    return {"x": x, "beta": beta, "y": x @ beta, "spec": GaugeSpec.sup(3)}


@pytest.fixture
def gen_lasso_nonunique():
    """3x3 generalized-lasso instance whose minimizer set is a segment."""
    x = np.array([[1.0, 1.0, 1.0], [3.0, 1.0, 1.0], [np.sqrt(2.0), 0.0, 0.0]])
    d = np.array([[1.0, 1.0, 0.0], [1.0, 0.0, 1.0], [2.0, 1.0, 1.0]])
    y = np.array([1.0, 1.0, 0.0])
    return {"x": x, "d": d, "y": y, "spec": GaugeSpec.genlasso(d)}
