import numpy as np
import pytest

from aibo.acquisition import AcquisitionFunction, AcquisitionSpec
from aibo.maximizer import (MaximizerConfig, ascend, es_maximize, multi_start_maximize,
                            top_n_select)
from aibo.rng import Stream


class Toy:
    """Acquisition stand-in from a scalar function and its gradient."""

    def __init__(self, f, g):
        self.f, self.g = f, g

    def value(self, x):
        return np.array([self.f(p) for p in np.atleast_2d(x)])

    def value_and_grad(self, x):
        x = np.atleast_2d(x)
        return self.value(x), np.array([self.g(p) for p in x])


class Table:
    def __init__(self, values):
        self.values = np.asarray(values, dtype=float)

    def value(self, x):
        return self.values[np.asarray(x)[:, 0].astype(int)]


quadratic = Toy(lambda x: -np.sum((x - 0.3) ** 2), lambda x: -2 * (x - 0.3))
linear = Toy(lambda x: float(x[0]), lambda x: np.array([1.0]))


def bimodal_f(x):
    return np.exp(-((x[0] - 0.2) ** 2) / 0.005) + 0.6 * np.exp(-((x[0] - 0.75) ** 2) / 0.005)


def bimodal_g(x):
    return np.array([np.exp(-((x[0] - 0.2) ** 2) / 0.005) * -2 * (x[0] - 0.2) / 0.005
                     + 0.6 * np.exp(-((x[0] - 0.75) ** 2) / 0.005) * -2 * (x[0] - 0.75) / 0.005])


bimodal = Toy(bimodal_f, bimodal_g)


class TestTopN:
    def test_argmax(self):
        pts, vals = top_n_select(np.arange(3)[:, None], Table([0.1, 0.9, 0.5]), 1)
        assert pts[0, 0] == 1 and vals[0] == 0.9

    def test_all_sorted_descending(self):
        pts, vals = top_n_select(np.arange(3)[:, None], Table([0.1, 0.9, 0.5]), 3)
        assert list(pts[:, 0]) == [1, 2, 0]
        assert list(vals) == [0.9, 0.5, 0.1]

    def test_ties_keep_lower_index(self):
        for _ in range(3):
            pts, _ = top_n_select(np.arange(4)[:, None], Table([0.2, 0.7, 0.7, 0.1]), 1)
            assert pts[0, 0] == 1

    def test_too_many(self):
        with pytest.raises(ValueError):
            top_n_select(np.arange(2)[:, None], Table([0.1, 0.2]), 3)


class TestAscend:
    def test_stationary_start(self):
        c = ascend([0.3, 0.3], quadratic)
        assert np.array_equal(c.point, [0.3, 0.3])

    @pytest.mark.parametrize("mode", ["analytic", "finite_difference"])
    def test_concave_1d(self, mode):
        c = ascend([0.9], quadratic, MaximizerConfig(gradient=mode))
        assert abs(c.point[0] - 0.3) < 1e-4

    @pytest.mark.parametrize("start", [0.0, 0.25, 0.999])
    def test_boundary_clamp(self, start):
        assert ascend([start], linear).point[0] == 1.0

    def test_never_worse_than_start(self, toy_model):
        bank = np.random.default_rng(0).standard_normal((128, 1))
        af = AcquisitionFunction(toy_model, AcquisitionSpec("ei_mc", base_samples=bank,
                                                            incumbent=float(toy_model.y_train.min())))
        r = np.random.default_rng(1)
        for _ in range(100):
            x0 = r.random(3)
            c = ascend(x0, af)
            assert c.af_value >= af.value(x0[None])[0]
            assert np.all((c.point >= 0) & (c.point <= 1))

    def test_first_order_optimality(self, toy_model):
        af = AcquisitionFunction(toy_model, AcquisitionSpec("ucb_analytic"))
        c = ascend(np.full(3, 0.5), af, MaximizerConfig(max_iters=500))
        _, g = af.value_and_grad(c.point[None])
        interior = (c.point > 1e-6) & (c.point < 1 - 1e-6)
        assert np.linalg.norm(g[0][interior]) < 1e-4


class TestMultiStart:
    def test_single_start_is_ascend(self):
        a = ascend([0.9], quadratic)
        b = multi_start_maximize([[0.9]], quadratic)
        assert np.array_equal(a.point, b.point) and a.af_value == b.af_value

    def test_bimodal_prefers_taller_peak(self):
        grid = np.linspace(0, 1, 100_001)
        oracle = grid[np.argmax([bimodal_f([g]) for g in grid[::100]]) * 100]
        c = multi_start_maximize([[0.7], [0.25]], bimodal)
        assert abs(c.point[0] - oracle) < 1e-3
        assert c.af_value == pytest.approx(1.0, abs=1e-6)

    def test_beats_every_init(self, toy_model):
        af = AcquisitionFunction(toy_model, AcquisitionSpec("ucb_analytic"))
        inits = np.random.default_rng(2).random((10, 3))
        c = multi_start_maximize(inits, af)
        assert c.af_value >= af.value(inits).max()


def test_es_maximize_improves_and_is_seeded(toy_model):
    af = AcquisitionFunction(toy_model, AcquisitionSpec("ucb_analytic"))
    start = np.full(3, 0.5)
    a = es_maximize(start, af, Stream(0), generations=10)
    b = es_maximize(start, af, Stream(0), generations=10)
    assert a.af_value >= af.value(start[None])[0]
    assert np.array_equal(a.point, b.point)


def test_config_validation():
    with pytest.raises(ValueError):
        MaximizerConfig(gradient="newton")
    with pytest.raises(ValueError):
        MaximizerConfig(max_iters=0)
