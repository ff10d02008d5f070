import numpy as np
import pytest

from clbc.plant import (DisturbanceSpec, PlantModel, benchmark_msd,
                        benchmark_second_order, disturbance_sample, make_plant,
                        plant_derivative)


class TestBenchmarkFactories:
    def test_msd_regressors(self):
        m = benchmark_msd()
        assert m.order == 3 and m.n_params == 3
        assert m.phi_values(2, np.array([1.0, 2.0, 0.0])) == pytest.approx([-2.0, -1.0, -8.0])
        assert np.array_equal(m.phi_values(1, np.array([1.0, 2.0, 0.0])), np.zeros(3))
        assert np.array_equal(m.phi_values(3, np.array([1.0, 2.0, 0.5])), np.zeros(3))
        assert m.beta(np.array([5.0, -2.0, 1.0])) == 1.0

    def test_second_order_regressors(self):
        m = benchmark_second_order()
        assert m.order == 2 and m.n_params == 1
        assert m.phi_values(1, np.array([0.6, 0.0]))[0] == pytest.approx(0.36)
        assert m.theta[0] == 2.0
        assert np.array_equal(m.phi_values(2, np.array([0.6, 0.0])), np.zeros(1))
        assert m.beta(np.zeros(2)) == 1.0

    def test_factories_are_pure(self):
        a, b = benchmark_msd(), benchmark_msd()
        assert np.array_equal(a.theta, b.theta)
        x = np.array([0.3, -1.2, 0.7])
        for i in (1, 2, 3):
            assert np.array_equal(a.phi_values(i, x), b.phi_values(i, x))

    def test_make_plant_lookup(self):
        assert make_plant("msd", (0.4, 0.5, 0.1)).theta[0] == 0.4
        with pytest.raises(ValueError):
            make_plant("inverted_pendulum", (1.0,))

    def test_theta_bound_enforced(self):
        with pytest.raises(ValueError):
            benchmark_msd(theta=(10.0, 0.0, 0.0), c_theta=1.0)


class TestPlantDerivative:
    def test_origin_is_equilibrium(self):
        m = benchmark_msd()
        assert np.array_equal(plant_derivative(m, np.zeros(3), 0.0), np.zeros(3))

    def test_msd_hand_value(self):
        m = benchmark_msd(theta=(0.1, 0.5, 1.5))
        xdot = plant_derivative(m, np.array([1.0, 2.0, 0.0]), 0.0)
        assert xdot == pytest.approx([2.0, -12.7, 0.0])

    def test_second_order_hand_value(self):
        m = benchmark_second_order(theta=(2.0,))
        xdot = plant_derivative(m, np.array([0.6, 0.0]), 1.0)
        assert xdot == pytest.approx([0.72, 1.0])

    def test_linearity_in_theta(self):
        # integer-valued data keeps float arithmetic exact
        x = np.array([1.0, 2.0, 3.0])
        u = 2.0
        th_a, th_b = (1.0, 2.0, 3.0), (4.0, -1.0, 2.0)
        th_sum = tuple(a + b for a, b in zip(th_a, th_b))
        f = lambda th: plant_derivative(benchmark_msd(theta=th, c_theta=100.0), x, u)
        lhs = f(th_sum)
        rhs = f(th_a) + f(th_b) - f((0.0, 0.0, 0.0))
        assert np.array_equal(lhs, rhs)

    def test_disturbance_added_to_every_row(self):
        m = benchmark_msd()
        d = np.array([0.1, -0.2, 0.3])
        base = plant_derivative(m, np.ones(3), 0.5)
        assert plant_derivative(m, np.ones(3), 0.5, d) == pytest.approx(base + d)

    def test_shape_check(self):
        with pytest.raises(ValueError):
            plant_derivative(benchmark_msd(), np.zeros(2), 0.0)

    def test_regressor_length_validated(self):
        bad = PlantModel(order=1, n_params=2, regressors=(lambda x1: (x1,),),
                         beta=lambda x: 1.0, theta=np.array([1.0, 1.0]),
                         c_theta=5.0)
        with pytest.raises(ValueError):
            bad.phi_values(1, np.array([1.0]))


class TestDisturbance:
    def test_none_is_zero(self):
        spec = DisturbanceSpec()
        rng = np.random.default_rng(0)
        assert np.array_equal(disturbance_sample(spec, 1.0, rng, 3), np.zeros(3))

    def test_sinusoid_example(self):
        spec = DisturbanceSpec(kind="sinusoid", bound=0.1, frequency=1.0, axis=0)
        d = disturbance_sample(spec, np.pi / 2, np.random.default_rng(0), 3)
        assert d == pytest.approx([0.1, 0.0, 0.0])

    def test_constant(self):
        spec = DisturbanceSpec(kind="constant", bound=0.2, axis=1)
        d = disturbance_sample(spec, 17.0, np.random.default_rng(0), 3)
        assert d == pytest.approx([0.0, 0.2, 0.0])

    @pytest.mark.parametrize("kind", ["none", "constant", "sinusoid", "random"])
    def test_bound_respected_on_grid(self, kind):
        spec = DisturbanceSpec(kind=kind, bound=0.37, frequency=2.3, axis=2)
        rng = np.random.default_rng(42)
        for t in np.linspace(0.0, 25.0, 400):
            d = disturbance_sample(spec, t, rng, 3)
            assert np.linalg.norm(d) <= 0.37 * (1 + 1e-12)

    def test_random_is_seed_deterministic(self):
        spec = DisturbanceSpec(kind="random", bound=0.1)
        a = disturbance_sample(spec, 0.0, np.random.default_rng(5), 3)
        b = disturbance_sample(spec, 0.0, np.random.default_rng(5), 3)
        assert np.array_equal(a, b)

    def test_validation(self):
        with pytest.raises(ValueError):
            DisturbanceSpec(kind="step")
        with pytest.raises(ValueError):
            DisturbanceSpec(bound=-1.0)
