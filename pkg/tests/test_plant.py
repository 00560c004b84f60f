"""Plant tests: integrators, saturation, collision, gap analysis."""
import numpy as np
import pytest

from laneshield import (
    CarState,
    Constants,
    Integrator,
    acc_correction,
    collision,
    euler_substep,
    exact_step,
    integrate,
)
from laneshield.plant import (
    first_gap_crossing,
    pair_gap_extrema,
    step_cars,
    velocity_at,
)

C = Constants()


class TestIntegrator:
    def test_parse(self):
        assert Integrator.parse("exact") == Integrator.exact()
        assert Integrator.parse("euler:10") == Integrator.euler(10)

    def test_bad_spec(self):
        with pytest.raises(ValueError):
            Integrator.parse("rk4")
        with pytest.raises(ValueError):
            Integrator.euler(0)


class TestAccCorrection:
    def test_stopped_braking(self):
        assert acc_correction(CarState(0, 0, -3), C) == CarState(0, 0, 0.0)

    def test_at_limit_accelerating(self):
        assert acc_correction(CarState(0, 40, 5), C) == CarState(0, 40, 0.0)

    def test_moving_unchanged(self):
        s = CarState(0, 10, -3)
        assert acc_correction(s, C) == s


class TestExactStep:
    def test_constant_velocity(self):
        assert exact_step(CarState(0, 10, 0), 1, C) == CarState(10.0, 10, 0)

    def test_clamps_at_speed_limit(self):
        s = exact_step(CarState(0, 38, 5), 1, C)
        assert s.x == pytest.approx(39.6)
        assert s.v == 40.0

    def test_clamps_at_standstill(self):
        s = exact_step(CarState(0, 2, -5), 1, C)
        assert s.x == pytest.approx(0.4)
        assert s.v == 0.0

    def test_negative_dt(self):
        with pytest.raises(ValueError):
            exact_step(CarState(0, 10, 0), -1, C)

    def test_time_additive(self):
        rng = np.random.default_rng(2)
        for _ in range(500):
            s = CarState(rng.uniform(-10, 10), rng.uniform(0, C.V),
                         rng.uniform(C.Bmax, C.Amax))
            t1, t2 = rng.uniform(0, 2, 2)
            one = exact_step(s, t1 + t2, C)
            two = exact_step(exact_step(s, t1, C), t2, C)
            assert two.x == pytest.approx(one.x, rel=1e-9, abs=1e-9)
            assert two.v == pytest.approx(one.v, rel=1e-9, abs=1e-9)


class TestEulerSubstep:
    def test_constant_velocity(self):
        assert euler_substep(CarState(0, 10, 0), 0.1, C) == CarState(1.0, 10.0, 0)

    def test_braking(self):
        assert euler_substep(CarState(0, 2, -5), 0.1, C) == CarState(0.2, 1.5, -5)

    def test_velocity_clamped(self):
        assert euler_substep(CarState(0, 0.3, -5), 0.1, C) == CarState(0.03, 0.0, -5)


class TestIntegrate:
    def test_zero_dt(self):
        s = CarState(0, 2, -5)
        assert integrate(s, 0, Integrator.euler(10), C) == s
        assert integrate(s, 0, Integrator.exact(), C) == s

    def test_coarse_euler_overshoots(self):
        s = integrate(CarState(0, 2, -5), 1, Integrator.euler(10), C)
        assert s.x == pytest.approx(0.5)
        assert s.v == 0.0

    def test_fine_euler_converges(self):
        # braking overshoot is exactly v*h/2 = 1e-3 here, so allow fp dust on top
        s = integrate(CarState(0, 2, -5), 1, Integrator.euler(1000), C)
        assert s.x == pytest.approx(0.4, abs=1.001e-3)

    def test_euler_matches_substep_sequence(self):
        s = CarState(0.0, 17.3, -2.5)
        via_integrate = integrate(s, 2.0, Integrator.euler(7), C)
        expected = s
        for _ in range(14):
            expected = euler_substep(expected, 1.0 / 7, C)
        assert via_integrate.x == pytest.approx(expected.x, abs=1e-12)
        assert via_integrate.v == pytest.approx(expected.v, abs=1e-12)

    def test_velocity_always_in_range(self):
        rng = np.random.default_rng(3)
        for _ in range(300):
            s = CarState(0.0, rng.uniform(0, C.V), rng.uniform(C.Bmax, C.Amax))
            integ = Integrator.exact() if rng.random() < 0.5 else Integrator.euler(10)
            out = integrate(s, rng.uniform(0, 3), integ, C)
            assert 0 <= out.v <= C.V

    def test_convergence_is_linear_in_h(self):
        s = CarState(0.0, 12.0, -3.0)
        exact = exact_step(s, 10.0, C)
        errs = []
        for sps in (10, 100, 1000):
            approx = integrate(s, 10.0, Integrator.euler(sps), C)
            errs.append(abs(approx.x - exact.x))
        assert errs[0] > errs[1] > errs[2]
        # error/h stays within a constant band
        ratios = [e * sps for e, sps in zip(errs, (10, 100, 1000))]
        assert max(ratios) / min(ratios) < 2.0


class TestCollision:
    def test_boundary_gap_is_safe(self):
        assert not collision(CarState(0, 0), CarState(5, 0), C)

    def test_below_l(self):
        assert collision(CarState(0, 0), CarState(4.99, 0), C)

    def test_far_apart(self):
        assert not collision(CarState(0, 0), CarState(100, 0), C)

    def test_symmetric(self):
        assert collision(CarState(4.99, 0), CarState(0, 0), C)


class TestGapAnalysis:
    def test_equal_braking_keeps_gap_constant(self):
        # both cars brake identically from the same speed: constant gap
        front = CarState(30.0, 20.0, -4.0)
        rear = CarState(0.0, 20.0, -4.0)
        g, _ = pair_gap_extrema(front, rear, 10.0, C)
        assert g == pytest.approx(30.0, abs=1e-12)

    def test_matches_dense_sampling(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            front = CarState(rng.uniform(5, 60), rng.uniform(0, C.V),
                             rng.uniform(C.Bmax, C.Amax))
            rear = CarState(0.0, rng.uniform(0, C.V), rng.uniform(C.Bmax, C.Amax))
            dt = rng.uniform(0.5, 5)
            analytic, _ = pair_gap_extrema(front, rear, dt, C)
            ts = np.linspace(0, dt, 2001)
            dense = min(exact_step(front, t, C).x - exact_step(rear, t, C).x for t in ts)
            assert analytic <= dense + 1e-9
            assert analytic == pytest.approx(dense, abs=5e-5)

    def test_first_crossing_agrees_with_scan(self):
        front = CarState(10.0, 0.0, 0.0)
        rear = CarState(0.0, 20.0, 0.0)
        # gap 10 shrinking at 20 m/s crosses L=5 at t=0.25
        t = first_gap_crossing(front, rear, 2.0, C)
        assert t == pytest.approx(0.25, abs=1e-9)

    def test_no_crossing(self):
        assert first_gap_crossing(CarState(100, 20), CarState(0, 10), 5.0, C) is None

    def test_already_colliding(self):
        assert first_gap_crossing(CarState(3, 0), CarState(0, 0), 1.0, C) == 0.0

    def test_tangential_touch_is_not_a_crash(self):
        # rear approaches, decelerates, and the gap's vertex sits exactly at L
        # gap(t) = 10 - 5t + 1.25t^2 has minimum 5 at t = 2
        front = CarState(10.0, 0.0, 0.0)
        rear = CarState(0.0, 5.0, -2.5)
        assert first_gap_crossing(front, rear, 4.0, C) is None
        g, _ = pair_gap_extrema(front, rear, 4.0, C)
        assert g == pytest.approx(5.0, abs=1e-12)


class TestStepCars:
    def test_exact_detects_mid_cycle_crash(self):
        cars = (CarState(0.0, 30.0, 0.0), CarState(12.0, 0.0, 0.0))
        stepped, elapsed, crashed = step_cars(cars, 1.0, Integrator.exact(), C)
        assert crashed
        # crossing when gap = 12 - 30t = 5
        assert elapsed == pytest.approx(7.0 / 30.0, abs=1e-9)
        assert stepped[1].x - stepped[0].x == pytest.approx(5.0, abs=1e-6)

    def test_euler_detects_crash_on_grid(self):
        cars = (CarState(0.0, 30.0, 0.0), CarState(12.0, 0.0, 0.0))
        stepped, elapsed, crashed = step_cars(cars, 1.0, Integrator.euler(10), C)
        assert crashed
        assert elapsed == pytest.approx(0.3)  # first substep with gap < 5

    def test_no_crash_advances_full_window(self):
        cars = (CarState(0.0, 10.0, 0.0), CarState(100.0, 10.0, 0.0))
        stepped, elapsed, crashed = step_cars(cars, 1.0, Integrator.exact(), C)
        assert not crashed and elapsed == 1.0
        assert stepped[0].x == pytest.approx(10.0)


def test_velocity_at_piecewise():
    s = CarState(0, 2, -5)
    assert velocity_at(s, 0.2, C) == pytest.approx(1.0)
    assert velocity_at(s, 0.4, C) == pytest.approx(0.0)
    assert velocity_at(s, 3.0, C) == 0.0
    assert velocity_at(CarState(0, 38, 5), 1.0, C) == 40.0
