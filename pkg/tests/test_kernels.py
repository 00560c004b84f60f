"""Kernel twin tests: jitted and numpy paths must agree."""
import numpy as np
import pytest

from laneshield import CarState, Constants, constant_mlp, euler_substep, mlp
from laneshield import _kernels
from laneshield.plant import exact_step, pair_gap_extrema
from laneshield.verifier import _embedding, _net_pack, root_box

C = Constants()
needs_numba = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")


def test_backend_name():
    assert _kernels.backend() in ("numba", "numpy")


class TestEulerRun:
    def test_matches_substep_sequence(self):
        x = np.array([0.0, 300.0])
        v = np.array([30.0, 10.0])
        a = np.array([2.0, -5.0])
        crash, min_gap = _kernels.euler_run(x, v, a, 0.1, 40, C.V, C.L)
        cars = [CarState(0.0, 30.0, 2.0), CarState(300.0, 10.0, -5.0)]
        for _ in range(40):
            cars = [euler_substep(s, 0.1, C) for s in cars]
        assert crash == -1
        assert x[0] == pytest.approx(cars[0].x, abs=1e-12)
        assert v[1] == pytest.approx(cars[1].v, abs=1e-12)

    def test_stops_at_first_crash_substep(self):
        x = np.array([0.0, 12.0])
        v = np.array([30.0, 0.0])
        a = np.array([0.0, 0.0])
        crash, min_gap = _kernels.euler_run(x, v, a, 0.1, 10, C.V, C.L)
        assert crash == 3  # gap 12 -> 9 -> 6 -> 3
        assert min_gap == pytest.approx(3.0)
        assert x[0] == pytest.approx(9.0)

    @needs_numba
    def test_twins_agree(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            m = rng.integers(1, 6)
            x = np.sort(rng.uniform(0, 300, m))
            v = rng.uniform(0, C.V, m)
            a = rng.uniform(C.Bmax, C.Amax, m)
            args = (0.05, 60, C.V, C.L)
            xj, vj = x.copy(), v.copy()
            rj = _kernels._euler_run_jit(xj, vj, a.copy(), *args)
            xn, vn = x.copy(), v.copy()
            rn = _kernels._euler_run_np(xn, vn, a.copy(), *args)
            assert rj[0] == rn[0]
            assert rj[1] == pytest.approx(rn[1], abs=1e-12)
            np.testing.assert_allclose(xj, xn, atol=1e-12)
            np.testing.assert_allclose(vj, vn, atol=1e-12)


class TestTwoPhaseMinGap:
    def _random_case(self, rng, n):
        return dict(
            xf=rng.uniform(C.L, 300, n), vf=rng.uniform(0, C.V, n),
            af1=rng.uniform(C.Bmax, C.Amax, n), af2=rng.uniform(C.Bmax, C.Amax, n),
            xr=np.zeros(n), vr=rng.uniform(0, C.V, n),
            ar1=rng.uniform(C.Bmax, C.Amax, n), ar2=rng.uniform(C.Bmax, C.Amax, n),
        )

    def test_matches_plant_composition(self):
        rng = np.random.default_rng(1)
        case = self._random_case(rng, 200)
        ts, t_end = C.T, 25.0
        got = _kernels.two_phase_min_gap(**case, ts=ts, V=C.V, t_end=t_end)
        for i in range(200):
            front0 = CarState(case["xf"][i], case["vf"][i], case["af1"][i])
            rear0 = CarState(case["xr"][i], case["vr"][i], case["ar1"][i])
            g1, _ = pair_gap_extrema(front0, rear0, ts, C)
            front1 = exact_step(front0, ts, C).with_accel(case["af2"][i])
            rear1 = exact_step(rear0, ts, C).with_accel(case["ar2"][i])
            g2, _ = pair_gap_extrema(front1, rear1, t_end - ts, C)
            assert got[i] == pytest.approx(min(g1, g2), abs=1e-9)

    @needs_numba
    def test_twins_agree(self):
        rng = np.random.default_rng(2)
        case = self._random_case(rng, 500)
        a = _kernels._two_phase_min_gap_jit(*case.values(), C.T, C.V, 30.0)
        b = _kernels._two_phase_min_gap_np(*case.values(), C.T, C.V, 30.0)
        np.testing.assert_allclose(a, b, atol=1e-12)


class TestFrontierTwins:
    @needs_numba
    def test_twins_agree(self):
        rng = np.random.default_rng(3)
        nets = [
            constant_mlp((0, 0, 1)),
            mlp([
                (rng.normal(size=(16, 10)), rng.normal(size=16), "relu"),
                (rng.normal(size=(3, 16)), rng.normal(size=3), "linear"),
            ]),
        ]
        root = root_box(2)
        n = 4000
        ctr = rng.uniform(root.lo, root.hi, (n, 4))
        half = rng.uniform(1e-4, 0.2, (n, 4))
        lo = np.maximum(ctr - half, root.lo)
        hi = np.minimum(ctr + half, root.hi)
        consts = (C.T, C.L, C.V, C.Amin, C.Amax, C.Bmin, C.Bmax)
        active = np.array([True, True, True, True])
        for m in nets:
            net = _net_pack(m)
            emb = _embedding(m, 2)
            out = []
            for fn in (_kernels._frontier_jit, _kernels._frontier_np):
                verdict = np.empty(n, dtype=np.int8)
                split_dim = np.empty(n, dtype=np.int32)
                cand = np.empty(n, dtype=np.int8)
                fn(lo, hi, *net, *emb, active,
                   *(float(v) for v in consts), 1e-3, 2, verdict, split_dim, cand)
                out.append((verdict.copy(), split_dim.copy(), cand.copy()))
            np.testing.assert_array_equal(out[0][0], out[1][0])
            np.testing.assert_array_equal(out[0][1], out[1][1])
            np.testing.assert_array_equal(out[0][2], out[1][2])
