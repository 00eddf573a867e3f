import math

import numpy as np
import pytest
from scipy.integrate import quad

from spinreduce.bench import (
    _S_DATA,
    CSV_COLUMNS,
    TestFunction,
    active_count,
    eval_test_function,
    random_active_set,
    reference_mean,
    results_csv,
    run_experiment,
    summarize,
)
from spinreduce.data import DistributionSpec, sample


class TestFunctions:
    def test_gapk_peak(self):
        f = TestFunction("gapk", 3, 1.0, u=(0.5, 0.5, 0.5))
        assert eval_test_function(f, [0.5, 0.5, 0.5]) == 1.0

    def test_add_at_origin(self):
        assert eval_test_function(TestFunction("add", 4, 0.5), np.zeros(4)) == 1.0

    def test_hand_values(self):
        f = TestFunction("gapk", 2, 1.0)  # a = 0.125 on both coordinates
        assert eval_test_function(f, [1.0, 2.0]) == pytest.approx(math.exp(-(0.125**2) * 5), rel=1e-15)
        g = TestFunction("add", 2, 0.5)  # one active coordinate, b = 0.25
        assert eval_test_function(g, [2.0, 100.0]) == pytest.approx(math.exp(-0.5), rel=1e-15)

    def test_p20_q02(self):
        f = TestFunction.for_distribution("gapk", DistributionSpec("normal", 20), 0.2)
        assert f.n_active == 4 and f.active == (0, 1, 2, 3)
        assert max(f.coefficients) == pytest.approx(0.0625)
        assert sum(c > 0 for c in f.coefficients) == 4

    def test_active_count_rounding(self):
        assert active_count(20, 0.2) == 4
        assert active_count(10, 0.25) == 3
        assert active_count(5, 0.01) == 1

    def test_inactive_coordinates_ignored(self):
        f = TestFunction("gapk", 5, 0.2)
        x = np.zeros(5)
        y = x.copy()
        y[1:] = 9.0
        assert eval_test_function(f, x) == eval_test_function(f, y)

    def test_random_active_set(self):
        act = random_active_set(20, 0.2, 3)
        assert len(act) == 4 and act == random_active_set(20, 0.2, 3)
        f = TestFunction("add", 20, 0.2, active=act)
        assert f.active == act

    @pytest.mark.parametrize("kw", [dict(kind="max"), dict(q=0.0), dict(q=1.5), dict(active=(0, 0, 1, 2)),
                                    dict(u=(0.0,))])
    def test_invalid(self, kw):
        base = dict(kind="gapk", p=20, q=0.2)
        base.update(kw)
        with pytest.raises(ValueError):
            TestFunction(**base)


class TestReferenceMean:
    def test_constant_function(self):
        f = TestFunction("gapk", 2, 1.0, coefficients=(0.0, 0.0))
        mean, se = reference_mean(f, DistributionSpec("normal", 2), 1000, seed=0)
        assert mean == 1.0 and se == 0.0

    def test_add_normal_closed_form(self):
        # E exp(-b X) = exp(b^2 / 2) for X ~ N(0, 1)
        f = TestFunction("add", 1, 1.0)
        mean, se = reference_mean(f, DistributionSpec("normal", 1), 200_000, seed=1, chunk=30_000)
        assert abs(mean - math.exp(0.25**2 / 2)) < 4 * se

    def test_gapk_exponential_closed_form(self):
        # E exp(-a^2 (X - 1)^2), X ~ Exp(1), by quadrature as an independent check
        a = 0.25
        exact = quad(lambda x: math.exp(-(a**2) * (x - 1) ** 2 - x), 0, np.inf)[0]
        f = TestFunction.for_distribution("gapk", DistributionSpec("exponential", 1), 1.0)
        mean, se = reference_mean(f, DistributionSpec("exponential", 1), 200_000, seed=2)
        assert abs(mean - exact) < 4 * se

    def test_se_scales_with_count(self):
        f = TestFunction("add", 3, 1.0)
        spec = DistributionSpec("normal", 3)
        _, se1 = reference_mean(f, spec, 50_000, seed=3)
        _, se2 = reference_mean(f, spec, 200_000, seed=3)
        assert se1 / se2 == pytest.approx(2.0, rel=0.05)

    def test_chunking_does_not_change_merge(self):
        f = TestFunction("add", 2, 1.0)
        spec = DistributionSpec("beta", 2)
        whole = reference_mean(f, spec, 6000, seed=4, chunk=6000)
        assert whole[0] == pytest.approx(np.mean(f(np.random.default_rng(
            np.random.SeedSequence([4]).spawn(1)[0]).beta(2, 4, size=(6000, 2)))), rel=1e-12)

    def test_p_mismatch(self):
        with pytest.raises(ValueError):
            reference_mean(TestFunction("add", 2), DistributionSpec("normal", 3), 100)


@pytest.fixture(scope="module")
def small_run():
    spec = DistributionSpec("beta", 2)
    f = TestFunction.for_distribution("gapk", spec, 1.0)
    return run_experiment(["psp-seq", "monte-carlo"], spec, f, [5, 10], reps=2, seed=11, N=500,
                          reference_count=10_000)


class TestExperiment:
    def test_row_count_and_order(self, small_run):
        assert len(small_run) == 2 * 2 * 2
        keys = [(r.method, r.n, r.rep) for r in small_run]
        assert keys == [(m, n, r) for m in ("psp-seq", "monte-carlo") for n in (5, 10) for r in (0, 1)]

    def test_values_finite(self, small_run):
        assert all(math.isfinite(r.error) and r.error >= 0 for r in small_run)
        assert all(math.isfinite(r.discrepancy) and r.discrepancy >= 0 for r in small_run)

    def test_deterministic(self, small_run):
        spec = DistributionSpec("beta", 2)
        f = TestFunction.for_distribution("gapk", spec, 1.0)
        again = run_experiment(["psp-seq", "monte-carlo"], spec, f, [5, 10], reps=2, seed=11, N=500,
                               reference_count=10_000)
        assert results_csv(again, timings=False) == results_csv(small_run, timings=False)

    def test_monte_carlo_full_data_error(self):
        # n = N returns the whole dataset, so the error is |sample mean - reference|
        spec = DistributionSpec("normal", 1)
        f = TestFunction("add", 1, 1.0)
        rows = run_experiment(["monte-carlo"], spec, f, [200], reps=1, seed=0, N=200, reference=1.0)
        raw = sample(spec, 200, seed=np.random.default_rng([0, _S_DATA, 0])).values
        assert rows[0].error == pytest.approx(abs(f(raw).mean() - 1.0), rel=1e-9)

    def test_csv_layout(self, small_run):
        text = results_csv(small_run, timings=False)
        lines = text.strip().split("\n")
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 1 + len(small_run)
        assert all(line.endswith(",") for line in lines[1:])
        assert not results_csv(small_run).strip().split("\n")[1].endswith(",")

    def test_summary(self, small_run):
        s = summarize(small_run)
        assert set(s) == {(m, n) for m in ("psp-seq", "monte-carlo") for n in (5, 10)}
        assert all(v["reps"] == 2 for v in s.values())

    def test_logs_active_set(self, caplog):
        spec = DistributionSpec("normal", 20)
        f = TestFunction.for_distribution("gapk", spec, 0.2)
        with caplog.at_level("INFO", logger="spinreduce.bench"):
            run_experiment(["monte-carlo"], spec, f, [3], reps=1, seed=0, N=50, reference=1.0)
        assert "4 active coordinates of 20" in caplog.text

    @pytest.mark.parametrize("kw", [dict(methods=["kmeans"]), dict(reps=0), dict(sizes=[600])])
    def test_invalid(self, kw):
        spec = DistributionSpec("beta", 2)
        args = dict(methods=["monte-carlo"], spec=spec, f=TestFunction("add", 2), sizes=[5], reps=1, seed=0,
                    N=500, reference=1.0)
        args.update(kw)
        with pytest.raises(ValueError):
            run_experiment(**args)
