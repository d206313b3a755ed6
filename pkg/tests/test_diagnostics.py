import csv
import io
import math

import numpy as np
import pytest

from bogo.diagnostics import (
    LOO_INTERVAL_FACTOR,
    loo_diagnose,
    report_to_csv,
    report_to_table,
)
from bogo.errors import TooFewPoints
from bogo.gp import TrainingSet, fit, predict
from bogo.kernels import KernelFamily, KernelSpec, MeanSpec, kernel_matrix
from bogo.mvn import cholesky

SE = KernelFamily.SQUARED_EXPONENTIAL


def known_spec(alpha=1.0, beta=(3.0,)):
    return KernelSpec(SE, alpha, beta)


class TestLooDiagnose:
    def test_interval_factor_is_two(self):
        assert LOO_INTERVAL_FACTOR == 2.0

    def test_constant_function_fully_covered(self):
        xs = np.linspace(0, 1, 6)[:, None]
        ys = np.full(6, 1.7)
        report = loo_diagnose(
            TrainingSet(xs, ys, 0.0), known_spec(), mean=MeanSpec(constant=1.7)
        )
        assert report.coverage == 1.0
        assert all(r.covered for r in report.records)

    def test_noise_free_halfwidth_and_variance_positive(self, rng):
        xs = rng.uniform(0, 1, size=(8, 1))
        ys = np.sin(5 * xs[:, 0])
        spec = known_spec(beta=(8.0,))
        report = loo_diagnose(TrainingSet(xs, ys, 0.0), spec, mean=MeanSpec())
        for rec in report.records:
            assert rec.halfwidth > 0.0  # held-out site never has zero variance
            assert rec.replicates == 1

    def test_replicated_noisy_site_uses_lambda_over_m(self, rng):
        lam = 0.09
        site = np.array([0.4])
        xs = np.vstack([[0.1], [0.8], site, site, site, site])
        ys = rng.normal(size=6)
        spec = known_spec(beta=(2.0,))
        report = loo_diagnose(TrainingSet(xs, ys, lam), spec, mean=MeanSpec())
        assert len(report.records) == 3
        rec = report.records[2]
        assert rec.replicates == 4
        assert rec.actual == pytest.approx(float(np.mean(ys[2:])), rel=1e-15)
        # reproduce the fold by hand
        rest = TrainingSet(xs[:2], ys[:2], lam)
        post = fit(rest, spec, MeanSpec())
        mu, var = predict(post, site)
        assert rec.predicted_mean == mu
        assert rec.halfwidth == pytest.approx(2.0 * math.sqrt(var + lam / 4), rel=1e-15)

    def test_fold_independence_bit_identical(self, rng):
        xs = rng.uniform(0, 1, size=(6, 2))
        ys = rng.normal(size=6)
        spec = known_spec(beta=(1.0, 2.0))
        report = loo_diagnose(TrainingSet(xs, ys, 0.0), spec, mean=MeanSpec())
        # recompute fold 2 in isolation
        rest = np.delete(np.arange(6), 2)
        post = fit(TrainingSet(xs[rest], ys[rest], 0.0), spec, MeanSpec())
        mu, var = predict(post, xs[2])
        assert report.records[2].predicted_mean == mu
        assert report.records[2].halfwidth == 2.0 * math.sqrt(var)

    def test_simulation_coverage_single_run(self, rng):
        # data drawn from the model's own prior with known hyperparameters;
        # spacing keeps held-out spreads far above rounding noise
        spec = known_spec(alpha=2.0, beta=(300.0,))
        xs = ((np.arange(30) + 0.35 * rng.uniform(size=30)) / 30.0)[:, None]
        factor = cholesky(kernel_matrix(spec, xs))
        assert factor.jitter == 0.0
        ys = 0.5 + factor.lower @ rng.standard_normal(30)
        report = loo_diagnose(
            TrainingSet(xs, ys, 0.0), spec, refit_per_fold=False, mean=MeanSpec(constant=0.5)
        )
        assert 0.80 <= report.coverage <= 1.0

    def test_refit_per_fold_with_family(self, rng):
        xs = rng.uniform(0, 1, size=(8, 1))
        ys = np.sin(4 * xs[:, 0]) + 0.1 * rng.standard_normal(8)
        report = loo_diagnose(
            TrainingSet(xs, ys, 0.05), SE, refit_per_fold=True, seeds=4, rng_seed=3
        )
        assert report.refit_per_fold is True
        assert len(report.records) == 8

    def test_too_few_sites(self):
        with pytest.raises(TooFewPoints):
            loo_diagnose(TrainingSet([[0.0], [1.0]], [0.0, 1.0], 0.0), known_spec())


class TestReportTable:
    def build(self, rng):
        xs = rng.uniform(0, 1, size=(5, 1))
        ys = rng.normal(size=5)
        return loo_diagnose(TrainingSet(xs, ys, 0.0), known_spec(beta=(6.0,)), mean=MeanSpec())

    def test_single_record_single_row(self, rng):
        report = self.build(rng)
        rows = report_to_table(report)
        assert len(rows) == len(report.records)
        assert rows[0] == (
            report.records[0].actual,
            report.records[0].predicted_mean,
            report.records[0].halfwidth,
            report.records[0].covered,
        )

    def test_coverage_recomputed_from_rows(self, rng):
        report = self.build(rng)
        rows = report_to_table(report)
        assert sum(r[3] for r in rows) / len(rows) == report.coverage

    def test_csv_round_trip_precision(self, rng):
        report = self.build(rng)
        text = report_to_csv(report)
        assert text.splitlines()[0] == "actual,predicted,halfwidth,covered"
        parsed = list(csv.reader(io.StringIO(text)))
        for rec, row in zip(report.records, parsed[1:]):
            assert float(row[0]) == rec.actual  # repr round-trips exactly
            assert float(row[1]) == rec.predicted_mean
            assert float(row[2]) == rec.halfwidth
            assert (row[3] == "true") == rec.covered
