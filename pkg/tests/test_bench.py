import json
import math

import numpy as np
import pytest

from deconwave import meyer
from deconwave.bench import (
    ExperimentSpec,
    RateQuery,
    calibrated_levels,
    fit_rate_slope,
    lower_bound_exponent,
    parse_results_csv,
    rate_sweep,
    results_csv,
    rho_star,
    run_experiment,
    table_blocks,
    theoretical_exponent,
    worker_count,
    write_outputs,
)
from deconwave.fourier import FourierSeries
from deconwave.model import ChannelSet


def test_exponent_hand_values():
    assert theoretical_exponent(RateQuery(2, 2, 2, 2, 0)) == (4 / 9, False)
    assert theoretical_exponent(RateQuery(2, 2, 2, 2, 1))[0] == 4 / 11
    assert lower_bound_exponent(RateQuery(2, 2, 2, 2, 0)) == 4 / 9
    assert theoretical_exponent(RateQuery(10, 1.5, 2, 2, 0)) == (20 / 25, True)


def test_log_factor_branch_boundary():
    # (1/p - 1/2)(2 delta + 2 d + 1) = (2/3 - 1/2) * 5 = 5/6 with p = 1.5
    assert theoretical_exponent(RateQuery(0.9, 1.5, 2, 2, 0))[1]
    with pytest.raises(ValueError, match="not covered"):
        theoretical_exponent(RateQuery(0.8, 1.5, 2, 2, 0))
    assert not theoretical_exponent(RateQuery(0.9, 2.0, 2, 2, 0))[1]
    assert not theoretical_exponent(RateQuery(0.9, math.inf, 1, 2, 0))[1]


@pytest.mark.parametrize("kw", [dict(s=0.4, p=2), dict(s=2, p=0.5), dict(s=2, p=2, r=0.5),
                                dict(s=2, p=2, delta=1.0), dict(s=2, p=2, d=-1)])
def test_rate_query_domain(kw):
    with pytest.raises(ValueError):
        RateQuery(**kw)


def test_exponent_monotonicity():
    grid = [0.6, 1, 2, 5, 20]
    for s in grid:
        e = [theoretical_exponent(RateQuery(s, 2, 2, delta, d))[0]
             for delta in (1.5, 2, 3) for d in (0, 1, 2)]
        assert all(0 < x < 1 for x in e)
        by_d = [theoretical_exponent(RateQuery(s, 2, 2, 2, d))[0] for d in range(4)]
        assert by_d == sorted(by_d, reverse=True)
    by_s = [theoretical_exponent(RateQuery(s, 2, 2, 2, 0))[0] for s in grid + [1e6]]
    assert by_s == sorted(by_s) and by_s[-1] > 0.9999


def test_rho_star():
    assert rho_star(ChannelSet.laplacian([1.0], 2)) == pytest.approx(1)
    assert rho_star(ChannelSet.laplacian([0.5] * 6, 2)) == pytest.approx(6 * 0.5**-4)


def test_spec_validation_and_unknown_keys():
    with pytest.raises(ValueError, match="unknown config keys: colour"):
        ExperimentSpec.from_dict({"colour": 1})
    with pytest.raises(ValueError, match="unknown kernel keys"):
        ExperimentSpec.from_dict({"kernel": {"width": 1}})
    for bad in ({"T": 1000}, {"T": 128}, {"replications": 0}, {"n": [0]}, {"d": [3]},
                {"kernel": {"recipe": "boxcar"}}, {"signals": ["Doppler"]}):
        with pytest.raises(ValueError):
            ExperimentSpec.from_dict(bad)
    spec = ExperimentSpec.from_dict({"methods": ["blockjs"], "n": 5})
    assert spec.methods == ("BlockJS",) and spec.n == (5,)
    assert ExperimentSpec.from_dict(spec.to_dict()) == spec


def test_kernel_recipes():
    rng = np.random.default_rng(0)
    lin = ExperimentSpec(kernel={"recipe": "linear", "scale": 1.0}).kernel.sigmas(4, rng)
    np.testing.assert_array_equal(lin, [1, 2, 3, 4])
    tau = ExperimentSpec(kernel={"recipe": "explicit", "values": [0.1, 0.2], "param": "tau"})
    np.testing.assert_allclose(tau.kernel.sigmas(2, rng), 2 * np.pi * np.array([0.1, 0.2]))
    with pytest.raises(ValueError, match="need 3"):
        tau.kernel.sigmas(3, rng)


def test_calibrated_levels():
    assert calibrated_levels(4096) == {"j1": 3, "j2": 10, "L": 8}
    assert calibrated_levels(256) == {"j1": 3, "j2": 6, "L": 5}


def test_worker_count(monkeypatch):
    monkeypatch.setenv("DECONWAVE_THREADS", "3")
    assert worker_count(8) == 3 and worker_count(None) == 3 and worker_count(1) == 1


SMALL = dict(signals=["Wave", "Parabolas"], methods=["BlockJS", "TermJS"], n=[2, 6],
             bsnr_db=[20, 35], T=256, replications=2, d=[0, 1])


def test_noiseless_experiment_is_exact():
    res = run_experiment(ExperimentSpec(signals=["Wave"], n=[3], bsnr_db=[40], T=256,
                                        replications=1, epsilon=0.0))
    assert all(c.psnr_mean == math.inf and c.status == "ok" for c in res.cells)
    assert "exact" in results_csv(res.cells)


def test_experiment_deterministic_and_worker_independent():
    spec = ExperimentSpec(**SMALL, seed=3)
    a = results_csv(run_experiment(spec, workers=1).cells)
    b = results_csv(run_experiment(spec, workers=4).cells)
    c = results_csv(run_experiment(ExperimentSpec(**SMALL, seed=4), workers=1).cells)
    assert a == b and a != c


def test_results_roundtrip_and_tables(tmp_path):
    res = run_experiment(ExperimentSpec(**SMALL))
    text = results_csv(res.cells)
    back = parse_results_csv(text)
    assert len(back) == len(res.cells)
    for x, y in zip(back, res.cells):
        assert (x.signal, x.d, x.bsnr_db, x.method, x.n, x.status) == \
               (y.signal, y.d, y.bsnr_db, y.method, y.n, y.status)
        np.testing.assert_array_equal([x.psnr_mean, x.psnr_std, x.mise],
                                      [y.psnr_mean, y.psnr_std, y.mise])
    assert results_csv(back) == text
    blocks = table_blocks(res)
    assert set(blocks) == {(0, 20.0), (0, 35.0), (1, 20.0), (1, 35.0)}
    assert blocks[0, 20.0].splitlines()[0] == "signal,method,n=2,n=6"
    paths = write_outputs(res, tmp_path)
    names = {p.name for p in paths}
    assert {"results.csv", "plot_psnr_vs_bsnr.csv", "table_d1_bsnr35.csv", "metadata.json"} <= names
    meta = json.loads((tmp_path / "metadata.json").read_text())
    assert meta["bsnr_reference"] == "mean blurred energy over channels"
    assert (tmp_path / "plot_psnr_vs_bsnr.csv").read_text().startswith("x,series,y\n")


def test_failed_cell_is_recorded(monkeypatch):
    from deconwave import bench

    class Flaky(bench.WaveletDeconvolver):
        def fit(self, X, y=None):
            if self.method == "TermH":
                raise FloatingPointError("overflow in test")
            return super().fit(X, y)

    monkeypatch.setattr(bench, "WaveletDeconvolver", Flaky)
    res = run_experiment(ExperimentSpec(signals=["Wave"], n=[2], bsnr_db=[30], T=256,
                                        replications=2, methods=["BlockJS", "TermH"]))
    status = {c.method: c.status for c in res.cells}
    assert status["BlockJS"] == "ok"
    assert status["TermH"] == "error: FloatingPointError: overflow in test"
    assert math.isnan(res.cell("Wave", 0, 30, "TermH", 2).psnr_mean)


def test_short_explicit_kernel_list_rejected():
    with pytest.raises(ValueError, match="need 3"):
        run_experiment(ExperimentSpec(signals=["Wave"], n=[3], T=256, replications=1,
                                      kernel={"recipe": "explicit", "values": [0.1]}))


def test_fit_rate_slope():
    rho = [1, 10, 100]
    slope, bad = fit_rate_slope(rho, [1, 0.1, 0.01])
    assert slope == pytest.approx(-1) and not bad
    assert fit_rate_slope(rho, [0, 0, 0]) == (None, True)
    with pytest.raises(ValueError, match="3"):
        fit_rate_slope([1, 2], [1, 2])


def test_rate_sweep_degenerate_and_short_grid():
    with pytest.raises(ValueError):
        rate_sweep("Wave", [2, 4], 0.1, 1e-3, T=256)
    res = rate_sweep("Wave", [2, 4, 8], 0.1, 0.0, T=256, replications=1)
    assert res.degenerate and res.slope is None


def _atom_target(T, j=5, k=9):
    nmax = T // 2 - 1
    ell = np.arange(-nmax, nmax + 1)
    return FourierSeries(20 * meyer.periodized_basis_fourier(j, k, ell, "mother"))


def test_rate_sweep_single_atom_slope_negative():
    res = rate_sweep(_atom_target(256), [2, 8, 32], 0.1, 2e-3, T=256, replications=6, s=2.0)
    assert res.slope < 0 and not res.degenerate
    assert res.theoretical_slope == pytest.approx(-4 / 9)


def test_rate_degrades_with_derivative_order():
    # MISE is larger for f' than for f at every grid point
    kw = dict(T=256, replications=6, seed=1)
    r0 = rate_sweep(_atom_target(256), [2, 8, 32], 0.1, 2e-3, d=0, **kw)
    r1 = rate_sweep(_atom_target(256), [2, 8, 32], 0.1, 2e-3, d=1, **kw)
    assert all(a < b for a, b in zip(r0.mise, r1.mise))
    assert r0.slope < 0 and r1.slope < 0
