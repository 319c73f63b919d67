"""Command-line interface: ``deconwave {simulate,estimate,bench,rates,selftest}``.

Exit codes: 0 success, 2 usage or configuration error, 3 numeric failure
(failed invariant, degenerate fit, coverage or invertibility error).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

import numpy as np

from . import io as dio
from .bench import (
    EXACT_PSNR_DB,
    ExperimentSpec,
    RateQuery,
    calibrated_levels,
    lower_bound_exponent,
    rate_sweep,
    run_experiment,
    theoretical_exponent,
    write_outputs,
)
from .deconvolver import WaveletDeconvolver
from .estimators import LAMBDA_STAR, METHODS, InvertibilityError, max_level
from .fourier import CoverageError
from .model import ChannelSet, blurred_signal, bsnr_to_epsilon, random_sigmas, simulate
from .signals import TEST_FUNCTIONS, psnr, test_function

EXIT_USAGE = 2
EXIT_NUMERIC = 3


class NumericFailure(RuntimeError):
    pass


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _psnr_text(value: float) -> str:
    return "exact" if value >= EXACT_PSNR_DB else f"{value:.4f}"


# ------------------------------------------------------------------ commands


def cmd_simulate(args):
    T = args.T
    band = T // 2 - 1
    rng = np.random.default_rng([args.seed, args.n, 0x6B])
    if args.sigmas:
        sigmas = _floats(args.sigmas)
        if len(sigmas) != args.n:
            raise ValueError(f"--sigmas has {len(sigmas)} values but --n is {args.n}")
    else:
        sigmas = random_sigmas(args.n, rng, args.sigma_max)
    channels = ChannelSet.laplacian(sigmas, band)
    f = test_function(args.signal)
    f_hat = f.fourier(band)
    if args.epsilon is not None:
        eps = args.epsilon
    else:
        blurred = np.concatenate([blurred_signal(f_hat, k, T) for k in channels.kernels])
        eps = bsnr_to_epsilon(blurred, args.bsnr) / math.sqrt(T)
    obs = simulate(f_hat, channels, eps, seed=args.seed)
    out = dio.ensure_dir(args.out)
    dio.write_observations(out / "observations.csv", obs, signal=f.name, T=T)
    dio.write_kernels(out / "kernels.csv", channels)
    print(f"wrote {out / 'observations.csv'} and {out / 'kernels.csv'} (epsilon={eps!r})")
    return 0


def cmd_estimate(args):
    obs = dio.read_observations(args.obs)
    channels = dio.read_kernels(args.kernels)
    T = args.T or int(obs.meta.get("T", 4096))
    levels = calibrated_levels(T) if args.levels == "calibrated" else {}
    levels.update({k: getattr(args, k) for k in ("j1", "j2", "L") if getattr(args, k) is not None})
    est = WaveletDeconvolver(channels, method=args.method, d=args.d, lam=args.lam,
                             threshold_mode=args.threshold_mode, grid_size=T, **levels).fit(obs)
    x = est.predict()
    dio.write_signal(args.out, x)
    if args.coeffs:
        dio.write_coefficients(args.coeffs, est.coeffs_, est.layouts_, est.kept_mask())
    truth_name = args.truth or obs.meta.get("signal")
    print("method,d,psnr_db")
    if truth_name:
        value = psnr(x, test_function(truth_name).sample(T, args.d))
        print(f"{est.method},{args.d},{_psnr_text(value)}")
    else:
        print(f"{est.method},{args.d},")
    return 0


def cmd_bench(args):
    spec = ExperimentSpec.from_json(args.config)
    spec = ExperimentSpec.from_dict({**spec.to_dict(), "seed": args.seed})
    result = run_experiment(spec, workers=args.workers)
    paths = write_outputs(result, args.out)
    failed = [c for c in result.cells if c.status != "ok"]
    for p in paths:
        print(p)
    if failed:
        print(f"{len(failed)} cell(s) failed; see results.csv", file=sys.stderr)
    return 0


def cmd_rates(args):
    q = RateQuery(args.s, args.p, args.r, args.delta, args.d)
    exponent, log_factor = theoretical_exponent(q)
    print(f"exponent {exponent!r}")
    print(f"log_factor {str(log_factor).lower()}")
    print(f"lower_bound_exponent {lower_bound_exponent(q)!r}")
    if args.sweep:
        res = rate_sweep(args.signal, _ints(args.n), args.sigma, args.epsilon, d=args.d,
                         replications=args.replications, T=args.T, seed=args.seed,
                         s=args.s, p=args.p, r=args.r, workers=args.workers)
        print("rho_n,mise")
        for r_, m in zip(res.rho, res.mise):
            print(f"{r_!r},{m!r}")
        if res.degenerate:
            raise NumericFailure("degenerate sweep: MISE vanishes, slope not fitted")
        print(f"slope {res.slope!r}")
        print(f"theoretical_slope {res.theoretical_slope!r}")
    return 0


def selftest_checks():
    """Yield ``(name, passed)`` for a quick invariant suite."""
    from . import meyer
    from .estimators import blockhard_shrink, blockjs_shrink, block_layout, empirical_coefficients

    rng = np.random.default_rng(0)
    j1, j2 = 3, 6
    vec = rng.standard_normal(2**(j2 + 1))
    c = meyer.WaveletCoeffs.from_vector(vec, j1, j2)
    back = meyer.analyze(meyer.synthesize_fourier(c), j1, j2)
    yield "analyze/synthesize round trip", bool(np.allclose(back.to_vector(), vec, atol=1e-10))

    w = np.linspace(2 * np.pi / 3, 4 * np.pi / 3, 1000)
    seam = np.abs(meyer.meyer_phi_hat(w)) ** 2 + np.abs(meyer.meyer_psi_hat(w)) ** 2
    yield "seam partition identity", bool(np.allclose(seam, 1.0, atol=1e-12))

    f = test_function("Wave")
    ch = ChannelSet.laplacian([0.05, 0.1], 2 ** (j2 + 2))
    f_hat = f.fourier(ch.nmax)
    obs = simulate(f_hat, ch, 0.0)
    ok = True
    for d in (0, 1, 2):
        emp = empirical_coefficients(obs, ch, j1, j2, d)
        ref = meyer.analyze(f_hat, j1, j2, d)
        ok &= np.allclose(emp.to_vector(), ref.to_vector(), rtol=1e-9,
                          atol=1e-9 * np.abs(ref.to_vector()).max())
    yield "noiseless coefficients equal oracle", bool(ok)

    lay = [block_layout(5, 4)]
    beta = [rng.standard_normal(32)]
    js, bh = blockjs_shrink(beta, lay, [1.0])[0], blockhard_shrink(beta, lay, [1.0])[0]
    yield "shrinkage nonexpansive", bool(np.all(np.abs(js) <= np.abs(beta[0]) + 1e-15))
    yield "BlockJS/BlockH kill sets agree", bool(np.array_equal(js == 0, bh == 0))
    yield "lambda = 0 identity", bool(np.array_equal(blockjs_shrink(beta, lay, [0.0])[0], beta[0]))

    est = WaveletDeconvolver(ch, d=0, j1=3, j2=max_level(256), L=4, grid_size=256).fit(
        simulate(f.fourier(ch.nmax), ch, 0.0))
    yield "noiseless estimate exact", psnr(est.predict(), f.sample(256)) >= EXACT_PSNR_DB

    q = RateQuery(2, 2, 2, 2, 0)
    yield "exponent 4/9", theoretical_exponent(q) == (4 / 9, False)


def cmd_selftest(args):
    failures = 0
    for name, ok in selftest_checks():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
        failures += not ok
    if failures:
        raise NumericFailure(f"{failures} self-test check(s) failed")
    return 0


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="deconwave", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="draw multichannel Fourier observations")
    s.add_argument("--signal", default="Wave", choices=list(TEST_FUNCTIONS))
    s.add_argument("--n", type=int, default=10)
    s.add_argument("--bsnr", type=float, default=40.0)
    s.add_argument("--epsilon", type=float, help="Fourier noise level (overrides --bsnr)")
    s.add_argument("--sigma-max", type=float, default=0.1)
    s.add_argument("--sigmas", help="comma-separated sigma_v (overrides the random draw)")
    s.add_argument("--T", type=int, default=4096)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("estimate", help="estimate f^(d) from observation and kernel CSVs")
    e.add_argument("--obs", required=True)
    e.add_argument("--kernels", required=True)
    e.add_argument("--method", default="BlockJS", choices=list(METHODS))
    e.add_argument("--d", type=int, default=0)
    e.add_argument("--lam", type=float, default=LAMBDA_STAR)
    e.add_argument("--threshold-mode", default="spectral", choices=["spectral", "nominal"])
    e.add_argument("--levels", default="calibrated", choices=["calibrated", "formula"],
                   help="grid-driven levels, or the rho_n formulas")
    e.add_argument("--j1", type=int)
    e.add_argument("--j2", type=int)
    e.add_argument("--L", type=int)
    e.add_argument("--T", type=int)
    e.add_argument("--truth", help="test function for the PSNR row (default: from metadata)")
    e.add_argument("--coeffs", help="also write shrunk coefficients to this CSV")
    e.add_argument("--out", required=True, help="estimate CSV (t, value)")
    e.set_defaults(func=cmd_estimate)

    b = sub.add_parser("bench", help="run a benchmark config and write CSV tables")
    b.add_argument("--config", required=True)
    b.add_argument("--seed", type=int, required=True)
    b.add_argument("--out", default="bench_out")
    b.add_argument("--workers", type=int, help="worker threads (capped by DECONWAVE_THREADS)")
    b.set_defaults(func=cmd_bench)

    r = sub.add_parser("rates", help="rate exponents and empirical sweeps")
    r.add_argument("--s", type=float, required=True)
    r.add_argument("--p", type=float, default=2.0)
    r.add_argument("--r", type=float, default=2.0)
    r.add_argument("--delta", type=float, default=2.0)
    r.add_argument("--d", type=int, default=0)
    r.add_argument("--sweep", action="store_true", help="also run an empirical MISE sweep")
    r.add_argument("--signal", default="Wave", choices=list(TEST_FUNCTIONS))
    r.add_argument("--n", default="8,32,128", help="channel counts for the sweep")
    r.add_argument("--sigma", type=float, default=0.05)
    r.add_argument("--epsilon", type=float, default=1e-4)
    r.add_argument("--replications", type=int, default=20)
    r.add_argument("--T", type=int, default=1024)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--workers", type=int)
    r.set_defaults(func=cmd_rates)

    t = sub.add_parser("selftest", help="run the invariant suite")
    t.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (NumericFailure, CoverageError, InvertibilityError, ArithmeticError,
            np.linalg.LinAlgError) as exc:
        print(f"deconwave: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"deconwave: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
