"""Experiment runners. Each writes CSV files into ``cfg.out`` and returns their paths.

Trial ``t`` draws everything from ``RngStream(cfg.seed).child(t)``: child 0
builds the ensemble, child 1 the signal, child 2 the noise and child 3 the
power-iteration start. Gauss-Newton and Wirtinger flow therefore start from
the same point. Trials may run in a process pool; results are collected in
trial order, so the output does not depend on ``cfg.workers``.
"""
from __future__ import annotations

import csv
import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .. import __version__
from ..baselines import wf_solve
from ..core import RngStream, align_phase, complex_gaussian_vector
from ..diagnostics import hessian_bounds, loo_report
from ..sensing import (add_gaussian_noise, add_poisson_noise, calibrate_sigma, gaussian_ensemble, measure,
                       mse_db, sample_octanary_masks, snr_db)
from ..gauss_newton import solve
from .config import ExperimentConfig, config_hash
from .pgm import read_pgm, write_pgm

__all__ = ["run_convergence", "run_success_rate", "run_noise_sweep", "run_loo", "run_bounds", "run_image",
           "write_csv", "SNR_TOLERANCE_DB"]

SNR_TOLERANCE_DB = 0.5
SNR_MAX_REDRAWS = 200


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, cfg: ExperimentConfig, command, header, rows):
    """Comma-separated, LF line endings, one ``#`` comment line before the header row."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            f.write(f"# gnpr {__version__} command={command} config_sha256={config_hash(cfg)} seed={cfg.seed}\n")
            w = csv.writer(f, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def _pmap(fn, jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def _trial_rng(cfg, trial):
    return RngStream(cfg.seed).child(trial)


def _signal(n, rng, norm):
    x = complex_gaussian_vector(n, rng)
    return x * (norm / np.linalg.norm(x))


def _problem(cfg, trial, ensemble=None, n=None, ratio=None, masks=None, norm=None):
    """Ensemble, signal and clean measurements of one trial."""
    ensemble = ensemble or cfg.ensemble
    n = n or cfg.signal_length
    t = _trial_rng(cfg, trial)
    if ensemble == "gaussian":
        e = gaussian_ensemble(int(round((ratio or cfg.ratio) * n)), n, t.child(0))
    else:
        e = sample_octanary_masks(int(masks or cfg.masks), n, t.child(0))
    x = _signal(n, t.child(1), cfg.signal_norm if norm is None else norm)
    return e, x, measure(e, x), t


def _apply_noise(ms, noise, rng):
    if noise.kind == "gaussian":
        return add_gaussian_noise(ms, noise.sigma, rng)
    if noise.kind == "poisson":
        return add_poisson_noise(ms, rng)
    return ms


def _elapsed(cfg, v):
    return v if cfg.record_timing else 0.0


def _trace_rows(cfg, name, trace, extra=()):
    for r in trace.records:
        yield (name, r.iteration, r.relative_error, r.residual, _elapsed(cfg, r.elapsed)) + tuple(extra)


def _out(cfg, name):
    return Path(cfg.out) / name


# convergence ---------------------------------------------------------------

def run_convergence(cfg: ExperimentConfig):
    """Relative error and residual per iteration, one block per algorithm (trial 0)."""
    e, x, ms, t = _problem(cfg, 0)
    ms = _apply_noise(ms, cfg.noise, t.child(2))
    rows = []
    for name in cfg.algorithms:
        if name == "gn":
            _, trace = solve(e, ms, cfg.solver, x, t.child(3))
        else:
            _, trace = wf_solve(e, ms, cfg.wf, x, t.child(3))
        rows.extend(_trace_rows(cfg, name, trace))
    header = ["algorithm", "iteration", "relative_error", "residual", "elapsed_seconds"]
    return write_csv(_out(cfg, "convergence.csv"), cfg, "convergence", header, rows)


# success rate --------------------------------------------------------------

def _success_job(job):
    cfg, ensemble, param, trial = job
    if ensemble == "gaussian":
        e, x, ms, t = _problem(cfg, trial, "gaussian", cfg.n or 128, ratio=param)
    else:
        e, x, ms, t = _problem(cfg, trial, "cdp", cfg.cdp_n, masks=param)
    ms = _apply_noise(ms, cfg.noise, t.child(2))
    # stopping at the threshold does not change the outcome, only the runtime
    solver = dataclasses.replace(cfg.solver, stop_error=cfg.success_threshold)
    _, trace = solve(e, ms, solver, x, t.child(3))
    err = trace.records[-1].relative_error
    return bool(err is not None and err <= cfg.success_threshold)


def run_success_rate(cfg: ExperimentConfig):
    """Empirical success rate over ``m/n`` (Gaussian) and ``L`` (CDP)."""
    grid = []
    if "gaussian" in cfg.ensembles:
        grid += [("gaussian", float(r)) for r in cfg.ratios]
    if "cdp" in cfg.ensembles:
        grid += [("cdp", int(L)) for L in cfg.mask_counts]
    jobs = [(cfg, ens, p, t) for ens, p in grid for t in range(cfg.trials)]
    ok = _pmap(_success_job, jobs, cfg.workers)
    rows = []
    for i, (ens, p) in enumerate(grid):
        wins = sum(ok[i * cfg.trials:(i + 1) * cfg.trials])
        rows.append((ens, float(p), cfg.trials, wins, wins / cfg.trials))
    header = ["ensemble", "m_over_n", "trials", "successes", "rate"]
    return write_csv(_out(cfg, "success_rate.csv"), cfg, "success-rate", header, rows)


# noise sweep ---------------------------------------------------------------

def calibrated_gaussian_noise(ms, target_db, rng: RngStream, tol=SNR_TOLERANCE_DB):
    """Gaussian noise at ``sigma = calibrate_sigma(y, target)``, redrawn until the
    achieved SNR is within ``tol`` dB of the target. Returns ``(ms_noisy, attempts)``."""
    sigma = calibrate_sigma(ms.y_clean, target_db)
    for attempt in range(SNR_MAX_REDRAWS):
        noisy = add_gaussian_noise(ms, sigma, rng.child(attempt))
        if abs(snr_db(noisy) - target_db) <= tol:
            break
    return noisy, attempt + 1


def _noise_job(job):
    cfg, kind, level, trial = job
    if kind == "gaussian":
        e, x, ms, t = _problem(cfg, trial, "gaussian")
        ms, _ = calibrated_gaussian_noise(ms, level, t.child(2))
    else:
        e, x, ms, t = _problem(cfg, trial, "gaussian", norm=level)
        ms = add_poisson_noise(ms, t.child(2))
    solver = dataclasses.replace(cfg.solver, stop_error=None)
    z, _ = solve(e, ms, solver, None, t.child(3))
    return snr_db(ms), mse_db(z, x)


def run_noise_sweep(cfg: ExperimentConfig):
    """MSE (dB) against achieved SNR (dB) for calibrated Gaussian and for Poisson noise."""
    grid = [("gaussian", float(s)) for s in cfg.snr_grid] + [("poisson", float(v)) for v in cfg.poisson_norms]
    jobs = [(cfg, kind, level, t) for kind, level in grid for t in range(cfg.trials)]
    res = _pmap(_noise_job, jobs, cfg.workers)
    rows = []
    for i, (kind, level) in enumerate(grid):
        chunk = np.array(res[i * cfg.trials:(i + 1) * cfg.trials])
        target = level if kind == "gaussian" else None
        norm = cfg.signal_norm if kind == "gaussian" else level
        rows.append((kind, target, float(chunk[:, 0].mean()), float(chunk[:, 1].mean()), cfg.trials, norm))
    header = ["noise_kind", "target_snr_db", "achieved_snr_db", "mse_db", "trials", "signal_norm"]
    return write_csv(_out(cfg, "noise_sweep.csv"), cfg, "noise-sweep", header, rows)


# leave-one-out -------------------------------------------------------------

def _loo_job(job):
    cfg, trial = job
    e, x, ms, t = _problem(cfg, trial, "gaussian")
    return loo_report(e, ms, x, cfg.solver, cfg.k_max, t.child(3))


def run_loo(cfg: ExperimentConfig):
    """Per-iteration leave-one-out statistics; ``loo_raw.csv`` keeps every ``(k, l)`` value."""
    reports = _pmap(_loo_job, [(cfg, t) for t in range(cfg.trials)], cfg.workers)
    rows, raw = [], []
    for trial, rep in enumerate(reports):
        s_m = math.sqrt(rep.m / math.log(rep.m))
        s_l = math.sqrt(math.log(rep.m))
        for k in rep.iterations:
            rows.append((trial, int(k), rep.m, rep.n, rep.x_norm, rep.dist_to_x[k], rep.proximity_max[k], s_m,
                         rep.c2[k], rep.incoherence[k], s_l, rep.c1[k],
                         bool(rep.c1[k] <= cfg.c1_max and rep.c2[k] <= cfg.c2_max)))
            if cfg.loo_raw:
                raw.extend((trial, int(k), l + 1, rep.proximity[k, l], rep.loo_dist_to_x[k, l])
                           for l in range(rep.m))
    header = ["trial", "k", "m", "n", "x_norm", "dist_to_x", "max_proximity", "sqrt_m_over_log_m", "c2_empirical",
              "incoherence", "sqrt_log_m", "c1_empirical", "within_thresholds"]
    path = write_csv(_out(cfg, "loo.csv"), cfg, "loo", header, rows)
    if cfg.loo_raw:
        write_csv(_out(cfg, "loo_raw.csv"), cfg, "loo", ["trial", "k", "l", "proximity", "loo_dist_to_x"], raw)
    return path


# Gauss-Newton matrix bounds ------------------------------------------------

def _bounds_job(job):
    cfg, trial = job
    e, x, _, _ = _problem(cfg, trial, "gaussian")
    return e.m, hessian_bounds(e, x)


def run_bounds(cfg: ExperimentConfig):
    """``lambda_min(H(x))`` and ``lambda_max(A(x)^* A(x))`` per trial, also divided by ``||x||^2``."""
    res = _pmap(_bounds_job, [(cfg, t) for t in range(cfg.trials)], cfg.workers)
    rows = []
    for trial, (m, hb) in enumerate(res):
        rows.append((trial, cfg.signal_length, m, hb.z_norm2, hb.lambda_min_H, hb.lambda_max_AA,
                     hb.lambda_min_H / hb.z_norm2, hb.lambda_max_AA / hb.z_norm2, cfg.lower_bound,
                     cfg.upper_bound, hb.holds(cfg.lower_bound, cfg.upper_bound)))
    header = ["trial", "n", "m", "z_norm2", "lambda_min_H", "lambda_max_AA", "lambda_min_H_normalized",
              "lambda_max_AA_normalized", "lower", "upper", "holds"]
    return write_csv(_out(cfg, "bounds.csv"), cfg, "bounds", header, rows)


# image ---------------------------------------------------------------------

def run_image(path, cfg: ExperimentConfig):
    """CDP recovery of a grayscale PGM.

    Pixels become the real signal ``x = image / maxval``; the 1-D transform
    acts on the row-major vectorized image. Writes ``image_recovered.pgm``
    (``|z|`` after removing the global phase) and ``image_trace.csv``.
    """
    img, maxval = read_pgm(path)
    x = img.ravel().astype(np.complex128) / maxval
    n = x.size
    t = _trial_rng(cfg, 0)
    e = sample_octanary_masks(cfg.masks, n, t.child(0))
    ms = _apply_noise(measure(e, x), cfg.noise, t.child(2))
    z, trace = solve(e, ms, cfg.solver, x, t.child(3))

    phi, _ = align_phase(z, x)
    z_aligned = z * np.exp(-1j * phi)
    recovered = np.rint(np.clip(np.abs(z_aligned), 0.0, 1.0) * maxval).reshape(img.shape)

    final = trace.records[-1].relative_error
    if trace.status == "zero_iterate":
        status = "zero_measurements"
    elif final is not None and final <= cfg.success_threshold:
        status = "converged"
    else:
        status = "no_converge"
    out_pgm = _out(cfg, "image_recovered.pgm")
    out_pgm.parent.mkdir(parents=True, exist_ok=True)
    write_pgm(out_pgm, recovered, maxval)
    header = ["algorithm", "iteration", "relative_error", "residual", "elapsed_seconds", "status"]
    out_csv = write_csv(_out(cfg, "image_trace.csv"), cfg, "image", header,
                        _trace_rows(cfg, "gn", trace, (status,)))
    return out_pgm, out_csv
