"""Experiment orchestration shared by the CLI subcommands.

Builds models from config documents, resolves 'auto' settings (learning
rate, additive certificate constant, proposal scale), and runs the
certificate / sampling / scaling pipelines with per-task RNG streams so
results are reproducible and independent of worker count.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bernstein import BernsteinConstants, squared_loss_constants
from .config import ExperimentConfig
from .errors import ConstraintError, DiagnosticError
from .gibbs import (BoundCertificate, GibbsConfig, completion_bound_constant,
                    pac_bayes_certificate, posterior_mean_excess_risk,
                    sample_gibbs_posterior, write_chain_csv)
from .models import (CompletionModel, MatrixCompletionTruth, ReluNetwork,
                     ReluRegressionModel, _input_probe, relu_param_dim)
from .partition import (fit_rlct_from_partition, quadratic_schedule,
                        thermo_integration_neg_log_z, write_partition_csv)
from .rlct import (completion_rlct, completion_rlct_closed_form, regular_model_rlct,
                   relu_rlct_upper_bound)
from .svgplot import loglog_plot

MIN_FIT_N = math.exp(2)  # scaling fits drop smaller n: the expansion is asymptotic


def derive_seed(master: int, *path: int) -> int:
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=tuple(path))
    return int(ss.generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# Model construction
# ---------------------------------------------------------------------------


def build_completion_truth(cfg: ExperimentConfig) -> MatrixCompletionTruth:
    d1, d2 = cfg["model.d1"], cfg["model.d2"]
    r, h = cfg["model.rank"], cfg["model.width"]
    sigma, b1 = cfg["model.noise_sigma"], cfg["model.entry_bound"]
    if cfg["model.truth"] == "canonical":
        return MatrixCompletionTruth.canonical(d1, d2, r, h, sigma1=sigma, b1=b1)
    if cfg["model.truth"] == "random":
        return MatrixCompletionTruth.random(d1, d2, r, h, sigma1=sigma, b1=b1,
                                            seed=cfg["model.truth_seed"])
    raise ConstraintError("model.truth must be canonical or random")


def _check_relu_embedding(true_widths, widths):
    n_star, n = len(true_widths), len(widths)
    if true_widths[0] != widths[0] or true_widths[-1] != widths[-1]:
        raise ConstraintError("true network must match candidate input/output widths")
    for k in range(1, n_star - 1):
        if true_widths[k] > widths[k]:
            raise ConstraintError("true hidden widths must fit inside the candidate")
    for k in range(n_star - 1, n - 1):
        if true_widths[n_star - 2] > widths[k]:
            raise ConstraintError("the candidate tail is too narrow to pass the "
                                  "true last hidden layer through")


def build_true_relu(cfg: ExperimentConfig) -> ReluNetwork:
    """Random true network with weights comfortably inside the prior box.

    Biases are drawn positive so hidden units stay active over a good part
    of the input box; otherwise small random ReLU networks collapse to
    near-constant functions and there is no signal to learn.
    """
    widths = cfg["model.true_widths"]
    _check_relu_embedding(widths, cfg["model.widths"])
    box = cfg["gibbs.box"]
    rng = np.random.Generator(np.random.Philox(
        seed=np.random.SeedSequence(entropy=cfg["model.true_seed"], spawn_key=(10,))))
    weights, biases = [], []
    for k in range(1, len(widths)):
        weights.append(rng.uniform(-0.7 * box, 0.7 * box, size=(widths[k], widths[k - 1])))
        biases.append(rng.uniform(0.05 * box, 0.35 * box, size=widths[k]))
    in_box = cfg["model.input_box"]
    in_box = 1.0 if in_box == "auto" else float(in_box)
    act = _input_probe(widths[0], -in_box, in_box)
    for w, b in zip(weights, biases):
        act = np.maximum(act @ w.T + b, 0.0)
    b2 = 1.05 * float(np.max(np.linalg.norm(act, axis=1))) + 1e-6
    return ReluNetwork(tuple(widths), tuple(weights), tuple(biases), b2,
                       input_low=-in_box, input_high=in_box)


def build_model(cfg: ExperimentConfig):
    if cfg.family == "completion":
        return CompletionModel(build_completion_truth(cfg))
    true_net = build_true_relu(cfg)
    in_box = cfg["model.input_box"]
    in_box = 1.0 if in_box == "auto" else float(in_box)
    return ReluRegressionModel(cfg["model.widths"], true_net,
                               sigma2=cfg["model.noise_sigma"],
                               input_low=-in_box, input_high=in_box)


def prior_box(cfg: ExperimentConfig, model) -> tuple:
    half = cfg["gibbs.box"]
    return tuple((-half, half) for _ in range(model.param_dim))


def resolve_constants(cfg: ExperimentConfig, model) -> BernsteinConstants:
    """Squared-loss constants with the prediction bound implied by the box."""
    if cfg.family == "completion":
        t = model.truth
        b0 = t.h * cfg["gibbs.box"] ** 2  # |(UV)_ij| <= H c^2 on the box
        return squared_loss_constants(b0, t.sigma1)
    return squared_loss_constants(model.true_net.b2, model.sigma2)


def resolve_omega(cfg: ExperimentConfig, constants: BernsteinConstants) -> float:
    omega = cfg["gibbs.omega"]
    if omega == "auto":
        return constants.omega_bar / 2.0
    return float(omega)


def resolve_rlct(cfg: ExperimentConfig, model):
    source = cfg["certify.rlct_source"]
    if cfg.family == "completion":
        t = model.truth
        if source == "h-min":
            pair = completion_rlct(t.d1, t.d2, t.h, t.r)
        elif source == "closed-form":
            pair = completion_rlct_closed_form(t.d1, t.d2, t.h, t.r)
        elif source == "bic":
            pair = None
        else:
            raise ConstraintError("relu-bound is not a completion RLCT source")
        if pair is None:
            return regular_model_rlct(model.param_dim), 1, "bic"
        return pair.lam, pair.m, source
    if source == "relu-bound":
        return relu_rlct_upper_bound(cfg["model.true_widths"]), 1, source
    if source == "bic":
        return regular_model_rlct(relu_param_dim(cfg["model.widths"])), 1, source
    raise ConstraintError(f"{source} is not a relu RLCT source")


def resolve_c0(cfg: ExperimentConfig, model, omega: float,
               constants: BernsteinConstants) -> float:
    c0 = cfg["certify.c0"]
    if c0 != "auto":
        return float(c0)
    if cfg.family != "completion":
        raise ConstraintError("certify.c0 = auto is only derivable for completion; "
                              "pass an explicit constant for relu models")
    t = model.truth
    c1 = completion_bound_constant(t.d1, t.d2, t.h, t.r, omega, constants.l_var,
                                   t.p0, t.q0)
    log_volume = model.param_dim * math.log(2.0 * cfg["gibbs.box"])
    return c1 + log_volume  # C1 - log(prior floor), uniform prior


def make_certificate(cfg: ExperimentConfig, model, n: int) -> BoundCertificate:
    constants = resolve_constants(cfg, model)
    omega = resolve_omega(cfg, constants)
    if omega >= constants.omega_bar:
        raise ConstraintError(f"omega={omega:.6g} must stay below the cap "
                              f"{constants.omega_bar:.6g}")
    lam, m, source = resolve_rlct(cfg, model)
    c0 = resolve_c0(cfg, model, omega, constants)
    return pac_bayes_certificate(lam, m, constants.l_var, omega, n,
                                 cfg["certify.delta"], c0, rlct_source=source)


def make_gibbs_config(cfg: ExperimentConfig, model, n: int, seed: int,
                      omega: float | None = None) -> GibbsConfig:
    constants = resolve_constants(cfg, model)
    explicit = omega is not None or cfg["gibbs.omega"] != "auto"
    if omega is None:
        omega = resolve_omega(cfg, constants)
    scale = cfg["gibbs.proposal_scale"]
    # the cap is only attached when omega was derived from it; an explicit
    # omega is the user's choice of sampling temperature
    return GibbsConfig(
        omega=omega, n=n, prior_box=prior_box(cfg, model),
        chain_length=cfg["gibbs.chain_length"], burn_in=cfg["gibbs.burn_in"],
        thinning=cfg["gibbs.thinning"], chains=cfg["gibbs.chains"],
        proposal_scale=None if scale == "auto" else float(scale),
        seed=seed, constants=None if explicit or omega == 0 else constants)


# ---------------------------------------------------------------------------
# Pipelines
# ---------------------------------------------------------------------------


def _ensure_out(cfg: ExperimentConfig, out_dir):
    path = out_dir if out_dir is not None else cfg["output.dir"]
    os.makedirs(path, exist_ok=True)
    with open(os.path.join(path, "resolved.cfg"), "w") as fh:
        fh.write(cfg.render())
    return path


def run_certify(cfg: ExperimentConfig, out_dir=None) -> tuple:
    model = build_model(cfg)
    cert = make_certificate(cfg, model, cfg["certify.n"])
    path = _ensure_out(cfg, out_dir)
    cert_path = os.path.join(path, "certificate.json")
    with open(cert_path, "w") as fh:
        fh.write(cert.to_json() + "\n")
    return cert, cert_path


def run_gibbs(cfg: ExperimentConfig, out_dir=None) -> dict:
    model = build_model(cfg)
    n = cfg["certify.n"]
    master = cfg["gibbs.seed"]
    data = model.sample_dataset(n, derive_seed(master, 101, 0, 0))
    gc = make_gibbs_config(cfg, model, n, derive_seed(master, 102, 0, 0))
    samples, diag = sample_gibbs_posterior(model, data, gc)
    risk, risk_se = posterior_mean_excess_risk(samples, model, diag.chain_splits)
    path = _ensure_out(cfg, out_dir)
    chain_path = os.path.join(path, "chain.csv")
    write_chain_csv(samples, diag, chain_path)
    summary = {"n": n, "posterior_risk": risk, "posterior_risk_se": risk_se,
               "acceptance_rates": list(diag.acceptance_rates), "ess": diag.ess,
               "kept_draws": int(len(samples))}
    with open(os.path.join(path, "gibbs_summary.json"), "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return {"chain_csv": chain_path, "summary": summary}


def _thermo_for(cfg: ExperimentConfig, model, n: int, stream_path: tuple):
    target = model.population_target()
    box = prior_box(cfg, model)
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    return thermo_integration_neg_log_z(
        target, lo, hi, beta=cfg["thermo.beta"], n=float(n),
        schedule=quadratic_schedule(cfg["thermo.rungs"]),
        chain_length=cfg["thermo.chain_length"], burn_in=cfg["thermo.burn_in"],
        seed=cfg["gibbs.seed"], stream_key=stream_path)


@dataclass
class _Row:
    n: int
    replicate: int
    post_risk: float
    post_risk_se: float
    bound: float | None
    neg_log_z: float | None
    neg_log_z_se: float | None


def _scaling_task(cfg, model, n_idx, n, rep):
    master = cfg["gibbs.seed"]
    data = model.sample_dataset(n, derive_seed(master, 101, n_idx, rep))
    gc = make_gibbs_config(cfg, model, n, derive_seed(master, 102, n_idx, rep))
    samples, diag = sample_gibbs_posterior(model, data, gc)
    risk, risk_se = posterior_mean_excess_risk(samples, model, diag.chain_splits)
    try:
        bound = make_certificate(cfg, model, n).bound_value
    except ConstraintError:
        # e.g. an explicit sampling omega above the certificate cap: the run
        # is still informative, but no valid bound exists at that rate
        bound = None
    est = None
    if cfg["thermo.enabled"]:
        est = _thermo_for(cfg, model, n, (103, n_idx, rep))
    return _Row(n, rep, risk, risk_se, bound,
                est.neg_log_z if est else None,
                est.std_err if est else None), est


def run_scaling_experiment(cfg: ExperimentConfig, threads: int = 1,
                           out_dir=None) -> dict:
    """Grid study: posterior risk and certificate versus sample size.

    Writes ``scaling.csv`` (one row per (n, replicate)), an optional
    ``rlct_fit.json`` from the thermodynamic estimates, a log-log SVG of
    risk and bound, and ``failures.txt`` listing replicates whose chain
    diagnostics failed (they are excluded from the CSV, never silently).
    """
    grid = cfg["grid.n"]
    if len(grid) < 4:
        raise ConstraintError("grid.n needs at least 4 sample sizes")
    model = build_model(cfg)
    reps = cfg["grid.replicates"]
    tasks = [(i, n, rep) for i, n in enumerate(grid) for rep in range(reps)]

    results: dict = {}
    failures: dict = {}

    def run_one(task):
        i, n, rep = task
        try:
            results[(i, rep)] = _scaling_task(cfg, model, i, n, rep)
        except DiagnosticError as exc:
            failures[(i, rep)] = f"n={n} replicate={rep}: {exc}"

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_one, tasks))
    else:
        for task in tasks:
            run_one(task)

    path = _ensure_out(cfg, out_dir)
    out_files = {"dir": path}
    rows = [results[key][0] for key in sorted(results)]
    estimates = [results[key][1] for key in sorted(results) if results[key][1]]

    if "csv" in cfg["output.formats"]:
        csv_path = os.path.join(path, "scaling.csv")
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "replicate", "post_risk", "post_risk_se",
                             "bound", "neg_log_z", "neg_log_z_se"])
            for r in rows:
                writer.writerow([r.n, r.replicate, repr(r.post_risk),
                                 repr(r.post_risk_se),
                                 "" if r.bound is None else repr(r.bound),
                                 "" if r.neg_log_z is None else repr(r.neg_log_z),
                                 "" if r.neg_log_z_se is None else repr(r.neg_log_z_se)])
        out_files["csv"] = csv_path
        if estimates:
            write_partition_csv(estimates, os.path.join(path, "partition.csv"))

    if estimates:
        usable = [e for e in estimates if e.n >= MIN_FIT_N]
        if len({e.n for e in usable}) >= 3:
            fit = fit_rlct_from_partition(usable, include_loglog=cfg["thermo.fit_loglog"])
            out_files["lambda_hat"] = fit.lambda_hat
            if "json" in cfg["output.formats"]:
                fit_path = os.path.join(path, "rlct_fit.json")
                with open(fit_path, "w") as fh:
                    fh.write(fit.to_json() + "\n")
                out_files["fit"] = fit_path

    if "svg" in cfg["output.formats"] and rows:
        by_n: dict = {}
        for r in rows:
            by_n.setdefault(r.n, []).append(r)
        ns = sorted(by_n)
        risk_series = {"label": "posterior risk", "x": ns,
                       "y": [float(np.mean([r.post_risk for r in by_n[n]])) for n in ns]}
        series = [risk_series]
        if all(by_n[n][0].bound is not None for n in ns):
            series.append({"label": "certificate", "x": ns,
                           "y": [by_n[n][0].bound for n in ns]})
        svg_path = os.path.join(path, "risk_bound.svg")
        with open(svg_path, "w") as fh:
            fh.write(loglog_plot(series, "n", "excess risk",
                                 "posterior risk and certificate"))
        out_files["svg"] = svg_path

    failure_path = os.path.join(path, "failures.txt")
    with open(failure_path, "w") as fh:
        for key in sorted(failures):
            fh.write(failures[key] + "\n")
    out_files["failures"] = failure_path
    out_files["n_failures"] = len(failures)
    out_files["rows"] = rows
    return out_files


def run_thermo_grid(cfg: ExperimentConfig, out_dir=None) -> dict:
    """Partition estimates over grid.n for the configured model."""
    model = build_model(cfg)
    estimates = []
    for i, n in enumerate(sorted(cfg["grid.n"])):
        estimates.append(_thermo_for(cfg, model, n, (103, i, 0)))
    path = _ensure_out(cfg, out_dir)
    csv_path = os.path.join(path, "partition.csv")
    write_partition_csv(estimates, csv_path)
    out = {"csv": csv_path, "estimates": estimates, "dir": path}
    usable = [e for e in estimates if e.n >= MIN_FIT_N]
    if len(usable) >= 3:
        fit = fit_rlct_from_partition(usable, include_loglog=cfg["thermo.fit_loglog"])
        fit_path = os.path.join(path, "rlct_fit.json")
        with open(fit_path, "w") as fh:
            fh.write(fit.to_json() + "\n")
        out["fit"] = fit
        out["fit_path"] = fit_path
    return out
