"""Commands of the command-line interface; each takes a validated `Config`."""

import logging
from pathlib import Path
from typing import Any, Dict, Optional

import pandas as pd

from diffusion_el.cli.io import ingest_series, write_path
from diffusion_el.cli.report import TestReport, dump_json, write_outputs
from diffusion_el.models.estimation import FitResult, fit_mle
from diffusion_el.models.path import ObservedPath
from diffusion_el.models.zoo import MODEL_PRESETS
from diffusion_el.smoothing.estimators import GridSmoother, parametric_transition_matrix
from diffusion_el.statistic.asymptotic import asymptotic_ref
from diffusion_el.statistic.bandwidth import BandwidthScheme, cv_select, scott_rule
from diffusion_el.statistic.bootstrap import bootstrap_test
from diffusion_el.statistic.el_statistic import compute_statistics
from diffusion_el.study.designs import FULL_BOOT, STUDY_PRESETS, get_design
from diffusion_el.study.harness import StudyResult, run_power_study, run_size_study
from diffusion_el.utils.config_loader import Config
from diffusion_el.utils.errors import ConfigError, DiffusionElError
from diffusion_el.utils.helper_functions import derive_rng, file_hash

logger = logging.getLogger(__name__)

ASYMPTOTIC_STREAM = 2**32 - 1


def _output_dir(config: Config) -> Path:
    directory = Path(config.output) if config.output else Path.cwd()
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def _write_json(content: Dict[str, Any], file_path: Path) -> Path:
    file_path.write_text(dump_json(content))
    return file_path


def load_data(config: Config) -> ObservedPath:
    """Read the configured data file for the configured model."""
    if not config.data:
        raise ConfigError("The data key is required")
    return ingest_series(config.data, config.delta, config.get_model())


def _fit(config: Config, path: ObservedPath) -> FitResult:
    model = config.get_model()
    fit = fit_mle(model, path, start=config.get_theta(model))
    logger.info(f"Fitted {model.family.value}: {fit.theta_hat}, converged={fit.converged}")
    return fit


def cmd_test(config: Config) -> TestReport:
    """Fit the model, compute N(h_k) and L_n, calibrate by the bootstrap and write the reports.

    A fit that does not converge is reported with a warning and `converged=False`.
    """
    model = config.get_model()
    path = load_data(config)
    fit = _fit(config, path)
    warnings = []
    if not fit.converged:
        warnings.append(f"the maximum likelihood fit did not converge: {fit.message}")
    region = config.get_region(path)
    rule = config.bandwidth_rule()
    bandwidths = rule.select(path)
    logger.info(f"Bandwidths: {bandwidths.values.tolist()}")
    stats = compute_statistics(
        path, model, fit.theta_hat, region, bandwidths, config.variant, config.mode, config.grid
    )
    if stats.hull_errors:
        warnings.append(f"{stats.hull_errors} local EL ratio(s) capped outside the convex hull")
    boot = bootstrap_test(
        path,
        model,
        fit.theta_hat,
        region,
        bandwidths,
        config.variant,
        B=config.n_boot or FULL_BOOT,
        alpha=config.alpha,
        seed=config.seed,
        mode=config.mode,
        grid=config.grid,
        rule=rule,
        reselect=config.reselect_bandwidths,
        workers=config.workers,
        observed=(stats.L_n, stats.standardized),
    )
    if boot.per_replicate_fit_failures:
        warnings.append(f"{boot.per_replicate_fit_failures} bootstrap replicate(s) failed and were skipped")

    per_h = stats.to_frame()
    single = boot.per_bandwidth()
    for column in ("critical_value", "p_value", "reject"):
        per_h[column] = single[column].to_numpy()
    asymptotic = None
    if config.asymptotic:
        ref = asymptotic_ref(path, bandwidths, region, config.grid, rng=derive_rng(config.seed, ASYMPTOTIC_STREAM))
        per_h["asymptotic_critical_value"] = [ref.single_critical_value(k, config.alpha) for k in range(len(per_h))]
        asymptotic = {
            **ref.to_dict(),
            "max_critical_value": ref.max_critical_value(config.alpha),
            "reject_max": ref.reject_max(stats.L_n, config.alpha),
        }
    for message in warnings:
        logger.warning(message)

    report = TestReport(
        model=model.family.value,
        n=path.n,
        delta=path.delta,
        theta_hat=fit.theta_hat.as_dict(),
        loglik=fit.loglik,
        converged=fit.converged,
        fit_method=fit.method.value,
        region=region.as_dict(),
        bandwidth_scheme=rule.scheme.value,
        bandwidths=bandwidths.values.tolist(),
        variant=config.variant,
        mode=config.mode,
        grid=list(config.grid),
        per_h=per_h.to_dict(orient="records"),
        L_n=boot.observed_L_n,
        critical_value=boot.critical_value,
        p_value=boot.p_value,
        alpha=config.alpha,
        reject=boot.reject,
        B=boot.B,
        requested_B=boot.requested_B,
        failed_replicates=boot.per_replicate_fit_failures,
        redraws=boot.redraws,
        nonconverged_fits=boot.nonconverged_fits,
        replicates=boot.replicates.tolist(),
        seed=config.seed,
        rng=config.rng,
        data_source=str(config.data),
        data_hash=file_hash(config.data),
        config_hash=config.content_hash,
        asymptotic=asymptotic,
        warnings=warnings,
    )
    write_outputs(report, _output_dir(config))
    return report


def cmd_simulate(config: Config) -> Path:
    """Simulate n transitions of the configured model and write them as a CSV series."""
    model = config.get_model()
    theta = config.get_theta(model)
    if theta is None:
        raise ConfigError("Simulation needs theta or a model preset")
    rng = derive_rng(config.seed)
    x0 = float(model.sample_stationary(theta, rng)) if config.x0 is None else config.x0
    path = model.simulate_path(theta, config.n, config.delta, x0, rng)
    target = Path(config.output) if config.output else Path.cwd() / "path.csv"
    if target.suffix != ".csv":
        target = target / "path.csv"
    write_path(path, target)
    logger.info(f"Simulated {len(path)} observations of {model.family.value} to {target}")
    return target


def cmd_fit(config: Config) -> FitResult:
    """Fit the configured model to the data file and write `fit.json`."""
    fit = _fit(config, load_data(config))
    _write_json({**fit.to_dict(), "data_hash": file_hash(config.data)}, _output_dir(config) / "fit.json")
    return fit


def cmd_bandwidth(config: Config) -> Dict[str, Any]:
    """Scott and CV bandwidths, the configured set and the density surfaces on the region grid.

    Writes `bandwidths.json` and `densities.csv` (kernel and smoothed parametric densities per bandwidth).
    """
    model = config.get_model()
    path = load_data(config)
    region = config.get_region(path)
    rule = config.bandwidth_rule()
    scott = scott_rule(path)
    try:
        cv = cv_select(path)
    except (DiffusionElError, ValueError) as exc:
        logger.warning(f"Cross-validation failed: {exc}")
        cv = None
    if rule.scheme == BandwidthScheme.CV_LOWER_RANGE and cv is None:
        raise ConfigError("The cv-lower-range scheme needs a cross-validation bandwidth")
    bandwidths = rule.select(path)
    theta = config.get_theta(model)
    if theta is None:
        theta = _fit(config, path).theta_hat
    transition_matrix = parametric_transition_matrix(model, theta, path)
    points, _ = region.grid_over(*config.grid)
    frames = [GridSmoother(path, h, points).densities(transition_matrix).to_frame() for h in bandwidths]
    directory = _output_dir(config)
    pd.concat(frames, ignore_index=True).to_csv(directory / "densities.csv", index=False, float_format="%.17g")
    content = {
        "scott": scott,
        "cv": cv,
        "scheme": rule.scheme.value,
        "bandwidths": bandwidths.to_dict(),
        "theta": theta.as_dict(),
        "region": region.as_dict(),
    }
    _write_json(content, directory / "bandwidths.json")
    return content


def cmd_study(config: Config) -> StudyResult:
    """Run a named study preset, its truth swapped for `config.model` when that is a model preset.

    Writes `<preset>_reps.csv`, `<preset>_summary.json` and the text table.
    """
    if config.preset not in STUDY_PRESETS:
        raise ConfigError(f"Unknown study preset: {config.preset}, available: {list(STUDY_PRESETS)}")
    overrides: Dict[str, Optional[Any]] = {
        "seed": config.seed,
        "alpha": config.alpha,
        "workers": config.workers,
        "euler_substeps": config.euler_substeps,
        "variant": config.variant,
        "mode": config.mode,
        "grid": config.grid,
        "asymptotic": config.asymptotic,
        "reselect": config.reselect_bandwidths,
    }
    if config.reps is not None:
        overrides["n_reps"] = config.reps
    if config.n_boot is not None:
        overrides["B"] = config.n_boot
    try:
        design = get_design(
            config.preset,
            n=config.n,
            full_scale=config.full_scale,
            data_driven=config.data_driven,
            model=config.model if config.model in MODEL_PRESETS else None,
            **overrides,
        )
    except ValueError as exc:
        raise ConfigError(str(exc))
    runner = run_size_study if design.is_size_study else run_power_study
    result = runner(design)
    directory = _output_dir(config)
    result.to_frame().to_csv(directory / f"{design.name}_reps.csv", index=False, float_format="%.17g")
    _write_json(result.summary(), directory / f"{design.name}_summary.json")
    (directory / f"{design.name}_table.txt").write_text(result.format_table() + "\n")
    return result
