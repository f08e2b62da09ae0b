import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from semsurv._assessment import (
    EtaMode,
    SubjectRow,
    assess,
    check_draws_match,
    compare_reports,
    comparison_frame,
    fitted_summary,
    kaplan_meier,
    residual_diagnostics,
    survival_curve,
)
from semsurv._baseline import BaselineHyperparameters, run_chain_baseline
from semsurv._config import mcmc_config_from_settings, resolve_settings
from semsurv._gibbs import run_chain
from semsurv._hash import dataset_fingerprint
from semsurv._io import (
    DatasetFileSpec,
    curves_frame,
    read_dataset,
    read_draws,
    read_fit_report,
    read_true_log_time,
    write_curves,
    write_dataset,
    write_draws,
    write_fit_report,
    write_ground_truth,
    write_json,
    write_residuals,
    write_study_report,
)
from semsurv._model import Dataset, Hyperparameters, ModelKind
from semsurv._simulation import DataGenerator, Scenario, generate, preset_study, run_study
from semsurv.errors import (
    DatasetMismatchError,
    DiagnosticUnavailableError,
    IdentifiabilityError,
    InvalidArgumentError,
    SemSurvError,
    SemSurvRuntimeError,
)
from semsurv.utils._config_parse import read_config_file

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IDENTIFIABILITY = 3
EXIT_SAMPLER = 4
EXIT_DATASET_MISMATCH = 5


def _file_values(args: argparse.Namespace) -> Dict[str, str]:
    return read_config_file(args.config) if args.config else {}


def _settings(args: argparse.Namespace, flags: Dict[str, Any]) -> Dict[str, Any]:
    file_values = _file_values(args)
    flags = dict(flags)
    flags["output.dir"] = args.output_dir
    return resolve_settings(file_values, flags)


def _mcmc_flags(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        "mcmc.iterations": args.iterations,
        "mcmc.burn_in": args.burn_in,
        "mcmc.thin": args.thin,
        "mcmc.seed": args.seed,
        "mcmc.chains": getattr(args, "chains", None),
        "mcmc.workers": args.workers,
    }


def _dataset_spec(args: argparse.Namespace) -> DatasetFileSpec:
    if args.data:
        return DatasetFileSpec.combined_file(args.data)
    separate = (args.survival, args.covariates, args.platform1, args.platform2)
    if any(path is None for path in separate):
        raise InvalidArgumentError("--data or all of --survival, --covariates, --platform1, --platform2 are required")
    return DatasetFileSpec.separate_files(*separate)


def cmd_simulate(args: argparse.Namespace) -> int:
    if not 0.0 <= args.censor < 1.0:
        raise InvalidArgumentError(f"--censor must be in [0, 1), got {args.censor}")
    settings = _settings(args, {})
    output = Path(settings["output.dir"])

    scenario = Scenario(
        n=args.n,
        p=args.p,
        q1=args.q1,
        q2=args.q2,
        sigma_t2_true=args.sigma_t2,
        sigma_u1_true=args.sigma_u,
        sigma_u2_true=args.sigma_u,
        censor_target=args.censor,
        generator=DataGenerator(args.generator),
        seed=args.seed,
    )
    data, truth = generate(scenario)
    write_dataset(data, output / "dataset.csv")
    truth_sidecar = write_ground_truth(truth, data, output / "truth.csv")
    write_json(
        {
            "scenario": scenario.to_dict(),
            "censoring": truth.censoring.to_dict(),
            "censor_rate": float(np.mean(data.censored)),
            "dataset_hash": dataset_fingerprint(data),
            "files": {"dataset": "dataset.csv", "truth": "truth.csv", "truth_parameters": truth_sidecar.name},
        },
        output / "manifest.json",
    )
    return EXIT_OK


def _hyperparameters(settings: Dict[str, Any], data: Dataset) -> Hyperparameters:
    return Hyperparameters.default(
        data.p,
        data.q1,
        data.q2,
        beta_variance=settings["prior.beta_variance"],
        prior_variance=settings["prior.variance"],
        platform_variance=settings["prior.platform_variance"],
        eta1_variance=settings["prior.eta1_variance"],
        eta2_variance=settings["prior.eta2_variance"],
    )


def cmd_fit(args: argparse.Namespace) -> int:
    settings = _settings(args, _mcmc_flags(args))
    config = mcmc_config_from_settings(settings)
    output = Path(settings["output.dir"])
    model = ModelKind(args.model)

    data = read_dataset(_dataset_spec(args))
    truth = read_true_log_time(args.truth, data) if args.truth else None
    if model is ModelKind.INTEGRATED:
        draws = run_chain(data, _hyperparameters(settings, data), config, max_workers=settings["mcmc.workers"])
    else:
        baseline = BaselineHyperparameters.default(data.p, data.q1, data.q2, settings["prior.baseline_variance"])
        draws = run_chain_baseline(data, baseline, config, max_workers=settings["mcmc.workers"])

    report = assess(draws, data, truth, dataset_fingerprint(data))
    write_draws(draws, output / f"{model.value}-draws.csv")
    write_fit_report(report, output / f"{model.value}-report.json")
    try:
        fitted, sigma_hat = fitted_summary(draws, data)
        write_residuals(residual_diagnostics(data, fitted, sigma_hat), data, output / f"{model.value}-residuals.csv")
    except DiagnosticUnavailableError as err:
        logger.info("Skipping residuals: %s", err.message)

    logger.info("%s fit: DIC %.3f (p_D %.3f), LPML %.3f", model.value, report.dic, report.p_d, report.lpml)
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    paths = [Path(path) for path in args.reports]
    labels = args.labels or [path.stem for path in paths]
    if len(labels) != len(paths) or len(set(labels)) != len(labels):
        raise InvalidArgumentError("--labels needs one distinct label per report")

    rows = compare_reports({label: read_fit_report(path) for label, path in zip(labels, paths)})
    frame = comparison_frame(rows)
    sys.stdout.write(frame.to_string(index=False, float_format=lambda value: f"{value:.3f}") + "\n")
    return EXIT_OK


def curve_grid(max_time: float, points: int) -> np.ndarray:
    """`points` equally spaced times on (0, max_time]; doubling `points` keeps every existing grid time."""
    return np.linspace(0.0, max_time, points + 1)[1:]


def cmd_curves(args: argparse.Namespace) -> int:
    if args.integrated_draws is None and args.baseline_draws is None:
        raise InvalidArgumentError("--integrated-draws or --baseline-draws is required")
    if args.grid_points <= 0:
        raise InvalidArgumentError(f"--grid-points must be positive, got {args.grid_points}")
    settings = _settings(args, {})
    output = Path(settings["output.dir"])

    data = read_dataset(_dataset_spec(args))
    positions = {subject: position for position, subject in enumerate(data.subject_ids)}
    unknown = [subject for subject in args.subjects if subject not in positions]
    if unknown:
        raise InvalidArgumentError(f"Unknown subjects: {', '.join(unknown)}")

    draws = {
        name: read_draws(path)
        for name, path in (("integrated", args.integrated_draws), ("baseline", args.baseline_draws))
        if path is not None
    }
    for values in draws.values():
        check_draws_match(values, data)
    max_time = args.max_time or float(np.exp(np.max(data.log_time)))
    grid = curve_grid(max_time, args.grid_points)
    km = kaplan_meier(data).evaluate(grid)

    for subject in args.subjects:
        row = SubjectRow.from_dataset(data, positions[subject])
        curves = {name: survival_curve(values, row, EtaMode.POSTERIOR, grid) for name, values in draws.items()}
        write_curves(curves_frame(km, curves, grid), output / f"curves-{subject}.csv")
    return EXIT_OK


def cmd_replicate_study(args: argparse.Namespace) -> int:
    flags = {
        "study.preset": args.preset,
        "study.replicates": args.replicates,
        "study.root_seed": args.root_seed,
        "study.workers": args.workers,
    }
    settings = _settings(args, flags)
    # presets carry their own replicate count unless one is given explicitly
    explicit = args.replicates is not None or "study.replicates" in _file_values(args)
    config = preset_study(
        settings["study.preset"],
        replicates=settings["study.replicates"] if explicit else None,
        root_seed=settings["study.root_seed"],
        max_workers=settings["study.workers"],
    )
    overrides = {
        name: value
        for name, value in (("iterations", args.iterations), ("burn_in", args.burn_in), ("thin", args.thin))
        if value is not None
    }
    if overrides:
        config = replace(config, mcmc=replace(config.mcmc, **overrides))

    report = run_study(config)
    write_study_report(report, Path(settings["output.dir"]))
    for check in report.checks:
        sys.stdout.write(f"{'PASS' if check.passed else 'FAIL'} {check.name}: {check.detail}\n")
    return EXIT_OK


def _add_dataset_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", help="combined CSV with id, time, status, x_*, u1_*, u2_* columns")
    parser.add_argument("--survival", help="CSV with id, time, status")
    parser.add_argument("--covariates", help="CSV with id and x_* columns")
    parser.add_argument("--platform1", help="CSV with id and u1_* columns")
    parser.add_argument("--platform2", help="CSV with id and u2_* columns")


def _add_mcmc_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--iterations", type=int)
    parser.add_argument("--burn-in", type=int)
    parser.add_argument("--thin", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semsurv", description="Integrated latent-variable survival models for two omics platforms"
    )
    parser.add_argument("--config", help="flat 'section.key = value' settings file")
    parser.add_argument("--output-dir", help="defaults to $SEMSURV_OUTPUT_DIR or the working directory")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")
    commands = parser.add_subparsers(dest="command", required=True)

    simulate = commands.add_parser("simulate", help="generate a synthetic dataset and its ground truth")
    simulate.add_argument("--n", type=int, default=100)
    simulate.add_argument("--p", type=int, default=2)
    simulate.add_argument("--q1", type=int, default=10)
    simulate.add_argument("--q2", type=int, default=10)
    simulate.add_argument("--censor", type=float, default=0.0, help="target censoring fraction in [0, 1)")
    simulate.add_argument("--sigma-t2", type=float, default=1.0)
    simulate.add_argument("--sigma-u", type=float, default=1.0, help="platform error variance")
    simulate.add_argument("--generator", choices=[value.value for value in DataGenerator], default="integrated")
    simulate.add_argument("--seed", type=int, default=0)
    simulate.set_defaults(handler=cmd_simulate)

    fit = commands.add_parser("fit", help="run the Gibbs sampler and assess the fit")
    _add_dataset_arguments(fit)
    fit.add_argument("--model", choices=[value.value for value in ModelKind], default="integrated")
    fit.add_argument("--truth", help="truth.csv written by simulate, enables the imputation MSE")
    _add_mcmc_arguments(fit)
    fit.add_argument("--seed", type=int)
    fit.add_argument("--chains", type=int)
    fit.add_argument("--workers", type=int)
    fit.set_defaults(handler=cmd_fit)

    compare = commands.add_parser("compare", help="compare fit reports by DIC and LPML")
    compare.add_argument("reports", nargs="+")
    compare.add_argument("--labels", nargs="+")
    compare.set_defaults(handler=cmd_compare)

    curves = commands.add_parser("curves", help="Kaplan-Meier and model survival curves per subject")
    _add_dataset_arguments(curves)
    curves.add_argument("--integrated-draws")
    curves.add_argument("--baseline-draws")
    curves.add_argument("--subjects", nargs="+", required=True)
    curves.add_argument("--grid-points", type=int, default=100)
    curves.add_argument("--max-time", type=float)
    curves.set_defaults(handler=cmd_curves)

    study = commands.add_parser("replicate-study", help="run a preset simulation study")
    study.add_argument("--preset")
    study.add_argument("--replicates", type=int)
    study.add_argument("--root-seed", type=int)
    study.add_argument("--workers", type=int)
    _add_mcmc_arguments(study)
    study.set_defaults(handler=cmd_replicate_study)
    return parser


def configure_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s", force=True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.quiet)

    try:
        return args.handler(args)
    except DatasetMismatchError as err:
        logger.error(err.message)
        return EXIT_DATASET_MISMATCH
    except IdentifiabilityError as err:
        logger.error(err.message)
        return EXIT_IDENTIFIABILITY
    except SemSurvRuntimeError as err:
        logger.error("Sampler failed: %s", err.message)
        return EXIT_SAMPLER
    except SemSurvError as err:
        logger.error(err.message)
        return EXIT_USAGE
    except OSError as err:
        logger.error("I/O error: %s", err)
        return EXIT_USAGE


def run(argv: Optional[List[str]] = None) -> None:
    sys.exit(main(argv))
