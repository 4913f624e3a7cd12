"""Command-line pipeline: benchmark -> sample -> predict -> run, plus the
evaluation harness.

Prediction is entirely offline; only benchmark, sample and run touch a
measurement backend, and the only backend shipped is the simulated one
(``--backend simulated``), which answers from a synthetic system or a
previously benchmarked matrix (``--backend-data``).

Exit codes: 0 success, 2 input/parse failure, 3 estimator failure,
4 backend failure.  Any flag may also be supplied through a run manifest
file (``--manifest``) holding ``key = value`` lines; explicit flags win.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import os
import sys

import numpy as np

from . import dataset
from .backends import (
    ExecutableDescriptor,
    MeasurementBackend,
    SimulatedBackend,
    build_environment,
)
from .dataset import (
    DEFAULT_APPLICATIONS,
    SamplePlan,
    SampleSet,
    TrainingMatrix,
    load_applications,
    load_training,
    save_training,
    select_samples,
)
from .energy import power_from
from .errors import BackendError, DataFormatError, EstimatorError
from .estimator import EstimatorParams, predict_best_config, predict_new_app
from .evaluation import APPROACHES, evaluate
from .platforms import PlatformKind, load_system
from .synthetic import PROFILES

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_ESTIMATOR = 3
EXIT_BACKEND = 4


def load_params(path: str | None) -> EstimatorParams:
    """Estimator parameters from an ``[estimator]`` key/value file."""
    if path is None:
        return EstimatorParams()
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise DataFormatError(f"cannot read params file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise DataFormatError(f"{path}: {exc}") from exc
    if "estimator" not in parser:
        raise DataFormatError(f"{path}: missing [estimator] section")
    sec = parser["estimator"]
    kwargs = {}
    casts = {
        "latent_dim": int,
        "max_iters": int,
        "tol": float,
        "min_samples": int,
        "ridge": float,
        "log_time": lambda s: s.strip().lower() == "true",
    }
    for key, value in sec.items():
        if key not in casts:
            raise DataFormatError(f"{path}: unknown estimator key {key!r}")
        try:
            kwargs[key] = casts[key](value)
        except ValueError as exc:
            raise DataFormatError(f"{path}: bad value for {key}: {exc}") from exc
    try:
        return EstimatorParams(**kwargs)
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc


def _resolve_system(args) -> tuple:
    if args.system:
        return load_system(args.system)
    return PROFILES[args.profile].platforms


def _resolve_apps(args):
    if args.apps:
        return load_applications(args.apps)
    n = PROFILES[args.profile].n_apps
    return DEFAULT_APPLICATIONS[:n]


def _descriptor(args, system) -> ExecutableDescriptor:
    commands = {}
    for spec in system:
        if spec.kind is PlatformKind.CPU and args.cpu_cmd:
            commands[spec.name] = args.cpu_cmd
        elif spec.kind is PlatformKind.GPU and args.gpu_cmd:
            commands[spec.name] = args.gpu_cmd
    if not commands:
        raise DataFormatError("no executable given (--cpu-cmd / --gpu-cmd)")
    return ExecutableDescriptor(commands=commands, env={})


def _make_backend(args, system=None, apps=None) -> MeasurementBackend:
    if args.backend != "simulated":
        raise BackendError(f"unknown backend {args.backend!r}")
    if getattr(args, "backend_data", None):
        return SimulatedBackend(load_training(args.backend_data))
    profile = PROFILES[args.profile]
    platforms = tuple(system) if system is not None else profile.platforms
    n_apps = len(apps) if apps is not None else profile.n_apps
    n_cfg = sum(len(p.native_settings) for p in platforms)
    spec = dataclasses.replace(
        profile,
        platforms=platforms,
        n_apps=n_apps,
        rank=min(profile.rank, n_apps, n_cfg),
        seed=args.seed,
        noise_sd=args.noise if args.noise is not None else profile.noise_sd,
    )
    return SimulatedBackend.generate(spec)


def cmd_benchmark(args) -> int:
    """Measure every (application, configuration) cell and write the
    training files; backend failures leave missing cells and continue."""
    system = _resolve_system(args)
    apps = _resolve_apps(args)
    backend = _make_backend(args, system, apps)
    configs = tuple(cfg for spec in system for cfg in spec.native_settings)
    n_apps, n_cfg = len(apps), len(configs)
    power = np.full((n_apps, n_cfg), np.nan)
    time = np.full((n_apps, n_cfg), np.nan)
    mask = np.zeros((n_apps, n_cfg), dtype=bool)
    failures = 0
    for i, app in enumerate(apps):
        desc = ExecutableDescriptor(
            commands={spec.name: f"app:{app.app_id}" for spec in system}
        )
        for j, cfg in enumerate(configs):
            try:
                meas = backend.run(desc, cfg)
            except BackendError:
                failures += 1
                continue
            time[i, j] = meas.mean_time
            power[i, j] = power_from(meas.mean_energy, meas.mean_time)
            mask[i, j] = True
    matrix = dataset.build_training_matrix(apps, system, power, time, mask)
    manifest = save_training(matrix, args.out)
    with open(manifest, "a") as fh:
        fh.write(f"seed = {args.seed}\n")
    print(f"benchmarked {int(mask.sum())}/{n_apps * n_cfg} cells "
          f"({failures} failures) -> {manifest}")
    return EXIT_OK


def save_samples(path: str, app_id: int, seed: int, samples: SampleSet,
                 configs) -> None:
    with open(path, "w") as fh:
        fh.write(f"# app_id = {app_id}\n# seed = {seed}\n")
        fh.write("config_id,power,time\n")
        for k, j in enumerate(samples.config_indices):
            fh.write(
                f"{configs[j].config_id},{float(samples.power[k])!r},{float(samples.time[k])!r}\n"
            )


def load_samples(path: str, matrix: TrainingMatrix) -> tuple[SampleSet, int]:
    """Read a sample file back; returns the sample set and its seed."""
    meta = {}
    rows = []
    try:
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise DataFormatError(f"cannot read sample file {path}: {exc}") from exc
    body = []
    for ln in lines:
        if ln.startswith("#"):
            try:
                key, value = ln[1:].split("=", 1)
                meta[key.strip()] = value.strip()
            except ValueError:
                raise DataFormatError(f"{path}: bad header line {ln!r}") from None
        else:
            body.append(ln)
    if not body or body[0] != "config_id,power,time":
        raise DataFormatError(f"{path}: missing 'config_id,power,time' header")
    col = {cfg.config_id: j for j, cfg in enumerate(matrix.configs)}
    idx, power, time = [], [], []
    for r, ln in enumerate(body[1:], start=1):
        cells = ln.split(",")
        if len(cells) != 3:
            raise DataFormatError(f"{path}: row {r}: expected 3 cells")
        if cells[0] not in col:
            raise DataFormatError(f"{path}: row {r}: unknown config {cells[0]!r}")
        try:
            idx.append(col[cells[0]])
            power.append(float(cells[1]))
            time.append(float(cells[2]))
        except ValueError as exc:
            raise DataFormatError(f"{path}: row {r}: {exc}") from exc
    try:
        app_id = int(meta.get("app_id", "0"))
        seed = int(meta.get("seed", "0"))
    except ValueError as exc:
        raise DataFormatError(f"{path}: bad header metadata: {exc}") from exc
    samples = SampleSet(
        app_id=app_id,
        config_indices=tuple(idx),
        power=np.array(power),
        time=np.array(time),
    )
    return samples, seed


def cmd_sample(args) -> int:
    """Measure the target executable on randomly chosen configurations."""
    system = _resolve_system(args)
    params = load_params(args.params)
    if args.samples < params.min_samples:
        raise DataFormatError(
            f"--samples {args.samples} below the estimator minimum {params.min_samples}"
        )
    backend = _make_backend(args, system)
    desc = _descriptor(args, system)
    configs = tuple(cfg for spec in system for cfg in spec.native_settings)
    plan = select_samples(len(configs), args.samples, args.seed)
    power, time = [], []
    app_id = 0
    for j in plan.sample_configs:
        cfg = configs[j]
        run_desc = dataclasses.replace(desc, env=build_environment(desc, cfg))
        meas = backend.run(run_desc, cfg)
        app_id = meas.app_id
        power.append(power_from(meas.mean_energy, meas.mean_time))
        time.append(meas.mean_time)
    samples = SampleSet(
        app_id=app_id,
        config_indices=plan.sample_configs,
        power=np.array(power),
        time=np.array(time),
    )
    save_samples(args.out, app_id, args.seed, samples, configs)
    print(f"sampled {len(plan.sample_configs)} configurations -> {args.out}")
    return EXIT_OK


def cmd_predict(args) -> int:
    """Estimate all configurations from training + samples and print the
    most energy-efficient one.  Never touches a measurement backend."""
    matrix = load_training(args.training)
    samples, seed = load_samples(args.sample, matrix)
    params = load_params(args.params)
    known_ids = {a.app_id for a in matrix.apps}
    if samples.app_id in known_ids:
        plan = SamplePlan(samples.app_id, samples.config_indices, seed)
        result = predict_best_config(matrix, samples.app_id, plan, params)
    else:
        result = predict_new_app(matrix, samples, params)
    chosen = matrix.configs[result.chosen]
    print(f"chosen: {chosen.config_id}")
    print(f"platform: {chosen.platform}")
    knob = "workgroup_size" if chosen.kind is PlatformKind.GPU else "cores"
    print(f"setting: {knob}={chosen.cores} freq={chosen.freq} mem={chosen.mem}")
    print(f"estimated energy: {result.energy[result.chosen]:.3f} mJ")
    if not result.converged:
        print("warning: EM did not converge within max_iters", file=sys.stderr)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "estimates.csv")
        with open(path, "w") as fh:
            fh.write("config_id,power,time,energy,provenance,chosen\n")
            for j, cfg in enumerate(matrix.configs):
                fh.write(
                    f"{cfg.config_id},{float(result.power[j])!r},{float(result.time[j])!r},"
                    f"{float(result.energy[j])!r},{result.provenance[j]},"
                    f"{int(j == result.chosen)}\n"
                )
        print(f"estimates -> {path}")
    return EXIT_OK


def cmd_run(args) -> int:
    """Execute once at a chosen configuration and report the measurement."""
    system = _resolve_system(args)
    configs = {cfg.config_id: cfg
               for spec in system for cfg in spec.native_settings}
    if args.config not in configs:
        raise DataFormatError(f"unknown configuration {args.config!r}")
    cfg = configs[args.config]
    backend = _make_backend(args, system)
    desc = _descriptor(args, system)
    run_desc = dataclasses.replace(desc, env=build_environment(desc, cfg))
    meas = backend.run(run_desc, cfg)
    print(f"config: {cfg.config_id}")
    print(f"measured time: {meas.mean_time:.6f} s")
    print(f"measured energy: {meas.mean_energy:.3f} mJ")
    if args.predicted_energy is not None:
        delta = meas.mean_energy - args.predicted_energy
        pct = delta / args.predicted_energy * 100.0
        print(f"predicted energy: {args.predicted_energy:.3f} mJ "
              f"(delta {delta:+.3f} mJ, {pct:+.2f}%)")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    """Compare approaches against the brute-force oracle on a full matrix."""
    matrix = load_training(args.training)
    approaches = tuple(args.approaches.split(",")) if args.approaches else APPROACHES
    report = evaluate(
        matrix,
        approaches=approaches,
        trials=args.trials,
        seed=args.seed,
        holistic_samples=args.samples,
    )
    print(report.summary_text())
    if args.out:
        report.write(args.out)
        print(f"report -> {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heterotune",
        description="energy-optimal configuration selection for heterogeneous systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, backend=False):
        p.add_argument("--system", help="platform descriptor file")
        p.add_argument("--apps", help="application catalog file")
        p.add_argument("--samples", type=int, default=15, help="sample count (default 15)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--params", help="estimator parameter file")
        p.add_argument("--out", help="output file or directory")
        p.add_argument("--profile", choices=sorted(PROFILES), default="full")
        p.add_argument("--manifest", help="run manifest supplying any flag as key = value")
        if backend:
            p.add_argument("--backend", choices=["simulated"], default="simulated")
            p.add_argument("--backend-data", help="training manifest backing the simulated backend")
            p.add_argument("--noise", type=float, default=None,
                           help="relative per-run noise of the generated system")
            p.add_argument("--cpu-cmd", help="CPU executable (simulated: 'app:<id>')")
            p.add_argument("--gpu-cmd", help="GPU executable (simulated: 'app:<id>')")

    p = sub.add_parser("benchmark", help="measure all apps on all configurations")
    common(p, backend=True)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("sample", help="measure one executable on sampled configurations")
    common(p, backend=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("predict", help="predict the best configuration (offline)")
    common(p)
    p.add_argument("--training", required=True, help="training manifest")
    p.add_argument("--sample", required=True, help="sample file from 'sample'")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("run", help="run once at a chosen configuration")
    common(p, backend=True)
    p.add_argument("--config", required=True, help="configuration id")
    p.add_argument("--predicted-energy", type=float, default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("evaluate", help="compare approaches against brute force")
    common(p)
    p.add_argument("--training", required=True, help="training manifest")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--approaches", help="comma list, default all")
    p.set_defaults(func=cmd_evaluate)
    return parser


def _apply_manifest(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Fold a run-manifest file into parser defaults; explicit flags win."""
    if "--manifest" not in argv:
        return argv
    at = argv.index("--manifest")
    if at + 1 >= len(argv):
        raise DataFormatError("--manifest needs a file path")
    path = argv[at + 1]
    cfg = configparser.ConfigParser()
    cfg.optionxform = str
    try:
        with open(path) as fh:
            cfg.read_string("[run]\n" + fh.read())
    except OSError as exc:
        raise DataFormatError(f"cannot read manifest {path}: {exc}") from exc
    except configparser.Error as exc:
        raise DataFormatError(f"{path}: {exc}") from exc
    overrides = {}
    for key, value in cfg["run"].items():
        dest = key.strip().replace("-", "_")
        for cast in (int, float):
            try:
                overrides[dest] = cast(value)
                break
            except ValueError:
                continue
        else:
            overrides[dest] = value
    for action in parser._subparsers._group_actions[0].choices.values():  # type: ignore[union-attr]
        known = {a.dest for a in action._actions}
        action.set_defaults(**{k: v for k, v in overrides.items() if k in known})
    return argv


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_manifest(parser, argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except EstimatorError as exc:
        print(f"estimator error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATOR
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND


if __name__ == "__main__":
    sys.exit(main())
