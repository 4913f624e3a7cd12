"""Training matrices: loading, validation, masking and static-energy views.

The on-disk layout is a small manifest naming one delimited-text grid per
quantity (mean power, mean time, optional stddevs) plus the platform file.
Grids share row keys (app_id) and column keys (config ids) and use the
explicit sentinel ``NA`` for unmeasured cells, so a truncated file never
parses as a sparser matrix.  Formats are documented in docs/data-formats.md.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .energy import static_power_mw
from .errors import DataFormatError
from .platforms import (
    NativeConfig,
    PlatformSpec,
    UnifiedConfig,
    load_system,
    save_system,
    unify_system,
)

MISSING = "NA"


class PerfLimit(Enum):
    COMPUTATION = "computation"
    MEMORY_BANDWIDTH = "memory-bandwidth"
    MEMORY_LATENCY = "memory-latency"
    MIXED = "mixed"


DWARF_CATEGORIES = frozenset(
    {
        "graph-traversal",
        "structured-grid",
        "unstructured-grid",
        "dense-linear-algebra",
        "sparse-matrix",
        "dynamic-programming",
        "n-body",
        "spectral",
    }
)


@dataclass(frozen=True)
class ApplicationMeta:
    app_id: int
    benchmark: str
    input_name: str
    dwarf: str
    perf_limit: PerfLimit

    def __post_init__(self) -> None:
        if self.app_id < 1:
            raise ValueError("app_id must be a positive integer")
        if self.dwarf not in DWARF_CATEGORIES:
            raise ValueError(f"unknown dwarf category {self.dwarf!r}")


def _apps(benchmark: str, dwarf: str, limit: PerfLimit, first_id: int, inputs: Sequence[str]):
    return [
        ApplicationMeta(first_id + i, benchmark, name, dwarf, limit)
        for i, name in enumerate(inputs)
    ]


# Bundled catalog of 18 benchmark/input pairs spanning four dwarf
# categories and all three performance-limit classes.
DEFAULT_APPLICATIONS: tuple[ApplicationMeta, ...] = tuple(
    _apps("bfs", "graph-traversal", PerfLimit.MEMORY_LATENCY, 1,
          ["graph1M", "graph2M", "graph4M", "graph512k", "graph8M"])
    + _apps("cfd", "unstructured-grid", PerfLimit.MEMORY_LATENCY, 6,
            ["fvcorr.domn.097K", "fvcorr.domn.193K", "missile.domn.0.2M"])
    + _apps("kmeans", "dense-linear-algebra", PerfLimit.COMPUTATION, 9,
            ["1000000_34", "100000_34", "10000_34", "1000_34", "3000000_34"])
    + _apps("particlefilter", "structured-grid", PerfLimit.MEMORY_BANDWIDTH, 14,
            ["128_10_100000_dp", "128_10_10000_dp", "128_10_1000_dp",
             "128_2500_10000_dp", "128_500_10000_dp"])
)


@dataclass(frozen=True)
class SamplePlan:
    """Which configurations of one target application get measured online."""

    target_app: int
    sample_configs: tuple[int, ...]
    seed: int

    def __post_init__(self) -> None:
        if len(set(self.sample_configs)) != len(self.sample_configs):
            raise ValueError("sample_configs must be distinct")


@dataclass(frozen=True)
class SampleSet:
    """Measured values at a plan's configurations for one application."""

    app_id: int
    config_indices: tuple[int, ...]
    power: np.ndarray
    time: np.ndarray

    def __post_init__(self) -> None:
        if not (len(self.config_indices) == len(self.power) == len(self.time)):
            raise ValueError("sample arrays must align with config_indices")


@dataclass(frozen=True)
class TrainingMatrix:
    """Applications x configurations grid of mean power (mW) and mean time (s).

    ``mask`` is True where a cell was measured; ``power`` and ``time`` hold
    NaN exactly at unmeasured cells.  ``static_augmented`` records whether
    the power grid already includes the whole-system static draw.
    """

    apps: tuple[ApplicationMeta, ...]
    configs: tuple[NativeConfig, ...]
    unified: tuple[UnifiedConfig, ...]
    power: np.ndarray
    time: np.ndarray
    mask: np.ndarray
    system: tuple[PlatformSpec, ...]
    power_std: np.ndarray | None = None
    time_std: np.ndarray | None = None
    static_augmented: bool = False

    def __post_init__(self) -> None:
        n_apps, n_cfg = len(self.apps), len(self.configs)
        shape = (n_apps, n_cfg)
        for name in ("power", "time", "mask"):
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} grid shape {getattr(self, name).shape} != {shape}")
        if len(self.unified) != n_cfg:
            raise ValueError("unified coordinates must align with configs")
        ids = [a.app_id for a in self.apps]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate app_id in matrix")
        m = self.mask
        if not (np.isfinite(self.power[m]).all() and np.isfinite(self.time[m]).all()):
            raise ValueError("observed cells must be finite")
        if np.isfinite(self.power[~m]).any() or np.isfinite(self.time[~m]).any():
            raise ValueError("unobserved cells must be NaN in both grids")
        if (self.power[m] < 0).any():
            raise ValueError("negative power cell")
        if (self.time[m] <= 0).any():
            raise ValueError("non-positive time cell")

    @property
    def n_apps(self) -> int:
        return len(self.apps)

    @property
    def n_configs(self) -> int:
        return len(self.configs)

    @property
    def fully_observed(self) -> bool:
        return bool(self.mask.all())

    def app_index(self, app_id: int) -> int:
        for i, a in enumerate(self.apps):
            if a.app_id == app_id:
                return i
        raise KeyError(f"app_id {app_id} not in matrix")

    def energy(self) -> np.ndarray:
        """Per-cell mean energy (mJ); NaN at unobserved cells."""
        return self.power * self.time

    def select_configs(self, indices: Sequence[int]) -> TrainingMatrix:
        """Column-subset view (new matrix) keeping config order of ``indices``."""
        idx = list(indices)
        return replace(
            self,
            configs=tuple(self.configs[i] for i in idx),
            unified=tuple(self.unified[i] for i in idx),
            power=self.power[:, idx].copy(),
            time=self.time[:, idx].copy(),
            mask=self.mask[:, idx].copy(),
            power_std=None if self.power_std is None else self.power_std[:, idx].copy(),
            time_std=None if self.time_std is None else self.time_std[:, idx].copy(),
        )

    def platform_config_indices(self, platform: str) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.configs) if c.platform == platform)


def build_training_matrix(
    apps: Sequence[ApplicationMeta],
    system: Sequence[PlatformSpec],
    power: np.ndarray,
    time: np.ndarray,
    mask: np.ndarray | None = None,
    power_std: np.ndarray | None = None,
    time_std: np.ndarray | None = None,
    static_augmented: bool = False,
) -> TrainingMatrix:
    """Assemble a matrix over the system's full enumerated config list."""
    configs, unified, _ = unify_system(system)
    power = np.array(power, dtype=float)
    time = np.array(time, dtype=float)
    if mask is None:
        mask = np.isfinite(power) & np.isfinite(time)
    mask = np.array(mask, dtype=bool)
    power = np.where(mask, power, np.nan)
    time = np.where(mask, time, np.nan)
    return TrainingMatrix(
        apps=tuple(apps),
        configs=configs,
        unified=unified,
        power=power,
        time=time,
        mask=mask,
        system=tuple(system),
        power_std=None if power_std is None else np.array(power_std, dtype=float),
        time_std=None if time_std is None else np.array(time_std, dtype=float),
        static_augmented=static_augmented,
    )


def augment_static(matrix: TrainingMatrix, system: Sequence[PlatformSpec] | None = None) -> TrainingMatrix:
    """Turn the dynamic-energy view into the whole-system total-energy view.

    Every observed cell's energy grows by duration x (sum of all platforms'
    static power); since power = energy / time, that is a constant shift of
    the power grid.  Refuses to run twice.
    """
    if matrix.static_augmented:
        raise ValueError("matrix is already static-augmented")
    system = matrix.system if system is None else tuple(system)
    known = {spec.name for spec in system}
    for cfg in matrix.configs:
        if cfg.platform not in known:
            raise ValueError(f"config platform {cfg.platform!r} not in system")
    shift = static_power_mw(system)
    power = matrix.power + shift  # NaN cells stay NaN
    return replace(matrix, power=power, static_augmented=True)


def select_samples(n_configs: int, n: int, seed: int, target_app: int = 0) -> SamplePlan:
    """Draw ``n`` distinct configuration indices uniformly, reproducibly."""
    if n > n_configs:
        raise ValueError(f"cannot sample {n} of {n_configs} configs")
    rng = np.random.default_rng(seed)
    picks = rng.choice(n_configs, size=n, replace=False)
    return SamplePlan(target_app=target_app, sample_configs=tuple(sorted(int(i) for i in picks)), seed=seed)


def mask_application(
    matrix: TrainingMatrix, app_id: int, plan: SamplePlan
) -> tuple[TrainingMatrix, SampleSet]:
    """Leave-one-application-out split.

    Returns the training view with the target application's row removed
    entirely, and a SampleSet holding only the plan's sampled cells of that
    row.  Nothing else of the target row leaks into either output.
    """
    row = matrix.app_index(app_id)
    keep = [i for i in range(matrix.n_apps) if i != row]
    view = replace(
        matrix,
        apps=tuple(matrix.apps[i] for i in keep),
        power=matrix.power[keep].copy(),
        time=matrix.time[keep].copy(),
        mask=matrix.mask[keep].copy(),
        power_std=None if matrix.power_std is None else matrix.power_std[keep].copy(),
        time_std=None if matrix.time_std is None else matrix.time_std[keep].copy(),
    )
    idx = np.array(plan.sample_configs, dtype=int)
    if idx.size and not matrix.mask[row, idx].all():
        raise ValueError("plan samples an unobserved cell of the target row")
    samples = SampleSet(
        app_id=app_id,
        config_indices=tuple(plan.sample_configs),
        power=matrix.power[row, idx].copy(),
        time=matrix.time[row, idx].copy(),
    )
    return view, samples


# ---------------------------------------------------------------------------
# persistence


def _fmt(value: float, observed: bool) -> str:
    return repr(float(value)) if observed else MISSING


def _write_grid(path: str, apps: Sequence[ApplicationMeta], configs: Sequence[NativeConfig],
                grid: np.ndarray, mask: np.ndarray) -> None:
    with open(path, "w") as fh:
        fh.write("app_id," + ",".join(c.config_id for c in configs) + "\n")
        for i, app in enumerate(apps):
            cells = (_fmt(grid[i, j], mask[i, j]) for j in range(len(configs)))
            fh.write(str(app.app_id) + "," + ",".join(cells) + "\n")


def _read_grid(path: str, expect_configs: Sequence[NativeConfig]) -> tuple[list[int], np.ndarray, np.ndarray]:
    try:
        with open(path) as fh:
            lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    except OSError as exc:
        raise DataFormatError(f"cannot read grid {path}: {exc}") from exc
    if not lines:
        raise DataFormatError(f"{path}: empty grid file")
    header = lines[0].split(",")
    if header[0] != "app_id":
        raise DataFormatError(f"{path}: header must start with 'app_id'")
    expected = [c.config_id for c in expect_configs]
    if header[1:] != expected:
        raise DataFormatError(
            f"{path}: config columns do not match the platform file "
            f"(got {len(header) - 1} columns, expected {len(expected)})"
        )
    app_ids: list[int] = []
    values = np.full((len(lines) - 1, len(expected)), np.nan)
    mask = np.zeros_like(values, dtype=bool)
    for r, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(expected) + 1:
            raise DataFormatError(f"{path}:{r}: expected {len(expected) + 1} cells, got {len(cells)}")
        try:
            app_ids.append(int(cells[0]))
        except ValueError:
            raise DataFormatError(f"{path}:{r}: bad app_id {cells[0]!r}") from None
        for c, cell in enumerate(cells[1:]):
            if cell == MISSING:
                continue
            try:
                values[r - 2, c] = float(cell)
            except ValueError:
                raise DataFormatError(
                    f"{path}:{r}: column {expected[c]!r}: bad value {cell!r}"
                ) from None
            if not np.isfinite(values[r - 2, c]):
                raise DataFormatError(f"{path}:{r}: column {expected[c]!r}: non-finite value")
            mask[r - 2, c] = True
    return app_ids, values, mask


def save_training(matrix: TrainingMatrix, directory: str, apps_meta: bool = True) -> str:
    """Write a matrix as manifest + grids (+ platform file); returns the
    manifest path."""
    os.makedirs(directory, exist_ok=True)
    platform_file = os.path.join(directory, "system.conf")
    save_system(matrix.system, platform_file)
    _write_grid(os.path.join(directory, "power.csv"), matrix.apps, matrix.configs,
                matrix.power, matrix.mask)
    _write_grid(os.path.join(directory, "time.csv"), matrix.apps, matrix.configs,
                matrix.time, matrix.mask)
    lines = [
        "[training]",
        "power = power.csv",
        "time = time.csv",
        "platforms = system.conf",
        f"static_augmented = {'true' if matrix.static_augmented else 'false'}",
    ]
    if matrix.power_std is not None:
        _write_grid(os.path.join(directory, "power_std.csv"), matrix.apps, matrix.configs,
                    matrix.power_std, matrix.mask)
        lines.append("power_std = power_std.csv")
    if matrix.time_std is not None:
        _write_grid(os.path.join(directory, "time_std.csv"), matrix.apps, matrix.configs,
                    matrix.time_std, matrix.mask)
        lines.append("time_std = time_std.csv")
    if apps_meta:
        save_applications(matrix.apps, os.path.join(directory, "apps.csv"))
        lines.append("apps = apps.csv")
    manifest = os.path.join(directory, "manifest.conf")
    with open(manifest, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return manifest


def load_training(manifest_path: str) -> TrainingMatrix:
    """Load and validate a matrix from its manifest."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        with open(manifest_path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise DataFormatError(f"cannot read manifest {manifest_path}: {exc}") from exc
    except configparser.Error as exc:
        raise DataFormatError(f"{manifest_path}: {exc}") from exc
    if "training" not in parser:
        raise DataFormatError(f"{manifest_path}: missing [training] section")
    sec = parser["training"]
    for key in ("power", "time", "platforms"):
        if key not in sec:
            raise DataFormatError(f"{manifest_path}: missing key {key!r}")
    base = os.path.dirname(os.path.abspath(manifest_path))
    rel = lambda p: os.path.join(base, p)

    system = load_system(rel(sec["platforms"]))
    configs, unified, _ = unify_system(system)
    app_ids, power, mask = _read_grid(rel(sec["power"]), configs)
    t_ids, time, t_mask = _read_grid(rel(sec["time"]), configs)
    if app_ids != t_ids:
        raise DataFormatError(f"{manifest_path}: power/time grids disagree on app ids")
    if not np.array_equal(mask, t_mask):
        raise DataFormatError(f"{manifest_path}: power/time grids disagree on missing cells")
    bad = np.argwhere(mask & (power < 0))
    if bad.size:
        i, j = bad[0]
        raise DataFormatError(
            f"{sec['power']}: negative power at app {app_ids[i]}, config {configs[j].config_id}"
        )
    bad = np.argwhere(t_mask & (time <= 0))
    if bad.size:
        i, j = bad[0]
        raise DataFormatError(
            f"{sec['time']}: non-positive time at app {app_ids[i]}, config {configs[j].config_id}"
        )

    if "apps" in sec:
        apps = load_applications(rel(sec["apps"]))
        by_id = {a.app_id: a for a in apps}
        missing = [i for i in app_ids if i not in by_id]
        if missing:
            raise DataFormatError(f"{manifest_path}: apps file lacks ids {missing}")
        apps = tuple(by_id[i] for i in app_ids)
    else:
        apps = tuple(
            ApplicationMeta(i, "unknown", "unknown", "sparse-matrix", PerfLimit.MIXED)
            for i in app_ids
        )

    kwargs = {}
    for key in ("power_std", "time_std"):
        if key in sec:
            _, grid, _ = _read_grid(rel(sec[key]), configs)
            kwargs[key] = grid
    augmented = sec.get("static_augmented", "false").strip().lower() == "true"
    try:
        return TrainingMatrix(
            apps=apps,
            configs=configs,
            unified=unified,
            power=power,
            time=time,
            mask=mask,
            system=system,
            static_augmented=augmented,
            **kwargs,
        )
    except ValueError as exc:
        raise DataFormatError(f"{manifest_path}: {exc}") from exc


def save_applications(apps: Sequence[ApplicationMeta], path: str) -> None:
    with open(path, "w") as fh:
        fh.write("app_id,benchmark,input,dwarf,perf_limit\n")
        for a in apps:
            fh.write(f"{a.app_id},{a.benchmark},{a.input_name},{a.dwarf},{a.perf_limit.value}\n")


def load_applications(path: str) -> tuple[ApplicationMeta, ...]:
    try:
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise DataFormatError(f"cannot read apps file {path}: {exc}") from exc
    if not lines or lines[0] != "app_id,benchmark,input,dwarf,perf_limit":
        raise DataFormatError(f"{path}: bad or missing header")
    apps = []
    for r, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != 5:
            raise DataFormatError(f"{path}:{r}: expected 5 cells")
        try:
            apps.append(
                ApplicationMeta(int(cells[0]), cells[1], cells[2], cells[3], PerfLimit(cells[4]))
            )
        except ValueError as exc:
            raise DataFormatError(f"{path}:{r}: {exc}") from exc
    return tuple(apps)
