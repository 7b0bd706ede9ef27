"""Benchmark orchestration: walk the dataset, time the model, summarize.

Only the backend call sits inside the timed interval. Decoding and window
extraction for upcoming images run on a prefetch thread feeding a bounded
queue, so preprocessing may overlap a measurement but never enters it.

The first model time of every directory is kept in the records but left out
of all averages, because it absorbs one-off setup cost.
"""

from __future__ import annotations

import logging
import math
import queue
import threading
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

from . import report
from .analysis import trace_from_summary
from .backend import Backend, BackendDescriptor, make_backend
from .dataset import DatasetManifest, scan_dataset
from .errors import DecodeError, EmptyDatasetError, ReportError
from .imaging import DEFAULT_SCALES, DEFAULT_STRIDE, DEFAULT_WINDOW, ScaleSet, WindowSpec, build_batch, decode_image

log = logging.getLogger(__name__)

PREFETCH_DEPTH = 2


@dataclass(frozen=True)
class TimingRecord:
    image_path: str
    directory_name: str
    ordinal_in_directory: int
    model_seconds: float
    window_count: int
    captured_ns: int = 0


@dataclass
class DirectoryTiming:
    directory_name: str
    records: list
    wall_seconds: float
    avg_model_seconds: Optional[float]

    @property
    def times(self) -> list[float]:
        return [r.model_seconds for r in self.records]


@dataclass
class RunSummary:
    directories: list
    global_avg_model_seconds: Optional[float]
    total_images: int
    config_echo: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    @property
    def records(self) -> list:
        return [r for d in self.directories for r in d.records]

    @property
    def pooled_count(self) -> int:
        """Number of model times that enter the global average."""
        return sum(max(0, len(d.records) - 1) for d in self.directories)


@dataclass
class RunConfig:
    dataset_root: str
    backend: BackendDescriptor
    scales: tuple = DEFAULT_SCALES
    window: int = DEFAULT_WINDOW
    stride: int = DEFAULT_STRIDE
    summary_path: Optional[str] = None
    csv_path: Optional[str] = None
    plot_dir: Optional[str] = None
    progress: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["backend"] = self.backend.to_dict()
        d["scales"] = list(self.scales)
        return d

    @classmethod
    def from_dict(cls, data: dict):
        data = dict(data)
        data["backend"] = BackendDescriptor.from_dict(data["backend"])
        data["scales"] = tuple(data.get("scales", DEFAULT_SCALES))
        return cls(**data)


def warm_mean(times: Sequence[float]) -> Optional[float]:
    """Mean of all but the first time; None when nothing remains."""
    if len(times) < 2:
        return None
    return math.fsum(times[1:]) / (len(times) - 1)


def time_invocation(backend: Backend, batch, clock: Callable[[], int] = time.perf_counter_ns,
                    directory_name: str = "", ordinal: int = 0) -> TimingRecord:
    """Run one backend call under ``clock`` (integer nanoseconds)."""
    start = clock()
    predictions = backend.infer(batch)
    end = clock()
    predictions.check(len(batch), backend.class_count)
    return TimingRecord(
        image_path=batch.source,
        directory_name=directory_name,
        ordinal_in_directory=ordinal,
        model_seconds=(end - start) / 1e9,
        window_count=len(batch),
        captured_ns=end,
    )


def directory_summary(records: Sequence[TimingRecord], wall_seconds: float, name: Optional[str] = None) -> DirectoryTiming:
    records = list(records)
    if name is None:
        name = records[0].directory_name if records else ""
    return DirectoryTiming(name, records, wall_seconds, warm_mean([r.model_seconds for r in records]))


def summarize_run(directories: Sequence[DirectoryTiming], total_images: Optional[int] = None,
                  config_echo: Optional[dict] = None, warnings: Optional[list] = None) -> RunSummary:
    directories = list(directories)
    pooled = [r.model_seconds for d in directories for r in d.records[1:]]
    global_avg = math.fsum(pooled) / len(pooled) if pooled else None
    if total_images is None:
        total_images = sum(len(d.records) for d in directories)
    return RunSummary(directories, global_avg, total_images, dict(config_echo or {}), list(warnings or []))


@dataclass(frozen=True)
class ProgressEvent:
    processed: int
    total: int
    elapsed_seconds: float

    @property
    def fraction(self) -> float:
        return self.processed / self.total if self.total else 1.0

    @property
    def images_per_second(self) -> float:
        return self.processed / self.elapsed_seconds if self.elapsed_seconds > 0 else 0.0


class ProgressTracker:
    """Counts processed images; one image is one iteration.

    Events are always kept in ``events`` and logged at debug level. A tqdm
    bar is drawn only when ``interactive`` is set.
    """

    def __init__(self, total_images: int, interactive: bool = False, clock: Callable[[], float] = time.monotonic):
        self.total = total_images
        self.clock = clock
        self.started = clock()
        self.processed = 0
        self.events: list[ProgressEvent] = []
        self._bar = None
        if interactive:
            from tqdm import tqdm

            self._bar = tqdm(total=total_images, unit="img", dynamic_ncols=True)

    def update(self, n: int = 1) -> ProgressEvent:
        self.processed += n
        event = ProgressEvent(self.processed, self.total, self.clock() - self.started)
        self.events.append(event)
        log.debug("progress %d/%d elapsed=%.3fs rate=%.2f img/s",
                  event.processed, event.total, event.elapsed_seconds, event.images_per_second)
        if self._bar is not None:
            self._bar.update(n)
        return event

    def close(self):
        if self._bar is not None:
            self._bar.close()
            self._bar = None


_DONE = object()


def _prefetch(manifest: DatasetManifest, scales, spec, out: queue.Queue, stop: threading.Event):
    def put(item):
        while not stop.is_set():
            try:
                out.put(item, timeout=0.1)
                return True
            except queue.Full:
                continue
        return False

    try:
        for cat in manifest.directories:
            for path in cat.images:
                try:
                    item = build_batch(decode_image(path), scales, spec, source=str(path))
                except DecodeError as exc:
                    item = exc
                if not put(item):
                    return
    except BaseException as exc:  # surfaced on the orchestration thread
        put(exc)
        return
    put(_DONE)


def run_benchmark(config: RunConfig, backend: Optional[Backend] = None,
                  on_directory: Optional[Callable[[DirectoryTiming], None]] = None,
                  manifest: Optional[DatasetManifest] = None) -> RunSummary:
    """Benchmark every image of the dataset and write the configured reports.

    ``backend`` overrides construction from ``config.backend`` and is left
    open for the caller. ``on_directory`` is called on this thread after each
    directory completes.
    """
    if manifest is None:
        manifest = scan_dataset(config.dataset_root)
    if manifest.total_images == 0:
        raise EmptyDatasetError(f"empty dataset: no image files under {manifest.root}")
    scales = ScaleSet(tuple(config.scales))
    spec = WindowSpec(int(config.window), int(config.stride))

    owned = backend is None
    if owned:
        backend = make_backend(config.backend)
    progress = ProgressTracker(manifest.total_images, interactive=config.progress)
    batches: queue.Queue = queue.Queue(maxsize=PREFETCH_DEPTH)
    stop = threading.Event()
    worker = threading.Thread(target=_prefetch, args=(manifest, scales, spec, batches, stop),
                              name="msbench-prefetch", daemon=True)
    warnings = []
    directories = []
    try:
        worker.start()
        for cat in manifest.directories:
            dir_start = time.perf_counter_ns()
            records = []
            for _ in range(cat.count):
                item = batches.get()
                if isinstance(item, DecodeError):
                    msg = f"skipped {item.path}: {item.reason}"
                    log.warning(msg)
                    warnings.append(msg)
                elif isinstance(item, BaseException):
                    raise item
                else:
                    records.append(time_invocation(backend, item, directory_name=cat.name, ordinal=len(records)))
                progress.update()
            wall = (time.perf_counter_ns() - dir_start) / 1e9
            timing = directory_summary(records, wall, name=cat.name)
            directories.append(timing)
            if on_directory is not None:
                on_directory(timing)
    finally:
        stop.set()
        worker.join(timeout=5.0)
        progress.close()
        if owned:
            backend.close()

    summary = summarize_run(directories, manifest.total_images, config.to_dict(), warnings)
    try:
        write_artifacts(summary, config)
    except ReportError as exc:
        exc.summary = summary
        raise
    return summary


def write_artifacts(summary: RunSummary, config: RunConfig):
    if config.summary_path:
        report.write_summary_text(summary, config.summary_path)
    if config.csv_path:
        report.write_times_csv(summary, config.csv_path)
    if config.plot_dir:
        Path(config.plot_dir).mkdir(parents=True, exist_ok=True)
        report.emit_plot_data(trace_from_summary(summary), config.plot_dir)
