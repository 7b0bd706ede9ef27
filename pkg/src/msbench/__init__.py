"""Inference latency benchmark for multi-scale material segmentation workloads."""

from .analysis import Trace, classify_run, compare_runs, detect_regimes, temporal_series
from .backend import BackendDescriptor, LatencyModel, make_backend
from .dataset import LayoutExpectation, SyntheticSpec, gen_synthetic_dataset, scan_dataset, validate_layout
from .harness import RunConfig, RunSummary, run_benchmark
from .imaging import ScaleSet, WindowSpec, build_batch, decode_image, generate_windows, scale_image
from .stats import percentile, summarize

__version__ = "0.1.0"
