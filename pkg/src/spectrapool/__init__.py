"""Stream classification with a reusable pool of Fourier-encoded trees.

The package splits into layers: `space`/`fourier` hold the spectral
representation of decision trees, `trees` the incremental forest, `drift`
the change detectors, `pool` the capture/reuse engine, `streams` synthetic
generation and file ingestion, and `evaluation` the prequential harness.
`service` and `cli` wrap all of it for HTTP and the command line.
"""

from .drift import AdwinDetector, BlockSeqDetector, make_detector
from .evaluation import (
    EvalOptions,
    RunReport,
    SweepJob,
    parse_config,
    pool_memory_kb,
    prequential_run,
    report_csv,
    sweep,
)
from .fourier import (
    Spectrum,
    aggregate,
    basis,
    dft_brute_force,
    dft_from_tree,
    energy_threshold,
    expand_spectrum,
    inverse_classify,
    partition_order,
    spectrum_from_text,
    spectrum_to_text,
    total_energy,
)
from .pool import ConceptPoolEngine, PoolConfig, PoolEntry
from .space import WILDCARD, AttributeSpace, Schema
from .streams import (
    ConceptSchedule,
    Stream,
    hyperplane_stream,
    load_arff,
    load_csv,
    load_stream_csv,
    moving_average_label,
    save_stream_csv,
    stream_to_csv,
)
from .trees import HoeffdingForest, HoeffdingTree

__version__ = "0.1.0"

__all__ = [
    "AdwinDetector",
    "AttributeSpace",
    "BlockSeqDetector",
    "ConceptPoolEngine",
    "ConceptSchedule",
    "EvalOptions",
    "HoeffdingForest",
    "HoeffdingTree",
    "PoolConfig",
    "PoolEntry",
    "RunReport",
    "Schema",
    "Spectrum",
    "Stream",
    "SweepJob",
    "WILDCARD",
    "aggregate",
    "basis",
    "dft_brute_force",
    "dft_from_tree",
    "energy_threshold",
    "expand_spectrum",
    "hyperplane_stream",
    "inverse_classify",
    "load_arff",
    "load_csv",
    "load_stream_csv",
    "make_detector",
    "moving_average_label",
    "parse_config",
    "partition_order",
    "pool_memory_kb",
    "prequential_run",
    "report_csv",
    "save_stream_csv",
    "spectrum_from_text",
    "spectrum_to_text",
    "stream_to_csv",
    "sweep",
    "total_energy",
    "__version__",
]
