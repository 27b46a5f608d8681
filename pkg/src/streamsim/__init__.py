"""Discover, keep up to date and simulate business process models from event streams."""
from .alignment import align, replays
from .descriptive import DescriptiveSet, update_descriptive
from .discovery import discover_initial_tree
from .metrics import DistanceReport, evaluate_pair, wasserstein_1d
from .online.predictive import PredictiveSet, build_training_instances, update_predictive_set
from .repair import incremental_update, repair_fragments
from .simulator import BpsModel, SimConfig, simulate
from .stream import CompletionPolicy, Event, StreamWindow, TraceFragment, assemble_fragments, partition_into_windows
from .tree import ProcessTree

__version__ = "0.1.0"

__all__ = [
    "BpsModel",
    "CompletionPolicy",
    "DescriptiveSet",
    "DistanceReport",
    "Event",
    "PredictiveSet",
    "ProcessTree",
    "SimConfig",
    "StreamWindow",
    "TraceFragment",
    "align",
    "assemble_fragments",
    "build_training_instances",
    "discover_initial_tree",
    "evaluate_pair",
    "incremental_update",
    "partition_into_windows",
    "repair_fragments",
    "replays",
    "simulate",
    "update_descriptive",
    "update_predictive_set",
    "wasserstein_1d",
]
