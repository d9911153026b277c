"""Deterministic simulator for decentralized peer-to-peer learning under
temporal concept shift: HAST, DAC, and Random gossip protocols over a small
dense-network learning core."""

from .config import DatasetSpec, ExperimentConfig, ScheduleSpec
from .data import ConceptSpec, ShiftSchedule
from .nn import Batch, DenseLayer, GradientSet, LayeredModel
from .orchestrator import RunResult, run_experiment
from .protocols import ProtocolConfig

__all__ = [
    "Batch",
    "ConceptSpec",
    "DatasetSpec",
    "DenseLayer",
    "ExperimentConfig",
    "GradientSet",
    "LayeredModel",
    "ProtocolConfig",
    "RunResult",
    "ScheduleSpec",
    "ShiftSchedule",
    "run_experiment",
]
