"""
Data models for the distributed MAC toolkit

This package contains the channel, code-ensemble, simulation and report
dataclasses shared by the computation modules and the CLI.
"""

from .channel_models import ChannelModel, binary_symmetric_family
from .code_models import (
    CodeEnsembleVector, CodeIndexVector, CodeOption, OperationConfig, RateUnit,
    WeightAssignment, Zone,
)
from .report_models import (
    ExponentReport, GepBoundReport, PartitionAssignment, PartitionBoundReport,
    RegionVerdict, RunManifest, SimulationReport,
)
from .simulation_models import CodebookSet, DecodeOutcome, ErrorMode, ThresholdPolicy

__all__ = [
    'ChannelModel',
    'binary_symmetric_family',
    'CodeEnsembleVector',
    'CodeIndexVector',
    'CodeOption',
    'OperationConfig',
    'RateUnit',
    'WeightAssignment',
    'Zone',
    'ExponentReport',
    'GepBoundReport',
    'PartitionAssignment',
    'PartitionBoundReport',
    'RegionVerdict',
    'RunManifest',
    'SimulationReport',
    'CodebookSet',
    'DecodeOutcome',
    'ErrorMode',
    'ThresholdPolicy',
]
