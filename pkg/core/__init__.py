"""
Core module for erpbench.

This module contains ERP preprocessing, spectral analysis, handcrafted
feature extraction, the linear classifier, the benchmark harness and
dataset/result storage.
"""

from .benchmark import BenchmarkRunner, ExperimentConfig, RunResult, run_benchmark, summarize_runs
from .classifier import LinearModel, TrainConfig, predict_proba, train_linear
from .datasets import DATASET_PROFILES, DatasetProfile, get_profile
from .exceptions import ErpBenchError
from .features import FeatureExtractor, FeatureMatrix, PyramidSpec
from .fixtures import load_fixture, load_patch_fixture
from .metrics import MetricSet, compute_metrics
from .preprocessing import PreprocessConfig, Preprocessor, preprocess_recording
from .ranking import RankTable, aggregate_and_rank
from .recording import EpochSpec, EventMarker, Recording, TrialSet
from .spectral import SpectralConfig, welch_psd
from .splits import SplitPlan, monte_carlo_split
from .storage import read_erpb, write_erpb
from .synth import SynthSpec, synth_dataset

__all__ = [
    'ErpBenchError',
    'Recording',
    'EventMarker',
    'EpochSpec',
    'TrialSet',
    'PreprocessConfig',
    'Preprocessor',
    'preprocess_recording',
    'SpectralConfig',
    'welch_psd',
    'FeatureExtractor',
    'FeatureMatrix',
    'PyramidSpec',
    'MetricSet',
    'compute_metrics',
    'TrainConfig',
    'LinearModel',
    'train_linear',
    'predict_proba',
    'SplitPlan',
    'monte_carlo_split',
    'ExperimentConfig',
    'RunResult',
    'BenchmarkRunner',
    'run_benchmark',
    'summarize_runs',
    'RankTable',
    'aggregate_and_rank',
    'DatasetProfile',
    'DATASET_PROFILES',
    'get_profile',
    'load_fixture',
    'load_patch_fixture',
    'SynthSpec',
    'synth_dataset',
    'read_erpb',
    'write_erpb',
]

__version__ = '0.1.0'
