"""Synthetic truth, observations, plans and dataset persistence."""
from .generate import (SPINUP_STEPS, SPLITS, Dataset, Trajectory, build_dataset, dataset_meta, initial_ensemble,
                       make_trajectory, make_true_system, observe, simulate_truth, stream, truth_initial_state)
from .io import load_dataset, save_dataset, system_from_meta
from .plans import ObservationPlan, make_plan, systematic_indices

__all__ = [
    "SPINUP_STEPS", "SPLITS", "Dataset", "ObservationPlan", "Trajectory", "build_dataset", "dataset_meta",
    "initial_ensemble", "load_dataset", "make_plan", "make_trajectory", "make_true_system", "observe",
    "save_dataset", "simulate_truth", "stream", "system_from_meta", "systematic_indices",
    "truth_initial_state",
]
