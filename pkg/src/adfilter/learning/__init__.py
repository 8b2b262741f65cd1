"""Losses, optimizer, scheduler and the TBPTT training loop."""
from .losses import loss_3dvar_k, nll_loss, nll_step, window_loss
from .optim import Adam, PlateauScheduler
from .params import INFLATION0, MIXING0, Param, ParameterSet, init_parameters, split_params
from .train import (Setup, TrainResult, forward, make_setup, model_system, select_learning_rates, tbptt_epoch,
                    train, validation_loss, window_gradient, windows)
from .transforms import TRANSFORMS

__all__ = [
    "Adam", "INFLATION0", "MIXING0", "Param", "ParameterSet", "PlateauScheduler", "Setup", "TRANSFORMS",
    "TrainResult", "forward", "init_parameters", "loss_3dvar_k", "make_setup", "model_system", "nll_loss",
    "nll_step", "select_learning_rates", "split_params", "tbptt_epoch", "train", "validation_loss",
    "window_gradient", "windows",
]
