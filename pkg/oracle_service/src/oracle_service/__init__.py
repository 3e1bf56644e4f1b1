"""Toy LSTM/transformer sequence classifiers behind the regrobust oracle
wire protocol (regrobust-oracle/1)."""

from .data import DataFormatError, load_dataset
from .train import TrainConfig, train
from .serve import ModelOracle, serve_stdio, serve_tcp

__all__ = [
    "DataFormatError",
    "ModelOracle",
    "TrainConfig",
    "load_dataset",
    "serve_stdio",
    "serve_tcp",
    "train",
]
