"""Minimal deterministic neural-network engine (numpy, manual backprop)."""

from .layers import BiLSTM, Dense, Flatten, Softmax, Tanh
from .losses import cel_loss, mse_loss, mse_loss_grad, softmax_cel, softmax_forward
from .model import Sequential
from .optim import Adam
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "BiLSTM", "Dense", "Flatten", "Softmax", "Tanh", "Sequential", "Adam",
    "cel_loss", "mse_loss", "mse_loss_grad", "softmax_cel", "softmax_forward",
    "save_checkpoint", "load_checkpoint",
]
