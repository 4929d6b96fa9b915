"""k-support norm regularized risk minimization."""
__version__ = "0.1.0"

from .data import Dataset, ToyConfig, classify, generate_toy, predict_scores, read_csv, write_csv
from .losses import LossSpec, lipschitz_constant, loss_gradient, loss_value
from .modelsel import GridSpec, accuracy, grid_search, mse, run_experiment
from .norms import find_r, ksup_norm, prox_ksup_sq, prox_oracle
from .solver import FitResult, SolverConfig, fit, objective, spectral_norm_sq

__all__ = [
    "Dataset", "ToyConfig", "classify", "generate_toy", "predict_scores", "read_csv", "write_csv",
    "LossSpec", "lipschitz_constant", "loss_gradient", "loss_value",
    "GridSpec", "accuracy", "grid_search", "mse", "run_experiment",
    "find_r", "ksup_norm", "prox_ksup_sq", "prox_oracle",
    "FitResult", "SolverConfig", "fit", "objective", "spectral_norm_sq",
]
