"""Fronthaul quantization-aware MU-MIMO precoding via WMMSE and sphere decoding."""

__version__ = "0.1.0"

from .channel import ArrayGeometry, ChannelRealization, UeDrop, random_drop, sample_channel
from .errors import (BudgetExceeded, ConfigurationError, DomainError, NumericError,
                     SolverFailure, SweepError)
from .ils import IlsInstance, IlsSolution, sesd_solve, solve_quantized_subproblem
from .quantizer import QuantCodebook, build_codebook, optimal_step_size, quantize_matrix
from .schemes import SchemeId, run_scheme
from .wmmse import PrecoderConfig, PrecodingMatrix, WmmseState, run_wmmse, scaled_sum_rate

__all__ = [
    "ArrayGeometry", "ChannelRealization", "UeDrop", "random_drop", "sample_channel",
    "BudgetExceeded", "ConfigurationError", "DomainError", "NumericError", "SolverFailure",
    "SweepError", "IlsInstance", "IlsSolution", "sesd_solve", "solve_quantized_subproblem",
    "QuantCodebook", "build_codebook", "optimal_step_size", "quantize_matrix", "SchemeId",
    "run_scheme", "PrecoderConfig", "PrecodingMatrix", "WmmseState", "run_wmmse",
    "scaled_sum_rate",
]
