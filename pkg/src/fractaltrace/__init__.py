"""Spectral triples on limit fractals: spectra, zeta functions, singular traces,
dimensions, measures and Connes distances."""

from .dirac import Spectrum, spectrum, symmetric_spectrum, to_step_function
from .fractalspec import (
    FractalSpec,
    GapSequence,
    GaugeFunction,
    Similarity,
    SpecValidationError,
    cantor,
    load_spec,
    self_similar,
    spec_from_dict,
    symmetric,
)
from .seqcore import DEFAULT_POLICY, StepFunction, WindowPolicy
from .traces import DEFAULT_PROCEDURES, LimitProcedure

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_POLICY",
    "DEFAULT_PROCEDURES",
    "FractalSpec",
    "GapSequence",
    "GaugeFunction",
    "LimitProcedure",
    "Similarity",
    "SpecValidationError",
    "Spectrum",
    "StepFunction",
    "WindowPolicy",
    "cantor",
    "load_spec",
    "self_similar",
    "spec_from_dict",
    "spectrum",
    "symmetric",
    "symmetric_spectrum",
    "to_step_function",
]
