from .engine import ConicEngine
from .engines import CvxpyEngine, make_engine
from .program import (
    ConicProgram,
    ConicSolution,
    Diagnostic,
    ProgramBuilder,
    SocBlock,
    SolveStatus,
    dump_program,
    kkt_residuals,
    load_program,
    validate_program,
)

__all__ = [
    "ConicEngine",
    "CvxpyEngine",
    "make_engine",
    "ConicProgram",
    "ConicSolution",
    "Diagnostic",
    "ProgramBuilder",
    "SocBlock",
    "SolveStatus",
    "dump_program",
    "kkt_residuals",
    "load_program",
    "validate_program",
]
