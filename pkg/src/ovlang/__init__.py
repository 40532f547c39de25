"""Toolchain for an ownership-typed contract language with validity contracts.

Pipeline: parse -> desugar -> typecheck -> (run | transpile | simulate).
"""
from .ast import Contract, Program
from .diagnostics import Diagnostic, Diagnostics, OvError
from .parser import parse_program
from .desugar import desugar
from .typecheck import check_program
from .runtime import FinalReport, Machine

__all__ = [
    "Contract", "Program", "Diagnostic", "Diagnostics", "OvError",
    "parse_program", "desugar", "check_program", "FinalReport", "Machine",
]
