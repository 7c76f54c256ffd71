"""Simulation and verification tools for search with two differently priced oracles."""

from .core import CostLedger, Oracle, OracleAssignment, ProblemInstance, STOError, query, random_instance, sto_value

__all__ = [
    "CostLedger",
    "Oracle",
    "OracleAssignment",
    "ProblemInstance",
    "STOError",
    "query",
    "random_instance",
    "sto_value",
]
