from .catalog import catalog
from .formula import MsoFormula, partition_wrapper
from .naive import NaiveEvaluator, evaluate_naive
from .parser import parse

__all__ = ["MsoFormula", "NaiveEvaluator", "catalog", "evaluate_naive", "parse",
           "partition_wrapper"]
