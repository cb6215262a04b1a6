"""Weighted Cartesian Genetic Programming over any numeric field."""
from .kernels import Kernel, KernelSet, kernel
from .program import (
    CgpParams,
    Chromosome,
    EvaluationError,
    InactiveWeight,
    Violation,
    active_genes,
    active_inputs,
    active_nodes,
    active_weights,
    default_input_names,
    evaluate,
    expression_string,
    mutate_active,
    output_genes,
    promote_weights,
    random_chromosome,
    validate,
    weight_index,
    weight_name,
)

__all__ = [
    "CgpParams", "Chromosome", "EvaluationError", "InactiveWeight", "Kernel", "KernelSet",
    "Violation", "active_genes", "active_inputs", "active_nodes", "active_weights",
    "default_input_names", "evaluate", "expression_string", "kernel", "mutate_active",
    "output_genes", "promote_weights", "random_chromosome", "validate", "weight_index",
    "weight_name",
]
