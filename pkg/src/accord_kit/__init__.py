"""Combinatorial optimization instances, reference solvers and the ACCORD solution text format."""
from .problems import Kind, instance_from_json, instance_to_json, solution_from_json, solution_to_json

__version__ = "0.1.0"

__all__ = ["Kind", "instance_from_json", "instance_to_json", "solution_from_json", "solution_to_json"]
