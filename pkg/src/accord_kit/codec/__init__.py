"""ACCORD and list-of-lists solution texts: render, parse, validate."""
from .parse import AccordTrace, ListParse, Scanner, parse_accord, parse_list
from .render import render, render_accord, render_list
from .validate import (
    Finding,
    Status,
    ValidationReport,
    validate_accord,
    validate_list,
    validate_text,
    validate_trace,
)

__all__ = [
    "AccordTrace",
    "Finding",
    "ListParse",
    "Scanner",
    "Status",
    "ValidationReport",
    "parse_accord",
    "parse_list",
    "render",
    "render_accord",
    "render_list",
    "validate_accord",
    "validate_list",
    "validate_text",
    "validate_trace",
]
