"""Pharmacy availability broker: bindings to the C++ core."""

from ._core import (
    Catalog,
    ConflictError,
    DomainError,
    InvalidTrace,
    InvalidTransition,
    MedlocError,
    NotFoundError,
    ParseError,
    Registry,
    Request,
    Transition,
    ValidationError,
    cancel,
    chi_square,
    chi_square_sf,
    classify,
    describe,
    haversine_km,
    open_request,
    record_response,
    replay,
    run_scenario,
    stats_report,
    tabulate,
    tick,
)

__all__ = [
    "Catalog",
    "ConflictError",
    "DomainError",
    "InvalidTrace",
    "InvalidTransition",
    "MedlocError",
    "NotFoundError",
    "ParseError",
    "Registry",
    "Request",
    "Transition",
    "ValidationError",
    "cancel",
    "chi_square",
    "chi_square_sf",
    "classify",
    "describe",
    "haversine_km",
    "open_request",
    "record_response",
    "replay",
    "run_scenario",
    "stats_report",
    "tabulate",
    "tick",
]
