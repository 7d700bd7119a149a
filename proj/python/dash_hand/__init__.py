"""Python access to the soft-hand teleoperation core."""

from ._dash import (
    ComputationError,
    DashError,
    IoError,
    ValidationError,
    calibrate,
    design_params,
    evaluate,
    forward,
    hand_versions,
    implied_weights,
    invert_mcp,
    reference_weights,
    retarget,
    simulate,
    split_curl,
    tasks,
)

__all__ = [
    "ComputationError",
    "DashError",
    "IoError",
    "ValidationError",
    "calibrate",
    "design_params",
    "evaluate",
    "forward",
    "hand_versions",
    "implied_weights",
    "invert_mcp",
    "reference_weights",
    "retarget",
    "simulate",
    "split_curl",
    "tasks",
]
