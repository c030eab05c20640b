"""Simultaneous contact-position and tool-shape estimation from planar
force/torque streams.

A particle filter tracks the contact point of a rigid tool from wrench
measurements alone; each particle carries its own grid of shape scores,
updated deterministically from that particle's trajectory, so the
high-dimensional shape never has to be sampled.  The package also ships
a contact simulator, reference estimators (known-shape oracle,
forgetting-factor least squares, naive joint-space particle filter),
error metrics, and a benchmark CLI.
"""

from wrenchmap.filter import (
    FilterConfig,
    FilterState,
    Particle,
    estimate_position,
    estimate_shape,
    ess,
    handle_contact_loss,
    init_filter,
    process_wrench,
    resample,
    step,
)
from wrenchmap.geometry import (
    LineOfAction,
    Wrench,
    line_of_action,
    moment_residual,
    point_in_double_cone,
    predict_moment,
)
from wrenchmap.shapegrid import (
    GridGeometry,
    ShapeGrid,
    ShapeUpdateParams,
    load_snapshot,
    save_snapshot,
    shape_update,
)
from wrenchmap.simulator import ForceScript, ToolShape, simulate

__version__ = "0.1.0"

__all__ = [
    "FilterConfig",
    "FilterState",
    "ForceScript",
    "GridGeometry",
    "LineOfAction",
    "Particle",
    "ShapeGrid",
    "ShapeUpdateParams",
    "ToolShape",
    "Wrench",
    "__version__",
    "ess",
    "estimate_position",
    "estimate_shape",
    "handle_contact_loss",
    "init_filter",
    "line_of_action",
    "load_snapshot",
    "moment_residual",
    "point_in_double_cone",
    "predict_moment",
    "process_wrench",
    "resample",
    "save_snapshot",
    "shape_update",
    "simulate",
    "step",
]
