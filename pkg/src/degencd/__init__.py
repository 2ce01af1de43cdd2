"""Solver and verification toolkit for degenerate convection-diffusion equations."""

from .grid import (
    Boundary,
    Field,
    GridSpec,
    backward_diff,
    bv_seminorm,
    cell_average_init,
    discrete_laplacian,
    forward_diff,
    l1_error_on_ball,
    l1_norm,
    linf_norm,
    load_field,
    save_field,
    shift_field,
)

__all__ = [
    "Boundary",
    "Field",
    "GridSpec",
    "backward_diff",
    "bv_seminorm",
    "cell_average_init",
    "discrete_laplacian",
    "forward_diff",
    "l1_error_on_ball",
    "l1_norm",
    "linf_norm",
    "load_field",
    "save_field",
    "shift_field",
]
