"""Image-fidelity objective: sigmoid resist model, binary target, squared error."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import expit

from .geometry import points_in_polygon, polygon_signed_area
from .optics import ImageGrid


@dataclass(frozen=True)
class ResistModel:
    """Smooth threshold surrogate: sig(x) = 1 / (1 + exp(-a (x - tr)))."""

    steepness: float = 90.0
    threshold: float = 0.3

    def __post_init__(self):
        if self.steepness <= 0:
            raise ValueError("sigmoid steepness must be positive")
        if self.threshold <= 0:
            raise ValueError("resist threshold must be positive")


def sigmoid(x, model: ResistModel):
    """Logistic resist response; saturates without overflow, sig(tr) = 0.5."""
    return expit(model.steepness * (np.asarray(x, dtype=float) - model.threshold))


def sigmoid_derivative(x, model: ResistModel):
    """d/dx of the resist sigmoid: a * sig * (1 - sig).

    The complement is evaluated as expit(-z) rather than 1 - expit(z) so the
    derivative keeps full relative accuracy on both saturated tails.
    """
    z = model.steepness * (np.asarray(x, dtype=float) - model.threshold)
    return model.steepness * expit(z) * expit(-z)


def rasterize_target(polygons, grid: ImageGrid) -> np.ndarray:
    """Binary target raster: pixel = 1 iff its sample point is inside any polygon.

    Uses the even-odd rule. Polygons must be simple and in the same units as
    the grid.
    """
    raster = np.zeros((grid.nx, grid.ny), dtype=np.uint8)
    px, py = grid.flat_coords()
    for poly in polygons:
        poly = np.asarray(poly, dtype=float)
        if len(poly) < 3 or abs(polygon_signed_area(poly)) == 0.0:
            raise ValueError("degenerate target polygon")
        raster |= points_in_polygon(px, py, poly).reshape(grid.nx, grid.ny)
    return raster


def objective_value(intensity_array: np.ndarray, target: np.ndarray,
                    model: ResistModel, grid: ImageGrid,
                    area_weighted: bool = True) -> float:
    """Discrete image-fidelity error J = sum (sig(I) - target)^2 * dx * dy.

    `area_weighted=False` drops the pixel-area factor for callers that prefer
    the unweighted sum-of-squares convention.
    """
    intensity_array = np.asarray(intensity_array, dtype=float)
    if intensity_array.shape != np.shape(target):
        raise ValueError("intensity and target shapes differ")
    if intensity_array.shape != (grid.nx, grid.ny):
        raise ValueError("intensity shape does not match the grid")
    residual = sigmoid(intensity_array, model) - np.asarray(target, dtype=float)
    weight = grid.pixel_area if area_weighted else 1.0
    return float(np.sum(residual * residual) * weight)


class PrintReport(NamedTuple):
    printed: np.ndarray
    epe: np.ndarray
    epe_count: int


def print_and_epe(intensity_array: np.ndarray, target: np.ndarray,
                  model: ResistModel) -> PrintReport:
    """Hard-threshold print raster and its XOR mismatch against the target.

    The EPE raster marks pixels where the printed pattern disagrees with the
    target; the count is the number of such pixels.
    """
    intensity_array = np.asarray(intensity_array, dtype=float)
    if intensity_array.shape != np.shape(target):
        raise ValueError("intensity and target shapes differ")
    printed = (intensity_array >= model.threshold).astype(np.uint8)
    epe = printed ^ np.asarray(target, dtype=np.uint8)
    return PrintReport(printed, epe, int(epe.sum()))
