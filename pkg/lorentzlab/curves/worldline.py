from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np
from django.conf import settings

from core.exceptions import InvalidInput, UndefinedInput
from core.export import write_csv
from spacetime.metric import MetricField, future_causal


@dataclass(frozen=True, eq=False)
class PolygonalWorldline:
    """
    Piecewise linear curve in the cover R^n

    vertices: (k, n) array, k >= 2, consecutive vertices distinct
    metric_ref: name of the metric field the curve lives on
    diagnostics: free-form record filled by the producer (energies, truncation)
    """

    vertices: np.ndarray
    metric_ref: str = ''
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        vertices = np.atleast_2d(np.asarray(self.vertices, dtype=float))

        if len(vertices) < 2:
            raise InvalidInput('A worldline needs at least two vertices')

        if not np.all(np.isfinite(vertices)):
            raise InvalidInput('Worldline vertices must be finite')

        if np.any(np.all(np.diff(vertices, axis=0) == 0, axis=1)):
            raise InvalidInput('Consecutive worldline vertices must be distinct')

        object.__setattr__(self, 'vertices', vertices)

    @property
    def displacement(self) -> np.ndarray:
        return self.vertices[-1] - self.vertices[0]

    @property
    def segments(self) -> np.ndarray:
        return np.diff(self.vertices, axis=0)

    def translated(self, shift) -> 'PolygonalWorldline':
        return PolygonalWorldline(self.vertices + np.asarray(shift, dtype=float), self.metric_ref)

    def concatenated(self, other: 'PolygonalWorldline') -> 'PolygonalWorldline':
        if not np.allclose(self.vertices[-1], other.vertices[0]):
            raise InvalidInput('Worldlines do not join')

        return PolygonalWorldline(np.concatenate([self.vertices, other.vertices[1:]]), self.metric_ref)


class CurveLengths(NamedTuple):
    lorentzian: float
    riemannian: float
    spacelike: int


class FuturePointing(NamedTuple):
    ok: bool
    segment: Optional[int]


def sample_positions(subdiv: int) -> np.ndarray:
    """ Positions along a segment where causality is checked, endpoints included """

    return np.linspace(0.0, 1.0, max(subdiv, 2))


def curve_lengths(m: MetricField, curve: PolygonalWorldline, subdiv: int = None) -> CurveLengths:
    """ Midpoint-rule Lorentzian and Riemannian lengths, spacelike subsegments counted """

    subdiv = subdiv or settings.CURVE_SUBDIV

    if subdiv < 1:
        raise InvalidInput('subdiv must be at least 1')

    starts, segments = curve.vertices[:-1], curve.segments / subdiv
    offsets = (np.arange(subdiv) + 0.5)[:, None, None] * segments[None, :, :]

    midpoints = (starts[None, :, :] + offsets).reshape(-1, m.dim)
    steps = np.broadcast_to(segments, (subdiv,) + segments.shape).reshape(-1, m.dim)

    values = m.quad(midpoints, steps)
    riemannian = m.riemannian_norm(midpoints, steps)

    return CurveLengths(
        lorentzian=float(np.sqrt(np.clip(-values, 0, None)).sum()),
        riemannian=float(riemannian.sum()),
        spacelike=int(np.count_nonzero(values > settings.NULL_TOLERANCE * riemannian ** 2)),
    )


def is_future_pointing(m: MetricField, curve: PolygonalWorldline, subdiv: int = None) -> FuturePointing:
    """ Every segment future causal at each sample, else the first offending segment """

    positions = sample_positions(subdiv or settings.CURVE_SUBDIV)
    starts, segments = curve.vertices[:-1], curve.segments

    points = starts[None, :, :] + positions[:, None, None] * segments[None, :, :]
    directions = np.broadcast_to(segments, points.shape)

    causal = future_causal(m, points.reshape(-1, m.dim), directions.reshape(-1, m.dim))
    good = causal.reshape(len(positions), -1).all(axis=0)

    if good.all():
        return FuturePointing(True, None)

    return FuturePointing(False, int(np.argmin(good)))


def rotation_vector(m: MetricField, curve: PolygonalWorldline) -> np.ndarray:
    """
    Displacement over g_R-arclength

    :raises: UndefinedInput
    """

    length = curve_lengths(m, curve).riemannian

    if length == 0:
        raise UndefinedInput('Rotation vector of a zero-length curve is undefined')

    return curve.displacement / length


def export_worldline(curve: PolygonalWorldline, file_path: Path) -> Path:
    """ One vertex per row """

    dim = curve.vertices.shape[1]
    header = ['index'] + [f'p{i}' for i in range(dim)]

    return write_csv(file_path, header, ([i, *vertex.tolist()] for i, vertex in enumerate(curve.vertices)))
