import logging
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np
from django.conf import settings
from scipy.sparse.csgraph import dijkstra

from cones.norms import SAMPLED, NormModel
from core.exceptions import InvalidInput, WindowOverflow
from reach.grid import coprime_stencil, lattice_graph
from spacetime.metric import MetricField

logger = logging.getLogger(__name__)


@dataclass
class NormRecord:
    """ dist(0, n_max h) / n_max with its plateau trace dist(0, n h) / n """

    h: list
    norm: float
    trace: List[float]
    std_est: float
    metrication: float


@dataclass
class StableNormEstimate:
    values: Dict[tuple, float]
    std_est: float
    plateau_trace: Dict[tuple, List[float]] = field(default_factory=dict)
    metrication: float = 0.0
    resolution: int = 0
    periods: list = None

    def model(self) -> NormModel:
        """ Sampled norm on cover displacements interpolating the estimated values """

        vectors = np.array([h for h in self.values], dtype=float) * np.asarray(self.periods, dtype=float)
        return NormModel.from_values(vectors, np.array(list(self.values.values())))

    def as_dict(self) -> dict:
        return {
            'values': [{'h': list(h), 'norm': value} for h, value in self.values.items()],
            'std_est': self.std_est,
            'plateau_trace': [{'h': list(h), 'trace': trace} for h, trace in self.plateau_trace.items()],
            'metrication': self.metrication,
            'resolution': self.resolution,
            'periods': self.periods,
        }


class LatticeDistance:
    """
    Riemannian distances on the cover by shortest paths on a coprime-stencil lattice

    Edge weights are g_R lengths of the straight steps (midpoint rule) and are
    tabulated once per lattice residue.
    """

    def __init__(self, m: MetricField, resolution: int = None, radius: int = None):
        self.m = m
        self.resolution = resolution or settings.STABLE_NORM_RESOLUTION
        self.spacing = m.periods / self.resolution
        self.stencil = coprime_stencil(m.dim, radius or settings.STABLE_NORM_RADIUS[m.dim])
        self.table = self._weights()

    def _weights(self) -> np.ndarray:
        m, stencil = self.m, self.stencil
        steps = stencil * self.spacing

        if m.riemannian_identity:
            return np.linalg.norm(steps, axis=1)[None, :]

        count = self.resolution
        residues = np.stack(np.meshgrid(*[np.arange(count)] * m.dim, indexing='ij'), axis=-1).reshape(-1, m.dim)
        starts = residues * self.spacing

        subdiv = settings.CURVE_SUBDIV
        table = np.zeros((len(starts), len(stencil)))

        for index, step in enumerate(steps):
            for k in range(subdiv):
                middle = starts + (k + 0.5) / subdiv * step
                table[:, index] += m.riemannian_norm(middle, np.broadcast_to(step / subdiv, middle.shape))

        return table

    def metrication(self, vector) -> float:
        """ Relative excess of the constant-weight lattice distance over the euclidean one along a vector """

        steps = self.stencil * self.spacing
        model = NormModel(kind=SAMPLED, points=steps / np.linalg.norm(steps, axis=1, keepdims=True))
        vector = np.asarray(vector, dtype=float)

        return model.norm(vector) / np.linalg.norm(vector) - 1.0

    def distances(self, targets) -> np.ndarray:
        """
        Distances from the origin to the cover points nearest to each target lattice node

        :raises: WindowOverflow
        """

        targets = np.rint(np.atleast_2d(np.asarray(targets, dtype=float)) / self.spacing).astype(int)
        margin = self.resolution

        low = np.minimum(targets.min(axis=0), 0) - margin
        high = np.maximum(targets.max(axis=0), 0) + margin
        shape = tuple(high - low + 1)
        size = int(np.prod(shape))

        if size > settings.STABLE_MAX_NODES:
            required = int(np.ceil(np.max(np.abs(targets) / self.resolution)))
            raise WindowOverflow(f'Lattice of {size} nodes exceeds {settings.STABLE_MAX_NODES}', required=required)

        radix = (self.resolution,) * self.m.dim

        def weights(offsets, index):
            if len(self.table) == 1:
                return np.full(len(offsets), self.table[0, index])

            residues = np.ravel_multi_index(tuple(np.mod(offsets, self.resolution).T), radix)
            return self.table[residues, index]

        graph = lattice_graph(shape, low, self.stencil, weights)
        source = int(np.ravel_multi_index(tuple(-low), shape))
        distances = dijkstra(graph, directed=True, indices=source)

        logger.debug(f'Lattice distances on {self.m.name}: {size} nodes, resolution {self.resolution}')

        return distances[np.ravel_multi_index(tuple((targets - low).T), shape)]


def stable_norm(m: MetricField, h, n_max: int = None, resolution: int = None,
                lattice: LatticeDistance = None) -> NormRecord:
    """
    Stable norm of a lattice class from the plateau of dist(0, n h) / n

    :raises: InvalidInput, WindowOverflow
    """

    n_max = n_max or settings.STABLE_NORM_STEPS
    h = np.asarray(h, dtype=float)

    if n_max < 8:
        raise InvalidInput(f'n_max must be at least 8, got {n_max}')

    if h.shape != (m.dim,) or not np.any(h):
        raise InvalidInput(f'h must be a nonzero vector of R^{m.dim}')

    lattice = lattice or LatticeDistance(m, resolution)
    multiples = np.arange(1, n_max + 1)
    distances = lattice.distances(multiples[:, None] * h * m.periods)

    norm = float(distances[-1] / n_max)
    std_est = float(np.max(np.abs(distances - multiples * norm)))

    return NormRecord(h.tolist(), norm, (distances / multiples).tolist(), std_est, lattice.metrication(h * m.periods))


def default_directions(dim: int) -> np.ndarray:
    """ Lattice classes with entries in {-1, 0, 1}, one per antipodal pair """

    grid = np.stack(np.meshgrid(*[[-1, 0, 1]] * dim, indexing='ij'), axis=-1).reshape(-1, dim)
    first = np.array([row[np.flatnonzero(row)[0]] if np.any(row) else 0 for row in grid])
    return grid[first > 0]


def stable_norm_estimate(m: MetricField, directions=None, n_max: int = None,
                         resolution: int = None) -> StableNormEstimate:
    """ Stable norm sampled on lattice directions, sharing one lattice """

    directions = default_directions(m.dim) if directions is None else np.atleast_2d(directions)
    lattice = LatticeDistance(m, resolution)
    records = [stable_norm(m, h, n_max, lattice=lattice) for h in directions]

    return StableNormEstimate(
        values={tuple(int(v) for v in record.h): record.norm for record in records},
        std_est=max(record.std_est for record in records),
        plateau_trace={tuple(int(v) for v in record.h): record.trace for record in records},
        metrication=max(record.metrication for record in records),
        resolution=lattice.resolution,
        periods=m.periods.tolist(),
    )
