import logging
from dataclasses import dataclass
from functools import reduce
from itertools import product
from math import gcd
from pathlib import Path

import numpy as np
from django.conf import settings
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from core.exceptions import InvalidInput
from core.export import write_csv
from curves.worldline import PolygonalWorldline
from spacetime.metric import MetricField

logger = logging.getLogger(__name__)

MIN_COST = 1e-12
SAMPLE_POSITIONS = (0.0, 0.5, 1.0)


def coprime_stencil(dim: int, radius: int) -> np.ndarray:
    """ Nonzero integer offsets with |offset| <= radius and coprime entries """

    offsets = [
        offset for offset in product(range(-radius, radius + 1), repeat=dim)
        if any(offset) and reduce(gcd, (abs(value) for value in offset)) == 1
    ]

    return np.array(offsets, dtype=int).reshape(-1, dim)


def feasible_interval(a, b, c, pairing_time, pairing_step):
    """
    Bounds [lo, hi] of the dt >= 0 for which w = dt * e + s is future causal

    a, b, c are G(e, e), G(e, s), G(s, s) so that G(w, w) = a dt^2 + 2 b dt + c,
    the pairings are g(e, X) and g(s, X). Infeasible rows get lo = inf.
    """

    lo = np.full(a.shape, -np.inf)
    hi = np.full(a.shape, np.inf)
    none = np.zeros(a.shape, dtype=bool)

    disc = b * b - a * c
    root = np.sqrt(np.clip(disc, 0, None))
    half = -(b + np.where(b >= 0, 1.0, -1.0) * root)

    with np.errstate(divide='ignore', invalid='ignore'):
        first = half / a
        second = np.where(half != 0, c / half, np.nan)

    linear = np.abs(a) <= 1e-14 * (1 + np.abs(b) + np.abs(c))
    opening = (a < 0) & ~linear
    closing = (a > 0) & ~linear

    # timelike direction: future part is beyond the larger root
    lo = np.where(opening & (disc >= 0), np.fmax(first, second), lo)

    # null direction: linear constraint 2 b dt + c <= 0
    with np.errstate(divide='ignore', invalid='ignore'):
        bound = -c / (2 * b)

    lo = np.where(linear & (b < 0), bound, lo)
    hi = np.where(linear & (b > 0), bound, hi)
    none |= linear & (b == 0) & (c > 0)

    # spacelike direction: between the roots
    lo = np.where(closing, np.fmin(first, second), lo)
    hi = np.where(closing, np.fmax(first, second), hi)
    none |= closing & (disc < 0)

    with np.errstate(divide='ignore', invalid='ignore'):
        threshold = -pairing_step / pairing_time

    lo = np.where(pairing_time < 0, np.fmax(lo, threshold), lo)
    none |= pairing_time >= 0

    lo = np.maximum(lo, 0.0)
    lo[none] = np.inf

    return lo, hi


@dataclass(frozen=True, eq=False)
class StepTable:
    """
    Minimal time advance of every stencil step, by spatial residue

    substeps: (r^s, K, S) time advance of each sub-step, inf when infeasible
    wait_ok: (r^s,) whether standing still along the time axis is allowed
    """

    stencil: np.ndarray
    substeps: np.ndarray
    wait_ok: np.ndarray

    @property
    def costs(self) -> np.ndarray:
        return self.substeps.sum(axis=-1)


def _time_samples(m: MetricField, origin: np.ndarray) -> np.ndarray:
    if not m.time_dependent:
        return origin[m.time_axis:m.time_axis + 1]

    count = settings.REACH_TIME_SAMPLES
    return origin[m.time_axis] + m.periods[m.time_axis] * np.arange(count) / count


def _expand_times(m: MetricField, points: np.ndarray, times: np.ndarray) -> np.ndarray:
    expanded = np.repeat(points[:, None, :], len(times), axis=1)
    expanded[:, :, m.time_axis] = times
    return expanded.reshape(-1, m.dim)


def _quadratic(m: MetricField, points, e, s, margin):
    g = m.metric(points)
    form = g + margin * m.riemannian(points) if margin else g
    orientation = m.orientation(points)

    a = np.einsum('i,nij,j->n', e, form, e)
    b = np.einsum('i,nij,nj->n', e, form, s)
    c = np.einsum('ni,nij,nj->n', s, form, s)

    return a, b, c, np.einsum('i,nij,nj->n', e, g, orientation), np.einsum('ni,nij,nj->n', s, g, orientation)


def step_table(m: MetricField, origin, resolution: int, stencil: np.ndarray, sense: int = 1,
               margin: float = 0.0) -> StepTable:
    """ Time advance per sub-step at every residue of the spatial grid through origin """

    origin = np.asarray(origin, dtype=float)
    spatial = [axis for axis in range(m.dim) if axis != m.time_axis]
    spacing = m.periods / resolution
    count = settings.REACH_SUBSTEPS

    residues = np.indices((resolution,) * len(spatial)).reshape(len(spatial), -1).T
    base = np.tile(origin, (len(residues), 1))
    base[:, spatial] += residues * spacing[spatial]

    e = np.zeros(m.dim)
    e[m.time_axis] = sense
    times = _time_samples(m, origin)
    samples_per_row = len(SAMPLE_POSITIONS) * len(times)

    substeps = np.empty((len(residues), len(stencil), count))

    for index, offset in enumerate(stencil):
        sub = np.zeros(m.dim)
        sub[spatial] = offset * spacing[spatial] / count

        for k in range(count):
            starts = base + k * sub
            points = np.concatenate([
                _expand_times(m, starts + position * sub, times) for position in SAMPLE_POSITIONS
            ])

            a, b, c, pairing_time, pairing_step = _quadratic(
                m, points, e, np.broadcast_to(sub, points.shape), margin,
            )
            lo, hi = feasible_interval(a, b, c, pairing_time, pairing_step)

            # rows are grouped by sample position, then residue, then time
            lo = lo.reshape(len(SAMPLE_POSITIONS), len(residues), len(times))
            hi = hi.reshape(len(SAMPLE_POSITIONS), len(residues), len(times))
            low, high = lo.max(axis=(0, 2)), hi.min(axis=(0, 2))

            substeps[:, index, k] = np.where(low <= high * (1 + 1e-12) + 1e-15, low, np.inf)

    points = _expand_times(m, base, times)
    a, _, _, pairing_time, _ = _quadratic(m, points, e, np.zeros_like(points), margin)
    wait_ok = ((a <= 1e-12) & (pairing_time < 0)).reshape(len(residues), len(times)).all(axis=1)

    logger.debug(f'Step table for {m.name}: {len(residues)} residues x {len(stencil)} offsets x {count} sub-steps')

    return StepTable(stencil, substeps, wait_ok)


@dataclass(frozen=True, eq=False)
class ReachGrid:
    """
    Grid approximation of J+(x) (or I+(x) with a timelike margin, or J-(x) with sense -1)

    A point (t, y) of the window is reached when sense * (t - t_x) >= arrival(y), where
    arrival(y) is the shortest total time advance of a chain of verified future causal
    steps from x to y on the spatial lattice. Waiting along the time axis is allowed only
    where that axis is itself causal (timelike with the margin); elsewhere only the
    arrival time cell is reached.
    """

    metric_name: str
    source: np.ndarray
    sense: int
    margin: float
    resolution: int
    window: int
    time_axis: int
    spatial_axes: tuple
    spacing: np.ndarray
    periods: np.ndarray
    j_min: np.ndarray
    shape: tuple
    arrival: np.ndarray
    predecessors: np.ndarray
    table: StepTable

    @property
    def time_spacing(self) -> float:
        return float(self.spacing[self.time_axis])

    @property
    def spatial_spacing(self) -> np.ndarray:
        return self.spacing[list(self.spatial_axes)]

    @property
    def box(self) -> np.ndarray:
        return self.window * self.periods

    def node_indices(self, spatial_points) -> tuple:
        """ Nearest spatial node of each point, with an inside-window mask """

        spatial_points = np.atleast_2d(spatial_points)
        origin = self.source[list(self.spatial_axes)]
        j = np.rint((spatial_points - origin) / self.spatial_spacing).astype(int)
        local = j - self.j_min
        inside = np.all((local >= 0) & (local < np.array(self.shape)), axis=1)

        nodes = np.zeros(len(j), dtype=int)
        nodes[inside] = np.ravel_multi_index(tuple(local[inside].T), self.shape)

        return nodes, inside

    def node_offsets(self, nodes) -> np.ndarray:
        return np.stack(np.unravel_index(nodes, self.shape), axis=-1) + self.j_min

    def node_points(self, nodes) -> np.ndarray:
        points = np.tile(self.source, (len(np.atleast_1d(nodes)), 1))
        points[:, list(self.spatial_axes)] += self.node_offsets(nodes) * self.spatial_spacing
        return points

    def residues(self, nodes) -> np.ndarray:
        offsets = np.mod(self.node_offsets(nodes), self.resolution)
        return np.ravel_multi_index(tuple(offsets.T), (self.resolution,) * len(self.spatial_axes))

    def _reached(self, relative, nodes) -> np.ndarray:
        arrival = self.arrival[nodes]
        ok = relative >= arrival - 1e-9
        waiting = self.table.wait_ok[self.residues(nodes)]
        return ok & (waiting | (relative < arrival + self.time_spacing))

    def reached(self, points) -> np.ndarray:
        """ Reached flags of arbitrary points, False outside the window """

        points = np.atleast_2d(np.asarray(points, dtype=float))
        nodes, inside = self.node_indices(points[:, list(self.spatial_axes)])
        relative = self.sense * (points[:, self.time_axis] - self.source[self.time_axis])
        inside &= np.abs(points[:, self.time_axis]) <= self.box[self.time_axis] + 1e-9

        result = np.zeros(len(points), dtype=bool)
        result[inside] = self._reached(relative[inside], nodes[inside])
        return result

    def time_offsets(self) -> np.ndarray:
        """ Time grid of the window, relative to the source, in the reach direction """

        step = self.time_spacing
        t0 = self.source[self.time_axis]
        bound = self.box[self.time_axis]

        lower = np.ceil((-bound - t0) / step)
        upper = np.floor((bound - t0) / step)
        offsets = np.arange(lower, upper + 1) * step

        return np.sort(self.sense * offsets)

    def reached_mask(self) -> np.ndarray:
        """ (time cells, spatial nodes) bit-set over the window grid """

        relative = self.time_offsets()
        nodes = np.arange(len(self.arrival))
        arrival = self.arrival[None, :]
        mask = relative[:, None] >= arrival - 1e-9
        waiting = self.table.wait_ok[self.residues(nodes)][None, :]

        return mask & (waiting | (relative[:, None] < arrival + self.time_spacing))

    def points(self) -> np.ndarray:
        """ Absolute coordinates of every reached grid point """

        mask = self.reached_mask()
        times, nodes = np.nonzero(mask)
        points = self.node_points(nodes)
        points[:, self.time_axis] = self.source[self.time_axis] + self.sense * self.time_offsets()[times]
        return points

    def chain(self, q) -> PolygonalWorldline:
        """
        Recorded chain of future causal sub-steps from the source to q

        :raises: InvalidInput
        """

        q = np.asarray(q, dtype=float)

        if not self.reached(q)[0]:
            raise InvalidInput(f'{q.tolist()} is not reached')

        node = int(self.node_indices(q[list(self.spatial_axes)])[0][0])
        path = [node]

        while self.predecessors[path[-1]] >= 0:
            path.append(int(self.predecessors[path[-1]]))

        path.reverse()
        offsets = self.node_offsets(np.array(path))
        lookup = {tuple(offset): index for index, offset in enumerate(self.table.stencil)}
        count = self.table.substeps.shape[-1]

        vertices = [self.source.copy()]

        for start, (a, b) in zip(path, zip(offsets, offsets[1:])):
            residue = self.residues(np.array([start]))[0]
            index = lookup[tuple(b - a)]
            sub = np.zeros(len(self.source))
            sub[list(self.spatial_axes)] = (b - a) * self.spatial_spacing / count

            for k in range(count):
                vertex = vertices[-1] + sub
                vertex[self.time_axis] += self.sense * self.table.substeps[residue, index, k]
                vertices.append(vertex)

        final = vertices[-1].copy()
        final[self.time_axis] = q[self.time_axis]

        if self.sense * (final[self.time_axis] - vertices[-1][self.time_axis]) > 1e-12:
            vertices.append(final)

        return PolygonalWorldline(np.array(vertices), self.metric_name, {'nodes': len(path)})


def _node_box(m: MetricField, x: np.ndarray, window: int, resolution: int):
    spatial = [axis for axis in range(m.dim) if axis != m.time_axis]
    spacing = m.periods / resolution
    bound = window * m.periods[spatial]

    j_min = np.ceil((-bound - x[spatial]) / spacing[spatial] - 1e-9).astype(int)
    j_max = np.floor((bound - x[spatial]) / spacing[spatial] + 1e-9).astype(int)

    return spatial, spacing, j_min, tuple(j_max - j_min + 1)


def lattice_graph(shape: tuple, j_min: np.ndarray, stencil: np.ndarray, weights) -> csr_matrix:
    """
    Directed graph over a box of integer nodes

    weights(offsets, index) gives the edge weights of stencil entry `index` from the
    nodes at `offsets`; non-finite weights drop the edge.
    """

    nodes = np.arange(int(np.prod(shape)))
    local = np.stack(np.unravel_index(nodes, shape), axis=-1)
    rows, cols, data = [], [], []

    for index, offset in enumerate(stencil):
        target = local + offset
        valid = np.all((target >= 0) & (target < np.array(shape)), axis=1)
        cost = weights(local[valid] + j_min, index)
        finite = np.isfinite(cost)

        rows.append(nodes[valid][finite])
        cols.append(np.ravel_multi_index(tuple(target[valid][finite].T), shape))
        data.append(np.maximum(cost[finite], MIN_COST))

    size = len(nodes)
    return csr_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size))


def forward_reach(m: MetricField, x, window: int = None, resolution: int = None, margin: float = 0.0,
                  past: bool = False) -> ReachGrid:
    """
    Inner approximation of J+(x) in the window box [-window, window]^n of fundamental domains

    margin > 0 approximates I+(x) with steps satisfying g(w, w) <= -margin g_R(w, w);
    past=True approximates J-(x) by reversing the time orientation.

    :raises: InvalidInput
    """

    window = window or settings.REACH_WINDOW
    resolution = resolution or settings.REACH_RESOLUTION
    x = np.asarray(x, dtype=float)

    if resolution < 16:
        raise InvalidInput(f'Resolution must be at least 16, got {resolution}')

    if x.shape != (m.dim,) or not np.all(np.isfinite(x)):
        raise InvalidInput(f'Source must be a finite point of R^{m.dim}')

    if np.any(np.abs(x) > window * m.periods):
        raise InvalidInput(f'Window {window} does not contain the source {x.tolist()}')

    sense = -1 if past else 1
    spatial, spacing, j_min, shape = _node_box(m, x, window, resolution)
    stencil = coprime_stencil(len(spatial), settings.REACH_STENCIL_RADIUS)
    table = step_table(m, x, resolution, stencil, sense, margin)

    costs = table.costs
    radix = (resolution,) * len(spatial)

    def weights(offsets, index):
        residues = np.ravel_multi_index(tuple(np.mod(offsets, resolution).T), radix)
        return costs[residues, index]

    graph = lattice_graph(shape, j_min, stencil, weights)
    source = int(np.ravel_multi_index(tuple(-j_min), shape))
    arrival, predecessors = dijkstra(graph, directed=True, indices=source, return_predecessors=True)

    logger.debug(f'Reach of {m.name} from {x.tolist()}: {np.isfinite(arrival).sum()} of {len(arrival)} nodes')

    return ReachGrid(
        metric_name=m.name, source=x, sense=sense, margin=margin, resolution=resolution, window=window,
        time_axis=m.time_axis, spatial_axes=tuple(spatial), spacing=spacing, periods=m.periods,
        j_min=j_min, shape=shape, arrival=arrival, predecessors=predecessors, table=table,
    )


def reach_slice(grid: ReachGrid, time: float) -> np.ndarray:
    """ Spatial points reached at the given absolute time """

    nodes = np.arange(len(grid.arrival))
    relative = np.full(len(nodes), grid.sense * (time - grid.source[grid.time_axis]))
    points = grid.node_points(nodes[grid._reached(relative, nodes)])

    return points[:, list(grid.spatial_axes)]


def export_reach(grid: ReachGrid, file_path: Path) -> Path:
    """ Reached grid points as a CSV point cloud """

    header = [f'p{i}' for i in range(len(grid.source))]
    return write_csv(file_path, header, (point.tolist() for point in grid.points()))
