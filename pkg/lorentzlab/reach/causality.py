import logging
from dataclasses import dataclass, field
from itertools import product
from typing import List, Optional

import numpy as np
from django.conf import settings
from scipy.sparse.csgraph import dijkstra

from core.exceptions import Unavailable, WindowOverflow
from spacetime.metric import MetricField

from .grid import ReachGrid, coprime_stencil, forward_reach, lattice_graph

logger = logging.getLogger(__name__)


@dataclass
class SourceWitness:
    point: list
    witness: Optional[list]
    classes: list
    coverage: bool
    chain: list = field(default_factory=list)


@dataclass
class ViciousnessReport:
    """ One-sided verdict: True is backed by witnesses, False means none found at this resolution """

    vicious: bool
    resolution: int
    window: int
    margin: float
    sources: List[SourceWitness]
    grids: list = field(default_factory=list, repr=False)


@dataclass
class FrakResult:
    h: list
    f_of_h: float
    minimizing_x: list
    boundary_active: bool
    window: int


def sample_sources(m: MetricField, resolution: int = None) -> np.ndarray:
    """ Fundamental-domain grid with `resolution` points per axis, origin first """

    resolution = resolution or settings.REACH_SOURCE_RESOLUTION
    cells = np.indices((resolution,) * m.dim).reshape(m.dim, -1).T
    return cells / resolution * m.periods[None, :]


def _loop_classes(m: MetricField, grid: ReachGrid) -> list:
    window = grid.window
    classes = np.array([k for k in product(range(-window, window + 1), repeat=m.dim) if any(k)])
    reached = grid.reached(grid.source + classes * m.periods)

    found = classes[reached]
    order = np.lexsort((np.abs(found).sum(axis=1), np.abs(found).max(axis=1)))
    return [tuple(int(value) for value in k) for k in found[order]]


def _coverage(grid: ReachGrid) -> bool:
    finite = np.flatnonzero(np.isfinite(grid.arrival))
    residues = np.unique(grid.residues(finite))
    return len(residues) == grid.resolution ** len(grid.spatial_axes)


def is_vicious(m: MetricField, resolution: int = None, window: int = None, margin: float = None) -> ViciousnessReport:
    """
    Every source of the fundamental-domain grid lies on a timelike loop and its
    timelike future covers the torus

    Steps are timelike with g(w, w) <= -margin g_R(w, w). The source grid has
    REACH_SOURCE_RESOLUTION points per axis.
    """

    resolution = resolution or settings.REACH_RESOLUTION
    window = window or settings.REACH_WINDOW
    margin = settings.REACH_EPS_T if margin is None else margin

    sources, grids = [], []

    for x in sample_sources(m):
        grid = forward_reach(m, x, window, resolution, margin=margin)
        classes = _loop_classes(m, grid)
        witness = list(classes[0]) if classes else None
        chain = grid.chain(x + np.array(witness) * m.periods).vertices.tolist() if witness else []

        sources.append(SourceWitness(x.tolist(), witness, classes, _coverage(grid), chain))
        grids.append(grid)

    failed = [source.point for source in sources if source.witness is None or not source.coverage]
    vicious = not failed

    if failed:
        logger.info(f'No viciousness witness for {m.name} at {len(failed)} of {len(sources)} sources, '
                    f'resolution {resolution}, window {window}')

    return ViciousnessReport(vicious, resolution, window, margin, sources, grids)


def tree_lengths(m: MetricField, grid: ReachGrid) -> np.ndarray:
    """ g_R length of the recorded chain from the source to every spatial node """

    nodes = np.flatnonzero(grid.predecessors >= 0)
    parents = grid.predecessors[nodes]

    offsets = grid.node_offsets(nodes) - grid.node_offsets(parents)
    lookup = {tuple(offset): index for index, offset in enumerate(grid.table.stencil)}
    indices = np.array([lookup[tuple(offset)] for offset in offsets], dtype=int)
    residues = grid.residues(parents) if len(parents) else np.zeros(0, dtype=int)

    count = grid.table.substeps.shape[-1]
    starts = grid.node_points(parents) if len(parents) else np.zeros((0, m.dim))
    starts[:, grid.time_axis] += grid.sense * grid.arrival[parents]
    edge = np.zeros(len(nodes))

    for k in range(count):
        step = np.zeros((len(nodes), m.dim))
        step[:, list(grid.spatial_axes)] = offsets * grid.spatial_spacing / count
        step[:, grid.time_axis] = grid.sense * grid.table.substeps[residues, indices, k]

        edge += m.riemannian_norm(starts + step / 2, step)
        starts = starts + step

    lengths = np.full(len(grid.arrival), np.inf)
    lengths[np.argmin(np.where(grid.predecessors < 0, grid.arrival, np.inf))] = 0.0
    edge_of = dict(zip(nodes.tolist(), edge.tolist()))

    for node in np.argsort(grid.arrival):
        parent = grid.predecessors[node]

        if parent >= 0 and np.isfinite(grid.arrival[node]):
            lengths[node] = lengths[parent] + edge_of[int(node)]

    return lengths


def fill_constant(m: MetricField, resolution: int = None, window: int = None,
                  report: ViciousnessReport = None) -> float:
    """
    Longest shortest chain between fundamental-domain points

    :raises: Unavailable
    """

    report = report or is_vicious(m, resolution, window)

    if not report.vicious:
        raise Unavailable(f'Fill constant needs a vicious metric, {m.name} is not vicious at this resolution')

    fill = 0.0

    for grid in report.grids:
        finite = np.flatnonzero(np.isfinite(grid.arrival))
        lengths = tree_lengths(m, grid)[finite]
        arrival = grid.arrival[finite]
        period = grid.periods[grid.time_axis]

        time_residues = np.arange(grid.resolution) * grid.time_spacing
        waits = np.mod(time_residues[None, :] - arrival[:, None], period)
        waits = np.where(np.isclose(waits, period), 0.0, waits)

        vertical = np.zeros((len(finite), m.dim))
        vertical[:, grid.time_axis] = 1.0
        points = grid.node_points(finite)
        points[:, grid.time_axis] += grid.sense * arrival
        speed = m.riemannian_norm(points, vertical)

        totals = lengths[:, None] + waits * speed[:, None]
        waiting = grid.table.wait_ok[grid.residues(finite)]
        totals[~waiting] = np.where(waits[~waiting] < grid.time_spacing, totals[~waiting], np.inf)

        best = np.full((grid.resolution ** len(grid.spatial_axes), grid.resolution), np.inf)
        np.minimum.at(best, grid.residues(finite), totals)

        if not np.all(np.isfinite(best)):
            raise Unavailable(f'Some fundamental-domain points of {m.name} are not joined by recorded chains')

        fill = max(fill, float(best.max()))

    return fill


def _riemannian_condition(m: MetricField) -> float:
    if m.riemannian_identity:
        return 1.0

    points = np.random.default_rng(0).uniform(0, 1, size=(256, m.dim)) * m.periods
    eigenvalues = np.linalg.eigvalsh(m.riemannian(points))
    return float(np.sqrt(eigenvalues.max() / eigenvalues.min()))


def _euclidean_distance(grid: ReachGrid, q: np.ndarray):
    finite = np.flatnonzero(np.isfinite(grid.arrival))
    points = grid.node_points(finite)
    arrival_times = grid.source[grid.time_axis] + grid.sense * grid.arrival[finite]

    inside = np.abs(arrival_times) <= grid.box[grid.time_axis] + 1e-9
    finite, points, arrival_times = finite[inside], points[inside], arrival_times[inside]

    waiting = grid.table.wait_ok[grid.residues(finite)]
    behind = grid.sense * (arrival_times - q[grid.time_axis])
    gap = np.where(waiting, np.clip(behind, 0, None), np.abs(behind))

    spatial = list(grid.spatial_axes)
    distances = np.sqrt(np.sum((points[:, spatial] - q[spatial]) ** 2, axis=1) + gap ** 2)
    best = int(np.argmin(distances))

    return float(distances[best]), int(finite[best])


def _graph_distance(m: MetricField, grid: ReachGrid, q: np.ndarray, euclidean: float) -> float:
    """ g_R distance from q to the reached set on a local lattice box around q """

    spacing = grid.spacing
    radius = euclidean * _riemannian_condition(m) + 2 * spacing.max()
    half = np.ceil(radius / spacing).astype(int)
    shape = tuple(2 * half + 1)

    stencil = coprime_stencil(m.dim, settings.REACH_DISTANCE_RADIUS)
    nodes = np.stack(np.unravel_index(np.arange(int(np.prod(shape))), shape), axis=-1)
    points = q + (nodes - half) * spacing

    def weights(offsets, index):
        starts = q + offsets * spacing
        step = np.broadcast_to(stencil[index] * spacing, starts.shape)
        return m.riemannian_norm(starts + step / 2, step)

    graph = lattice_graph(shape, -half, stencil, weights)
    sources = np.flatnonzero(grid.reached(points))

    if not len(sources):
        return np.inf

    distances = dijkstra(graph, directed=False, indices=sources, min_only=True)
    return float(distances[np.ravel_multi_index(tuple(half), shape)])


def frak_from_source(m: MetricField, x, h, resolution: int = None, window: int = None,
                     grid: ReachGrid = None) -> FrakResult:
    """
    g_R distance from x + h to the grid approximation of J+(x)

    The window is doubled once when x + h falls outside it or the minimizer touches
    its boundary.

    :raises: WindowOverflow
    """

    resolution = resolution or settings.REACH_RESOLUTION
    window = window or settings.REACH_WINDOW
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    q = x + h * m.periods

    required = int(np.ceil(np.max(np.abs(q) / m.periods))) + 1

    if required > window:
        if required > 2 * window:
            raise WindowOverflow(f'Window {window} cannot contain {q.tolist()}', required=required)

        logger.warning(f'Window doubled to {2 * window} to contain {q.tolist()}')
        window, grid = 2 * window, None

    for attempt in range(2):
        grid = grid or forward_reach(m, x, window, resolution)
        distance, node = _euclidean_distance(grid, q)

        local = np.array(np.unravel_index(node, grid.shape))
        boundary = bool(np.any(local == 0) or np.any(local == np.array(grid.shape) - 1))

        if not boundary or attempt:
            break

        logger.warning(f'Minimizer on the window boundary, doubling window to {2 * window}')
        window, grid = 2 * window, None

    if not m.riemannian_identity and distance > 0:
        distance = _graph_distance(m, grid, q, distance)

    return FrakResult(h.astype(int).tolist(), distance, x.tolist(), boundary, window)


def frak_f(m: MetricField, h, resolution: int = None, window: int = None) -> FrakResult:
    """ Minimum over the fundamental-domain source grid of the distance from x + h to J+(x) """

    return frak_table(m, [h], resolution, window)[0]


def frak_table(m: MetricField, hs, resolution: int = None, window: int = None) -> List[FrakResult]:
    """ frak_f for many lattice classes, sharing one reach grid per source """

    resolution = resolution or settings.REACH_RESOLUTION
    window = window or settings.REACH_WINDOW
    best = [None] * len(hs)

    for x in sample_sources(m):
        grid = forward_reach(m, x, window, resolution)

        for index, h in enumerate(hs):
            result = frak_from_source(m, x, h, resolution, window, grid=grid)

            if best[index] is None or result.f_of_h < best[index].f_of_h:
                best[index] = result

    return best
