import logging

import numpy as np
from django.conf import settings

from core.exceptions import InvalidInput, WindowOverflow
from reach.grid import SAMPLE_POSITIONS, coprime_stencil
from spacetime.metric import MetricField, future_causal

logger = logging.getLogger(__name__)

MARGIN_PERIODS = 1


def oracle_stencil(m: MetricField, radius: int = None) -> np.ndarray:
    """ Coprime lattice steps advancing strictly along the time axis """

    radius = radius or (settings.TIMESEP_ORACLE_RADIUS if m.dim == 2 else max(settings.TIMESEP_ORACLE_RADIUS // 2, 1))
    stencil = coprime_stencil(m.dim, radius)
    return stencil[stencil[:, m.time_axis] > 0]


def step_weights(m: MetricField, p: np.ndarray, resolution: int, stencil: np.ndarray) -> np.ndarray:
    """
    Lorentzian length of every stencil step from every lattice residue

    Returns an array (steps, *residues) with -inf for steps that are not future causal.
    Constant metrics get a single residue per axis.
    """

    spacing = m.periods / resolution
    count = 1 if m.constant else resolution
    residues = np.stack(np.meshgrid(*[np.arange(count)] * m.dim, indexing='ij'), axis=-1).reshape(-1, m.dim)
    starts = p + residues * spacing

    subdiv = settings.CURVE_SUBDIV
    middles = (np.arange(subdiv) + 0.5) / subdiv
    weights = np.empty((len(stencil), len(starts)))

    for index, offset in enumerate(stencil):
        step = offset * spacing
        checks = (starts[:, None, :] + np.array(SAMPLE_POSITIONS)[None, :, None] * step).reshape(-1, m.dim)
        causal = future_causal(m, checks, np.broadcast_to(step, checks.shape))
        causal = causal.reshape(len(starts), -1).all(axis=1)

        points = (starts[:, None, :] + middles[None, :, None] * step).reshape(-1, m.dim)
        values = m.quad(points, np.broadcast_to(step, points.shape)).reshape(len(starts), subdiv)
        lengths = np.sqrt(np.clip(-values, 0, None)).mean(axis=1)

        weights[index] = np.where(causal, lengths, -np.inf)

    return weights.reshape((len(stencil),) + (count,) * m.dim)


def _shift(offset, shape):
    target, source = [], []

    for b, n in zip(offset, shape):
        if b >= 0:
            target.append(slice(b, n))
            source.append(slice(0, n - b))
        else:
            target.append(slice(0, n + b))
            source.append(slice(-b, n))

    return tuple(target), tuple(source)


def time_separation_oracle(m: MetricField, p, q, resolution: int) -> float:
    """
    Lattice dynamic program for d(p, q)

    Time layers are processed in order; each node keeps the longest chain of
    future causal stencil steps from p. The result is a lower bound up to the
    snapping of q to the lattice and converges from below under refinement.

    :raises: InvalidInput, WindowOverflow
    """

    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)

    if p.shape != (m.dim,) or q.shape != (m.dim,) or not np.all(np.isfinite(np.concatenate([p, q]))):
        raise InvalidInput(f'Endpoints must be finite points of R^{m.dim}')

    if resolution < 2:
        raise InvalidInput(f'Resolution must be at least 2, got {resolution}')

    required = int(np.ceil(np.max(np.abs(q - p) / m.periods))) + 1

    if required > settings.REACH_WINDOW:
        raise WindowOverflow(f'Window {settings.REACH_WINDOW} cannot contain {q.tolist()}', required=required)

    spacing = m.periods / resolution
    target = np.rint((q - p) / spacing).astype(int)
    layers = int(target[m.time_axis])

    if not np.any(target) or layers <= 0:
        return 0.0

    spatial = [axis for axis in range(m.dim) if axis != m.time_axis]
    margin = MARGIN_PERIODS * resolution
    low = np.minimum(target[spatial], 0) - margin
    shape = tuple(np.abs(target[spatial]) + 2 * margin + 1)

    stencil = oracle_stencil(m)
    weights = step_weights(m, p, resolution, stencil)
    count = weights.shape[1]

    # residue index arrays of every spatial column, in metric axis order
    columns = [np.mod(low[i] + np.arange(n), count) for i, n in enumerate(shape)]

    values = np.full((layers + 1,) + shape, -np.inf)
    values[(0,) + tuple(-low)] = 0.0

    for layer in range(1, layers + 1):
        current = values[layer]

        for offset, table in zip(stencil, weights):
            start = layer - offset[m.time_axis]

            if start < 0:
                continue

            index = [None] * m.dim
            index[m.time_axis] = np.mod(start, count)

            for axis, column in zip(spatial, columns):
                index[axis] = column

            grid = table[np.ix_(*[np.atleast_1d(value) for value in index])]
            grid = grid.reshape(shape)

            into, out = _shift(offset[spatial], shape)
            np.maximum(current[into], values[start][out] + grid[out], out=current[into])

    value = values[(layers,) + tuple(target[spatial] - low)]
    logger.debug(f'Oracle d on {m.name} at resolution {resolution}: {value}')

    return float(max(value, 0.0))
