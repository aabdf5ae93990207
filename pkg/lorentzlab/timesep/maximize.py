import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np
from django.conf import settings

from core.exceptions import InvalidInput
from core.export import write_csv
from curves.worldline import PolygonalWorldline, curve_lengths, sample_positions
from reach.grid import forward_reach
from spacetime.metric import MetricField, future_causal, null_cone_distance, null_directions

logger = logging.getLogger(__name__)

JITTER = 0.25
JITTER_RETRIES = 4
PROJECTION_STEPS = 24
STEP_GROWTH = 1.5
STEP_TOLERANCE = 1e-7


@dataclass
class MaxPathResult:
    """ Lower bound for d(p, q), the path realizing it and the restart bookkeeping """

    value: float
    path: Optional[PolygonalWorldline]
    restarts_used: int
    converged: bool
    projections: int = 0


def _leg_lengths(m: MetricField, starts: np.ndarray, ends: np.ndarray) -> np.ndarray:
    """ Midpoint-rule Lorentzian length of straight legs, batched over leading axes """

    subdiv = settings.CURVE_SUBDIV
    shape = np.broadcast_shapes(starts.shape, ends.shape)
    starts = np.broadcast_to(starts, shape)
    steps = (np.broadcast_to(ends, shape) - starts) / subdiv

    midpoints = starts[..., None, :] + ((np.arange(subdiv) + 0.5)[:, None] * steps[..., None, :])
    tangents = np.broadcast_to(steps[..., None, :], midpoints.shape).reshape(-1, m.dim)
    values = m.quad(midpoints.reshape(-1, m.dim), tangents)

    return np.sqrt(np.clip(-values, 0, None)).reshape(shape[:-1] + (subdiv,)).sum(axis=-1)


def _legs_causal(m: MetricField, starts: np.ndarray, ends: np.ndarray) -> np.ndarray:
    """ Future causal flag of straight legs at the curve sample positions """

    shape = np.broadcast_shapes(starts.shape, ends.shape)
    starts = np.broadcast_to(starts, shape)
    steps = np.broadcast_to(ends, shape) - starts
    positions = sample_positions(settings.CURVE_SUBDIV)

    points = starts[..., None, :] + positions[:, None] * steps[..., None, :]
    directions = np.broadcast_to(steps[..., None, :], points.shape)
    causal = future_causal(m, points.reshape(-1, m.dim), directions.reshape(-1, m.dim))

    return causal.reshape(shape[:-1] + (len(positions),)).all(axis=-1)


def _project(m: MetricField, old, trials, before, after):
    """ Pull infeasible trial vertices back towards the old vertex by bisection """

    feasible = _legs_causal(m, before, trials) & _legs_causal(m, trials, after)

    if feasible.all():
        return trials, np.zeros(feasible.shape, dtype=bool)

    shift = trials - old
    low = np.where(feasible, 1.0, 0.0)
    high = np.ones(feasible.shape)

    for _ in range(PROJECTION_STEPS):
        middle = np.where(feasible, 1.0, (low + high) / 2)
        candidates = old + middle[..., None] * shift
        ok = _legs_causal(m, before, candidates) & _legs_causal(m, candidates, after)
        low = np.where(ok, middle, low)
        high = np.where(ok, high, middle)

    return old + low[..., None] * shift, ~feasible & (low > 0)


def _ascend(m: MetricField, vertices: np.ndarray, step: float, max_iterations: int):
    """
    Red-black coordinate ascent of the Lorentzian length over interior vertices

    Vertices of one parity share no leg, so each half sweep moves them all at once.
    Every accepted move keeps both adjacent legs future causal.
    """

    vertices = vertices.copy()
    count = len(vertices) - 1
    steps = np.full(count + 1, step)
    directions = np.concatenate([np.eye(m.dim), -np.eye(m.dim)])
    tolerance = STEP_TOLERANCE * max(step, 1e-12)
    projections = 0

    for _ in range(max_iterations):
        for parity in (1, 2):
            index = np.arange(parity, count, 2)

            if not len(index):
                continue

            old = vertices[index][:, None, :]
            before = vertices[index - 1][:, None, :]
            after = vertices[index + 1][:, None, :]

            trials = old + steps[index][:, None, None] * directions[None, :, :]
            trials, projected = _project(m, old, trials, before, after)

            current = _leg_lengths(m, before, old) + _leg_lengths(m, old, after)
            gains = _leg_lengths(m, before, trials) + _leg_lengths(m, trials, after) - current

            best = np.argmax(gains, axis=1)
            rows = np.arange(len(index))
            move = gains[rows, best] > 1e-15

            vertices[index[move]] = trials[rows[move], best[move]]
            projections += int(np.count_nonzero(projected[rows[move], best[move]]))
            steps[index[move]] *= STEP_GROWTH
            steps[index[~move]] /= 2

        if steps[1:count].max() < tolerance:
            return vertices, True, projections

    return vertices, False, projections


def _straight(p: np.ndarray, q: np.ndarray, segments: int) -> np.ndarray:
    return p + np.linspace(0, 1, segments + 1)[:, None] * (q - p)


def _feasible(m: MetricField, vertices: np.ndarray) -> bool:
    return bool(_legs_causal(m, vertices[:-1], vertices[1:]).all())


def _reach_chain(m: MetricField, p: np.ndarray, q: np.ndarray, segments: int) -> Optional[np.ndarray]:
    """ Reach-guided initial vertices, None when q is not reached from p """

    window = int(np.ceil(np.max(np.maximum(np.abs(p), np.abs(q)) / m.periods))) + 1
    grid = forward_reach(m, p, window, settings.TIMESEP_REACH_RESOLUTION)

    if not grid.reached(q)[0]:
        return None

    chain = grid.chain(q).vertices
    chain[-1] = q
    picks = np.unique(np.rint(np.linspace(0, len(chain) - 1, segments + 1)).astype(int))
    resampled = chain[picks]

    if _feasible(m, resampled):
        return resampled

    # snapping the last vertex to q can break the final sub-step
    return chain if _feasible(m, chain) else None


def _jittered(m: MetricField, base: np.ndarray, scale: float, rng: np.random.Generator) -> Optional[np.ndarray]:
    noise = rng.normal(size=base.shape) * JITTER * scale / (len(base) - 1)
    noise[[0, -1]] = 0.0

    for _ in range(JITTER_RETRIES):
        candidate = base + noise

        if _feasible(m, candidate):
            return candidate

        noise /= 2

    return None


def time_separation(m: MetricField, p, q, segments: int = None, restarts: int = None,
                    seed: int = 0) -> MaxPathResult:
    """
    Lower bound for the time separation d(p, q) on the cover

    Maximizes the Lorentzian length over future pointing polygonal paths with
    `segments` legs, starting from the straight line (or a reach-guided chain when the
    straight line is not causal) and from jittered copies of it. When no causal
    initialization exists the supremum over the empty set, 0, is returned.

    :raises: InvalidInput
    """

    segments = segments or settings.TIMESEP_SEGMENTS
    restarts = restarts or settings.TIMESEP_RESTARTS
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)

    if segments < 2:
        raise InvalidInput(f'At least 2 segments are required, got {segments}')

    if p.shape != (m.dim,) or q.shape != (m.dim,) or not np.all(np.isfinite(np.concatenate([p, q]))):
        raise InvalidInput(f'Endpoints must be finite points of R^{m.dim}')

    if np.array_equal(p, q):
        return MaxPathResult(0.0, None, 0, True)

    base = _straight(p, q, segments)

    if not _feasible(m, base):
        base = _reach_chain(m, p, q, segments)

        if base is None:
            logger.debug(f'{q.tolist()} is not in the causal future of {p.tolist()} on {m.name}')
            return MaxPathResult(0.0, None, 0, True)

    scale = float(m.riemannian_norm(p, q - p)[0])
    step = scale / (len(base) - 1) / 4
    generators = [np.random.default_rng(child) for child in np.random.SeedSequence(seed).spawn(restarts)]

    best, used = None, 0

    for index, rng in enumerate(generators):
        start = base if index == 0 else _jittered(m, base, scale, rng)

        if start is None:
            continue

        vertices, converged, projections = _ascend(m, start, step, settings.TIMESEP_MAX_ITERATIONS)
        path = PolygonalWorldline(vertices, m.name, {'restart': index})
        result = MaxPathResult(curve_lengths(m, path).lorentzian, path, 0, converged, projections)
        used += 1

        if best is None or (result.value, -result.projections) > (best.value, -best.projections):
            best = result

    best.restarts_used = used

    if not best.converged:
        logger.warning(f'Time separation ascent on {m.name} hit the iteration cap')

    return best


def refinement_trace(m: MetricField, p, q, segments_list, restarts: int = None, seed: int = 0) -> List[dict]:
    """ Values against segment counts, with the monotone best-so-far lower bound """

    trace, best = [], 0.0

    for segments in segments_list:
        result = time_separation(m, p, q, segments, restarts, seed)
        best = max(best, result.value)
        trace.append({'segments': segments, 'value': result.value, 'best': best, 'converged': result.converged})

    return trace


def confinement_delta(path: PolygonalWorldline, m: MetricField) -> float:
    """ Largest delta such that every leg tangent lies in the delta-timecone, 0 when a leg is not timelike """

    midpoints = path.vertices[:-1] + path.segments / 2
    values = m.quad(midpoints, path.segments)
    lengths = m.riemannian_norm(midpoints, path.segments)

    if np.any(values >= 0):
        return 0.0

    deltas = [
        null_cone_distance(m, point, leg, null_directions(m, point, settings.CONE_CIRCLE_SAMPLES)) / length
        for point, leg, length in zip(midpoints, path.segments, lengths)
    ]
    return float(min(deltas))


def export_trace(trace: List[dict], file_path: Path) -> Path:
    header = ['segments', 'value', 'best', 'converged']
    return write_csv(file_path, header, ([row[key] for key in header] for row in trace))
