import logging
from typing import NamedTuple

import numpy as np
from django.conf import settings

from core.exceptions import InvalidInput
from spacetime.metric import MetricField, future_causal

from .worldline import PolygonalWorldline, sample_positions

logger = logging.getLogger(__name__)

NEAR_NULL_WEIGHT = 0.97
RETRIES = 8


class WalkBatch(NamedTuple):
    starts: np.ndarray
    endpoints: np.ndarray
    riemannian_length: np.ndarray


def _null_angles(m: MetricField, points: np.ndarray, rng: np.random.Generator):
    """
    Unit orientation vectors, random spacelike directions g-orthogonal to them and
    the arc angle at which cos(s) X + sin(s) S turns null
    """

    g = m.metric(points)
    x = m.orientation(points)
    x = x / np.linalg.norm(x, axis=1, keepdims=True)
    covector = np.einsum('nij,nj->ni', g, x)

    if m.dim == 2:
        spacelike = np.stack([-covector[:, 1], covector[:, 0]], axis=1)
        spacelike *= rng.choice([-1.0, 1.0], size=(len(points), 1))

    else:
        seeds = rng.normal(size=points.shape)
        weights = np.einsum('ni,ni->n', seeds, covector) / np.einsum('ni,ni->n', covector, covector)
        spacelike = seeds - weights[:, None] * covector

    spacelike /= np.linalg.norm(spacelike, axis=1, keepdims=True)

    # g(X, S) = 0, so g along the arc is cos^2 g(X, X) + sin^2 g(S, S)
    angles = np.arctan(np.sqrt(-np.einsum('ni,ni->n', covector, x) / m.quad(points, spacelike)))

    return x, spacelike, angles


def future_directions(m: MetricField, points: np.ndarray, rng: np.random.Generator, interior_share: float = None,
                      near_null_weight: float = NEAR_NULL_WEIGHT) -> np.ndarray:
    """ Unit g_R future directions: interior timelike samples, the rest pulled slightly off the null cone """

    interior_share = settings.WALK_INTERIOR_SHARE if interior_share is None else interior_share
    x, spacelike, angles = _null_angles(m, points, rng)
    interior = rng.uniform(size=len(points)) < interior_share

    fractions = np.where(interior, rng.uniform(size=len(points)), 1.0)
    turned = fractions * angles
    directions = np.cos(turned)[:, None] * x + np.sin(turned)[:, None] * spacelike

    directions[~interior] = near_null_weight * directions[~interior] + (1 - near_null_weight) * x[~interior]

    return directions / m.riemannian_norm(points, directions)[:, None]


def _causal_step(m: MetricField, points: np.ndarray, steps: np.ndarray) -> np.ndarray:
    positions = sample_positions(settings.CURVE_SUBDIV)
    samples = points[None, :, :] + positions[:, None, None] * steps[None, :, :]
    vectors = np.broadcast_to(steps, samples.shape)

    causal = future_causal(m, samples.reshape(-1, m.dim), vectors.reshape(-1, m.dim))
    return causal.reshape(len(positions), -1).all(axis=0)


def _advance(m: MetricField, points: np.ndarray, step_len: float, rng: np.random.Generator) -> np.ndarray:
    """ Future causal steps from every point, pulled toward X and shortened until verified """

    steps = step_len * future_directions(m, points, rng)
    x = m.orientation(points)
    x = step_len * x / m.riemannian_norm(points, x)[:, None]

    pending = ~_causal_step(m, points, steps)

    for attempt in range(RETRIES):
        if not pending.any():
            return steps

        steps[pending] = (steps[pending] + x[pending]) / 2 / 2 ** (attempt // 2)
        pending[pending] = ~_causal_step(m, points[pending], steps[pending])

    if pending.any():
        raise InvalidInput(f'No verified future causal step of length {step_len} at {points[pending][0].tolist()}')

    return steps


def random_causal_walk(m: MetricField, p, steps: int, step_len: float, seed: int) -> PolygonalWorldline:
    """ Seeded walk along random future causal directions """

    if steps < 1:
        raise InvalidInput('steps must be at least 1')

    rng = np.random.default_rng(seed)
    vertices = np.empty((steps + 1, m.dim))
    vertices[0] = p

    for index in range(steps):
        vertices[index + 1] = vertices[index] + _advance(m, vertices[index:index + 1], step_len, rng)[0]

    return PolygonalWorldline(vertices, m.name, {'seed': seed, 'step_len': step_len})


def random_walks(m: MetricField, starts, steps: int, step_len: float, seed: int) -> WalkBatch:
    """ Many walks advanced together, only endpoints and g_R lengths are kept """

    if steps < 1:
        raise InvalidInput('steps must be at least 1')

    rng = np.random.default_rng(seed)
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    points = starts.copy()
    length = np.zeros(len(points))

    for _ in range(steps):
        moves = _advance(m, points, step_len, rng)
        length += m.riemannian_norm(points + moves / 2, moves)
        points += moves

    logger.debug(f'{len(points)} walks of {steps} steps finished')

    return WalkBatch(starts, points, length)
