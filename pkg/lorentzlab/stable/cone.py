import logging
from dataclasses import dataclass, field, replace
from itertools import product
from pathlib import Path
from typing import Optional

import numpy as np
from django.conf import settings

from cones.cone import PolyCone, conic_hull, distance_to_cone
from cones.norms import NormModel
from core.exceptions import Unavailable
from core.export import write_csv
from curves.geodesics import shoot_batch
from curves.walks import future_directions, random_walks
from reach.causality import frak_table
from reach.grid import forward_reach
from spacetime.metric import MetricField

from .norm import StableNormEstimate, stable_norm_estimate

logger = logging.getLogger(__name__)

GEODESIC_NEAR_NULL_WEIGHT = 0.995
GEODESIC_INTERIOR_SHARE = 0.5
FRAK_ZERO_CELLS = 2


@dataclass
class StableConeEstimate:
    """
    Estimated stable time cone with its unit-norm cross-section

    sources: admissible sample counts per sampler (geodesics, walks, frak)
    sensitivity: sample counts and hull rays for halved and doubled L_min
    """

    cone: PolyCone
    cross_section: np.ndarray
    err_est: Optional[float]
    sources: dict
    metric_name: str = ''
    periods: list = None
    norm: NormModel = field(default_factory=NormModel.euclidean)
    sensitivity: list = field(default_factory=list)
    reversed: bool = False

    def as_dict(self) -> dict:
        return {
            'metric': self.metric_name,
            'kind': self.cone.kind,
            'rays': self.cone.rays.tolist(),
            'contains_line': self.cone.contains_line,
            'cross_section_size': len(self.cross_section),
            'err_est': self.err_est,
            'sources': self.sources,
            'norm': self.norm.as_dict(),
            'sensitivity': self.sensitivity,
            'reversed': self.reversed,
        }


@dataclass
class BoundedDistanceReport:
    err_est: float
    per_sample: list


def _budget(budget: dict = None) -> dict:
    return {**settings.STABLE_BUDGET, **(budget or {})}


def _geodesic_samples(m: MetricField, budget: dict, rng: np.random.Generator):
    count = budget['geodesics']

    if count <= 0:
        return np.zeros((0, m.dim)), np.zeros(0)

    starts = rng.uniform(size=(count, m.dim)) * m.periods
    velocities = future_directions(m, starts, rng, GEODESIC_INTERIOR_SHARE, GEODESIC_NEAR_NULL_WEIGHT)
    batch = shoot_batch(m, starts, velocities, budget['geodesic_length'], budget['geodesic_dt'])

    lengths = np.where(batch.truncated, 0.0, batch.riemannian_length)
    return (batch.endpoints - batch.starts) / np.maximum(lengths, 1e-12)[:, None], lengths


def _walk_samples(m: MetricField, budget: dict, rng: np.random.Generator):
    count = budget['walks']

    if count <= 0:
        return np.zeros((0, m.dim)), np.zeros(0)

    starts = rng.uniform(size=(count, m.dim)) * m.periods
    batch = random_walks(m, starts, budget['walk_steps'], budget['walk_step_len'], int(rng.integers(2 ** 32)))

    return (batch.endpoints - batch.starts) / batch.riemannian_length[:, None], batch.riemannian_length


def _frak_classes(m: MetricField, budget: dict) -> np.ndarray:
    """ Lattice displacements h P with frak(h) within a couple of reach cells of zero """

    radius = budget['frak_radius']

    if radius <= 0:
        return np.zeros((0, m.dim))

    hs = [h for h in product(range(-radius, radius + 1), repeat=m.dim) if any(h)]
    results = frak_table(m, hs, window=radius + 2)
    cell = FRAK_ZERO_CELLS * float(np.max(m.periods)) / settings.REACH_RESOLUTION
    kept = [result.h for result in results if result.f_of_h <= cell]

    return np.array(kept, dtype=float).reshape(-1, m.dim) * m.periods


def default_norm(m: MetricField) -> NormModel:
    """ Euclidean for flat g_R, otherwise the sampled stable norm """

    if m.riemannian_identity:
        return NormModel.euclidean()

    return stable_norm_estimate(m).model()


def estimate_stable_cone(m: MetricField, budget: dict = None, seed: int = 0, reverse: bool = False,
                         norm: StableNormEstimate = None, check: bool = True) -> StableConeEstimate:
    """
    Conic hull of admissible rotation vectors and f-zero lattice classes

    A sample is admissible when its g_R length reaches L_min. reverse=True estimates
    the cone of the opposite time orientation through the mirrored metric.

    :raises: Unavailable
    """

    if reverse:
        mirrored = estimate_stable_cone(m.mirrored(), budget, seed, False, norm, check)
        rays = -mirrored.cone.rays if len(mirrored.cone.rays) else mirrored.cone.rays

        return replace(
            mirrored,
            cone=conic_hull(rays, mirrored.norm, dim=m.dim),
            cross_section=-mirrored.cross_section,
            metric_name=m.name,
            reversed=True,
        )

    budget = _budget(budget)
    model = norm.model() if norm is not None else default_norm(m)
    geodesic_rng, walk_rng = [np.random.default_rng(child) for child in np.random.SeedSequence(seed).spawn(2)]

    geodesics, geodesic_lengths = _geodesic_samples(m, budget, geodesic_rng)
    walks, walk_lengths = _walk_samples(m, budget, walk_rng)
    frak = _frak_classes(m, budget)

    samples = np.concatenate([geodesics, walks])
    lengths = np.concatenate([geodesic_lengths, walk_lengths])
    min_length = budget['min_length']

    def admissible(threshold: float) -> np.ndarray:
        return np.concatenate([samples[lengths >= threshold], frak])

    rays = admissible(min_length)

    if not len(rays):
        raise Unavailable(f'No admissible samples for {m.name} with L_min = {min_length}')

    sensitivity = []

    for threshold in (min_length / 2, min_length, 2 * min_length):
        kept = admissible(threshold)
        hull = conic_hull(kept, model, dim=m.dim) if len(kept) else None
        sensitivity.append({
            'min_length': threshold,
            'samples': len(kept),
            'rays': None if hull is None else hull.rays.tolist(),
        })

    sources = {
        'geodesics': int(np.count_nonzero(geodesic_lengths >= min_length)),
        'walks': int(np.count_nonzero(walk_lengths >= min_length)),
        'frak': len(frak),
    }

    logger.info(f'Stable cone of {m.name} from {len(rays)} samples: {sources}')

    cross_section = rays / model.norms(rays)[:, None]
    estimate = StableConeEstimate(
        cone=conic_hull(rays, model, dim=m.dim),
        cross_section=cross_section,
        err_est=None,
        sources=sources,
        metric_name=m.name,
        periods=m.periods.tolist(),
        norm=model,
        sensitivity=sensitivity,
    )

    if check:
        estimate.err_est = check_bounded_distance(m, estimate, budget['distance_samples'], seed).err_est

    return estimate


def a_of_h(est: StableConeEstimate, norm: Optional[StableNormEstimate], h) -> float:
    """ Stable-norm distance from the lattice class h to the estimated cone, 0 inside """

    model = norm.model() if norm is not None else est.norm
    vector = np.asarray(h, dtype=float) * np.asarray(est.periods, dtype=float)

    return distance_to_cone(est.cone, vector, model)


def cone_members(est: StableConeEstimate, count: int, scales: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """ Random convex combinations of cross-section points scaled to the given norms """

    picks = rng.integers(len(est.cross_section), size=(count, 2))
    weights = rng.uniform(size=(count, 1))
    members = weights * est.cross_section[picks[:, 0]] + (1 - weights) * est.cross_section[picks[:, 1]]

    return members / est.norm.norms(members)[:, None] * scales[:, None]


def check_bounded_distance(m: MetricField, est: StableConeEstimate, samples: int = None, seed: int = 0,
               h_range: tuple = (1.0, 2.0), resolution: int = None, window: int = None) -> BoundedDistanceReport:
    """
    Two-sided bounded-distance check between the cone and reached sets

    (a) reached displacements z - x are near the cone; (b) cone members h are near
    reached displacements. Norms of h are in h_range times the largest period.
    """

    samples = samples or settings.STABLE_BUDGET['distance_samples']
    rng = np.random.default_rng(seed)
    scale = float(np.max(m.periods))
    per_sample = []

    for _ in range(samples):
        x = rng.uniform(size=m.dim) * m.periods
        grid = forward_reach(m, x, window, resolution)
        reached = grid.points()

        if not len(reached):
            continue

        z = reached[rng.integers(len(reached))]
        per_sample.append({
            'kind': 'reached',
            'x': x.tolist(),
            'vector': (z - x).tolist(),
            'distance': distance_to_cone(est.cone, z - x, est.norm),
        })

        h = cone_members(est, 1, rng.uniform(*h_range, size=1) * scale, rng)[0]
        distance = float(np.min(est.norm.norms(reached - (x + h))))
        per_sample.append({'kind': 'cone', 'x': x.tolist(), 'vector': h.tolist(), 'distance': distance})

    err_est = max((sample['distance'] for sample in per_sample), default=0.0)
    logger.debug(f'Bounded distance check on {m.name}: err_est {err_est} over {len(per_sample)} samples')

    return BoundedDistanceReport(err_est, per_sample)


def export_cross_section(est: StableConeEstimate, file_path: Path) -> Path:
    header = [f'p{i}' for i in range(est.cross_section.shape[1])]
    return write_csv(file_path, header, (point.tolist() for point in est.cross_section))
