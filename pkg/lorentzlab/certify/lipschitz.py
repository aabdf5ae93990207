import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from django.conf import settings

from cones.cone import contains, epsilon_subcone
from core.exceptions import InvalidInput
from core.export import write_csv
from curves.worldline import PolygonalWorldline, curve_lengths
from spacetime.metric import MetricField
from stable.cone import StableConeEstimate, cone_members
from timesep.maximize import time_separation

logger = logging.getLogger(__name__)

HISTOGRAM_BINS = 20
MEMBER_TRIES = 100
NOISE_PAIRS = 4
NOISE_SHIFT = 2


@dataclass
class LipschitzReport:
    """
    |d(x, y) - d(z, w)| / (dist(x, z) + dist(y, w) + 1) over pairs with y - x and
    w - z in the eps-subcone of the estimated stable cone

    noise_bound: largest relative change of d under a lattice translation of both endpoints
    """

    eps: float
    samples: int
    max_ratio: float
    ratio_histogram: list
    noise_bound: float
    segments: int
    restarts: int
    ratios: list = field(default_factory=list, repr=False)

    def as_dict(self) -> dict:
        return {
            'eps': self.eps,
            'samples': self.samples,
            'max_ratio': self.max_ratio,
            'ratio_histogram': self.ratio_histogram,
            'noise_bound': self.noise_bound,
            'segments': self.segments,
            'restarts': self.restarts,
        }


def distance(m: MetricField, a, b) -> float:
    """ g_R length of the straight segment, the cover distance for flat g_R """

    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)

    if np.array_equal(a, b):
        return 0.0

    return curve_lengths(m, PolygonalWorldline(np.stack([a, b]), m.name)).riemannian


def lipschitz_ratio(m: MetricField, first: tuple, second: tuple, segments: int = None,
                    restarts: int = None, seed: int = 0) -> float:
    """ Ratio for the pairs first = (x, y) and second = (z, w) """

    segments = segments or settings.LIPSCHITZ_SEGMENTS
    restarts = restarts or settings.LIPSCHITZ_RESTARTS
    (x, y), (z, w) = first, second

    d_first = time_separation(m, x, y, segments, restarts, seed).value
    d_second = time_separation(m, z, w, segments, restarts, seed).value

    return abs(d_first - d_second) / (distance(m, x, z) + distance(m, y, w) + 1.0)


def _inner_member(est: StableConeEstimate, inner, scale: float, rng: np.random.Generator) -> np.ndarray:
    for _ in range(MEMBER_TRIES):
        vector = cone_members(est, 1, rng.uniform(1.0, 3.0, size=1) * scale, rng)[0]

        if contains(inner, vector):
            return vector

    raise InvalidInput('Rejection sampling found no member of the eps-subcone')


def coarse_lipschitz(m: MetricField, est: StableConeEstimate, eps: float, samples: int, seed: int = 0,
                     segments: int = None, restarts: int = None) -> LipschitzReport:
    """
    Sampled coarse Lipschitz ratios of the time separation

    Each sample draws from its own child seed, so a larger sample count extends a smaller one.

    :raises: InvalidInput
    """

    segments = segments or settings.LIPSCHITZ_SEGMENTS
    restarts = restarts or settings.LIPSCHITZ_RESTARTS

    if eps <= 0 or samples < 1:
        raise InvalidInput('eps must be positive and samples at least 1')

    inner = epsilon_subcone(est.cone, eps, est.norm)

    if inner.is_zero:
        raise InvalidInput(f'The {eps}-subcone of the estimated cone is empty')

    scale = float(np.max(m.periods))
    children = np.random.SeedSequence(seed).spawn(NOISE_PAIRS + samples)
    noise_rngs = [np.random.default_rng(child) for child in children[:NOISE_PAIRS]]
    sample_rngs = [np.random.default_rng(child) for child in children[NOISE_PAIRS:]]
    ratios = []

    for rng in sample_rngs:
        x, z = rng.uniform(size=(2, m.dim)) * m.periods
        y = x + _inner_member(est, inner, scale, rng)
        w = z + _inner_member(est, inner, scale, rng)
        ratios.append(lipschitz_ratio(m, (x, y), (z, w), segments, restarts, seed))

    noise = 0.0

    for rng in noise_rngs:
        x = rng.uniform(size=m.dim) * m.periods
        y = x + _inner_member(est, inner, scale, rng)
        shift = rng.integers(-NOISE_SHIFT, NOISE_SHIFT + 1, size=m.dim) * m.periods

        base = time_separation(m, x, y, segments, restarts, seed).value
        moved = time_separation(m, x + shift, y + shift, segments, restarts, seed).value
        noise = max(noise, abs(base - moved) / max(base, 1e-12))

    counts, edges = np.histogram(ratios, bins=HISTOGRAM_BINS)
    histogram = [
        {'low': float(low), 'high': float(high), 'count': int(count)}
        for low, high, count in zip(edges, edges[1:], counts)
    ]

    logger.info(f'Coarse Lipschitz on {m.name}: max ratio {max(ratios)} over {samples} pairs, noise {noise}')

    return LipschitzReport(eps, samples, float(max(ratios)), histogram, noise, segments, restarts, ratios)


def export_histogram(report: LipschitzReport, file_path: Path) -> Path:
    header = ['low', 'high', 'count']
    return write_csv(file_path, header, ([row[key] for key in header] for row in report.ratio_histogram))
