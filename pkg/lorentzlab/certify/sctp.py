import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import gcd, lcm
from typing import Optional

import numpy as np
from django.conf import settings

from core.exceptions import InvalidInput
from reach.grid import forward_reach
from spacetime.metric import MetricField

from .forms import parse_covector

logger = logging.getLogger(__name__)

RATIONAL_DENOMINATOR = 64
FIBER_RESOLUTION = 4
N0_MAX = 4


@dataclass
class SctpReport:
    """
    Level sets of tau = alpha . x / s on the cover, s the smallest positive lattice pairing

    graph_ok: Sigma_0 is a graph over the fiber axes with a cocompact fiber lattice
    precedes_ok: every sampled point of Sigma_0 has Sigma_1 points in its reached timelike future
    n0: smallest n such that a lattice translation raising tau by n maps each sample into I+
    """

    alpha: list
    pairings: list
    graph_axis: int
    fiber_basis: list
    graph_ok: bool
    precedes_ok: bool
    n0: Optional[int]
    samples: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.graph_ok and self.precedes_ok and self.n0 is not None

    def as_dict(self) -> dict:
        return {
            'alpha': self.alpha,
            'pairings': self.pairings,
            'graph_axis': self.graph_axis,
            'fiber_basis': self.fiber_basis,
            'graph_ok': self.graph_ok,
            'precedes_ok': self.precedes_ok,
            'n0': self.n0,
            'ok': self.ok,
            'samples': self.samples,
        }


def lattice_pairings(m: MetricField, alpha: np.ndarray):
    """
    Integer pairings of alpha with the lattice generators, divided by their gcd

    Returns the pairings and the generating value s.

    :raises: InvalidInput
    """

    values = alpha * m.periods
    fractions = [Fraction(value).limit_denominator(RATIONAL_DENOMINATOR) for value in values]

    if any(abs(float(fraction) - value) > 1e-9 for fraction, value in zip(fractions, values)):
        raise InvalidInput(f'Covector {alpha.tolist()} has irrational lattice pairings')

    common = lcm(*[fraction.denominator for fraction in fractions])
    integers = [int(fraction * common) for fraction in fractions]
    divisor = gcd(*integers)

    return np.array(integers) // divisor, divisor / common


def fiber_lattice(pairings: np.ndarray) -> np.ndarray:
    """ Short independent integer vectors annihilated by the pairings """

    dim = len(pairings)
    bound = int(np.abs(pairings).max()) + 1
    vectors = [k for k in product(range(-bound, bound + 1), repeat=dim) if any(k) and np.dot(k, pairings) == 0]
    vectors.sort(key=lambda k: (np.abs(k).sum(), tuple(-value for value in k)))

    basis = []

    for vector in vectors:
        if np.linalg.matrix_rank(np.array(basis + [vector])) > len(basis):
            basis.append(vector)

        if len(basis) == dim - 1:
            break

    return np.array(basis, dtype=int).reshape(-1, dim)


def level_points(m: MetricField, alpha: np.ndarray, axis: int, level: float, resolution: int) -> np.ndarray:
    """ Grid of the fiber axes lifted to the level set alpha . x = level """

    fiber = [i for i in range(m.dim) if i != axis]
    axes = [np.arange(resolution) * m.periods[i] / resolution for i in fiber]
    grid = np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1).reshape(-1, len(fiber))

    points = np.zeros((len(grid), m.dim))
    points[:, fiber] = grid
    points[:, axis] = (level - grid @ alpha[fiber]) / alpha[axis]

    return points


def _translations(pairings: np.ndarray, n: int, bound: int) -> np.ndarray:
    ks = [k for k in product(range(-bound, bound + 1), repeat=len(pairings)) if np.dot(k, pairings) == n]
    return np.array(ks, dtype=float).reshape(-1, len(pairings))


def sctp_check(m: MetricField, alpha, resolution: int = None, window: int = 3,
               fiber_resolution: int = FIBER_RESOLUTION) -> SctpReport:
    """
    Level-set structure of the temporal function of a rational transversal form

    Sigma_0 is sampled on a fiber grid; deck invariance carries the checks to every
    Sigma_n. Reachability uses the timelike margin so reached points are chronological.

    :raises: InvalidInput
    """

    alpha = parse_covector(alpha, m.dim)
    pairings, generator = lattice_pairings(m, alpha)
    normalized = alpha / generator

    axis = int(np.argmax(np.abs(normalized)))
    basis = fiber_lattice(pairings)
    graph_ok = bool(normalized[axis] != 0 and len(basis) == m.dim - 1)

    points = level_points(m, normalized, axis, 0.0, fiber_resolution)
    needed = int(np.ceil(np.max(np.abs(points) / m.periods))) + 2
    window = max(window, needed)
    resolution = resolution or settings.REACH_RESOLUTION

    samples, n0 = [], 0

    for p in points:
        grid = forward_reach(m, p, window, resolution, margin=settings.REACH_EPS_T)
        reached = grid.points()
        top = float(np.max(reached @ normalized)) if len(reached) else -np.inf
        first = None

        for n in range(1, N0_MAX + 1):
            targets = p + _translations(pairings, n, window - 1) * m.periods

            if len(targets) and grid.reached(targets).any():
                first = n
                break

        samples.append({'point': p.tolist(), 'tau_reached': top, 'precedes': top >= 1.0, 'n0': first})
        n0 = None if first is None or n0 is None else max(n0, first)

    precedes_ok = all(sample['precedes'] for sample in samples)

    logger.info(f'SCTP check of {m.name} with alpha {alpha.tolist()}: graph {graph_ok}, '
                f'precedes {precedes_ok}, n0 {n0}')

    return SctpReport(
        alpha=normalized.tolist(),
        pairings=pairings.tolist(),
        graph_axis=axis,
        fiber_basis=basis.tolist(),
        graph_ok=graph_ok,
        precedes_ok=precedes_ok,
        n0=n0,
        samples=samples,
    )
