import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from django.conf import settings
from scipy.optimize import linprog, minimize_scalar, nnls
from scipy.spatial import ConvexHull

from core.exceptions import InvalidInput

from .norms import NormModel
from .sphere import circle, directions, perp, rotate

logger = logging.getLogger(__name__)

ZERO = 'zero'
RAY = 'ray'
POINTED = 'pointed'
LINE = 'line'
HALF_PLANE = 'half-plane'
FULL = 'full'
SAMPLED = 'sampled'


@dataclass(frozen=True, eq=False)
class PolyCone:
    """
    Closed convex cone in R^b spanned by finitely many rays

    rays: (k, b) array of generators, unit length in the ambient norm
    kind: shape tag, exact for b <= 2 and 'sampled' (or zero/full) above
    """

    dim: int
    rays: np.ndarray
    norm: NormModel
    kind: str
    contains_line: bool

    @property
    def is_zero(self) -> bool:
        return self.kind == ZERO

    @property
    def is_full(self) -> bool:
        return self.kind == FULL


class BoundaryDistance(NamedTuple):
    value: float
    outside: bool


def _normalized(vectors: np.ndarray, norm: NormModel) -> np.ndarray:
    return vectors / norm.norms(vectors)[:, None]


def _zero(dim: int, norm: NormModel) -> PolyCone:
    return PolyCone(dim, np.zeros((0, dim)), norm, ZERO, False)


def _full(dim: int, norm: NormModel) -> PolyCone:
    axes = np.concatenate([np.eye(dim), -np.eye(dim)])
    return PolyCone(dim, _normalized(axes, norm), norm, FULL, True)


def _hull_1d(rays: np.ndarray, norm: NormModel) -> PolyCone:
    signs = np.unique(np.sign(rays[:, 0]))

    if len(signs) == 2:
        return PolyCone(1, _normalized(np.array([[1.0], [-1.0]]), norm), norm, LINE, True)

    return PolyCone(1, _normalized(np.array([[signs[0]]]), norm), norm, RAY, False)


def _hull_2d(rays: np.ndarray, norm: NormModel) -> PolyCone:
    tol = settings.CONE_LINE_TOLERANCE
    angles = np.sort(np.arctan2(rays[:, 1], rays[:, 0]))
    gaps = np.diff(np.append(angles, angles[0] + 2 * np.pi))

    def unit(angle):
        return np.array([[np.cos(angle), np.sin(angle)]])

    if len(angles) == 1 or gaps.max() >= 2 * np.pi - tol:
        return PolyCone(2, _normalized(unit(angles[0]), norm), norm, RAY, False)

    widest = int(np.argmax(gaps))
    end = angles[widest]
    start = angles[(widest + 1) % len(angles)]

    if gaps[widest] > np.pi + tol:
        span = (end - start) % (2 * np.pi)

        if span <= tol:
            return PolyCone(2, _normalized(unit(start), norm), norm, RAY, False)

        generators = np.concatenate([unit(start), unit(end)])
        return PolyCone(2, _normalized(generators, norm), norm, POINTED, False)

    if gaps[widest] >= np.pi - tol:
        # every ray on the line through start and end
        offsets = np.abs(np.sin(angles - start))

        if np.all(offsets <= tol):
            generators = np.concatenate([unit(start), unit(start + np.pi)])
            return PolyCone(2, _normalized(generators, norm), norm, LINE, True)

        generators = np.concatenate([unit(start), unit(start + np.pi), unit(start + np.pi / 2)])
        return PolyCone(2, _normalized(generators, norm), norm, HALF_PLANE, True)

    return _full(2, norm)


def _is_pointed(rays: np.ndarray) -> bool:
    # pointed iff some covector is strictly positive on every generator

    return _max_min_pairing(rays)[0] > settings.CONE_LINE_TOLERANCE


def _max_min_pairing(rays: np.ndarray):
    dim = rays.shape[1]
    cost = np.zeros(dim + 1)
    cost[-1] = -1.0

    constraints = np.hstack([-rays, np.ones((len(rays), 1))])
    bounds = [(-1.0, 1.0)] * dim + [(None, 1.0)]

    result = linprog(cost, A_ub=constraints, b_ub=np.zeros(len(rays)), bounds=bounds, method='highs')

    if not result.success:
        return 0.0, None

    return float(result.x[-1]), result.x[:-1]


def conic_hull(rays, norm: Optional[NormModel] = None, dim: Optional[int] = None) -> PolyCone:
    """ Smallest closed convex cone containing the given rays """

    norm = norm or NormModel.euclidean()
    rays = np.asarray(rays, dtype=float)

    if rays.size == 0:
        if dim is None:
            raise InvalidInput('Dimension is required for an empty ray set')

        return _zero(dim, norm)

    rays = np.atleast_2d(rays)
    dim = rays.shape[1]

    if not np.all(np.isfinite(rays)):
        raise InvalidInput('Rays must be finite')

    if np.any(np.linalg.norm(rays, axis=1) == 0):
        raise InvalidInput('Zero vector is not a ray')

    rays = _normalized(rays, NormModel.euclidean())

    if dim == 1:
        return _hull_1d(rays, norm)

    if dim == 2:
        return _hull_2d(rays, norm)

    rays = np.unique(np.round(rays, 12), axis=0)
    pointed = _is_pointed(rays)

    if not pointed and _spans_everything(rays):
        return _full(dim, norm)

    return PolyCone(dim, _normalized(rays, norm), norm, SAMPLED, not pointed)


def _spans_everything(rays: np.ndarray) -> bool:
    dim = rays.shape[1]
    probes = np.concatenate([np.eye(dim), -np.eye(dim)])

    return all(nnls(rays.T, probe)[1] <= settings.CONE_MEMBERSHIP_TOLERANCE for probe in probes)


def contains(cone: PolyCone, vector, tol: Optional[float] = None) -> bool:
    """ Membership up to tol relative to the vector length """

    tol = settings.CONE_MEMBERSHIP_TOLERANCE if tol is None else tol
    vector = np.asarray(vector, dtype=float)
    length = np.linalg.norm(vector)

    if length == 0:
        return True

    if cone.is_zero:
        return False

    if cone.is_full:
        return True

    residual = nnls(cone.rays.T, vector)[1]
    return residual <= tol * length + 1e-12


def dual_cone(cone: PolyCone) -> PolyCone:
    """ Covectors nonnegative on the cone """

    dim, norm = cone.dim, cone.norm

    if cone.is_zero:
        return _full(dim, norm)

    if cone.is_full:
        return _zero(dim, norm)

    if dim == 1:
        return cone if cone.kind == RAY else _zero(1, norm)

    if dim == 2:
        return _dual_2d(cone)

    samples = directions(dim, settings.CONE_SPHERE_SAMPLES)
    keep = np.all(samples @ cone.rays.T >= -1e-12, axis=1)

    if not keep.any():
        return _zero(dim, norm)

    return conic_hull(samples[keep], norm)


def _dual_2d(cone: PolyCone) -> PolyCone:
    norm = cone.norm
    rays = cone.rays

    if cone.kind == RAY:
        return conic_hull([perp(rays[0]), -perp(rays[0]), rays[0]], norm)

    if cone.kind == POINTED:
        return conic_hull([perp(rays[0]), -perp(rays[1])], norm)

    if cone.kind == LINE:
        return conic_hull([perp(rays[0]), -perp(rays[0])], norm)

    # half-plane: inward normal of the boundary line
    normal = perp(rays[0])

    if normal @ rays[2] < 0:
        normal = -normal

    return conic_hull([normal], norm)


def _facet_normals(cone: PolyCone) -> Optional[np.ndarray]:
    """ Inward unit normals of facets through the origin, None when no interior """

    if cone.kind in (ZERO, RAY, LINE):
        return None

    if cone.dim == 2:
        return _unit_rows(_dual_2d(cone).rays)

    points = np.vstack([np.zeros(cone.dim), _unit_rows(cone.rays)])

    try:
        equations = ConvexHull(points).equations

    except Exception:
        return None

    through_origin = np.abs(equations[:, -1]) < 1e-9
    return -equations[through_origin, :-1]


def _unit_rows(vectors: np.ndarray) -> np.ndarray:
    return vectors / np.linalg.norm(vectors, axis=1, keepdims=True)


def boundary_distance(cone: PolyCone, vector, norm: Optional[NormModel] = None) -> BoundaryDistance:
    """ Distance from a member of the cone to its boundary, 0 with outside=True otherwise """

    norm = norm or cone.norm
    vector = np.asarray(vector, dtype=float)

    if not contains(cone, vector):
        return BoundaryDistance(0.0, True)

    if np.linalg.norm(vector) == 0:
        return BoundaryDistance(0.0, False)

    if cone.is_full:
        return BoundaryDistance(float('inf'), False)

    normals = _facet_normals(cone)

    if normals is None:
        return BoundaryDistance(0.0, False)

    if len(normals) == 0:
        return BoundaryDistance(float('inf'), False)

    if norm.kind == 'euclidean':
        return BoundaryDistance(max(0.0, float(np.min(normals @ vector))), False)

    return BoundaryDistance(_distance_to_boundary_rays(vector, _boundary_rays(cone), norm), False)


def _boundary_rays(cone: PolyCone) -> np.ndarray:
    """ Generators sweeping the boundary of the cone """

    if cone.dim == 2:
        return cone.rays[:2]

    rays = _unit_rows(cone.rays)
    points = np.vstack([np.zeros(cone.dim), rays])
    hull = ConvexHull(points)
    weights = np.linspace(0.0, 1.0, 17)
    sweep = []

    for simplex, equation in zip(hull.simplices, hull.equations):
        if abs(equation[-1]) >= 1e-9:
            continue

        a, b = [points[i] for i in simplex if i != 0][:2]
        sweep.extend((1 - w) * a + w * b for w in weights)

    return np.array(sweep)


def _distance_to_boundary_rays(vector: np.ndarray, rays: np.ndarray, norm: NormModel) -> float:
    reach = 2 * norm.norm(vector)
    best = norm.norm(vector)

    for ray in rays:
        scale = norm.norm(ray)
        result = minimize_scalar(
            lambda t: norm.norm(vector - t * ray / scale), bounds=(0.0, reach), method='bounded'
        )
        best = min(best, float(result.fun))

    return best


def distance_to_cone(cone: PolyCone, vector, norm: Optional[NormModel] = None) -> float:
    """ Distance from a vector to the cone, 0 for members """

    norm = norm or cone.norm
    vector = np.asarray(vector, dtype=float)

    if contains(cone, vector) or cone.is_full:
        return 0.0

    if cone.is_zero:
        return norm.norm(vector)

    if norm.kind == 'euclidean':
        return float(nnls(cone.rays.T, vector)[1])

    generators = cone.rays if cone.dim <= 2 else _boundary_rays(cone)
    return _distance_to_boundary_rays(vector, generators, norm)


def epsilon_subcone(cone: PolyCone, eps: float, norm: Optional[NormModel] = None) -> PolyCone:
    """ Members whose boundary distance is at least eps times their length """

    if eps < 0:
        raise InvalidInput('eps must be nonnegative')

    norm = norm or cone.norm

    if eps == 0 or cone.is_zero:
        return cone

    if cone.is_full:
        return cone

    if cone.kind in (RAY, LINE):
        return _zero(cone.dim, cone.norm)

    if cone.dim == 2 and norm.kind == 'euclidean':
        return _epsilon_subcone_2d(cone, eps)

    return _epsilon_subcone_sampled(cone, eps, norm)


def _epsilon_subcone_2d(cone: PolyCone, eps: float) -> PolyCone:
    tol = settings.CONE_LINE_TOLERANCE

    if eps > 1:
        return _zero(2, cone.norm)

    shift = np.arcsin(eps)
    rays = _unit_rows(cone.rays)

    if cone.kind == HALF_PLANE:
        normal = perp(rays[0])

        if normal @ rays[2] < 0:
            normal = -normal

        generators = [np.cos(shift) * rays[0] + np.sin(shift) * normal,
                      -np.cos(shift) * rays[0] + np.sin(shift) * normal]
        return conic_hull(generators, cone.norm)

    start, end = rays
    opening = np.arctan2(start[0] * end[1] - start[1] * end[0], start @ end)
    remaining = opening - 2 * shift

    if remaining < -tol:
        return _zero(2, cone.norm)

    if remaining <= tol:
        return conic_hull([rotate(start, opening / 2)], cone.norm)

    return conic_hull([rotate(start, shift), rotate(end, -shift)], cone.norm)


def _epsilon_subcone_sampled(cone: PolyCone, eps: float, norm: NormModel) -> PolyCone:
    if cone.dim == 2:
        start, end = _unit_rows(cone.rays[:2])
        first = np.arctan2(start[1], start[0])
        opening = (np.arctan2(end[1], end[0]) - first) % (2 * np.pi)

        if cone.kind == HALF_PLANE:
            opening = np.pi

        candidates = circle(settings.CONE_CIRCLE_SAMPLES, first, first + opening, closed=True)

    else:
        candidates = directions(cone.dim, settings.CONE_SPHERE_SAMPLES)

    kept = [
        candidate for candidate in candidates
        if boundary_distance(cone, candidate, norm).value >= eps * norm.norm(candidate) * (1 - 1e-12)
    ]

    logger.debug(f'eps-subcone kept {len(kept)} of {len(candidates)} sampled directions')

    if not kept:
        return _zero(cone.dim, cone.norm)

    return conic_hull(kept, cone.norm)


def is_compact_cone(cone: PolyCone):
    """
    Some covector is strictly positive on every generating ray

    Returns (flag, witness). Cones without interior, like a single ray, qualify.
    """

    if cone.is_zero:
        return True, None

    if cone.contains_line:
        return False, None

    value, witness = _max_min_pairing(cone.rays)

    if value <= 1e-9 or witness is None:
        return False, None

    return True, witness / np.linalg.norm(witness)
