import logging
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from django.conf import settings
from scipy.integrate import solve_ivp

from cones.cone import boundary_distance, contains, distance_to_cone, epsilon_subcone, is_compact_cone
from core.exceptions import ConstructionError, InvalidInput
from reach.causality import frak_table
from reach.grid import forward_reach
from spacetime.metric import MetricField, future_causal

from .cone import StableConeEstimate, a_of_h, cone_members

logger = logging.getLogger(__name__)

ORIENTATION = 'orientation'
FLOW_CHECKS = 1000


@dataclass
class FrakGrowthReport:
    rows: list
    c_est: float


def _vector_field(m: MetricField, x_spec):
    """ Batched callable for a constant vector, the orientation field or a callable """

    if isinstance(x_spec, str):
        if x_spec != ORIENTATION:
            raise InvalidInput(f'Unknown vector field: {x_spec}')

        return m.orientation

    if callable(x_spec):
        return x_spec

    vector = np.asarray(x_spec, dtype=float)

    if vector.shape != (m.dim,):
        raise InvalidInput(f'Vector field must have {m.dim} components')

    return lambda points: np.broadcast_to(vector, np.atleast_2d(points).shape)


def flow_rotation_vector(m: MetricField, x_spec, x0, duration: float) -> np.ndarray:
    """
    Rotation vector of the flow line of X from x0 over g_R-time `duration`

    The field is normalized to unit g_R speed and must be future timelike along
    the trajectory.

    :raises: InvalidInput, ConstructionError
    """

    field = _vector_field(m, x_spec)
    x0 = np.asarray(x0, dtype=float)

    if duration <= 0:
        raise InvalidInput('Flow duration must be positive')

    def rate(_, x):
        vector = np.atleast_2d(field(x[None, :]))
        return (vector / m.riemannian_norm(x[None, :], vector)[:, None])[0]

    solution = solve_ivp(rate, (0.0, duration), x0, rtol=1e-8, atol=1e-10, dense_output=True)

    if not solution.success:
        raise ConstructionError(f'Flow integration failed: {solution.message}', point=x0)

    points = solution.sol(np.linspace(0.0, duration, FLOW_CHECKS)).T
    vectors = np.atleast_2d(field(points))
    timelike = future_causal(m, points, vectors, margin=settings.NULL_TOLERANCE)

    if not timelike.all():
        point = points[np.argmin(timelike)]
        raise ConstructionError('Vector field is not future timelike on the flow line', point=point)

    return (solution.y[:, -1] - x0) / duration


def check_flow_in_cone(est: StableConeEstimate, rho, tol: float = 0.02) -> dict:
    """ Rotation vector of a flow line lies in the estimated cone, up to tol relative to its norm """

    rho = np.asarray(rho, dtype=float)
    length = est.norm.norm(rho)
    distance = distance_to_cone(est.cone, rho, est.norm) / length if length > 0 else 0.0

    if distance > tol:
        logger.warning(f'Rotation vector {rho.tolist()} is {distance:.4f} away from the {est.metric_name} cone')

    return {'ok': bool(distance <= tol), 'distance': float(distance), 'rho': rho.tolist()}


def check_cross_section_convexity(est: StableConeEstimate, pairs: int = 1000, seed: int = 0,
                                  tol: float = 0.02) -> dict:
    """ Midpoints of random cross-section pairs stay in the cone """

    rng = np.random.default_rng(seed)
    picks = rng.integers(len(est.cross_section), size=(pairs, 2))
    midpoints = (est.cross_section[picks[:, 0]] + est.cross_section[picks[:, 1]]) / 2

    scale = est.norm.norms(midpoints)
    distances = np.array([
        distance_to_cone(est.cone, midpoint, est.norm) / length if length > 0 else 0.0
        for midpoint, length in zip(midpoints, scale)
    ])

    return {'ok': bool(np.all(distances <= tol)), 'worst': float(distances.max()), 'pairs': pairs}


def check_open_interior(est: StableConeEstimate, margin: float = 1e-3) -> dict:
    """ A strictly positive dual witness and a basis of R^n strictly inside the cone """

    cone = est.cone
    compact, witness = is_compact_cone(cone)

    if not compact or witness is None:
        return {'ok': False, 'witness': None, 'basis': None, 'pairing': 0.0}

    rays = cone.rays / np.linalg.norm(cone.rays, axis=1, keepdims=True)
    pairing = float(np.min(rays @ witness))
    center = rays.mean(axis=0)

    # pull each generator towards the center, the result spans R^n when the cone is solid
    basis = 0.5 * rays + 0.5 * center
    inside = [boundary_distance(cone, vector).value >= margin * np.linalg.norm(vector) for vector in basis]
    spans = np.linalg.matrix_rank(basis, tol=1e-9) == cone.dim

    return {
        'ok': bool(pairing > margin and spans and all(inside)),
        'witness': witness.tolist(),
        'basis': basis.tolist(),
        'pairing': pairing,
    }


def _ball_offsets(spacing: np.ndarray, radius: float) -> np.ndarray:
    half = np.ceil(radius / spacing).astype(int)
    axes = [np.arange(-n, n + 1) for n in half]
    offsets = np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1).reshape(-1, len(spacing)) * spacing

    return offsets[np.linalg.norm(offsets, axis=1) <= radius]


def check_ball_inclusion(m: MetricField, est: StableConeEstimate, radius: float = 1.0, pairs: int = 100,
                         seed: int = 0, k_est: float = None, resolution: int = None, spread: float = 3.0) -> dict:
    """
    B_R(q) inside the reached set of p once q - p is deep enough in the cone

    Returns K_est(R), the largest boundary distance among failing pairs, and the
    number of pairs failing although their boundary distance is at least k_est.
    """

    rng = np.random.default_rng(seed)
    resolution = resolution or settings.REACH_RESOLUTION
    scale = float(np.max(m.periods))
    window = int(np.ceil(radius + spread + 1)) + 1

    depths, included = [], []

    for _ in range(pairs):
        p = rng.uniform(size=m.dim) * m.periods
        h = cone_members(est, 1, rng.uniform(radius, radius + spread, size=1) * scale, rng)[0]

        grid = forward_reach(m, p, window, resolution)
        snapped = p + np.rint(h / grid.spacing) * grid.spacing
        ball = snapped + _ball_offsets(grid.spacing, radius)

        depths.append(boundary_distance(est.cone, snapped - p, est.norm).value)
        included.append(bool(grid.reached(ball).all()))

    depths, included = np.array(depths), np.array(included)
    estimate = float(depths[~included].max()) if (~included).any() else 0.0
    threshold = estimate if k_est is None else k_est
    violations = int(np.count_nonzero(~included & (depths >= threshold)))

    return {'radius': radius, 'k_est': estimate, 'threshold': threshold, 'pairs': pairs, 'violations': violations}


def check_subset_sums(est: StableConeEstimate, families: int = 50, size: int = 6, b: int = 2,
                      eps: float = 0.2, seed: int = 0) -> dict:
    """
    Families of cone members with comparable norms whose sum lies in the eps-subcone

    Reports eta, the smallest over families of the best relative boundary distance
    of a b-element partial sum.
    """

    if not 1 <= b <= size:
        raise InvalidInput(f'Subset size must lie in [1, {size}], got {b}')

    rng = np.random.default_rng(seed)
    inner = epsilon_subcone(est.cone, eps, est.norm)
    etas = []

    for _ in range(families):
        for _ in range(100):
            family = cone_members(est, size, rng.uniform(1.0, 2.0, size=size), rng)

            if contains(inner, family.sum(axis=0)):
                break
        else:
            continue

        best = 0.0

        for subset in combinations(range(size), b):
            total = family[list(subset)].sum(axis=0)
            best = max(best, boundary_distance(est.cone, total, est.norm).value / est.norm.norm(total))

        etas.append(best)

    if not etas:
        return {'ok': False, 'eta': 0.0, 'families': 0}

    eta = float(min(etas))
    return {'ok': eta > 0, 'eta': eta, 'families': len(etas)}


def frak_growth(m: MetricField, est: StableConeEstimate, hs, n_max: int = 8,
                resolution: int = None) -> FrakGrowthReport:
    """
    frak(n h) against n a(h) for n = 1..n_max

    C_est is half the largest deviation, the residuals frak(2h) - 2 frak(h) show
    the linear growth.
    """

    hs = [np.asarray(h, dtype=int) for h in hs]
    multiples = [tuple(int(v) for v in n * h) for h in hs for n in range(1, n_max + 1)]
    window = int(np.max(np.abs(multiples))) + 2
    results = dict(zip(multiples, frak_table(m, multiples, resolution, window)))

    rows, c_est = [], 0.0

    for h in hs:
        a = a_of_h(est, None, h)
        values = [results[tuple(int(v) for v in n * h)].f_of_h for n in range(1, n_max + 1)]
        deviations = [abs(value - n * a) for n, value in enumerate(values, start=1)]
        c_est = max(c_est, max(deviations) / 2)

        rows.append({
            'h': h.tolist(),
            'a': a,
            'f': values,
            'doubling_residual': values[1] - 2 * values[0],
        })

    logger.info(f'Frak growth on {m.name}: C_est {c_est} over {len(hs)} classes')

    return FrakGrowthReport(rows, c_est)
