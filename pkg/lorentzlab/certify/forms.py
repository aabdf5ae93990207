import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np
from django.conf import settings
from scipy.optimize import minimize

from cones.cone import PolyCone, dual_cone, is_compact_cone
from core.exceptions import InvalidInput, RejectedForm
from curves.worldline import PolygonalWorldline, curve_lengths
from reach.grid import forward_reach
from spacetime.metric import MetricField
from stable.cone import StableConeEstimate

logger = logging.getLogger(__name__)

RAY_SAMPLES = 64
REFINE_STEPS = 40
CHUNK = 4096
CANDIDATES = 16
SNAP_DENOMINATOR = 8
CHAIN_RESOLUTION = 16
CHAIN_WINDOW = 2
CHAIN_SLACK_CELLS = 2
FOURIER_GRID = 8
GOLDEN = (np.sqrt(5) - 1) / 2


@dataclass
class FourierForm:
    """
    Closed 1-form alpha + d phi with phi a sum of low modes along each axis

    coefficients: (n, modes, 2) cosine and sine amplitudes per axis and mode
    """

    alpha: np.ndarray
    coefficients: np.ndarray
    periods: np.ndarray

    def _phases(self, points: np.ndarray) -> np.ndarray:
        modes = np.arange(1, self.coefficients.shape[1] + 1)
        return 2 * np.pi * points[:, :, None] * modes[None, None, :] / self.periods[None, :, None]

    def __call__(self, points: np.ndarray) -> np.ndarray:
        phases = self._phases(points)
        modes = np.arange(1, self.coefficients.shape[1] + 1)
        rates = 2 * np.pi * modes[None, :] / self.periods[:, None]
        cosine, sine = self.coefficients[..., 0], self.coefficients[..., 1]
        gradient = (rates * (-cosine * np.sin(phases) + sine * np.cos(phases))).sum(axis=-1)

        return self.alpha[None, :] + gradient

    def potential(self, points: np.ndarray) -> np.ndarray:
        phases = self._phases(points)
        cosine, sine = self.coefficients[..., 0], self.coefficients[..., 1]
        return points @ self.alpha + (cosine * np.cos(phases) + sine * np.sin(phases)).sum(axis=(1, 2))


@dataclass
class FormCheck:
    """ Smallest alpha(v) / |v| over sampled future null rays on the check grid """

    alpha: list
    c: float
    accepted: bool
    witness: dict
    points: int


@dataclass
class FormSearch:
    alpha: Optional[list]
    c: Optional[float]
    tried: list
    reason: str = ''
    fourier: Optional[list] = None

    @property
    def found(self) -> bool:
        return self.alpha is not None


@dataclass
class TemporalRecord:
    """ Constants of the temporal function tau = alpha . x and its chain checks """

    alpha: list
    c: float
    length_constant: float
    dual_norm: float
    level_spacing: float
    chains: int
    violations: int
    sweep_rate: Optional[float]
    worst: dict = field(default_factory=dict)


def _field(alpha) -> Callable:
    if callable(alpha):
        return alpha

    alpha = np.asarray(alpha, dtype=float)
    return lambda points: np.broadcast_to(alpha, points.shape)


def _describe(alpha) -> list:
    return alpha.alpha.tolist() if isinstance(alpha, FourierForm) else np.asarray(alpha, dtype=float).tolist()


def form_grid(m: MetricField, resolution: int = None) -> np.ndarray:
    """ Nodes of the regular grid of the fundamental domain """

    resolution = resolution or settings.FORM_RESOLUTION
    axes = [np.arange(resolution) * period / resolution for period in m.periods]
    return np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1).reshape(-1, m.dim)


def _frames(m: MetricField, points: np.ndarray):
    """ Unit orientation vectors and a basis of their g-orthogonal complements """

    g = m.metric(points)
    x = m.orientation(points)
    x = x / np.linalg.norm(x, axis=1, keepdims=True)
    gx = np.einsum('nij,nj->ni', g, x)

    if m.dim == 2:
        basis = np.stack([-gx[:, 1], gx[:, 0]], axis=1)[:, None, :]

    else:
        axis = np.eye(3)[np.argmin(np.abs(gx), axis=1)]
        first = np.cross(gx, axis)
        second = np.cross(gx, first)
        basis = np.stack([first, second], axis=1)

    return g, x, basis / np.linalg.norm(basis, axis=-1, keepdims=True)


def _null_rays(m: MetricField, points, g, x, seeds) -> np.ndarray:
    low = np.zeros(len(points))
    high = np.full(len(points), np.pi / 2)

    def arc(s):
        return np.cos(s)[:, None] * x + np.sin(s)[:, None] * seeds

    for _ in range(settings.BISECTION_STEPS):
        middle = (low + high) / 2
        vectors = arc(middle)
        timelike = np.einsum('ni,nij,nj->n', vectors, g, vectors) < 0
        low = np.where(timelike, middle, low)
        high = np.where(timelike, high, middle)

    rays = arc((low + high) / 2)
    return rays / m.riemannian_norm(points, rays)[:, None]


def _weakest_rays(m: MetricField, points: np.ndarray, covectors: np.ndarray):
    """ Per point, the sampled future null ray minimizing the pairing with the covector """

    g, x, basis = _frames(m, points)

    if m.dim == 2:
        rays = np.stack([_null_rays(m, points, g, x, sign * basis[:, 0]) for sign in (1, -1)])
        ratios = np.einsum('ni,kni->kn', covectors, rays)
        best = np.argmin(ratios, axis=0)
        rows = np.arange(len(points))
        return ratios[best, rows], rays[best, rows]

    def evaluate(angles):
        seeds = np.cos(angles)[:, None] * basis[:, 0] + np.sin(angles)[:, None] * basis[:, 1]
        rays = _null_rays(m, points, g, x, seeds)
        return np.einsum('ni,ni->n', covectors, rays), rays

    grid = np.linspace(0, 2 * np.pi, RAY_SAMPLES, endpoint=False)
    coarse = np.stack([evaluate(np.full(len(points), angle))[0] for angle in grid])
    center = grid[np.argmin(coarse, axis=0)]

    # golden section on the angle around the coarse minimum
    half = 2 * np.pi / RAY_SAMPLES
    low, high = center - half, center + half

    for _ in range(REFINE_STEPS):
        left = high - GOLDEN * (high - low)
        right = low + GOLDEN * (high - low)
        smaller = evaluate(left)[0] < evaluate(right)[0]
        high = np.where(smaller, right, high)
        low = np.where(smaller, low, left)

    ratios, rays = evaluate((low + high) / 2)
    fallback = coarse.min(axis=0) < ratios

    if fallback.any():
        angles = np.where(fallback, grid[np.argmin(coarse, axis=0)], (low + high) / 2)
        ratios, rays = evaluate(angles)

    return ratios, rays


def evaluate_form(m: MetricField, alpha, resolution: int = None, margin: float = None,
                  points: np.ndarray = None) -> FormCheck:
    """
    Transversality of a closed 1-form on the check grid

    alpha is a constant covector or a FourierForm. It is accepted when
    alpha(v) >= margin |v| for every sampled future causal v.
    """

    margin = settings.TRANSVERSAL_MARGIN if margin is None else margin
    points = form_grid(m, resolution) if points is None else points
    covector = _field(alpha)

    worst, witness = np.inf, {}

    for start in range(0, len(points), CHUNK):
        chunk = points[start:start + CHUNK]
        ratios, rays = _weakest_rays(m, chunk, np.asarray(covector(chunk), dtype=float))
        index = int(np.argmin(ratios))

        if ratios[index] < worst:
            worst = float(ratios[index])
            witness = {'point': chunk[index].tolist(), 'vector': rays[index].tolist(), 'pairing': worst}

    return FormCheck(_describe(alpha), worst, worst >= margin, witness, len(points))


def snap(alpha, denominator: int = SNAP_DENOMINATOR) -> np.ndarray:
    """ Nearby covector with small rational entries, scaled to unit maximum entry """

    alpha = np.asarray(alpha, dtype=float)
    alpha = alpha / np.max(np.abs(alpha))
    return np.array([float(Fraction(value).limit_denominator(denominator)) for value in alpha])


def dual_candidates(cone: PolyCone, count: int = CANDIDATES) -> np.ndarray:
    """ Covectors strictly inside the dual cone, deepest first """

    dual = dual_cone(cone)

    if dual.is_zero or cone.is_zero:
        return np.zeros((0, cone.dim))

    rays = dual.rays / np.linalg.norm(dual.rays, axis=1, keepdims=True)

    if cone.dim == 2 and len(rays) == 2:
        weights = np.linspace(0, 1, 4 * count + 2)[1:-1, None]
        samples = (1 - weights) * rays[0] + weights * rays[1]
    else:
        samples = rays

    _, witness = is_compact_cone(cone)

    if witness is not None:
        samples = np.vstack([witness, samples])

    samples = samples / np.linalg.norm(samples, axis=1, keepdims=True)
    members = cone.rays / np.linalg.norm(cone.rays, axis=1, keepdims=True)
    depth = np.min(samples @ members.T, axis=1)
    order = np.argsort(-depth, kind='stable')

    return samples[order][depth[order] > 0][:count]


def _fourier_search(m: MetricField, alpha: np.ndarray, modes: int, margin: float) -> Optional[FourierForm]:
    """ Maximize the transversality constant over low-mode corrections d phi """

    coarse = form_grid(m, FOURIER_GRID)
    shape = (m.dim, modes, 2)

    def objective(flat):
        form = FourierForm(alpha, flat.reshape(shape), m.periods)
        ratios, _ = _weakest_rays(m, coarse, form(coarse))
        return -float(ratios.min())

    size = int(np.prod(shape))
    result = minimize(objective, np.zeros(size), method='Nelder-Mead', options={'maxiter': 200 * size})
    form = FourierForm(alpha, result.x.reshape(shape), m.periods)

    return form if evaluate_form(m, form, margin=margin).accepted else None


def find_transversal_form(m: MetricField, cone_est: StableConeEstimate, resolution: int = None,
                          margin: float = None, count: int = CANDIDATES) -> FormSearch:
    """
    Constant covector strictly inside the dual of the estimated stable cone and
    positive on every sampled future causal vector

    Each dual candidate is tried in a small-denominator rational form first.
    """

    margin = settings.TRANSVERSAL_MARGIN if margin is None else margin
    candidates = dual_candidates(cone_est.cone, count)
    tried, seen = [], set()

    for candidate in candidates:
        for alpha in (snap(candidate), candidate):
            key = tuple(np.round(alpha, 12))

            if key in seen:
                continue

            seen.add(key)
            check = evaluate_form(m, alpha, resolution, margin)
            tried.append({'alpha': check.alpha, 'c': check.c})

            if check.accepted:
                logger.info(f'Transversal form {check.alpha} on {m.name} with c = {check.c}')
                return FormSearch(check.alpha, check.c, tried)

    modes = settings.FOURIER_MODES

    if modes > 0 and len(candidates):
        form = _fourier_search(m, candidates[0], min(modes, 3), margin)

        if form is not None:
            check = evaluate_form(m, form, resolution, margin)
            return FormSearch(check.alpha, check.c, tried, fourier=form.coefficients.tolist())

    logger.warning(f'No constant transversal form found for {m.name} among {len(tried)} candidates')
    return FormSearch(None, None, tried, 'no constant representative')


def dual_norm(m: MetricField, alpha, points: np.ndarray) -> np.ndarray:
    """ g_R dual norm of the covector field at the points """

    covectors = np.asarray(_field(alpha)(points), dtype=float)
    inverse = np.linalg.inv(m.riemannian(points))
    return np.sqrt(np.einsum('ni,nij,nj->n', covectors, inverse, covectors))


def _potential(alpha) -> Callable:
    if isinstance(alpha, FourierForm):
        return alpha.potential

    alpha = np.asarray(alpha, dtype=float)
    return lambda points: np.atleast_2d(points) @ alpha


def _random_chain(m: MetricField, rng: np.random.Generator) -> Optional[PolygonalWorldline]:
    x = rng.uniform(size=m.dim) * m.periods
    grid = forward_reach(m, x, CHAIN_WINDOW, CHAIN_RESOLUTION)
    reached = grid.points()
    reached = reached[np.linalg.norm(reached - x, axis=1) > np.max(grid.spacing)]

    if not len(reached):
        return None

    return grid.chain(reached[rng.integers(len(reached))])


def temporal_function_check(m: MetricField, alpha, chains: int = 100, seed: int = 0,
                            resolution: int = None) -> TemporalRecord:
    """
    Temporal function tau with d tau = alpha and its Cauchy constants

    c is the smallest alpha(v) / |v| over sampled future causal v, the bound
    L(gamma) <= (sup |alpha|* / c) dist(endpoints) is checked on random reach chains.
    The sweep rate is the smallest growth of tau per unit length along them.

    :raises: RejectedForm
    """

    points = form_grid(m, resolution)
    check = evaluate_form(m, alpha, points=points, margin=0.0)

    if check.c <= settings.NULL_TOLERANCE:
        raise RejectedForm(f'Form {check.alpha} is not transversal on {m.name}: c = {check.c}', check.witness)

    supremum = float(dual_norm(m, alpha, points).max())
    constant = supremum / check.c
    tau = _potential(alpha)
    rng = np.random.default_rng(seed)

    slack = CHAIN_SLACK_CELLS * constant * float(np.max(m.periods)) / CHAIN_RESOLUTION
    violations, rates, worst, used = 0, [], {}, 0

    for _ in range(chains):
        chain = _random_chain(m, rng)

        if chain is None:
            continue

        start, end = chain.vertices[0], chain.vertices[-1]
        length = curve_lengths(m, chain).riemannian
        distance = curve_lengths(m, PolygonalWorldline(np.stack([start, end]), m.name)).riemannian
        rise = float(tau(end)[0] - tau(start)[0])
        excess = length - constant * distance

        rates.append(rise / length)
        violations += int(excess > slack)
        used += 1

        if not worst or excess > worst['excess']:
            worst = {'start': start.tolist(), 'end': end.tolist(), 'length': length, 'excess': excess}

    if violations:
        logger.warning(f'{violations} of {used} chains on {m.name} exceed the temporal function bound')

    return TemporalRecord(
        alpha=check.alpha,
        c=check.c,
        length_constant=constant,
        dual_norm=supremum,
        level_spacing=1.0 / supremum,
        chains=used,
        violations=violations,
        sweep_rate=min(rates) if rates else None,
        worst=worst,
    )


def parse_covector(alpha, dim: int) -> np.ndarray:
    """ :raises: InvalidInput """

    alpha = np.asarray(alpha, dtype=float)

    if alpha.shape != (dim,) or not np.all(np.isfinite(alpha)) or not np.any(alpha):
        raise InvalidInput(f'Covector must be a nonzero finite vector of R^{dim}')

    return alpha
