import logging
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple

import numpy as np
from django.conf import settings
from scipy.linalg import null_space

from core.exceptions import ConstructionError, InvalidInput

logger = logging.getLogger(__name__)

TIMELIKE = 'timelike'
NULL = 'null'
SPACELIKE = 'spacelike'

FUTURE = 'future'
PAST = 'past'
NONE = 'none'


def identity_field(dim: int) -> Callable:
    def riemannian(points: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.eye(dim), (len(points), dim, dim)).copy()

    return riemannian


@dataclass(frozen=True, eq=False)
class MetricField:
    """
    Periodic Lorentzian metric on the universal cover R^n of the n-torus

    All field callables are batched: they take an (N, n) array of cover points
    and return (N, n, n) matrices or (N, n) vectors.

    periods: diagonal lattice periods, the lattice is periods * Z^n
    time_axis: coordinate along which future causal vectors advance
    known_not_vicious: set by presets whose causal structure is known
    time_dependent: False when g does not depend on the time coordinate
    constant: True when g does not depend on the point at all
    """

    name: str
    dim: int
    periods: np.ndarray
    time_axis: int
    metric_fn: Callable
    orientation_fn: Callable
    riemannian_fn: Callable = None
    known_not_vicious: bool = False
    time_dependent: bool = True
    constant: bool = False
    riemannian_identity: bool = True
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise InvalidInput(f'Only dimensions 2 and 3 are supported, got {self.dim}')

        object.__setattr__(self, 'periods', np.asarray(self.periods, dtype=float))

        if self.riemannian_fn is None:
            object.__setattr__(self, 'riemannian_fn', identity_field(self.dim))

    def _batch(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return points.reshape(-1, self.dim)

    def metric(self, points) -> np.ndarray:
        """ g at one point (n, n) or at a batch of points (N, n, n) """

        points = np.asarray(points, dtype=float)
        values = self.metric_fn(self._batch(points))
        return values[0] if points.ndim == 1 else values

    def orientation(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        values = self.orientation_fn(self._batch(points))
        return values[0] if points.ndim == 1 else values

    def riemannian(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        values = self.riemannian_fn(self._batch(points))
        return values[0] if points.ndim == 1 else values

    def pair(self, points, u, v) -> np.ndarray:
        """ g(u, v) at matching batches of points and vectors """

        g = self.metric_fn(self._batch(points))
        return np.einsum('ni,nij,nj->n', self._batch(u), g, self._batch(v))

    def quad(self, points, vectors) -> np.ndarray:
        return self.pair(points, vectors, vectors)

    def riemannian_norm(self, points, vectors) -> np.ndarray:
        vectors = self._batch(vectors)

        if self.riemannian_identity:
            return np.linalg.norm(vectors, axis=1)

        g_r = self.riemannian_fn(self._batch(points))
        return np.sqrt(np.einsum('ni,nij,nj->n', vectors, g_r, vectors))

    def wrap(self, points) -> np.ndarray:
        """ Representative of the points in the fundamental domain """

        return np.mod(points, self.periods)

    def mirrored(self) -> 'MetricField':
        """ Pullback by p -> -p with the orientation carried along, its future is the mirrored past of self """

        return replace(
            self,
            name=f'{self.name}:mirrored',
            metric_fn=lambda points: self.metric_fn(-points),
            orientation_fn=lambda points: self.orientation_fn(-points),
            riemannian_fn=lambda points: self.riemannian_fn(-points),
        )

    def metric_derivatives(self, points) -> np.ndarray:
        """
        Fourth order central differences of g

        Returns (N, n, n, n) with [..., i, j, k] = d_k g_ij
        """

        points = self._batch(points)
        step = settings.FD_STEP
        derivatives = np.empty((len(points), self.dim, self.dim, self.dim))

        if self.constant:
            derivatives.fill(0.0)
            return derivatives

        for k in range(self.dim):
            shift = np.zeros(self.dim)
            shift[k] = step

            derivatives[..., k] = (
                -self.metric_fn(points + 2 * shift) + 8 * self.metric_fn(points + shift)
                - 8 * self.metric_fn(points - shift) + self.metric_fn(points - 2 * shift)
            ) / (12 * step)

        return derivatives


class CausalCharacter(NamedTuple):
    kind: str
    direction: str


class ConeRays(NamedTuple):
    rays: np.ndarray
    null: np.ndarray


def causal_character(m: MetricField, p, v, tol: float = None) -> CausalCharacter:
    """ Timelike, null or spacelike, with time orientation read off g(v, X) """

    tol = settings.NULL_TOLERANCE if tol is None else tol
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)

    value = float(m.quad(p, v)[0])
    scale = float(m.riemannian_norm(p, v)[0]) ** 2

    if abs(value) <= tol * scale:
        kind = NULL

    elif value < 0:
        kind = TIMELIKE

    else:
        return CausalCharacter(SPACELIKE, NONE)

    if scale == 0:
        return CausalCharacter(kind, NONE)

    pairing = float(m.pair(p, v, m.orientation(p))[0])
    return CausalCharacter(kind, FUTURE if pairing < 0 else PAST)


def future_causal(m: MetricField, points, vectors, tol: float = None, margin: float = 0.0) -> np.ndarray:
    """
    Batched test of g(v, v) <= -margin * |v|^2 (up to the null tolerance) and g(v, X) < 0

    With margin > 0 the test is strict timelike with that margin.
    """

    tol = settings.NULL_TOLERANCE if tol is None else tol
    points = m._batch(points)
    vectors = m._batch(vectors)

    scale = m.riemannian_norm(points, vectors) ** 2
    value = m.quad(points, vectors)
    pairing = m.pair(points, vectors, m.orientation(points))

    if margin > 0:
        causal = value <= -margin * scale
    else:
        causal = value <= tol * scale

    return causal & (pairing < 0) & (scale > 0)


def _arc_basis(m: MetricField, p: np.ndarray):
    """ Unit timelike seed and a basis of its g-orthogonal (spacelike) complement """

    g = m.metric(p)
    x = m.orientation(p)
    x = x / np.linalg.norm(x)

    return x, null_space((g @ x)[None, :]).T


def null_directions(m: MetricField, p, count: int) -> np.ndarray:
    """
    Future null directions at p by bisection on the sign of g(v, v)

    Seeds are the orientation field and `count` spacelike directions in its
    g-orthogonal complement; each arc cos(s) X + sin(s) S is bisected.
    """

    p = np.asarray(p, dtype=float)
    x, complement = _arc_basis(m, p)

    if m.dim == 2:
        seeds = np.stack([complement[0], -complement[0]])

    else:
        angles = np.linspace(0, 2 * np.pi, count, endpoint=False)
        seeds = np.cos(angles)[:, None] * complement[0] + np.sin(angles)[:, None] * complement[1]

    g = m.metric(p)
    low = np.zeros(len(seeds))
    high = np.full(len(seeds), np.pi / 2)

    def arc(s):
        return np.cos(s)[:, None] * x + np.sin(s)[:, None] * seeds

    for _ in range(settings.BISECTION_STEPS):
        middle = (low + high) / 2
        vectors = arc(middle)
        timelike = np.einsum('ni,ij,nj->n', vectors, g, vectors) < 0
        low = np.where(timelike, middle, low)
        high = np.where(timelike, high, middle)

    rays = arc((low + high) / 2)
    rays /= m.riemannian_norm(np.broadcast_to(p, rays.shape), rays)[:, None]

    residual = np.abs(np.einsum('ni,ij,nj->n', rays, g, rays))

    if np.any(residual > 1e-6):
        seed = seeds[int(np.argmax(residual))]
        raise ConstructionError(f'Null direction search failed for seed {seed.tolist()}', point=p)

    return rays


def cone_rays(m: MetricField, p, count: int) -> ConeRays:
    """ Unit g_R future causal rays: null boundary samples followed by interior timelike samples """

    if count < 2 * m.dim:
        raise InvalidInput(f'At least {2 * m.dim} rays are required, got {count}')

    p = np.asarray(p, dtype=float)
    null_count = 2 if m.dim == 2 else count // 2
    nulls = null_directions(m, p, null_count)
    inner_count = count - len(nulls)

    if m.dim == 2:
        weights = np.linspace(0, 1, inner_count + 2)[1:-1, None]
        inner = (1 - weights) * nulls[0] + weights * nulls[1]

    else:
        x = m.orientation(p)
        x = x / m.riemannian_norm(p, x)[0]
        weights = np.linspace(0.2, 0.8, 3)
        inner = np.array([
            (1 - weights[i % 3]) * x + weights[i % 3] * nulls[i % len(nulls)] for i in range(inner_count)
        ])

    inner = inner / m.riemannian_norm(np.broadcast_to(p, inner.shape), inner)[:, None]
    rays = np.concatenate([nulls, inner])

    return ConeRays(rays, np.arange(len(rays)) < len(nulls))


def null_cone_distance(m: MetricField, p, v, nulls: np.ndarray) -> float:
    """ g_R distance from v to the union of sampled null half-lines at p """

    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    g_r = m.riemannian(p)

    projections = np.clip(nulls @ g_r @ v, 0, None)
    residuals = v[None, :] - projections[:, None] * nulls

    return float(np.sqrt(np.min(np.einsum('ni,ij,nj->n', residuals, g_r, residuals))))


def epsilon_timecone_member(m: MetricField, p, v, eps: float) -> bool:
    """ Future timelike v at distance at least eps |v| from the null cone at p """

    if eps < 0:
        raise InvalidInput('eps must be nonnegative')

    character = causal_character(m, p, v)

    if character != (TIMELIKE, FUTURE):
        return False

    nulls = null_directions(m, p, settings.CONE_CIRCLE_SAMPLES)
    length = float(m.riemannian_norm(p, v)[0])

    return null_cone_distance(m, p, v, nulls) >= eps * length


def signature_ok(matrices: np.ndarray) -> np.ndarray:
    """ Exactly one negative eigenvalue per matrix """

    eigenvalues = np.linalg.eigvalsh(matrices)
    return (eigenvalues[..., 0] < 0) & (eigenvalues[..., 1] > 0)
