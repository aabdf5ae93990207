import logging
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings

from core.exceptions import ConstructionError, InvalidInput

from .metric import MetricField, identity_field, signature_ok

logger = logging.getLogger(__name__)

PRESET_SIDS = (
    ('flat', 'Flat Minkowski torus'),
    ('conformal_flat', 'Conformally flat torus'),
    ('product_circle', 'Product with a circle profile'),
    ('e1_counterexample', 'Non-vicious torus with a vertical timelike loop'),
)

FLAT_SID = PRESET_SIDS[0][0]
CONFORMAL_SID = PRESET_SIDS[1][0]
PRODUCT_SID = PRESET_SIDS[2][0]
E1_SID = PRESET_SIDS[3][0]

E1_PERIOD = 7.0


@dataclass(frozen=True)
class PresetSpec:
    name: str
    params: dict = field(default_factory=dict)


def smootherstep(u: np.ndarray) -> np.ndarray:
    u = np.clip(u, 0.0, 1.0)
    return u * u * u * (u * (6 * u - 15) + 10)


def minkowski(dim: int, time_axis: int = 0) -> np.ndarray:
    eta = np.eye(dim)
    eta[time_axis, time_axis] = -1.0
    return eta


class Preset:
    """
    Closed-form metric family

    sid: preset unique string identifier
    """

    sid = None
    time_axis = 0
    known_not_vicious = False
    time_dependent = False
    constant = False

    def __init__(self, params: dict):
        self.params = dict(params)
        self.dim = int(self.params.get('dim', 2))

    @classmethod
    def get_proxy(cls, sid: str):
        """
        Returns preset class with the given sid

        :raises: InvalidInput
        """

        for subclass in cls.__subclasses__():
            if subclass.sid == sid:
                return subclass

        raise InvalidInput(f'Preset with sid={sid} not found')

    @property
    def periods(self) -> np.ndarray:
        return np.ones(self.dim)

    def metric(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError('Metric should be overridden in subclasses')

    def orientation(self, points: np.ndarray) -> np.ndarray:
        vectors = np.zeros_like(points)
        vectors[:, 0] = 1.0
        return vectors

    def validate(self) -> None:
        """ Preset specific parameter checks """

    def check_points(self) -> np.ndarray:
        rng = np.random.default_rng(0)
        return rng.uniform(0, 1, size=(settings.SIGNATURE_SAMPLES, self.dim)) * self.periods

    # shared modifiers

    def perturbed(self, points: np.ndarray, metric: np.ndarray) -> np.ndarray:
        perturbation = self.params.get('perturbation')

        if not perturbation or not perturbation.get('amplitude'):
            return metric

        amplitude, mode = perturbation['amplitude'], perturbation.get('mode', 1)
        bump = np.prod(np.sin(np.pi * mode * points / self.periods) ** 2, axis=1)

        tilt = np.zeros((self.dim, self.dim))
        tilt[0, 1] = tilt[1, 0] = 1.0

        return metric + amplitude * bump[:, None, None] * tilt

    def riemannian(self):
        amplitude = self.params.get('riemannian_amplitude', 0.0)

        if not amplitude:
            return identity_field(self.dim)

        period = self.periods[1]

        def riemannian(points: np.ndarray) -> np.ndarray:
            factor = (1 + amplitude * np.sin(2 * np.pi * points[:, 1] / period)) ** 2
            return factor[:, None, None] * np.eye(self.dim)

        return riemannian

    def build(self) -> MetricField:
        self.validate()

        if abs(self.params.get('riemannian_amplitude', 0.0)) >= 1:
            raise InvalidInput('riemannian_amplitude must lie in (-1, 1)')

        metric_field = MetricField(
            name=self.sid,
            dim=self.dim,
            periods=self.periods,
            time_axis=self.time_axis,
            metric_fn=lambda points: self.perturbed(points, self.metric(points)),
            orientation_fn=self.orientation,
            riemannian_fn=self.riemannian(),
            known_not_vicious=self.known_not_vicious,
            time_dependent=self.time_dependent or self.is_perturbed,
            constant=self.constant and not self.is_perturbed,
            riemannian_identity=not self.params.get('riemannian_amplitude'),
            params=self.params,
        )

        check_signature(metric_field, self.check_points())
        logger.debug(f'Preset {self.sid} built with params {self.params}')

        return metric_field

    @property
    def is_perturbed(self) -> bool:
        return bool((self.params.get('perturbation') or {}).get('amplitude'))


class Flat(Preset):
    """ Minkowski metric on the torus R^n / scale Z^n """

    sid = FLAT_SID
    constant = True

    @property
    def periods(self) -> np.ndarray:
        return np.full(self.dim, float(self.params.get('scale', 1.0)))

    def metric(self, points: np.ndarray) -> np.ndarray:
        return np.broadcast_to(minkowski(self.dim), (len(points), self.dim, self.dim)).copy()


class ConformalFlat(Preset):
    """ f^2 times the Minkowski metric with f = base + amplitude * prod sin(2 pi p_i) """

    sid = CONFORMAL_SID
    time_dependent = True

    def factor(self, points: np.ndarray) -> np.ndarray:
        base = self.params.get('base', 1.0)
        amplitude = self.params.get('amplitude', 0.5)
        return base + amplitude * np.prod(np.sin(2 * np.pi * points), axis=1)

    def validate(self) -> None:
        values = self.factor(self.check_points())

        if np.any(values <= 0):
            raise InvalidInput('Conformal factor must be positive everywhere')

    def metric(self, points: np.ndarray) -> np.ndarray:
        return self.factor(points)[:, None, None] ** 2 * minkowski(self.dim)


class ProductCircle(Preset):
    """ -dt^2 + rho(x)^2 dx^2 (+ dy^2) with rho = rho0 + rho1 sin(2 pi x) """

    sid = PRODUCT_SID

    def profile(self, x: np.ndarray) -> np.ndarray:
        return self.params.get('rho0', 1.0) + self.params.get('rho1', 0.0) * np.sin(2 * np.pi * x)

    def validate(self) -> None:
        if np.any(self.profile(np.linspace(0, 1, 1001)) <= 0):
            raise InvalidInput('Circle profile must be positive everywhere')

    def metric(self, points: np.ndarray) -> np.ndarray:
        metric = np.broadcast_to(minkowski(self.dim), (len(points), self.dim, self.dim)).copy()
        metric[:, 1, 1] = self.profile(points[:, 1]) ** 2
        return metric

    @property
    def constant(self) -> bool:
        return self.params.get('rho1', 0.0) == 0


class E1Counterexample(Preset):
    """
    Metric a dx^2 + b dy^2 + c dy dz + e dx dz - k dz^2 on R^3 / 7 Z^3

    The coefficients depend on x only. They are held fixed on bands of half-width
    `width / 2` around x = 1..6 and blended with a C^2 step in between:

        x = 1, 4   dx^2 + dy^2 + dx dz
        x = 2      dx^2 - dy dz
        x = 3, 6   dx^2 + dy^2 - dx dz
        x = 5      dx^2 + dy dz
        x = 0, 3.5 dx^2 + dy^2 - dz^2

    Future vectors have dz >= 0, ker dz is spacelike off the bands at x = 2, 5
    and d/dz is timelike at x = 0.
    """

    sid = E1_SID
    time_axis = 2
    known_not_vicious = True

    # (b, c, e, k) at each knot interval [start, end]
    knots = (
        (0.0, 0.0, (1.0, 0.0, 0.0, 1.0)),
        (1.0, 1.0, (1.0, 0.0, 1.0, 0.0)),
        (2.0, 2.0, (0.0, -1.0, 0.0, 0.0)),
        (3.0, 3.0, (1.0, 0.0, -1.0, 0.0)),
        (3.5, 3.5, (1.0, 0.0, 0.0, 1.0)),
        (4.0, 4.0, (1.0, 0.0, 1.0, 0.0)),
        (5.0, 5.0, (0.0, 1.0, 0.0, 0.0)),
        (6.0, 6.0, (1.0, 0.0, -1.0, 0.0)),
        (7.0, 7.0, (1.0, 0.0, 0.0, 1.0)),
    )

    def __init__(self, params: dict):
        super().__init__(params)
        self.dim = 3
        self.width = float(self.params.get('width', 0.5))

    @property
    def periods(self) -> np.ndarray:
        return np.full(3, E1_PERIOD)

    def validate(self) -> None:
        if not 0 < self.width <= 0.5:
            raise InvalidInput('E1 band width must lie in (0, 0.5]')

    def intervals(self):
        half = self.width / 2

        for start, end, coefficients in self.knots:
            if start in (0.0, 3.5, 7.0):
                yield start, end, coefficients
            else:
                yield start - half, end + half, coefficients

    def coefficients(self, x: np.ndarray) -> np.ndarray:
        x = np.mod(x, E1_PERIOD)
        intervals = list(self.intervals())
        values = np.empty((len(x), 4))

        for (_, left, before), (right, _, after) in zip(intervals, intervals[1:]):
            inside = (x >= left) & (x <= right)
            blend = smootherstep((x[inside] - left) / (right - left))[:, None]
            values[inside] = (1 - blend) * np.array(before) + blend * np.array(after)

        for start, end, coefficients in intervals:
            held = (x >= start) & (x <= end)
            values[held] = coefficients

        return values

    def metric(self, points: np.ndarray) -> np.ndarray:
        b, c, e, k = self.coefficients(points[:, 0]).T
        metric = np.zeros((len(points), 3, 3))

        metric[:, 0, 0] = 1.0
        metric[:, 1, 1] = b
        metric[:, 2, 2] = -k
        metric[:, 0, 2] = metric[:, 2, 0] = e / 2
        metric[:, 1, 2] = metric[:, 2, 1] = c / 2

        return metric

    def orientation(self, points: np.ndarray) -> np.ndarray:
        _, c, e, _ = self.coefficients(points[:, 0]).T
        return np.stack([-e / 2, -c / 2, np.ones(len(points))], axis=1)

    def check_points(self) -> np.ndarray:
        # the metric depends on x only: sample x at the resolution of the full cubic grid
        resolution = settings.E1_CHECK_RESOLUTION ** 3
        x = np.arange(resolution) * E1_PERIOD / resolution
        return np.stack([x, np.zeros_like(x), np.zeros_like(x)], axis=1)


def check_signature(m: MetricField, points: np.ndarray, chunk: int = 4096) -> None:
    """
    Lorentzian signature and timelike orientation at every point

    :raises: ConstructionError
    """

    for start in range(0, len(points), chunk):
        batch = points[start:start + chunk]
        orientation = m.orientation(batch)
        bad = ~signature_ok(m.metric(batch)) | (m.quad(batch, orientation) >= 0)

        if bad.any():
            point = batch[int(np.argmax(bad))]
            raise ConstructionError(f'Metric {m.name} is not Lorentzian with timelike X at {point.tolist()}', point)


def make_preset(spec) -> MetricField:
    """
    Metric field of a validated preset spec

    :raises: InvalidInput, ConstructionError
    """

    if isinstance(spec, dict):
        spec = PresetSpec(spec['name'], spec.get('params') or {})

    return Preset.get_proxy(spec.name)(spec.params).build()
