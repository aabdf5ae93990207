import logging
from typing import NamedTuple

import numpy as np

from core.exceptions import InvalidInput
from spacetime.metric import MetricField

from .worldline import PolygonalWorldline

logger = logging.getLogger(__name__)


class GeodesicBatch(NamedTuple):
    starts: np.ndarray
    endpoints: np.ndarray
    riemannian_length: np.ndarray
    energy_drift: np.ndarray
    truncated: np.ndarray


def christoffel(m: MetricField, points: np.ndarray) -> np.ndarray:
    """ Gamma[n, k, i, j] from finite differences of g """

    if m.constant:
        return np.zeros((len(points), m.dim, m.dim, m.dim))

    derivatives = m.metric_derivatives(points)
    inverse = np.linalg.inv(m.metric(points))

    # lowered symbol [l, i, j] = d_i g_lj + d_j g_li - d_l g_ij
    lowered = (
        np.transpose(derivatives, (0, 1, 3, 2)) + derivatives - np.transpose(derivatives, (0, 3, 1, 2))
    )

    return 0.5 * np.einsum('nkl,nlij->nkij', inverse, lowered)


def _rates(m: MetricField, positions: np.ndarray, velocities: np.ndarray):
    acceleration = -np.einsum('nkij,ni,nj->nk', christoffel(m, positions), velocities, velocities)
    return velocities, acceleration


def _rk4_step(m: MetricField, x: np.ndarray, u: np.ndarray, dt: float):
    k1x, k1u = _rates(m, x, u)
    k2x, k2u = _rates(m, x + dt / 2 * k1x, u + dt / 2 * k1u)
    k3x, k3u = _rates(m, x + dt / 2 * k2x, u + dt / 2 * k2u)
    k4x, k4u = _rates(m, x + dt * k3x, u + dt * k3u)

    return (
        x + dt / 6 * (k1x + 2 * k2x + 2 * k3x + k4x),
        u + dt / 6 * (k1u + 2 * k2u + 2 * k3u + k4u),
    )


def _check_shot(dt: float, velocities: np.ndarray) -> None:
    if dt <= 0:
        raise InvalidInput('dt must be positive')

    if np.any(np.linalg.norm(velocities, axis=1) == 0):
        raise InvalidInput('Initial velocity must be nonzero')


def shoot_batch(m: MetricField, starts, velocities, length: float, dt: float) -> GeodesicBatch:
    """
    Integrate many geodesics together without keeping their traces

    Rows whose state turns non-finite are frozen at their last finite state.
    """

    x = np.atleast_2d(np.asarray(starts, dtype=float)).copy()
    u = np.atleast_2d(np.asarray(velocities, dtype=float)).copy()
    _check_shot(dt, u)

    steps = max(1, int(round(length / dt)))
    alive = np.ones(len(x), dtype=bool)
    riemannian = np.zeros(len(x))
    energy = m.quad(x, u)
    drift = np.zeros(len(x))
    speed = m.riemannian_norm(x, u)

    for step in range(steps):
        if not alive.any():
            break

        nx, nu = _rk4_step(m, x[alive], u[alive], dt)
        finite = np.all(np.isfinite(nx), axis=1) & np.all(np.isfinite(nu), axis=1)

        if not finite.all():
            logger.warning(f'{np.count_nonzero(~finite)} geodesics truncated at step {step}')

        index = np.flatnonzero(alive)
        kept = index[finite]

        next_speed = m.riemannian_norm(nx[finite], nu[finite])
        riemannian[kept] += dt * (speed[kept] + next_speed) / 2
        speed[kept] = next_speed

        x[kept], u[kept] = nx[finite], nu[finite]
        drift[kept] = np.maximum(drift[kept], np.abs(m.quad(x[kept], u[kept]) - energy[kept]))
        alive[index[~finite]] = False

    return GeodesicBatch(np.asarray(starts, dtype=float), x, riemannian, drift, ~alive)


def geodesic_shoot(m: MetricField, p, v, length: float, dt: float) -> PolygonalWorldline:
    """
    Fourth order Runge-Kutta trace of the geodesic through p with velocity v

    The energy g(u, u) at every step is kept in diagnostics['energy'].
    """

    x = np.asarray(p, dtype=float)[None, :]
    u = np.asarray(v, dtype=float)[None, :]
    _check_shot(dt, u)

    vertices, energies = [x[0]], [float(m.quad(x, u)[0])]
    truncated = None

    for step in range(max(1, int(round(length / dt)))):
        nx, nu = _rk4_step(m, x, u, dt)

        if not (np.all(np.isfinite(nx)) and np.all(np.isfinite(nu))):
            logger.warning(f'Geodesic from {x[0].tolist()} truncated at step {step}')
            truncated = step
            break

        x, u = nx, nu
        vertices.append(x[0])
        energies.append(float(m.quad(x, u)[0]))

    if len(vertices) < 2:
        raise InvalidInput('Geodesic integration failed at the first step')

    return PolygonalWorldline(
        np.array(vertices), m.name, {'energy': energies, 'truncated_at': truncated, 'dt': dt},
    )
