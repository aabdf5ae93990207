import numpy as np


def circle(count: int, start: float = 0.0, end: float = 2 * np.pi, closed: bool = False) -> np.ndarray:
    """ Unit vectors at equally spaced angles in [start, end] """

    angles = np.linspace(start, end, count, endpoint=closed)
    return np.stack([np.cos(angles), np.sin(angles)], axis=1)


def fibonacci_sphere(count: int) -> np.ndarray:
    """ Nearly uniform unit vectors on the 2-sphere """

    index = np.arange(count) + 0.5
    polar = np.arccos(1 - 2 * index / count)
    azimuth = np.pi * (1 + 5 ** 0.5) * index

    return np.stack([
        np.cos(azimuth) * np.sin(polar),
        np.sin(azimuth) * np.sin(polar),
        np.cos(polar),
    ], axis=1)


def directions(dim: int, count: int, seed: int = 0) -> np.ndarray:
    """ Deterministic direction samples for any dimension """

    if dim == 1:
        return np.array([[1.0], [-1.0]])

    if dim == 2:
        return circle(count)

    if dim == 3:
        return fibonacci_sphere(count)

    samples = np.random.default_rng(seed).normal(size=(count, dim))
    return samples / np.linalg.norm(samples, axis=1, keepdims=True)


def rotate(vector: np.ndarray, angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([c * vector[0] - s * vector[1], s * vector[0] + c * vector[1]])


def perp(vector: np.ndarray) -> np.ndarray:
    """ Counterclockwise quarter turn """

    return np.array([-vector[1], vector[0]])
