from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

from core.exceptions import InvalidInput

EUCLIDEAN = 'euclidean'
SAMPLED = 'sampled'


@dataclass(frozen=True, eq=False)
class NormModel:
    """
    Norm on R^b

    kind: 'euclidean' or 'sampled'
    points: for the sampled kind, boundary points of the unit ball; the ball is the
        convex hull of the points and their negatives, so the norm is symmetric and convex
    """

    kind: str = EUCLIDEAN
    points: np.ndarray = None

    def __post_init__(self):
        if self.kind not in (EUCLIDEAN, SAMPLED):
            raise InvalidInput(f'Unknown norm kind: {self.kind}')

        if self.kind == EUCLIDEAN:
            return

        points = np.asarray(self.points, dtype=float)

        if points.ndim != 2 or len(points) < 1 or not np.all(np.isfinite(points)):
            raise InvalidInput('Sampled norm requires a finite (k, b) array of unit-ball points')

        points = np.concatenate([points, -points])

        if points.shape[1] == 1:
            facets = np.array([[1.0, -np.abs(points).max()], [-1.0, -np.abs(points).max()]])

        else:
            try:
                facets = ConvexHull(points).equations

            except Exception as exc:
                raise InvalidInput(f'Unit-ball samples do not span R^{points.shape[1]}') from exc

        object.__setattr__(self, 'points', points)
        object.__setattr__(self, '_facets', facets)

    @classmethod
    def euclidean(cls) -> 'NormModel':
        return cls(kind=EUCLIDEAN)

    @classmethod
    def from_values(cls, vectors, values) -> 'NormModel':
        """ Sampled norm with norm(vectors[i]) ~ values[i] """

        vectors = np.asarray(vectors, dtype=float)
        values = np.asarray(values, dtype=float)

        if np.any(values <= 0):
            raise InvalidInput('Norm values must be positive')

        return cls(kind=SAMPLED, points=vectors / values[:, None])

    def norms(self, vectors) -> np.ndarray:
        vectors = np.atleast_2d(np.asarray(vectors, dtype=float))

        if self.kind == EUCLIDEAN:
            return np.linalg.norm(vectors, axis=1)

        # gauge of the polytope: max over facets n.x / -b

        normals, offsets = self._facets[:, :-1], self._facets[:, -1]
        return np.max(vectors @ normals.T / -offsets, axis=1).clip(min=0.0)

    def norm(self, vector) -> float:
        return float(self.norms(vector)[0])

    def dual(self, covector) -> float:
        covector = np.asarray(covector, dtype=float)

        if self.kind == EUCLIDEAN:
            return float(np.linalg.norm(covector))

        return float(np.max(np.abs(self.points @ covector)))

    def as_dict(self) -> dict:
        if self.kind == EUCLIDEAN:
            return {'kind': EUCLIDEAN}

        half = len(self.points) // 2
        return {'kind': SAMPLED, 'points': self.points[:half].tolist()}
