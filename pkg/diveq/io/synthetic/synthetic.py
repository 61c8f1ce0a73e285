from dataclasses import asdict, dataclass
from enum import Enum
from typing import List, Optional, Tuple

import catalogue
import numpy as np
from loguru import logger

from diveq.autodiff import Tensor
from diveq.io.synthetic.images import generate_grid_images
from diveq.io.synthetic.point_clouds import (
    circle_means,
    generate_gaussian_mixture,
    generate_ring,
    generate_uniform_cube,
)
from diveq.utils.checks import (
    Violation,
    check_positive,
    check_probability,
    join_path,
    raise_on_errors,
)

MIN_SIZE = 10

generators = catalogue.create("diveq", "generators")


class DatasetKind(str, Enum):
    GAUSSIAN_MIXTURE = "GAUSSIAN_MIXTURE"
    RING = "RING"
    GRID_IMAGES = "GRID_IMAGES"
    UNIFORM_CUBE = "UNIFORM_CUBE"

    @classmethod
    def parse(cls, value) -> "DatasetKind":
        if isinstance(value, cls):
            return value
        try:
            return cls[str(value).upper()]
        except KeyError:
            raise AttributeError(
                "Unknown dataset kind {}, options are {}".format(
                    value, tuple(kind.value for kind in cls)
                )
            ) from None


@dataclass
class DatasetSpec:
    """Parameters of a synthetic dataset

    Generation is a pure function of the spec.

    Parameters
    ----------
    kind : DatasetKind
        **EXAMPLE**: `"GAUSSIAN_MIXTURE"`
    size : int, optional
        Number of samples N, at least 10.
    dims : int, optional
        Dimension D. Defaults to 2, or ``image_side ** 2`` for GRID_IMAGES.
    seed : int, optional
        Seed of the generation and of the 80/20 split.
    num_components : int, optional
        Mixture components placed on a circle when ``means`` is missing.
    means : List[List[float]], optional
        Explicit component means, one row per component.
    std : float, optional
        Isotropic standard deviation of every mixture component.
    radius : float, optional
        Radius of the circle of means and of the ring.
    ring_noise : float, optional
        Gaussian noise added to ring samples.
    image_side : int, optional
        Side of the GRID_IMAGES patterns.
    pixel_noise : float, optional
        Gaussian noise added to image pixels before clipping.
    low, high : float, optional
        Bounds of UNIFORM_CUBE.
    test_fraction : float, optional
        Share of the samples held out.
    """

    kind: DatasetKind = DatasetKind.GAUSSIAN_MIXTURE
    size: int = 10000
    dims: Optional[int] = None
    seed: int = 0
    num_components: int = 8
    means: Optional[List[List[float]]] = None
    std: float = 0.3
    radius: float = 5.0
    ring_noise: float = 0.1
    image_side: int = 8
    pixel_noise: float = 0.05
    low: float = 0.0
    high: float = 1.0
    test_fraction: float = 0.2

    def __post_init__(self):
        self.kind = DatasetKind.parse(self.kind)
        if self.dims is None:
            self.dims = self.image_side**2 if self.kind == DatasetKind.GRID_IMAGES else 2
        raise_on_errors(self.violations())

    @property
    def num_train(self) -> int:
        """Size of the training split"""
        return self.size - int(round(self.test_fraction * self.size))

    def violations(self, prefix: str = "") -> List[Violation]:
        found = []
        if not isinstance(self.size, int) or self.size < MIN_SIZE:
            found.append(
                Violation(
                    join_path(prefix, "size"), f"must be an integer >= {MIN_SIZE}, got {self.size}"
                )
            )
        min_dims = 2 if self.kind in (DatasetKind.GAUSSIAN_MIXTURE, DatasetKind.RING) else 1
        if self.means is not None:
            min_dims = 1
        if not isinstance(self.dims, int) or self.dims < min_dims:
            found.append(
                Violation(
                    join_path(prefix, "dims"),
                    f"must be an integer >= {min_dims} for {self.kind.value}, got {self.dims}",
                )
            )
        if self.kind == DatasetKind.GAUSSIAN_MIXTURE:
            found += self._mixture_violations(prefix)
        elif self.kind == DatasetKind.RING:
            found += check_positive(self.radius, join_path(prefix, "radius"))
            if self.ring_noise < 0:
                found.append(Violation(join_path(prefix, "ring_noise"), "must be non-negative"))
        elif self.kind == DatasetKind.GRID_IMAGES:
            if not isinstance(self.image_side, int) or self.image_side < 2:
                found.append(
                    Violation(join_path(prefix, "image_side"), "must be an integer >= 2")
                )
            elif self.dims != self.image_side**2:
                found.append(
                    Violation(
                        join_path(prefix, "dims"),
                        f"must equal image_side ** 2 = {self.image_side ** 2}, got {self.dims}",
                    )
                )
            if self.pixel_noise < 0:
                found.append(Violation(join_path(prefix, "pixel_noise"), "must be non-negative"))
        elif self.kind == DatasetKind.UNIFORM_CUBE and not self.low < self.high:
            found.append(
                Violation(join_path(prefix, "high"), f"must exceed low={self.low}, got {self.high}")
            )
        found += check_probability(self.test_fraction, join_path(prefix, "test_fraction"))
        return found

    def _mixture_violations(self, prefix: str) -> List[Violation]:
        found = []
        if self.std < 0:
            found.append(Violation(join_path(prefix, "std"), f"must be non-negative, got {self.std}"))
        if self.means is None:
            if not isinstance(self.num_components, int) or self.num_components < 1:
                found.append(
                    Violation(join_path(prefix, "num_components"), "must be an integer >= 1")
                )
            if self.radius < 0:
                found.append(Violation(join_path(prefix, "radius"), "must be non-negative"))
            return found
        means = np.asarray(self.means, dtype=np.float64)
        if means.ndim != 2 or len(means) < 1 or means.shape[1] != self.dims:
            found.append(
                Violation(
                    join_path(prefix, "means"),
                    f"must be a non-empty list of {self.dims}-vectors, got shape {means.shape}",
                )
            )
        return found

    def component_means(self) -> np.ndarray:
        if self.means is not None:
            return np.asarray(self.means, dtype=np.float64)
        return circle_means(self.num_components, self.radius, self.dims)

    def generate(self) -> "SyntheticDataset":
        return generate(self)

    def to_dict(self):
        params = asdict(self)
        params["kind"] = self.kind.value
        return params


@dataclass
class SyntheticDataset:
    """Generated samples with their seeded 80/20 split

    Attributes
    ----------
    data: np.ndarray
        $N \\times D$ samples in generation order.
    labels: Optional[np.ndarray]
        Mixture component or image pattern of each sample, when meaningful.
    train_indices, test_indices: np.ndarray
        Disjoint rows of ``data`` covering all of it.
    """

    spec: DatasetSpec
    data: np.ndarray
    labels: Optional[np.ndarray]
    train_indices: np.ndarray
    test_indices: np.ndarray

    @property
    def num_samples(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    @property
    def train(self) -> np.ndarray:
        return self.data[self.train_indices]

    @property
    def test(self) -> np.ndarray:
        return self.data[self.test_indices]

    def tensor(self) -> Tensor:
        return Tensor(self.data)


@generators.register(DatasetKind.GAUSSIAN_MIXTURE.value)
def _gaussian_mixture(spec: DatasetSpec, generator: np.random.Generator):
    return generate_gaussian_mixture(generator, spec.size, spec.component_means(), spec.std)


@generators.register(DatasetKind.RING.value)
def _ring(spec: DatasetSpec, generator: np.random.Generator):
    return generate_ring(generator, spec.size, spec.dims, spec.radius, spec.ring_noise), None


@generators.register(DatasetKind.GRID_IMAGES.value)
def _grid_images(spec: DatasetSpec, generator: np.random.Generator):
    return generate_grid_images(generator, spec.size, spec.image_side, spec.pixel_noise)


@generators.register(DatasetKind.UNIFORM_CUBE.value)
def _uniform_cube(spec: DatasetSpec, generator: np.random.Generator):
    return generate_uniform_cube(generator, spec.size, spec.dims, spec.low, spec.high), None


def split_indices(
    generator: np.random.Generator, size: int, test_fraction: float
) -> Tuple[np.ndarray, np.ndarray]:
    order = generator.permutation(size)
    num_test = int(round(test_fraction * size))
    return np.sort(order[num_test:]), np.sort(order[:num_test])


def generate(spec: DatasetSpec) -> SyntheticDataset:
    """Generates the dataset described by ``spec``

    Examples
    --------
    ```python
    from diveq.io import DatasetSpec, generate

    dataset = generate(DatasetSpec(kind="GAUSSIAN_MIXTURE", size=10000, seed=0))
    dataset.train.shape
    ```
    """
    generator = np.random.default_rng(spec.seed)
    data, labels = generators.get(spec.kind.value)(spec, generator)
    train_indices, test_indices = split_indices(generator, spec.size, spec.test_fraction)
    logger.debug(
        "Generated {} samples of {} (D={}, seed={})",
        spec.size,
        spec.kind.value,
        spec.dims,
        spec.seed,
    )
    return SyntheticDataset(
        spec=spec,
        data=np.ascontiguousarray(data, dtype=np.float64),
        labels=labels,
        train_indices=train_indices,
        test_indices=test_indices,
    )
