"""Everything related with the per-class regressors (the gallery).

A regressor is the tau x N matrix whose columns are the gallery feature
vectors of one class; its column span is the class subspace.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Mapping, Optional, Sequence

import numpy as np
from scipy import linalg

from .auxiliary_functions import DEFAULT_SEED, Resolution, derive_seed, print_with_asterisks
from .errors import ConditioningError, GalleryConstraintError, InvalidInputError, IsetclfError
from .preprocess import FeatureVector, PreprocessConfig

logger = logging.getLogger(__name__)

SINGULARITY_TOLERANCE = 1e-10
PERTURBATION_BOUND = 0.5
MAX_PERTURBATION_RETRIES = 3
DEFAULT_CAP_FRACTION = 0.8


@dataclass(frozen=True, eq=False)
class Regressor:
    """Gallery matrix of one class, plus its conditioning history."""

    class_id: str
    matrix: np.ndarray = field(repr=False)
    perturbed: bool = False
    perturbation_seed: Optional[int] = None
    pinv: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.matrix.ndim != 2:
            raise InvalidInputError('Regressor matrix must be two-dimensional', self.class_id)
        tau, columns = self.matrix.shape
        if columns < 1:
            raise InvalidInputError('Regressor needs at least one column', self.class_id)
        if columns > tau:
            raise GalleryConstraintError(
                f'{columns} gallery images but only {tau} pixels: the number of pixels must be '
                f'greater than or equal to the number of gallery images; use subsample_gallery '
                f'to cap the gallery', self.class_id)
        if self.pinv is not None and self.pinv.shape != (columns, tau):
            raise InvalidInputError(f'Pseudoinverse of shape {self.pinv.shape} does not match '
                                    f'a {tau}x{columns} regressor', self.class_id)

    @property
    def tau(self) -> int:
        return self.matrix.shape[0]

    @property
    def size(self) -> int:
        """Number of gallery images (columns)."""
        return self.matrix.shape[1]

    def __repr__(self):
        return (f'(Class: {self.class_id}, Shape: {self.tau}x{self.size}, '
                f'Perturbed: {self.perturbed}, Pinv: {self.pinv is not None})')


@dataclass(frozen=True)
class GalleryConfig:
    """How build_gallery conditions each class."""

    gallery_cap: Optional[int] = None
    master_seed: int = DEFAULT_SEED
    fast: bool = True
    max_retries: int = MAX_PERTURBATION_RETRIES
    workers: int = 1

    def cap_for(self, tau: int) -> int:
        """Gallery cap in effect for feature length tau."""
        if self.gallery_cap is not None:
            return self.gallery_cap
        return max(1, int(DEFAULT_CAP_FRACTION * tau))


@dataclass(frozen=True, eq=False)
class Gallery:
    """Immutable set of regressors sharing one resolution."""

    resolution: Resolution
    regressors: List[Regressor]
    preprocessing: PreprocessConfig = field(default_factory=PreprocessConfig)

    def __post_init__(self) -> None:
        if not self.regressors:
            raise InvalidInputError('A gallery needs at least one class')
        tau = self.resolution[0] * self.resolution[1]
        ids = [regressor.class_id for regressor in self.regressors]
        if len(set(ids)) != len(ids):
            raise InvalidInputError('Gallery class ids must be unique')
        for regressor in self.regressors:
            if regressor.tau != tau:
                raise InvalidInputError(f'Regressor has tau={regressor.tau}, gallery has '
                                        f'tau={tau}', regressor.class_id)

    @property
    def tau(self) -> int:
        return self.resolution[0] * self.resolution[1]

    @property
    def class_ids(self) -> List[str]:
        return [regressor.class_id for regressor in self.regressors]

    @property
    def has_pseudoinverses(self) -> bool:
        return all(regressor.pinv is not None for regressor in self.regressors)

    def regressor(self, class_id: str) -> Regressor:
        """Returns the regressor of a class."""
        for regressor in self.regressors:
            if regressor.class_id == class_id:
                return regressor
        raise KeyError(class_id)

    @print_with_asterisks
    def display_summary(self) -> None:
        """Shows a description of the gallery."""
        print('>> Gallery summary')
        print(f'> Resolution: {self.resolution[0]}x{self.resolution[1]} (tau={self.tau})')
        print('> Classes [class id, gallery images, perturbed, pseudoinverse]:')
        for regressor in self.regressors:
            print(f'{regressor.class_id}, {regressor.size}, {regressor.perturbed}, '
                  f'{regressor.pinv is not None}')


def build_regressor(vectors: Sequence[FeatureVector], class_id: str) -> Regressor:
    """Concatenates the feature vectors horizontally, in input order."""
    if not vectors:
        raise InvalidInputError('No gallery images', class_id)
    lengths = {vector.tau for vector in vectors}
    if len(lengths) != 1:
        raise InvalidInputError(f'Gallery images of different lengths {sorted(lengths)}', class_id)
    matrix = np.column_stack([vector.values for vector in vectors])
    return Regressor(class_id, matrix)


def subsample_gallery(vectors: Sequence[FeatureVector], cap: int, seed: int) -> List[FeatureVector]:
    """Keeps at most cap vectors, drawn uniformly without replacement, in input order."""
    if cap < 1:
        raise InvalidInputError(f'Gallery cap must be at least 1, got {cap}')
    if len(vectors) <= cap:
        return list(vectors)
    rng = np.random.default_rng(seed)
    indices = np.sort(rng.choice(len(vectors), size=cap, replace=False))
    return [vectors[index] for index in indices]


def detect_singularity(reg: Regressor) -> bool:
    """True iff the matrix has column rank below its number of columns."""
    singular_values = linalg.svdvals(reg.matrix)
    largest = singular_values[0]
    return bool(largest == 0 or singular_values[-1] <= SINGULARITY_TOLERANCE * largest)


def _perturbed_copy(reg: Regressor, seed: int) -> Regressor:
    rng = np.random.default_rng(seed)
    noise = rng.uniform(-PERTURBATION_BOUND, PERTURBATION_BOUND, size=reg.matrix.shape)
    return Regressor(reg.class_id, reg.matrix + noise, perturbed=True, perturbation_seed=seed)


def perturb(reg: Regressor, seed: int, max_retries: int = MAX_PERTURBATION_RETRIES) -> Regressor:
    """Adds uniform noise in [-0.5, 0.5] to every entry of the matrix.

    The first attempt uses seed itself; later attempts derive fresh seeds
    from it. The seed that produced the returned matrix is recorded.
    """
    attempt_seed = seed
    for attempt in range(max(1, max_retries)):
        if attempt:
            attempt_seed = derive_seed(seed, 'retry', attempt)
        candidate = _perturbed_copy(reg, attempt_seed)
        if not detect_singularity(candidate):
            return candidate
        logger.debug('Class %s still singular after perturbation attempt %d', reg.class_id, attempt + 1)
    raise ConditioningError(f'still singular after {max(1, max_retries)} perturbations', reg.class_id)


def precompute_pseudoinverse(reg: Regressor) -> Regressor:
    """Caches the Moore-Penrose pseudoinverse of the matrix (SVD based)."""
    if detect_singularity(reg):
        raise ConditioningError('cannot cache the pseudoinverse of a singular regressor', reg.class_id)
    return replace(reg, pinv=linalg.pinv(reg.matrix))


def _build_class(class_id: str, vectors: Sequence[FeatureVector], config: GalleryConfig) -> Regressor:
    """Subsample, build, conditionally perturb and (in fast mode) cache the pseudoinverse."""
    try:
        tau = vectors[0].tau if vectors else 0
        cap = config.cap_for(tau)
        kept = subsample_gallery(vectors, cap, derive_seed(config.master_seed, 'subsample', class_id))
        regressor = build_regressor(kept, class_id)
        if detect_singularity(regressor):
            logger.info('Class %s gallery is rank deficient, perturbing', class_id)
            regressor = perturb(regressor, derive_seed(config.master_seed, 'perturb', class_id),
                                config.max_retries)
        if config.fast:
            regressor = precompute_pseudoinverse(regressor)
        return regressor
    except IsetclfError as error:
        if error.class_id is not None:
            raise
        raise type(error)(str(error), class_id) from error


def build_gallery(sets: Mapping[str, Sequence[FeatureVector]],
                  config: GalleryConfig = GalleryConfig(),
                  preprocessing: Optional[PreprocessConfig] = None) -> Gallery:
    """Builds one regressor per class, in the mapping's order."""
    if not sets:
        raise InvalidInputError('Cannot build a gallery without classes')
    lengths = {vector.tau for vectors in sets.values() for vector in vectors}
    if len(lengths) > 1:
        raise InvalidInputError(f'Gallery images of different lengths {sorted(lengths)}')
    resolutions = {vector.source_resolution for vectors in sets.values() for vector in vectors}
    if len(resolutions) != 1:
        raise InvalidInputError('Gallery images must share one resolution')
    resolution = resolutions.pop()
    if preprocessing is None:
        preprocessing = PreprocessConfig(resolution=resolution)
    items = list(sets.items())
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            regressors = list(pool.map(lambda item: _build_class(item[0], item[1], config), items))
    else:
        regressors = [_build_class(class_id, vectors, config) for class_id, vectors in items]
    logger.info('Built gallery with %d classes at %dx%d', len(regressors), *resolution)
    return Gallery(resolution, regressors, preprocessing)

