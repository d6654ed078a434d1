"""Projects probe images onto the class subspaces and decides the class
of a probe set from the reconstruction residuals.

Two equivalent paths compute the residuals: `online` solves one least
squares problem per (class, image) pair, `fast` multiplies the whole probe
matrix by the cached pseudoinverse of each regressor.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np
from scipy import linalg

from .auxiliary_functions import ensure_positive_value
from .errors import ConditioningError, ConfigurationError, InvalidInputError
from .gallery import SINGULARITY_TOLERANCE, Gallery, Regressor
from .preprocess import FeatureVector
from .strategies import DEFAULT_BETA, Decision, ResidualMatrix, get_strategy

logger = logging.getLogger(__name__)

ONLINE = 'online'
FAST = 'fast'
MODES = (ONLINE, FAST)

Vector = Union[FeatureVector, np.ndarray]


def _as_array(vector: Vector) -> np.ndarray:
    if isinstance(vector, FeatureVector):
        return vector.values
    return np.asarray(vector, dtype=np.float64).reshape(-1)


@dataclass(frozen=True, eq=False)
class ProbeSet:
    """Images of one probe set as the columns of a tau x N_P matrix."""

    matrix: np.ndarray = field(repr=False)
    set_id: str = ''
    true_class: Optional[str] = None

    def __post_init__(self) -> None:
        matrix = np.asarray(self.matrix, dtype=np.float64)
        if matrix.ndim == 1:
            matrix = matrix[:, None]
        if matrix.ndim != 2 or matrix.shape[1] < 1:
            raise InvalidInputError(f'Probe set {self.set_id} needs at least one image')
        object.__setattr__(self, 'matrix', matrix)

    @classmethod
    def from_vectors(cls, vectors: Sequence[FeatureVector], set_id: str = '',
                     true_class: Optional[str] = None) -> 'ProbeSet':
        """Stacks feature vectors as columns."""
        if not vectors:
            raise InvalidInputError(f'Probe set {set_id} needs at least one image')
        return cls(np.column_stack([vector.values for vector in vectors]), set_id, true_class)

    @property
    def tau(self) -> int:
        return self.matrix.shape[0]

    @property
    def size(self) -> int:
        return self.matrix.shape[1]

    def __repr__(self):
        return f'ProbeSet({self.set_id}, tau={self.tau}, images={self.size})'


def estimate_parameters(reg: Regressor, probe: Vector) -> np.ndarray:
    """Least-squares coefficients of the probe in the regressor's columns."""
    rho = _as_array(probe)
    if rho.size != reg.tau:
        raise InvalidInputError(f'Probe of length {rho.size} against tau={reg.tau}', reg.class_id)
    theta, _, rank, _ = linalg.lstsq(reg.matrix, rho, cond=SINGULARITY_TOLERANCE)
    if rank < reg.size:
        raise ConditioningError(f'regressor has rank {rank} < {reg.size}', reg.class_id)
    return theta


def project(reg: Regressor, theta: np.ndarray) -> np.ndarray:
    """Reconstructed image; may leave [0, 255], it is not clamped."""
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    if theta.size != reg.size:
        raise InvalidInputError(f'{theta.size} parameters for {reg.size} gallery images', reg.class_id)
    return reg.matrix @ theta


@ensure_positive_value
def residual(rho: Vector, rho_hat: Vector) -> float:
    """Euclidean distance between an image and its reconstruction."""
    rho = _as_array(rho)
    rho_hat = _as_array(rho_hat)
    if rho.size != rho_hat.size:
        raise InvalidInputError(f'Vectors of lengths {rho.size} and {rho_hat.size}')
    return float(np.linalg.norm(rho - rho_hat))


def _online_row(reg: Regressor, probes: ProbeSet) -> np.ndarray:
    row = np.empty(probes.size)
    for j in range(probes.size):
        rho = probes.matrix[:, j]
        row[j] = residual(rho, project(reg, estimate_parameters(reg, rho)))
    return row


def _fast_row(reg: Regressor, probes: ProbeSet) -> np.ndarray:
    theta = reg.pinv @ probes.matrix
    return np.linalg.norm(probes.matrix - reg.matrix @ theta, axis=0)


def resolve_mode(gallery: Gallery, mode: Optional[str]) -> str:
    """Fast when every pseudoinverse is cached, online otherwise."""
    if mode is None:
        return FAST if gallery.has_pseudoinverses else ONLINE
    if mode not in MODES:
        raise ConfigurationError(f"{mode} is not a valid mode (online or fast)")
    if mode == FAST and not gallery.has_pseudoinverses:
        raise ConfigurationError('fast mode needs a gallery with cached pseudoinverses')
    return mode


def residual_matrix(gallery: Gallery, probes: ProbeSet, mode: Optional[str] = None,
                    workers: int = 1) -> ResidualMatrix:
    """Residual of every probe image against every class, one row per class."""
    if probes.tau != gallery.tau:
        raise ConfigurationError(f'Probe set {probes.set_id} has tau={probes.tau}, '
                                 f'gallery has tau={gallery.tau}')
    mode = resolve_mode(gallery, mode)
    row_function = _fast_row if mode == FAST else _online_row
    if workers > 1 and len(gallery.regressors) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda reg: row_function(reg, probes), gallery.regressors))
    else:
        rows = [row_function(reg, probes) for reg in gallery.regressors]
    return ResidualMatrix(np.vstack(rows), gallery.class_ids)


def decide(residuals: ResidualMatrix, strategy: str = 'ewv', beta: float = DEFAULT_BETA,
           normalize: bool = True) -> Decision:
    """Applies one named decision strategy to a residual matrix."""
    return get_strategy(strategy, beta, normalize).decide(residuals)


def classify_set(gallery: Gallery, probes: ProbeSet, strategy: str = 'ewv', mode: Optional[str] = None,
                 beta: float = DEFAULT_BETA, normalize: bool = True, workers: int = 1) -> Decision:
    """Residual matrix, then the chosen decision rule."""
    return classify_set_all(gallery, probes, [strategy], mode, beta, normalize, workers)[0]


def classify_set_all(gallery: Gallery, probes: ProbeSet, strategies: Iterable[str],
                     mode: Optional[str] = None, beta: float = DEFAULT_BETA, normalize: bool = True,
                     workers: int = 1) -> List[Decision]:
    """Like classify_set for several strategies, sharing one residual matrix."""
    residuals = residual_matrix(gallery, probes, mode, workers)
    decisions = []
    for strategy in strategies:
        decision = decide(residuals, strategy, beta, normalize)
        decision.set_id = probes.set_id
        decisions.append(decision)
    logger.debug('Probe set %s: %s', probes.set_id,
                 ', '.join(f'{d.strategy}={d.predicted}' for d in decisions))
    return decisions
