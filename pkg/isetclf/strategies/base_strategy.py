"""This module implements a base structure for every decision strategy."""

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..errors import InvalidInputError


@dataclass(frozen=True, eq=False)
class ResidualMatrix:
    """Residual of every probe image (columns) against every class (rows)."""

    values: np.ndarray = field(repr=False)
    class_order: List[str]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != len(self.class_order) or values.shape[1] < 1:
            raise InvalidInputError(f'Residual matrix of shape {values.shape} does not match '
                                    f'{len(self.class_order)} classes and at least one probe')
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise InvalidInputError('Residuals must be finite and non-negative')
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'class_order', list(self.class_order))

    @property
    def probe_count(self) -> int:
        return self.values.shape[1]

    def __repr__(self):
        return f'ResidualMatrix(classes={len(self.class_order)}, probes={self.probe_count})'


@dataclass
class Decision:
    """Predicted class of one probe set under one strategy."""

    predicted: str
    strategy: str
    per_class_score: Dict[str, float]
    tie_broken: bool = False
    per_image_votes: Optional[List[str]] = None
    set_id: str = ''

    def to_record(self) -> str:
        """One JSON line; floats keep full precision."""
        return json.dumps({
            'set_id': self.set_id,
            'predicted': self.predicted,
            'strategy': self.strategy,
            'tie_broken': self.tie_broken,
            'scores': {class_id: float(score) for class_id, score in self.per_class_score.items()},
        })


def first_of_ties(scores: np.ndarray, best: float) -> Tuple[int, bool]:
    """Lowest index whose score equals best, and whether more than one did."""
    tied = np.flatnonzero(scores == best)
    return int(tied[0]), bool(tied.size > 1)


class DecisionStrategy:
    """Base class for every decision strategy."""

    name = ''

    def decide(self, residuals: ResidualMatrix) -> Decision:
        """Fuses the per-image residuals into a set-level decision."""
        raise NotImplementedError

    def __call__(self, residuals: ResidualMatrix) -> Decision:
        return self.decide(residuals)

    def __repr__(self):
        return f'{type(self).__name__}()'
