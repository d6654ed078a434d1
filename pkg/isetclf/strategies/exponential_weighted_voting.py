"""Implements exponential weighted voting.

Each probe image gives every class the weight exp(-beta * r); the class
with the largest accumulated weight wins. With normalize, residuals are
first divided by their overall mean so beta does not depend on the pixel
scale.

Reported scores are the accumulated weights times exp(beta * min r), so
the class holding the smallest residual always scores at least 1.
"""

import numpy as np

from ..errors import InvalidInputError
from .base_strategy import Decision, DecisionStrategy, ResidualMatrix, first_of_ties

DEFAULT_BETA = 2.0


def decide_ewv(residuals: ResidualMatrix, beta: float = DEFAULT_BETA, normalize: bool = True) -> Decision:
    """Exponential weighted voting decision."""
    if not beta > 0:
        raise InvalidInputError(f'beta must be positive, got {beta}')
    values = residuals.values
    if normalize:
        mean = values.mean()
        if mean > 0:
            values = values / mean
    accumulated = np.exp(-beta * (values - values.min())).sum(axis=1)
    winner, tie_broken = first_of_ties(accumulated, accumulated.max())
    classes = residuals.class_order
    return Decision(predicted=classes[winner],
                    strategy='EWV',
                    per_class_score={class_id: float(value) for class_id, value in zip(classes, accumulated)},
                    tie_broken=tie_broken)


class ExponentialWeightedVoting(DecisionStrategy):
    """Class of the exponential weighted voting strategy."""

    name = 'ewv'

    def __init__(self, beta: float = DEFAULT_BETA, normalize: bool = True) -> None:
        if not beta > 0:
            raise InvalidInputError(f'beta must be positive, got {beta}')
        self.beta = beta
        self.normalize = normalize

    def decide(self, residuals: ResidualMatrix) -> Decision:
        return decide_ewv(residuals, self.beta, self.normalize)

    def __repr__(self):
        return f'ExponentialWeightedVoting(beta={self.beta}, normalize={self.normalize})'
