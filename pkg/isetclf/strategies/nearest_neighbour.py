"""Implements the nearest neighbour strategy: the class holding the
single smallest residual wins."""

from .base_strategy import Decision, DecisionStrategy, ResidualMatrix, first_of_ties


def decide_nn(residuals: ResidualMatrix) -> Decision:
    """Nearest neighbour decision."""
    minima = residuals.values.min(axis=1)
    winner, tie_broken = first_of_ties(minima, minima.min())
    classes = residuals.class_order
    return Decision(predicted=classes[winner],
                    strategy='NN',
                    per_class_score={class_id: float(value) for class_id, value in zip(classes, minima)},
                    tie_broken=tie_broken)


class NearestNeighbour(DecisionStrategy):
    """Class of the nearest neighbour strategy."""

    name = 'nn'

    def decide(self, residuals: ResidualMatrix) -> Decision:
        return decide_nn(residuals)
