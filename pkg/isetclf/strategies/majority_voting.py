"""Implements majority voting over per-image nearest classes.

Every probe image votes for the class that reconstructs it with the
smallest residual. A tie in vote counts goes to the tied class with the
smallest mean residual over all images, then to the lowest class index.
"""

import numpy as np

from .base_strategy import Decision, DecisionStrategy, ResidualMatrix, first_of_ties


def decide_mv(residuals: ResidualMatrix) -> Decision:
    """Majority voting decision."""
    values = residuals.values
    classes = residuals.class_order
    # argmin keeps the first (lowest) index on ties within an image
    votes = np.argmin(values, axis=0)
    counts = np.bincount(votes, minlength=len(classes))
    tied = np.flatnonzero(counts == counts.max())
    if tied.size == 1:
        winner = int(tied[0])
    else:
        means = values[tied].mean(axis=1)
        winner = int(tied[first_of_ties(means, means.min())[0]])
    return Decision(predicted=classes[winner],
                    strategy='MV',
                    per_class_score={class_id: float(count) for class_id, count in zip(classes, counts)},
                    tie_broken=bool(tied.size > 1),
                    per_image_votes=[classes[vote] for vote in votes])


class MajorityVoting(DecisionStrategy):
    """Class of the majority voting strategy."""

    name = 'mv'

    def decide(self, residuals: ResidualMatrix) -> Decision:
        return decide_mv(residuals)
