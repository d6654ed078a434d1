"""Tests of the decision strategies: MV, NN and EWV."""

import json
import math

import numpy as np
import pytest

import reference_oracle
from isetclf.errors import InvalidInputError
from isetclf.strategies import ExponentialWeightedVoting, MajorityVoting, NearestNeighbour, ResidualMatrix, \
    decide_ewv, decide_mv, decide_nn, get_strategy, parse_strategies


def matrix(values):
    values = np.asarray(values, dtype=float)
    return ResidualMatrix(values, [f'class{y + 1}' for y in range(values.shape[0])])


def test_majority_voting():
    """Unanimous vote, vote tie broken by the mean, then by the index."""
    decision = decide_mv(matrix([[1, 1], [2, 2]]))
    assert decision.predicted == 'class1'
    assert decision.per_class_score == {'class1': 2.0, 'class2': 0.0}
    assert not decision.tie_broken
    assert decision.per_image_votes == ['class1', 'class1']

    decision = decide_mv(matrix([[1, 4], [5, 2]]))
    assert decision.predicted == 'class1'
    assert decision.tie_broken

    decision = decide_mv(matrix([[1, 5], [5, 1]]))
    assert decision.predicted == 'class1'
    assert decision.tie_broken

    decision = decide_mv(matrix([[9, 9, 1], [1, 1, 9], [5, 5, 5]]))
    assert decision.predicted == 'class2'
    assert decision.strategy == 'MV'


def test_majority_voting_matches_bruteforce():
    """Small integer residuals make vote and mean ties frequent."""
    rng = np.random.default_rng(30)
    for _ in range(10000):
        classes = int(rng.integers(1, 5))
        images = int(rng.integers(1, 6))
        values = rng.integers(0, 6, size=(classes, images)).astype(float)
        decision = decide_mv(matrix(values))
        assert decision.predicted == f'class{reference_oracle.majority_voting(values) + 1}'


def test_nearest_neighbour():
    assert decide_nn(matrix([[3, 2], [1, 4]])).predicted == 'class2'
    values = np.random.default_rng(31).uniform(1, 10, size=(4, 6))
    values[2, 4] = 0.0
    assert decide_nn(matrix(values)).predicted == 'class3'
    decision = decide_nn(matrix([[2, 2], [2, 2]]))
    assert decision.predicted == 'class1'
    assert decision.tie_broken
    assert decision.strategy == 'NN'


def test_nearest_neighbour_matches_bruteforce():
    rng = np.random.default_rng(32)
    for _ in range(1000):
        values = rng.uniform(0, 100, size=(int(rng.integers(1, 6)), int(rng.integers(1, 8))))
        assert decide_nn(matrix(values)).predicted == f'class{reference_oracle.nearest_neighbour(values) + 1}'


def test_exponential_weighted_voting():
    decision = decide_ewv(matrix([[0, 0], [1, 1]]), beta=1.0, normalize=False)
    assert decision.predicted == 'class1'
    assert decision.per_class_score['class1'] == pytest.approx(2.0)
    assert decision.per_class_score['class2'] == pytest.approx(2 * math.exp(-1))
    assert decide_ewv(matrix([[4.0, 7.0, 1.0]])).predicted == 'class1'
    with pytest.raises(InvalidInputError):
        decide_ewv(matrix([[1.0]]), beta=0)
    with pytest.raises(InvalidInputError):
        ExponentialWeightedVoting(beta=-1)


def test_exponential_weighted_voting_is_scale_invariant():
    """Normalized EWV does not depend on the residual scale."""
    rng = np.random.default_rng(33)
    for _ in range(100):
        values = rng.uniform(0, 500, size=(4, 6))
        base = decide_ewv(matrix(values))
        scaled = decide_ewv(matrix(values * 37.5))
        assert scaled.predicted == base.predicted
        for class_id, score in base.per_class_score.items():
            assert scaled.per_class_score[class_id] == pytest.approx(score, rel=1e-9)
        expected = reference_oracle.exponential_weighted_voting(values, beta=2.0, normalize=True)
        assert base.predicted == f'class{expected + 1}'
    zeros = decide_ewv(matrix(np.zeros((2, 3))))
    assert zeros.predicted == 'class1' and zeros.tie_broken


def test_exponential_weighted_voting_raw_residuals():
    """Unnormalized residuals on the pixel scale still favour the closer class."""
    decision = decide_ewv(matrix([[500, 505], [400, 410]]), beta=2.0, normalize=False)
    assert decision.predicted == 'class2'
    assert not decision.tie_broken
    assert decision.per_class_score['class2'] == pytest.approx(1 + math.exp(-20))
    assert 0 < decision.per_class_score['class1'] < decision.per_class_score['class2']
    far = decide_ewv(matrix([[2400.0, 2500.0], [2600.0, 2350.0]]), beta=5.0, normalize=False)
    assert far.predicted == 'class2'


def test_strategies_ignore_probe_order():
    """Shuffling the probe images never changes a decision."""
    rng = np.random.default_rng(34)
    for trial in range(2000):
        shape = (int(rng.integers(1, 5)), int(rng.integers(1, 8)))
        if trial % 2:
            values = rng.integers(0, 6, size=shape).astype(float)
            deciders = (decide_mv, decide_nn)
        else:
            values = rng.uniform(0, 300, size=shape)
            deciders = (decide_mv, decide_nn, decide_ewv,
                        lambda residuals: decide_ewv(residuals, beta=0.5, normalize=False))
        shuffled = values[:, rng.permutation(shape[1])]
        for decide in deciders:
            assert decide(matrix(shuffled)).predicted == decide(matrix(values)).predicted


def test_registry_and_records():
    assert isinstance(get_strategy('MV'), MajorityVoting)
    assert isinstance(get_strategy('nn'), NearestNeighbour)
    ewv = get_strategy('ewv', beta=3.0, normalize=False)
    assert ewv.beta == 3.0 and not ewv.normalize
    with pytest.raises(InvalidInputError):
        get_strategy('knn')
    assert parse_strategies('all') == ['mv', 'nn', 'ewv']
    assert parse_strategies('ewv, mv,ewv') == ['ewv', 'mv']
    with pytest.raises(InvalidInputError):
        parse_strategies('mv,best')

    decision = get_strategy('nn')(matrix([[0.1, 0.3], [0.2, 0.05]]))
    decision.set_id = 'person/video1'
    record = json.loads(decision.to_record())
    assert record == {'set_id': 'person/video1', 'predicted': 'class2', 'strategy': 'NN',
                      'tie_broken': False, 'scores': {'class1': 0.1, 'class2': 0.05}}


def test_residual_matrix_validation():
    with pytest.raises(InvalidInputError):
        matrix([[-1.0, 2.0]])
    with pytest.raises(InvalidInputError):
        matrix([[np.inf]])
    with pytest.raises(InvalidInputError):
        ResidualMatrix(np.ones((2, 3)), ['only-one'])


if __name__ == '__main__':
    test_majority_voting()
    test_majority_voting_matches_bruteforce()
    test_nearest_neighbour()
    test_nearest_neighbour_matches_bruteforce()
    test_exponential_weighted_voting()
    test_exponential_weighted_voting_is_scale_invariant()
    test_exponential_weighted_voting_raw_residuals()
    test_strategies_ignore_probe_order()
    test_registry_and_records()
    test_residual_matrix_validation()
