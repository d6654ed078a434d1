"""Init to import all the decision strategies implemented."""

from typing import Iterable, List, Union

from ..errors import InvalidInputError
from .base_strategy import Decision, DecisionStrategy, ResidualMatrix
from .majority_voting import MajorityVoting, decide_mv
from .nearest_neighbour import NearestNeighbour, decide_nn
from .exponential_weighted_voting import DEFAULT_BETA, ExponentialWeightedVoting, decide_ewv

STRATEGY_NAMES = ('mv', 'nn', 'ewv')


def get_strategy(name: str, beta: float = DEFAULT_BETA, normalize: bool = True) -> DecisionStrategy:
    """Returns the strategy object for a name."""
    name = name.lower()
    if name == 'mv':
        return MajorityVoting()
    elif name == 'nn':
        return NearestNeighbour()
    elif name == 'ewv':
        return ExponentialWeightedVoting(beta, normalize)
    raise InvalidInputError(f"{name} is not a valid strategy (mv, nn, ewv or all)")


def parse_strategies(names: Union[str, Iterable[str]]) -> List[str]:
    """Expands 'all' and comma lists into an ordered list of strategy names."""
    if isinstance(names, str):
        names = names.split(',')
    expanded: List[str] = []
    for name in names:
        name = name.strip().lower()
        candidates = STRATEGY_NAMES if name == 'all' else (name,)
        for candidate in candidates:
            if candidate not in STRATEGY_NAMES:
                raise InvalidInputError(f"{candidate} is not a valid strategy (mv, nn, ewv or all)")
            if candidate not in expanded:
                expanded.append(candidate)
    if not expanded:
        raise InvalidInputError('No strategy selected')
    return expanded
