"""Some functions that are useful in other files."""
import hashlib
from typing import Callable, Tuple, Union

import numpy as np

from .errors import InvalidInputError

DEFAULT_SEED = 290696

Resolution = Tuple[int, int]


def print_with_asterisks(function: Callable[..., None]) -> Callable[..., None]:
    """Used as a decorator.

    Adds asterisks before and after the execution of a function.
    """
    def inner(*args, **kwargs):
        """Adds asterisks before and after the execution of a function."""
        number_of_asterisks = 50
        print('*' * number_of_asterisks)
        function(*args, **kwargs)
        print('*' * number_of_asterisks)

    return inner


def ensure_positive_value(function: Callable[..., float]) \
        -> Callable[..., float]:
    """Used as a decorator.

    Ensures that the value is 0 or positive, and finite.
    """
    def inner(*args, **kwargs):
        """Ensures that the value is 0 or positive."""
        value = function(*args, **kwargs)
        if not 0 <= value < float('inf'):
            raise ValueError(f'Value obtained is not finite and non-negative: {value}')
        return value
    return inner


def derive_seed(master_seed: int, *keys: Union[str, int]) -> int:
    """Returns a 64-bit seed derived from a master seed and some keys.

    Does not depend on the interpreter's hash salt, so serial and parallel
    runs (and different machines) derive the same seeds.
    """
    digest = hashlib.blake2b(digest_size=8)
    digest.update(int(master_seed).to_bytes(8, 'little', signed=False))
    for key in keys:
        digest.update(b'\x00')
        digest.update(str(key).encode('utf-8'))
    return int.from_bytes(digest.digest(), 'little')


def parse_resolution(text: str) -> Resolution:
    """Parses a 'CxD' string (rows x columns)."""
    parts = text.strip().lower().replace('×', 'x').split('x')
    if len(parts) != 2:
        raise InvalidInputError(f"Resolution '{text}' is not of the form CxD")
    try:
        rows, columns = int(parts[0]), int(parts[1])
    except ValueError:
        raise InvalidInputError(f"Resolution '{text}' is not of the form CxD") from None
    if rows < 1 or columns < 1:
        raise InvalidInputError(f"Resolution '{text}' must be positive")
    return rows, columns


def format_resolution(resolution: Resolution) -> str:
    """Inverse of parse_resolution."""
    return f'{resolution[0]}x{resolution[1]}'


def resolution_for_dimension(tau: int) -> Resolution:
    """Returns a square resolution for tau when possible, else a tau x 1 column."""
    side = int(round(tau ** 0.5))
    if side * side == tau:
        return side, side
    return tau, 1


def relative_difference(actual: np.ndarray, expected: np.ndarray, floor: float = 1e-8) -> float:
    """Largest entrywise |actual - expected| / |expected|.

    Entries of `expected` below `floor` times its largest entry are compared
    against that floor instead, so exact zeros do not blow up the ratio.
    """
    actual = np.asarray(actual, dtype=float)
    expected = np.asarray(expected, dtype=float)
    if expected.size == 0:
        return 0.0
    largest = float(np.max(np.abs(expected)))
    scale = np.maximum(np.abs(expected), max(floor * largest, np.finfo(float).tiny))
    return float(np.max(np.abs(actual - expected) / scale))
