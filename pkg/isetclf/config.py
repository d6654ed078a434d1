"""Run configuration of the command line: flags > environment > defaults."""

import os
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Dict, List, Mapping, Optional, Tuple, Union

from .auxiliary_functions import DEFAULT_SEED, Resolution, parse_resolution
from .errors import ConfigurationError, InvalidInputError, IsetclfError
from .strategies import DEFAULT_BETA, parse_strategies

ENV_PREFIX = 'ISETCLF_'
DEFAULT_FOLDS = 10


def parse_bool(text: str) -> bool:
    """'on'/'off' style switches."""
    value = text.strip().lower()
    if value in ('1', 'true', 'on', 'yes'):
        return True
    if value in ('0', 'false', 'off', 'no'):
        return False
    raise InvalidInputError(f"'{text}' is not a boolean (on/off)")


def parse_resolutions(text: str) -> List[Resolution]:
    """Comma-separated list of CxD resolutions."""
    return [parse_resolution(part) for part in text.split(',') if part.strip()]


def parse_mode(text: str) -> str:
    mode = text.strip().lower()
    if mode not in ('online', 'fast'):
        raise InvalidInputError(f"{text} is not a valid mode (online or fast)")
    return mode


@dataclass
class RunConfig:
    """Everything a command needs to run reproducibly."""

    command: str = ''
    resolutions: Optional[List[Resolution]] = None
    strategies: List[str] = field(default_factory=lambda: ['ewv'])
    beta: float = DEFAULT_BETA
    normalize: bool = True
    mode: Optional[str] = None
    gallery_cap: Optional[int] = None
    seed: int = DEFAULT_SEED
    folds: int = DEFAULT_FOLDS
    histeq: Optional[bool] = None
    workers: int = 1
    manifest: Optional[str] = None
    gallery: Optional[str] = None
    out: Optional[str] = None
    plot: Optional[str] = None
    # eval
    gallery_sets: Union[int, str] = 1
    set_image_cap: Optional[int] = None
    set_image_sampling: str = 'first'
    fold_workers: int = 1
    synthetic: bool = False
    classes: int = 5
    subspace_dim: int = 3
    sets_per_class: int = 10
    images_per_set: int = 20
    noise_sigma: float = 8.0
    # bench
    repeats: int = 5
    scenarios: Optional[List[str]] = None

    def validate(self) -> 'RunConfig':
        """Checks the invariants of the configuration."""
        if not self.beta > 0:
            raise ConfigurationError(f'beta must be positive, got {self.beta}')
        if self.folds < 1:
            raise ConfigurationError(f'folds must be at least 1, got {self.folds}')
        if self.gallery_cap is not None and self.gallery_cap < 1:
            raise ConfigurationError(f'gallery cap must be at least 1, got {self.gallery_cap}')
        if min(self.workers, self.fold_workers) < 1:
            raise ConfigurationError(f'workers must be at least 1, got {self.workers}')
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigurationError(f'seed must be a 64-bit unsigned integer, got {self.seed}')
        return self

    @property
    def resolution(self) -> Optional[Resolution]:
        """The single resolution of build/classify runs (None when unset)."""
        if not self.resolutions:
            return None
        if len(self.resolutions) > 1:
            raise ConfigurationError('This command takes a single resolution')
        return self.resolutions[0]


# Environment variable suffix -> (RunConfig field, parser)
ENVIRONMENT_VARIABLES: Dict[str, Tuple[str, Callable[[str], object]]] = {
    'RESOLUTION': ('resolutions', parse_resolutions),
    'STRATEGY': ('strategies', parse_strategies),
    'BETA': ('beta', float),
    'NORMALIZE': ('normalize', parse_bool),
    'MODE': ('mode', parse_mode),
    'GALLERY_CAP': ('gallery_cap', int),
    'SEED': ('seed', int),
    'FOLDS': ('folds', int),
    'HISTEQ': ('histeq', parse_bool),
    'WORKERS': ('workers', int),
}


def config_from_environment(environ: Mapping[str, str]) -> Dict[str, object]:
    """RunConfig overrides found in the environment."""
    overrides = {}
    for suffix, (name, parser) in ENVIRONMENT_VARIABLES.items():
        raw = environ.get(ENV_PREFIX + suffix)
        if raw is None or raw == '':
            continue
        try:
            overrides[name] = parser(raw)
        except (ValueError, IsetclfError) as error:
            raise ConfigurationError(f'{ENV_PREFIX}{suffix}={raw!r}: {error}') from error
    return overrides


def load_run_config(command: str, flags: Mapping[str, object],
                    environ: Optional[Mapping[str, str]] = None) -> RunConfig:
    """Merges defaults, environment and flags (flags set to None are absent)."""
    environ = os.environ if environ is None else environ
    config = replace(RunConfig(), command=command, **config_from_environment(environ))
    names = {item.name for item in fields(RunConfig)}
    given = {name: value for name, value in flags.items() if name in names and value is not None}
    return replace(config, **given).validate()
