"""Timing of the online (per-image least squares) path against the fast
(cached pseudoinverse) path on synthetic galleries."""

import json
import logging
import statistics
import time
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Union

import matplotlib.pyplot as plt

from .auxiliary_functions import DEFAULT_SEED, derive_seed, print_with_asterisks, relative_difference
from .classify import FAST, ONLINE, ProbeSet, residual_matrix
from .dataset import generate_synthetic
from .errors import BenchmarkError, InvalidInputError
from .gallery import GalleryConfig, build_gallery, precompute_pseudoinverse

logger = logging.getLogger(__name__)

MIN_REPEATS = 3
AGREEMENT_TOLERANCE = 1e-6
DEFAULT_MEMORY_BUDGET = 2 * 1024 ** 3
BENCH_NOISE_SIGMA = 8.0
BENCH_SUBSPACE_DIM = 10


@dataclass(frozen=True)
class BenchScenario:
    """Y classes of N_zeta gallery images, N_P probe images, tau pixels."""

    classes: int
    gallery_size: int
    probe_count: int
    tau: int

    @classmethod
    def parse(cls, text: str) -> 'BenchScenario':
        """'Y,N_zeta,N_P,tau' -> scenario."""
        try:
            classes, gallery_size, probe_count, tau = (int(part) for part in text.split(','))
        except ValueError:
            raise InvalidInputError(f"Scenario '{text}' is not of the form Y,N_zeta,N_P,tau") from None
        return cls(classes, gallery_size, probe_count, tau)

    def estimated_bytes(self) -> int:
        """Memory of the galleries, their pseudoinverses and the probes (float64)."""
        return 8 * (2 * self.classes * self.tau * self.gallery_size + 2 * self.tau * self.probe_count)

    def __str__(self):
        return f'{self.classes},{self.gallery_size},{self.probe_count},{self.tau}'


DEFAULT_SCENARIOS = (
    BenchScenario(10, 20, 1, 100),
    BenchScenario(10, 20, 20, 100),
    BenchScenario(47, 60, 20, 100),
    BenchScenario(47, 60, 40, 100),
    BenchScenario(47, 120, 20, 225),
    BenchScenario(47, 200, 20, 400),
)


@dataclass
class BenchResult:
    """Median timings of one scenario."""

    scenario: BenchScenario
    repeats: int
    build_seconds: float = 0.0
    pinv_seconds: float = 0.0
    online_seconds: float = 0.0
    fast_seconds: float = 0.0
    note: str = ''
    skipped: bool = False

    @property
    def speedup(self) -> float:
        """online / fast."""
        if self.skipped or self.fast_seconds <= 0:
            return 0.0
        return self.online_seconds / self.fast_seconds

    def to_record(self) -> str:
        """One JSON line."""
        return json.dumps(OrderedDict(
            classes=self.scenario.classes, gallery_size=self.scenario.gallery_size,
            probe_count=self.scenario.probe_count, tau=self.scenario.tau,
            repeats=self.repeats, build_seconds=self.build_seconds, pinv_seconds=self.pinv_seconds,
            online_seconds=self.online_seconds, fast_seconds=self.fast_seconds,
            speedup=self.speedup, skipped=self.skipped, note=self.note))


def median_time(function: Callable[[], object], repeats: int) -> float:
    """Median wall time of repeats calls, after one untimed warm-up call."""
    function()
    timings = []
    for _ in range(repeats):
        start = time.perf_counter()
        function()
        timings.append(time.perf_counter() - start)
    return statistics.median(timings)


def _bench_scenario(scenario: BenchScenario, repeats: int, seed: int, workers: int) -> BenchResult:
    subspace_dim = min(BENCH_SUBSPACE_DIM, scenario.tau - 1)
    dataset = generate_synthetic(scenario.classes, subspace_dim, scenario.tau, sets_per_class=2,
                                 images_per_set=max(scenario.gallery_size, scenario.probe_count),
                                 noise_sigma=BENCH_NOISE_SIGMA, seed=seed)
    gallery_sets = OrderedDict(
        (class_id, dataset.sets[(class_id, 'set00')][:scenario.gallery_size]) for class_id in dataset.class_ids)
    first_class = dataset.class_ids[0]
    probes = ProbeSet.from_vectors(dataset.sets[(first_class, 'set01')][:scenario.probe_count],
                                   'bench', first_class)
    config = GalleryConfig(gallery_cap=scenario.gallery_size, master_seed=seed, fast=False, workers=1)
    plain_gallery = build_gallery(gallery_sets, config)
    fast_gallery = build_gallery(gallery_sets, GalleryConfig(gallery_cap=scenario.gallery_size,
                                                             master_seed=seed, fast=True, workers=1))

    online = residual_matrix(fast_gallery, probes, ONLINE, workers).values
    fast = residual_matrix(fast_gallery, probes, FAST, workers).values
    disagreement = relative_difference(fast, online)
    if disagreement > AGREEMENT_TOLERANCE:
        raise BenchmarkError(f'Scenario {scenario}: online and fast residuals differ by '
                             f'{disagreement:.3g} (relative)')

    result = BenchResult(scenario, repeats)
    result.build_seconds = median_time(lambda: build_gallery(gallery_sets, config), repeats)
    result.pinv_seconds = median_time(
        lambda: [precompute_pseudoinverse(reg) for reg in plain_gallery.regressors], repeats)
    result.online_seconds = median_time(lambda: residual_matrix(fast_gallery, probes, ONLINE, workers), repeats)
    result.fast_seconds = median_time(lambda: residual_matrix(fast_gallery, probes, FAST, workers), repeats)
    if scenario.probe_count == 1:
        result.note = 'batch advantage not expected'
    logger.info('Scenario %s: online %.4fs, fast %.4fs, speedup %.1f', scenario,
                result.online_seconds, result.fast_seconds, result.speedup)
    return result


def run_bench(scenarios: Sequence[BenchScenario] = DEFAULT_SCENARIOS, repeats: int = 5,
              seed: int = DEFAULT_SEED, workers: int = 1,
              memory_budget: int = DEFAULT_MEMORY_BUDGET) -> List[BenchResult]:
    """Times both paths on every scenario; residual agreement is checked first."""
    if repeats < MIN_REPEATS:
        raise InvalidInputError(f'repeats must be at least {MIN_REPEATS}, got {repeats}')
    results = []
    for index, scenario in enumerate(scenarios):
        if scenario.gallery_size > scenario.tau:
            raise InvalidInputError(f'Scenario {scenario}: gallery size exceeds tau')
        if scenario.estimated_bytes() > memory_budget:
            logger.warning('Skipping scenario %s: exceeds the memory budget', scenario)
            results.append(BenchResult(scenario, repeats, skipped=True,
                                       note=f'skipped: needs ~{scenario.estimated_bytes()} bytes, '
                                            f'budget {memory_budget}'))
            continue
        results.append(_bench_scenario(scenario, repeats, derive_seed(seed, 'bench', index), workers))
    return results


@print_with_asterisks
def display_bench_results(results: Sequence[BenchResult]) -> None:
    """Shows the timings of every scenario."""
    print('>> Benchmark (median seconds)')
    print('> Scenario [Y, N_zeta, N_P, tau]: build, pinv, online, fast, speedup')
    for result in results:
        if result.skipped:
            print(f'{result.scenario}: {result.note}')
            continue
        note = f' ({result.note})' if result.note else ''
        print(f'{result.scenario}: {result.build_seconds:.4f}, {result.pinv_seconds:.4f}, '
              f'{result.online_seconds:.4f}, {result.fast_seconds:.4f}, {result.speedup:.1f}x{note}')


def plot_bench_results(results: Sequence[BenchResult], path: Union[str, Path],
                       title: Optional[str] = None) -> None:
    """Bar plot of online and fast times per scenario."""
    timed = [result for result in results if not result.skipped]
    labels = [str(result.scenario) for result in timed]
    positions = range(len(timed))
    figure = plt.figure()
    plt.bar([p - 0.2 for p in positions], [r.online_seconds for r in timed], width=0.4, label='online')
    plt.bar([p + 0.2 for p in positions], [r.fast_seconds for r in timed], width=0.4, label='fast')
    plt.xticks(list(positions), labels, rotation=30)
    plt.ylabel('Seconds (median)')
    plt.grid()
    plt.legend()
    plt.title(title or 'Residual computation time per probe set')
    plt.tight_layout()
    figure.savefig(path)
    plt.close(figure)
