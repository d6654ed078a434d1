"""Everything related with the calculation of classification accuracy goes here."""

import json
import logging
import time
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import matplotlib.pyplot as plt
import numpy as np

from .auxiliary_functions import Resolution, format_resolution, print_with_asterisks
from .classify import ONLINE, classify_set_all
from .dataset import DatasetManifest, Fold, ImageSetDataset, SplitProtocol, load_dataset, make_splits, \
    materialize_fold
from .gallery import MAX_PERTURBATION_RETRIES, GalleryConfig, build_gallery
from .preprocess import PreprocessConfig
from .strategies import DEFAULT_BETA, STRATEGY_NAMES, parse_strategies

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EngineConfig:
    """Knobs of the classification engine."""

    mode: Optional[str] = None
    beta: float = DEFAULT_BETA
    normalize: bool = True
    workers: int = 1
    fold_workers: int = 1
    max_retries: int = MAX_PERTURBATION_RETRIES


@dataclass
class FoldResult:
    """Outcome of one fold."""

    index: int
    correct: Dict[str, int]
    total: int
    build_seconds: float
    classify_seconds: float
    predictions: Dict[str, List[Dict[str, str]]] = field(default_factory=dict, repr=False)

    def accuracy(self, strategy: str) -> float:
        """Percentage of test sets classified correctly."""
        if self.total == 0:
            return 0.0
        return 100.0 * self.correct[strategy] / self.total


@dataclass
class EvaluationReport:
    """Accuracies of every strategy over every fold."""

    resolution: Resolution
    strategies: List[str]
    folds: List[FoldResult]
    confusion: Dict[str, Dict[str, Dict[str, int]]]

    def fold_accuracies(self, strategy: str) -> List[float]:
        return [fold.accuracy(strategy) for fold in self.folds]

    def mean_accuracy(self, strategy: str) -> float:
        return float(np.mean(self.fold_accuracies(strategy)))

    def to_records(self, include_timing: bool = True) -> List[str]:
        """JSON lines: one per (fold, strategy), one mean per strategy, then confusion counts."""
        label = format_resolution(self.resolution)
        records = []
        for fold in self.folds:
            for strategy in self.strategies:
                record = OrderedDict(record='fold', resolution=label, strategy=strategy.upper(),
                                     fold=fold.index, accuracy=fold.accuracy(strategy),
                                     correct=fold.correct[strategy], total=fold.total)
                if include_timing:
                    record['build_seconds'] = fold.build_seconds
                    record['classify_seconds'] = fold.classify_seconds
                records.append(json.dumps(record))
        for strategy in self.strategies:
            records.append(json.dumps(OrderedDict(
                record='mean', resolution=label, strategy=strategy.upper(),
                accuracy=self.mean_accuracy(strategy), folds=len(self.folds))))
        for strategy in self.strategies:
            records.append(json.dumps(OrderedDict(
                record='confusion', resolution=label, strategy=strategy.upper(),
                counts=self.confusion[strategy])))
        return records

    @print_with_asterisks
    def display_summary(self) -> None:
        """Shows the accuracy of every strategy."""
        print(f'>> Evaluation at {format_resolution(self.resolution)}, {len(self.folds)} folds')
        print('> Strategy [mean accuracy %, per-fold accuracies %]:')
        for strategy in self.strategies:
            per_fold = ' '.join(f'{value:.2f}' for value in self.fold_accuracies(strategy))
            print(f'{strategy.upper()}, {self.mean_accuracy(strategy):.2f}, {per_fold}')
        build = sum(fold.build_seconds for fold in self.folds) / len(self.folds)
        classify = sum(fold.classify_seconds for fold in self.folds) / len(self.folds)
        print(f'> Mean seconds per fold: build {build:.4f}, classify {classify:.4f}')


def _run_fold(dataset: ImageSetDataset, fold: Fold, protocol: SplitProtocol, strategies: List[str],
              engine: EngineConfig) -> FoldResult:
    gallery_sets, probes = materialize_fold(dataset, fold, protocol)
    start = time.perf_counter()
    gallery = build_gallery(gallery_sets,
                            GalleryConfig(gallery_cap=protocol.gallery_image_cap,
                                          master_seed=fold.seed,
                                          fast=engine.mode != ONLINE,
                                          max_retries=engine.max_retries,
                                          workers=engine.workers),
                            dataset.preprocessing)
    build_seconds = time.perf_counter() - start
    correct = {strategy: 0 for strategy in strategies}
    predictions: Dict[str, List[Dict[str, str]]] = {strategy: [] for strategy in strategies}
    start = time.perf_counter()
    for probe_set in probes:
        decisions = classify_set_all(gallery, probe_set, strategies, engine.mode, engine.beta,
                                     engine.normalize, engine.workers)
        for strategy, decision in zip(strategies, decisions):
            correct[strategy] += int(decision.predicted == probe_set.true_class)
            predictions[strategy].append({'set_id': probe_set.set_id, 'true': probe_set.true_class,
                                          'predicted': decision.predicted})
    classify_seconds = time.perf_counter() - start
    logger.info('Fold %d: %s', fold.index,
                ', '.join(f'{s.upper()}={correct[s]}/{len(probes)}' for s in strategies))
    return FoldResult(fold.index, correct, len(probes), build_seconds, classify_seconds, predictions)


def evaluate(dataset: ImageSetDataset, protocol: SplitProtocol,
             strategies: Sequence[str] = STRATEGY_NAMES,
             engine: EngineConfig = EngineConfig()) -> EvaluationReport:
    """Runs every fold of the protocol and scores every strategy."""
    strategies = parse_strategies(strategies)
    folds = make_splits(dataset, protocol)
    if engine.fold_workers > 1:
        with ThreadPoolExecutor(max_workers=engine.fold_workers) as pool:
            results = list(pool.map(lambda fold: _run_fold(dataset, fold, protocol, strategies, engine),
                                    folds))
    else:
        results = [_run_fold(dataset, fold, protocol, strategies, engine) for fold in folds]
    confusion: Dict[str, Dict[str, Dict[str, int]]] = {}
    class_ids = dataset.class_ids
    for strategy in strategies:
        table = {true: {predicted: 0 for predicted in class_ids} for true in class_ids}
        for result in results:
            for prediction in result.predictions[strategy]:
                table[prediction['true']][prediction['predicted']] += 1
        confusion[strategy] = table
    return EvaluationReport(dataset.resolution, strategies, results, confusion)


def evaluate_resolutions(manifest: DatasetManifest, protocol: SplitProtocol,
                         resolutions: Sequence[Resolution],
                         strategies: Sequence[str] = STRATEGY_NAMES,
                         engine: EngineConfig = EngineConfig(),
                         histeq: Optional[bool] = None) -> List[EvaluationReport]:
    """Evaluates the same manifest and protocol at several resolutions."""
    histeq = manifest.histeq if histeq is None else histeq
    reports = []
    for resolution in resolutions:
        dataset = load_dataset(manifest, PreprocessConfig(resolution, histeq))
        reports.append(evaluate(dataset, protocol, strategies, engine))
    return reports


def format_accuracy_table(reports: Sequence[EvaluationReport]) -> str:
    """One row per strategy, one column per resolution, mean accuracy in %."""
    if not reports:
        return ''
    headers = [format_resolution(report.resolution) for report in reports]
    lines = ['Method | ' + ' | '.join(headers)]
    for strategy in reports[0].strategies:
        cells = [f'{report.mean_accuracy(strategy):.2f}' for report in reports]
        lines.append(f'{strategy.upper()} | ' + ' | '.join(cells))
    return '\n'.join(lines)


def plot_fold_accuracies(report: EvaluationReport, path: Union[str, Path]) -> None:
    """Plots the accuracy of every fold for every strategy."""
    figure = plt.figure()
    folds = [fold.index for fold in report.folds]
    for strategy in report.strategies:
        plt.plot(folds, report.fold_accuracies(strategy), marker='o', label=strategy.upper())
    plt.xlabel('Fold')
    plt.ylabel('Accuracy (%)')
    plt.ylim(0, 100.5)
    plt.grid()
    plt.legend()
    plt.title(f'Accuracy per fold at {format_resolution(report.resolution)}')
    figure.savefig(path)
    plt.close(figure)
