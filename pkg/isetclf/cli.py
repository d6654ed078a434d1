"""Command line: build, classify, eval and bench.

    python -m isetclf build --manifest faces.json --out gallery.isrg
    python -m isetclf classify --gallery gallery.isrg --manifest probes.json --strategy all
    python -m isetclf eval --synthetic --resolution 10x10 --strategy all
    python -m isetclf bench --scenario 47,60,20,100
"""

import argparse
import contextlib
import logging
import sys
from collections import OrderedDict
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence

from .auxiliary_functions import Resolution, derive_seed, format_resolution
from .bench import DEFAULT_SCENARIOS, BenchResult, BenchScenario, display_bench_results, plot_bench_results, \
    run_bench
from .classify import MODES, ONLINE, ProbeSet, classify_set_all
from .config import RunConfig, load_run_config, parse_bool, parse_resolutions
from .dataset import GALLERY_ROLE, PROBE_ROLE, DatasetManifest, ImageSetDataset, SplitProtocol, \
    generate_synthetic, load_dataset, load_manifest, parse_gallery_sets
from .errors import ConfigurationError, IsetclfError
from .evaluation import EngineConfig, EvaluationReport, evaluate, evaluate_resolutions, format_accuracy_table, \
    plot_fold_accuracies
from .gallery import Gallery, GalleryConfig, build_gallery
from .gallery_io import load_gallery, save_gallery
from .preprocess import DEFAULT_RESOLUTION, FeatureVector, PreprocessConfig
from .strategies import Decision, parse_strategies

logger = logging.getLogger(__name__)


def _common_parser() -> argparse.ArgumentParser:
    """Flags shared by every command; unset flags stay None so lower layers apply."""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument('--resolution', dest='resolutions', type=parse_resolutions, default=None,
                        help='CxD (rows x columns); eval accepts a comma-separated list')
    parser.add_argument('--strategy', dest='strategies', type=parse_strategies, default=None,
                        help='mv, nn, ewv, a comma-separated list or all')
    parser.add_argument('--beta', type=float, default=None, help='EWV sharpness (> 0)')
    parser.add_argument('--no-normalize', dest='normalize', action='store_false', default=None,
                        help='EWV on raw residuals instead of mean-normalized ones')
    parser.add_argument('--mode', choices=MODES, default=None,
                        help='Residual path; default fast when pseudoinverses are cached')
    parser.add_argument('--gallery-cap', type=int, default=None,
                        help='Maximum gallery images per class (default floor(0.8 tau))')
    parser.add_argument('--seed', type=int, default=None, help='Master seed of all randomness')
    parser.add_argument('--manifest', default=None, help='Dataset manifest or image directory')
    parser.add_argument('--gallery', default=None, help='Gallery file')
    parser.add_argument('--out', default=None, help='Output file (default standard output)')
    parser.add_argument('--histeq', type=parse_bool, default=None, metavar='on|off',
                        help='Histogram equalization of every image')
    parser.add_argument('--workers', type=int, default=None, help='Threads of the residual kernel')
    parser.add_argument('--verbose', action='store_true', help='Debug logging')
    return parser


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog='isetclf',
                                     description='Image set classification by linear regression')
    commands = parser.add_subparsers(dest='command', required=True)
    commands.add_parser('build', parents=[common], help='Build a gallery file from a manifest')
    commands.add_parser('classify', parents=[common], help='Classify the probe sets of a manifest')

    evaluation = commands.add_parser('eval', parents=[common], help='Cross-validated accuracy')
    evaluation.add_argument('--folds', type=int, default=None, help='Number of folds (default 10)')
    evaluation.add_argument('--gallery-sets', type=parse_gallery_sets, default=None,
                            help='Gallery sets per class, or one-video, two-sets, three-videos, '
                                 'five-sets, fixed')
    evaluation.add_argument('--set-image-cap', type=int, default=None, help='Images kept per set')
    evaluation.add_argument('--set-image-sampling', choices=('first', 'random'), default=None,
                            help='Which images the per-set cap keeps')
    evaluation.add_argument('--fold-workers', type=int, default=None, help='Folds run in parallel')
    evaluation.add_argument('--synthetic', action='store_true', default=None,
                            help='Evaluate on a generated dataset instead of a manifest')
    evaluation.add_argument('--classes', type=int, default=None)
    evaluation.add_argument('--subspace-dim', type=int, default=None)
    evaluation.add_argument('--sets-per-class', type=int, default=None)
    evaluation.add_argument('--images-per-set', type=int, default=None)
    evaluation.add_argument('--noise-sigma', type=float, default=None)
    evaluation.add_argument('--plot', default=None, help='Write a per-fold accuracy plot')

    bench = commands.add_parser('bench', parents=[common], help='Online against fast residual timings')
    bench.add_argument('--repeats', type=int, default=None, help='Timed repetitions (>= 3)')
    bench.add_argument('--scenario', dest='scenarios', action='append', default=None,
                       metavar='Y,NZETA,NP,TAU', help='Repeatable; default grid when absent')
    bench.add_argument('--plot', default=None, help='Write a bar plot of the timings')
    return parser


@contextlib.contextmanager
def _summary_stream(config: RunConfig) -> Iterator[None]:
    """Human summaries go to standard error while records use standard output."""
    if config.out is None:
        with contextlib.redirect_stdout(sys.stderr):
            yield
    else:
        yield


def _emit(records: Sequence[str], config: RunConfig) -> None:
    if config.out is None:
        for record in records:
            print(record)
        return
    try:
        Path(config.out).write_text(''.join(record + '\n' for record in records), encoding='utf-8')
    except OSError as error:
        raise ConfigurationError(f'Cannot write {config.out}: {error}') from error


def _require(config: RunConfig, *names: str) -> None:
    for name in names:
        if getattr(config, name) is None:
            raise ConfigurationError(f"'{config.command}' needs --{name}")


def _preprocessing(config: RunConfig, manifest: DatasetManifest,
                   resolution: Optional[Resolution] = None) -> PreprocessConfig:
    """Flags and environment first, then the manifest."""
    resolution = resolution or config.resolution or manifest.resolution
    histeq = manifest.histeq if config.histeq is None else config.histeq
    return PreprocessConfig(resolution, histeq)


def gallery_sets_of(dataset: ImageSetDataset) -> Dict[str, List[FeatureVector]]:
    """All images of the non-probe sets of every class, in set order."""
    sets: Dict[str, List[FeatureVector]] = OrderedDict()
    for class_id, set_id, role in dataset.set_keys():
        if role != PROBE_ROLE:
            sets.setdefault(class_id, []).extend(dataset.sets[(class_id, set_id)])
    return sets


def cmd_build(config: RunConfig) -> Gallery:
    """Builds the gallery of a manifest and writes it to --out."""
    _require(config, 'manifest', 'out')
    manifest = load_manifest(config.manifest)
    dataset = load_dataset(manifest, _preprocessing(config, manifest))
    gallery = build_gallery(gallery_sets_of(dataset),
                            GalleryConfig(gallery_cap=config.gallery_cap, master_seed=config.seed,
                                          fast=config.mode != ONLINE, workers=config.workers),
                            dataset.preprocessing)
    save_gallery(gallery, config.out)
    gallery.display_summary()
    logger.info('Gallery written to %s', config.out)
    return gallery


def cmd_classify(config: RunConfig) -> List[Decision]:
    """One decision per probe set and strategy."""
    _require(config, 'gallery', 'manifest')
    manifest = load_manifest(config.manifest)
    gallery = load_gallery(config.gallery)
    resolution = config.resolution or gallery.resolution
    if tuple(resolution) != tuple(gallery.resolution):
        raise ConfigurationError(f'Resolution {format_resolution(resolution)} does not match the gallery '
                                 f'({format_resolution(gallery.resolution)}, tau={gallery.tau})')
    dataset = load_dataset(manifest, _preprocessing(config, manifest, gallery.resolution))
    decisions = []
    for class_id, set_id, role in dataset.set_keys():
        if role == GALLERY_ROLE:
            continue
        probes = ProbeSet.from_vectors(dataset.sets[(class_id, set_id)], f'{class_id}/{set_id}', class_id)
        decisions.extend(classify_set_all(gallery, probes, config.strategies, config.mode, config.beta,
                                          config.normalize, config.workers))
    order = {strategy.upper(): index for index, strategy in enumerate(config.strategies)}
    decisions.sort(key=lambda decision: (decision.set_id, order.get(decision.strategy, len(order))))
    _emit([decision.to_record() for decision in decisions], config)
    return decisions


def _protocol(config: RunConfig) -> SplitProtocol:
    return SplitProtocol(gallery_sets=config.gallery_sets, set_image_cap=config.set_image_cap,
                         set_image_sampling=config.set_image_sampling,
                         gallery_image_cap=config.gallery_cap, folds=config.folds, master_seed=config.seed)


def _plot_path(path: str, report: EvaluationReport, several: bool) -> Path:
    path = Path(path)
    if not several:
        return path
    return path.with_name(f'{path.stem}_{format_resolution(report.resolution)}{path.suffix}')


def cmd_eval(config: RunConfig) -> List[EvaluationReport]:
    """Cross-validated accuracy at every configured resolution."""
    if not config.synthetic:
        _require(config, 'manifest')
    protocol = _protocol(config)
    engine = EngineConfig(mode=config.mode, beta=config.beta, normalize=config.normalize,
                          workers=config.workers, fold_workers=config.fold_workers)
    manifest = None if config.synthetic else load_manifest(config.manifest)
    resolutions = config.resolutions or [manifest.resolution if manifest else DEFAULT_RESOLUTION]
    if manifest is not None:
        reports = evaluate_resolutions(manifest, protocol, resolutions, config.strategies, engine, config.histeq)
    else:
        reports = []
        for resolution in resolutions:
            dataset = generate_synthetic(config.classes, config.subspace_dim, resolution[0] * resolution[1],
                                         config.sets_per_class, config.images_per_set, config.noise_sigma,
                                         seed=derive_seed(config.seed, 'synthetic'), resolution=resolution)
            reports.append(evaluate(dataset, protocol, config.strategies, engine))
    _emit([record for report in reports for record in report.to_records()], config)
    with _summary_stream(config):
        for report in reports:
            report.display_summary()
        if len(reports) > 1:
            print(format_accuracy_table(reports))
    if config.plot:
        for report in reports:
            plot_fold_accuracies(report, _plot_path(config.plot, report, len(reports) > 1))
    return reports


def cmd_bench(config: RunConfig) -> List[BenchResult]:
    """Times the online and fast residual paths."""
    scenarios = [BenchScenario.parse(text) for text in config.scenarios] if config.scenarios \
        else list(DEFAULT_SCENARIOS)
    results = run_bench(scenarios, config.repeats, config.seed, config.workers)
    _emit([result.to_record() for result in results], config)
    with _summary_stream(config):
        display_bench_results(results)
    if config.plot:
        plot_bench_results(results, config.plot)
    return results


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Runs one command; returns the process exit code."""
    arguments = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if arguments.verbose else logging.INFO, stream=sys.stderr,
                        format='%(levelname)s %(name)s: %(message)s')
    handlers = {'build': cmd_build, 'classify': cmd_classify, 'eval': cmd_eval, 'bench': cmd_bench}
    try:
        config = load_run_config(arguments.command, vars(arguments))
        handlers[config.command](config)
    except IsetclfError as error:
        logger.error('%s', error)
        return 1
    return 0
