"""Tests of the command line: build, classify, eval and bench."""

import json

import numpy as np
import pytest
from PIL import Image

from isetclf.auxiliary_functions import derive_seed
from isetclf.cli import main
from isetclf.dataset import load_dataset, load_manifest
from isetclf.gallery import subsample_gallery
from isetclf.gallery_io import load_gallery
from isetclf.preprocess import PreprocessConfig


def write_dataset(root, classes=2, sets=2, images=6):
    """Two people, two videos each, written as PNG files plus a manifest."""
    rng = np.random.default_rng(60)
    entries = []
    for y in range(classes):
        face = rng.integers(0, 256, size=(30, 30))
        for s in range(sets):
            paths = []
            for i in range(images):
                pixels = np.clip(face + rng.normal(0, 12, size=face.shape), 0, 255).astype(np.uint8)
                path = root / 'images' / f'person{y}' / f'video{s}' / f'{i:02d}.png'
                path.parent.mkdir(parents=True, exist_ok=True)
                Image.fromarray(pixels).save(path)
                paths.append(str(path.relative_to(root / 'images')))
            entries.append({'class': f'person{y}', 'set': f'video{s}', 'images': paths})
    manifest = root / 'manifest.json'
    manifest.write_text(json.dumps({'resolution': '10x10', 'root': 'images', 'entries': entries}))
    return manifest


def records(text):
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def test_build_is_deterministic(tmp_path, capsys):
    manifest = write_dataset(tmp_path)
    first, second = tmp_path / 'first.isrg', tmp_path / 'second.isrg'
    assert main(['build', '--manifest', str(manifest), '--out', str(first), '--seed', '5']) == 0
    assert main(['build', '--manifest', str(manifest), '--out', str(second), '--seed', '5']) == 0
    assert first.read_bytes() == second.read_bytes()
    gallery = load_gallery(first)
    assert gallery.tau == 100
    assert gallery.class_ids == ['person0', 'person1']
    assert all(regressor.pinv is not None for regressor in gallery.regressors)
    assert 'person0, 12, False, True' in capsys.readouterr().out


def test_build_to_unwritable_path(tmp_path):
    manifest = write_dataset(tmp_path)
    out = tmp_path / 'missing' / 'gallery.isrg'
    assert main(['build', '--manifest', str(manifest), '--out', str(out)]) == 1
    assert not out.exists()


def test_build_with_cap(tmp_path, capsys):
    """The summary shows the capped gallery, drawn as subsample_gallery draws it."""
    manifest = write_dataset(tmp_path)
    out = tmp_path / 'capped.isrg'
    assert main(['build', '--manifest', str(manifest), '--out', str(out), '--gallery-cap', '4',
                 '--seed', '5', '--mode', 'online']) == 0
    assert 'person1, 4, False, False' in capsys.readouterr().out
    gallery = load_gallery(out)
    dataset = load_dataset(load_manifest(manifest), PreprocessConfig((10, 10), histeq=True))
    for class_id in ('person0', 'person1'):
        vectors = dataset.sets[(class_id, 'video0')] + dataset.sets[(class_id, 'video1')]
        kept = subsample_gallery(vectors, 4, derive_seed(5, 'subsample', class_id))
        assert np.array_equal(gallery.regressor(class_id).matrix, np.column_stack([v.values for v in kept]))


def test_classify(tmp_path, capsys):
    """Probe sets copied from the gallery come back with their own class."""
    manifest = write_dataset(tmp_path)
    gallery = tmp_path / 'gallery.isrg'
    assert main(['build', '--manifest', str(manifest), '--out', str(gallery)]) == 0
    capsys.readouterr()

    assert main(['classify', '--gallery', str(gallery), '--manifest', str(manifest), '--strategy', 'all']) == 0
    fast = records(capsys.readouterr().out)
    assert len(fast) == 4 * 3
    assert [(r['set_id'], r['strategy']) for r in fast[:3]] == [
        ('person0/video0', 'MV'), ('person0/video0', 'NN'), ('person0/video0', 'EWV')]
    assert all(r['predicted'] == r['set_id'].split('/')[0] for r in fast)

    assert main(['classify', '--gallery', str(gallery), '--manifest', str(manifest), '--strategy', 'all',
                 '--mode', 'online']) == 0
    online = records(capsys.readouterr().out)
    assert [r['predicted'] for r in online] == [r['predicted'] for r in fast]

    out = tmp_path / 'decisions.jsonl'
    assert main(['classify', '--gallery', str(gallery), '--manifest', str(manifest), '--out', str(out)]) == 0
    assert [r['strategy'] for r in records(out.read_text())] == ['EWV'] * 4

    assert main(['classify', '--gallery', str(gallery), '--manifest', str(manifest),
                 '--resolution', '5x5']) == 1
    assert main(['classify', '--gallery', str(gallery), '--manifest', str(manifest),
                 '--resolution', '25x4']) == 1


def test_eval_synthetic(tmp_path, capsys):
    arguments = ['eval', '--synthetic', '--resolution', '10x10', '--folds', '3', '--strategy', 'all',
                 '--classes', '3', '--sets-per-class', '3', '--images-per-set', '5', '--seed', '4']
    assert main(arguments) == 0
    captured = capsys.readouterr()
    first = records(captured.out)
    assert sum(r['record'] == 'fold' for r in first) == 9
    assert [r['strategy'] for r in first if r['record'] == 'mean'] == ['MV', 'NN', 'EWV']
    assert '>> Evaluation at 10x10, 3 folds' in captured.err

    assert main(arguments) == 0
    second = records(capsys.readouterr().out)

    def without_timing(rows):
        return [{key: value for key, value in row.items() if not key.endswith('_seconds')} for row in rows]

    assert without_timing(first) == without_timing(second)

    out, plot = tmp_path / 'report.jsonl', tmp_path / 'folds.png'
    assert main(arguments + ['--out', str(out), '--plot', str(plot)]) == 0
    assert without_timing(records(out.read_text())) == without_timing(first)
    assert plot.exists()


def test_eval_manifest_at_several_resolutions(tmp_path, capsys):
    manifest = write_dataset(tmp_path)
    assert main(['eval', '--manifest', str(manifest), '--resolution', '5x5,10x10', '--folds', '2',
                 '--strategy', 'nn,ewv', '--histeq', 'off']) == 0
    captured = capsys.readouterr()
    means = [(r['resolution'], r['strategy']) for r in records(captured.out) if r['record'] == 'mean']
    assert means == [('5x5', 'NN'), ('5x5', 'EWV'), ('10x10', 'NN'), ('10x10', 'EWV')]
    assert 'Method | 5x5 | 10x10' in captured.err


def test_eval_needs_a_dataset():
    assert main(['eval', '--folds', '2']) == 1


def test_bench(capsys):
    assert main(['bench', '--repeats', '1', '--scenario', '2,4,2,16']) == 1
    assert main(['bench', '--repeats', '3', '--scenario', '3,5,4,25', '--seed', '1']) == 0
    rows = records(capsys.readouterr().out)
    assert len(rows) == 1 and rows[0]['tau'] == 25


def test_usage_errors():
    with pytest.raises(SystemExit) as error:
        main(['eval', '--strategy', 'best'])
    assert error.value.code == 2
    with pytest.raises(SystemExit):
        main(['evaluate'])


if __name__ == '__main__':
    test_eval_needs_a_dataset()
    test_usage_errors()
