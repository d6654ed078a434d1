"""Tests of manifests, synthetic datasets and the split protocols."""

import json
from collections import Counter

import numpy as np
import pytest
from PIL import Image

from isetclf.auxiliary_functions import derive_seed
from isetclf.classify import ProbeSet, residual_matrix
from isetclf.dataset import SplitProtocol, discover_manifest, generate_synthetic, load_dataset, load_manifest, \
    make_splits, materialize_fold, parse_gallery_sets
from isetclf.errors import InvalidInputError, ManifestError, ProtocolError
from isetclf.gallery import GalleryConfig, build_gallery
from isetclf.preprocess import PreprocessConfig


def write_images(root, classes=2, sets=2, images=3, size=(12, 10)):
    """Writes root/<class>/<set>/<n>.png and returns the hand-written manifest entries."""
    rng = np.random.default_rng(40)
    entries = []
    for y in range(classes):
        for s in range(sets):
            folder = root / f'person{y}' / f'video{s}'
            folder.mkdir(parents=True)
            paths = []
            for i in range(images):
                pixels = rng.integers(0, 256, size=size).astype(np.uint8)
                Image.fromarray(pixels).save(folder / f'{i:03d}.png')
                paths.append(f'person{y}/video{s}/{i:03d}.png')
            entries.append({'class': f'person{y}', 'set': f'video{s}', 'images': paths})
    return entries


def test_load_manifest(tmp_path):
    """Explicit manifests and directory discovery give the same entries."""
    entries = write_images(tmp_path)
    manifest_path = tmp_path / 'manifest.json'
    manifest_path.write_text(json.dumps({'resolution': '6x5', 'histeq': False,
                                         'entries': list(reversed(entries))}))
    manifest = load_manifest(manifest_path)
    assert len(manifest.entries) == 4
    assert manifest.resolution == (6, 5) and not manifest.histeq
    assert [(e.class_id, e.set_id) for e in manifest.entries] == [
        ('person0', 'video0'), ('person0', 'video1'), ('person1', 'video0'), ('person1', 'video1')]

    discovered = discover_manifest(tmp_path, resolution=(6, 5), histeq=False)
    assert discovered.entries == manifest.entries
    assert load_manifest(tmp_path).entries == manifest.entries

    dataset = load_dataset(manifest)
    assert dataset.class_ids == ['person0', 'person1']
    assert all(len(vectors) == 3 and vectors[0].tau == 30 for vectors in dataset.sets.values())


def test_manifest_errors(tmp_path):
    entries = write_images(tmp_path, classes=1, sets=1)
    broken = dict(entries[0], images=entries[0]['images'] + ['person0/video0/missing.png'])
    path = tmp_path / 'broken.json'
    path.write_text(json.dumps({'entries': [broken]}))
    with pytest.raises(ManifestError, match='missing.png'):
        load_manifest(path)
    path.write_text(json.dumps({'entries': [entries[0], entries[0]]}))
    with pytest.raises(ManifestError, match='duplicate'):
        load_manifest(path)
    path.write_text(json.dumps({'entries': [dict(entries[0], role='enrolment')]}))
    with pytest.raises(ManifestError, match='role'):
        load_manifest(path)
    path.write_text('{not json')
    with pytest.raises(ManifestError):
        load_manifest(path)
    with pytest.raises(ManifestError):
        load_manifest(tmp_path / 'nowhere.json')


def test_generate_synthetic():
    dataset = generate_synthetic(4, 3, 64, sets_per_class=2, images_per_set=5, noise_sigma=4.0, seed=1)
    assert len(dataset.sets) == 8
    assert dataset.resolution == (8, 8)
    assert not dataset.preprocessing.histeq
    values = np.stack([vector.values for vectors in dataset.sets.values() for vector in vectors])
    assert values.min() >= 0 and values.max() <= 255
    again = generate_synthetic(4, 3, 64, sets_per_class=2, images_per_set=5, noise_sigma=4.0, seed=1)
    assert np.array_equal(dataset.sets[('class02', 'set01')][3].values,
                          again.sets[('class02', 'set01')][3].values)
    with pytest.raises(InvalidInputError):
        generate_synthetic(2, 64, 64, 1, 1, 0.0)


def test_noiseless_synthetic_classes_are_subspaces():
    """Without noise, a class reconstructs its own images almost exactly."""
    dataset = generate_synthetic(3, 3, 100, sets_per_class=2, images_per_set=3, noise_sigma=0.0, seed=2)
    gallery = build_gallery({class_id: dataset.sets[(class_id, 'set00')] for class_id in dataset.class_ids},
                            GalleryConfig(fast=True))
    for y, class_id in enumerate(dataset.class_ids):
        probes = ProbeSet.from_vectors(dataset.sets[(class_id, 'set01')])
        values = residual_matrix(gallery, probes).values
        assert np.all(values[y] < 1e-6)
        assert np.all(np.delete(values, y, axis=0) > 1.0)


def test_make_splits():
    dataset = generate_synthetic(2, 2, 16, sets_per_class=3, images_per_set=2, noise_sigma=1.0)
    folds = make_splits(dataset, SplitProtocol(gallery_sets=1, folds=1))
    assert len(folds) == 1
    assert all(len(sets) == 1 for sets in folds[0].gallery.values())
    assert Counter(class_id for class_id, _ in folds[0].test) == {'class00': 2, 'class01': 2}

    protocol = SplitProtocol(gallery_sets=1, folds=10, master_seed=5)
    first, second = make_splits(dataset, protocol), make_splits(dataset, protocol)
    assert [(f.gallery, f.test) for f in first] == [(f.gallery, f.test) for f in second]
    assert [f.seed for f in first] == [derive_seed(5, 'fold', index) for index in range(10)]
    with pytest.raises(ProtocolError):
        make_splits(dataset, SplitProtocol(gallery_sets=3))
    with pytest.raises(ProtocolError):
        make_splits(dataset, SplitProtocol(gallery_sets='five-sets'))


def test_make_splits_is_uniform():
    """With 4 sets and 1 gallery set, each set is the gallery a quarter of the time."""
    dataset = generate_synthetic(1, 1, 4, sets_per_class=4, images_per_set=1, noise_sigma=0.0)
    folds = make_splits(dataset, SplitProtocol(gallery_sets=1, folds=10000, master_seed=3))
    chosen = Counter(fold.gallery['class00'][0] for fold in folds)
    for set_id in ('set00', 'set01', 'set02', 'set03'):
        assert chosen[set_id] / 10000 == pytest.approx(0.25, abs=0.02)


def test_fixed_roles_and_caps(tmp_path):
    """The fixed rule reads roles; caps keep the first or a random subset."""
    entries = write_images(tmp_path, classes=2, sets=3, images=6)
    for entry in entries:
        entry['role'] = 'gallery' if entry['set'] == 'video0' else 'probe'
    path = tmp_path / 'roles.json'
    path.write_text(json.dumps({'resolution': '4x4', 'entries': entries}))
    manifest = load_manifest(path)
    folds = make_splits(manifest, SplitProtocol(gallery_sets='fixed', folds=3))
    assert all(fold.gallery == {'person0': ['video0'], 'person1': ['video0']} for fold in folds)
    assert all(len(fold.test) == 4 for fold in folds)

    dataset = load_dataset(manifest, PreprocessConfig((4, 4), histeq=False))
    first = SplitProtocol(gallery_sets='fixed', set_image_cap=2, folds=1)
    gallery, probes = materialize_fold(dataset, make_splits(dataset, first)[0], first)
    assert [len(vectors) for vectors in gallery.values()] == [2, 2]
    assert gallery['person0'][1] is dataset.sets[('person0', 'video0')][1]
    assert [probe.size for probe in probes] == [2] * 4
    assert probes[0].set_id == 'person0/video1' and probes[0].true_class == 'person0'

    randomly = SplitProtocol(gallery_sets='fixed', set_image_cap=3, set_image_sampling='random', folds=1)
    gallery, _ = materialize_fold(dataset, make_splits(dataset, randomly)[0], randomly)
    positions = [dataset.sets[('person0', 'video0')].index(vector) for vector in gallery['person0']]
    assert len(positions) == 3 and positions == sorted(positions)

    without_roles = dict(entries[0])
    del without_roles['role']
    path.write_text(json.dumps({'entries': [without_roles] + entries[1:]}))
    with pytest.raises(ProtocolError):
        make_splits(load_manifest(path), SplitProtocol(gallery_sets='fixed'))


def test_protocol_validation():
    assert parse_gallery_sets('2') == 2
    assert parse_gallery_sets('Three-Videos') == 'three-videos'
    assert SplitProtocol(gallery_sets='three-videos').gallery_sets_per_class == 3
    for bad in ({'gallery_sets': 'most'}, {'gallery_sets': 0}, {'folds': 0}, {'set_image_cap': 0},
                {'set_image_sampling': 'last'}):
        with pytest.raises(InvalidInputError):
            SplitProtocol(**bad)


if __name__ == '__main__':
    test_generate_synthetic()
    test_noiseless_synthetic_classes_are_subspaces()
    test_make_splits()
    test_make_splits_is_uniform()
    test_protocol_validation()
