"""Everything related with image set datasets: manifests on disk, synthetic
datasets with known subspaces, and the gallery/test split protocols.

Manifest schema (JSON):

    {
      "resolution": "20x20",          optional, default 20x20
      "histeq": true,                 optional, default true
      "root": "images",               optional, relative to the manifest
      "entries": [
        {"class": "alice", "set": "video1",
         "images": ["alice/video1/000.png", ...],
         "role": "gallery"}           optional, "gallery" or "probe"
      ]
    }

A directory can be used instead of a manifest file; it is read as
root/<class>/<set>/<image files>.
"""

import json
import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .auxiliary_functions import DEFAULT_SEED, Resolution, derive_seed, parse_resolution, \
    resolution_for_dimension
from .classify import ProbeSet
from .errors import InvalidInputError, ManifestError, ProtocolError
from .preprocess import DEFAULT_RESOLUTION, FeatureVector, PreprocessConfig, load_feature_vector

logger = logging.getLogger(__name__)

IMAGE_EXTENSIONS = {'.pgm', '.png', '.jpg', '.jpeg', '.bmp', '.tif', '.tiff', '.ppm'}
GALLERY_ROLE = 'gallery'
PROBE_ROLE = 'probe'
ROLES = (GALLERY_ROLE, PROBE_ROLE)
NAMED_PROTOCOLS = {
    'one-video': 1,
    'two-sets': 2,
    'three-videos': 3,
    'five-sets': 5,
}
FIXED_PROTOCOL = 'fixed'

SetKey = Tuple[str, str]


@dataclass(frozen=True)
class ManifestEntry:
    """One image set on disk."""

    class_id: str
    set_id: str
    paths: Tuple[Path, ...]
    role: Optional[str] = None


@dataclass
class DatasetManifest:
    """Image sets on disk plus the preprocessing to apply to them."""

    root: Path
    entries: List[ManifestEntry]
    resolution: Resolution = DEFAULT_RESOLUTION
    histeq: bool = True

    @property
    def preprocessing(self) -> PreprocessConfig:
        return PreprocessConfig(self.resolution, self.histeq)

    def set_keys(self) -> List[Tuple[str, str, Optional[str]]]:
        """(class_id, set_id, role) of every set, in manifest order."""
        return [(entry.class_id, entry.set_id, entry.role) for entry in self.entries]


@dataclass
class ImageSetDataset:
    """Feature vectors of every image set, keyed by (class_id, set_id)."""

    preprocessing: PreprocessConfig
    sets: Dict[SetKey, List[FeatureVector]]
    roles: Dict[SetKey, Optional[str]] = field(default_factory=dict)

    @property
    def resolution(self) -> Resolution:
        return self.preprocessing.resolution

    @property
    def class_ids(self) -> List[str]:
        return sorted({class_id for class_id, _ in self.sets})

    def set_keys(self) -> List[Tuple[str, str, Optional[str]]]:
        """(class_id, set_id, role) of every set, ordered by class then set."""
        return [(class_id, set_id, self.roles.get((class_id, set_id)))
                for class_id, set_id in sorted(self.sets)]


def _ordered_entries(entries: List[ManifestEntry], source: Union[str, Path]) -> List[ManifestEntry]:
    """Validates and sorts entries by class id, then set id."""
    seen = set()
    for entry in entries:
        key = (entry.class_id, entry.set_id)
        if key in seen:
            raise ManifestError(f'{source}: duplicate set {entry.class_id}/{entry.set_id}')
        seen.add(key)
        if not entry.paths:
            raise ManifestError(f'{source}: set {entry.class_id}/{entry.set_id} has no images')
        if entry.role is not None and entry.role not in ROLES:
            raise ManifestError(f'{source}: set {entry.class_id}/{entry.set_id} has unknown role '
                                f'{entry.role!r}')
        for image_path in entry.paths:
            if not image_path.is_file():
                raise ManifestError(f'{source}: missing image file {image_path}')
    if not entries:
        raise ManifestError(f'{source}: no image sets')
    return sorted(entries, key=lambda entry: (entry.class_id, entry.set_id))


def discover_manifest(root: Union[str, Path], resolution: Resolution = DEFAULT_RESOLUTION,
                      histeq: bool = True) -> DatasetManifest:
    """Builds a manifest from a root/<class>/<set>/<images> tree."""
    root = Path(root).resolve()
    if not root.is_dir():
        raise ManifestError(f'{root} is not a directory')
    entries = []
    for class_dir in sorted(path for path in root.iterdir() if path.is_dir()):
        for set_dir in sorted(path for path in class_dir.iterdir() if path.is_dir()):
            images = tuple(sorted(path for path in set_dir.iterdir()
                                  if path.is_file() and path.suffix.lower() in IMAGE_EXTENSIONS))
            entries.append(ManifestEntry(class_dir.name, set_dir.name, images))
    return DatasetManifest(root, _ordered_entries(entries, root), resolution, histeq)


def load_manifest(path: Union[str, Path]) -> DatasetManifest:
    """Reads a JSON manifest, or discovers one when path is a directory."""
    path = Path(path)
    if path.is_dir():
        return discover_manifest(path)
    try:
        document = json.loads(path.read_text(encoding='utf-8'))
    except OSError as error:
        raise ManifestError(f'Cannot read manifest {path}: {error}') from error
    except json.JSONDecodeError as error:
        raise ManifestError(f'{path} is not valid JSON: {error}') from error
    if not isinstance(document, dict) or not isinstance(document.get('entries'), list):
        raise ManifestError(f'{path}: a manifest needs an "entries" list')
    root = (path.parent / document.get('root', '.')).resolve()
    try:
        resolution = parse_resolution(str(document.get('resolution', '20x20')))
    except InvalidInputError as error:
        raise ManifestError(f'{path}: {error}') from error
    histeq = bool(document.get('histeq', True))
    entries = []
    for raw in document['entries']:
        try:
            entries.append(ManifestEntry(str(raw['class']), str(raw['set']),
                                         tuple((root / image).resolve() for image in raw['images']),
                                         raw.get('role')))
        except (KeyError, TypeError) as error:
            raise ManifestError(f'{path}: malformed entry {raw!r}') from error
    return DatasetManifest(root, _ordered_entries(entries, path), resolution, histeq)


def load_dataset(manifest: DatasetManifest, preprocessing: Optional[PreprocessConfig] = None) \
        -> ImageSetDataset:
    """Reads and preprocesses every image listed in a manifest."""
    preprocessing = preprocessing or manifest.preprocessing
    sets: Dict[SetKey, List[FeatureVector]] = OrderedDict()
    roles: Dict[SetKey, Optional[str]] = {}
    for entry in manifest.entries:
        key = (entry.class_id, entry.set_id)
        sets[key] = [load_feature_vector(image_path, preprocessing) for image_path in entry.paths]
        roles[key] = entry.role
    logger.info('Loaded %d image sets (%d images) at %dx%d', len(sets),
                sum(len(vectors) for vectors in sets.values()), *preprocessing.resolution)
    return ImageSetDataset(preprocessing, sets, roles)


def generate_synthetic(classes: int, subspace_dim: int, tau: int, sets_per_class: int,
                       images_per_set: int, noise_sigma: float, seed: int = DEFAULT_SEED,
                       resolution: Optional[Resolution] = None) -> ImageSetDataset:
    """Dataset whose classes are known k-dimensional subspaces of R^tau.

    Every image is a non-negative combination of its class basis plus
    Gaussian noise; one common positive factor scales the noiseless images
    so the brightest pixel is 255, then values are clipped to [0, 255].
    """
    if subspace_dim >= tau:
        raise InvalidInputError(f'Subspace dimension {subspace_dim} must be smaller than tau={tau}')
    if min(classes, subspace_dim, sets_per_class, images_per_set) < 1:
        raise InvalidInputError('classes, subspace_dim, sets_per_class and images_per_set must be >= 1')
    if noise_sigma < 0:
        raise InvalidInputError(f'noise_sigma must be non-negative, got {noise_sigma}')
    resolution = resolution or resolution_for_dimension(tau)
    if resolution[0] * resolution[1] != tau:
        raise InvalidInputError(f'Resolution {resolution} does not have tau={tau} pixels')
    rng = np.random.default_rng(seed)
    bases = rng.uniform(0.0, 1.0, size=(classes, tau, subspace_dim))
    clean = np.stack([
        np.stack([bases[y] @ rng.uniform(0.0, 1.0, size=(subspace_dim, images_per_set))
                  for _ in range(sets_per_class)])
        for y in range(classes)])
    scale = 255.0 / clean.max()
    noise = rng.normal(0.0, noise_sigma, size=clean.shape) if noise_sigma > 0 else 0.0
    images = np.clip(clean * scale + noise, 0.0, 255.0)
    sets: Dict[SetKey, List[FeatureVector]] = OrderedDict()
    for y in range(classes):
        for s in range(sets_per_class):
            sets[(f'class{y:02d}', f'set{s:02d}')] = [
                FeatureVector(images[y, s, :, i], resolution) for i in range(images_per_set)]
    return ImageSetDataset(PreprocessConfig(resolution, histeq=False), sets)


@dataclass(frozen=True)
class SplitProtocol:
    """How gallery and test sets are drawn, and how many times."""

    gallery_sets: Union[int, str] = 1
    set_image_cap: Optional[int] = None
    set_image_sampling: str = 'first'
    gallery_image_cap: Optional[int] = None
    folds: int = 10
    master_seed: int = DEFAULT_SEED

    def __post_init__(self) -> None:
        if self.folds < 1:
            raise InvalidInputError(f'folds must be at least 1, got {self.folds}')
        for name in ('set_image_cap', 'gallery_image_cap'):
            cap = getattr(self, name)
            if cap is not None and cap < 1:
                raise InvalidInputError(f'{name} must be at least 1 (or unlimited), got {cap}')
        if self.set_image_sampling not in ('first', 'random'):
            raise InvalidInputError(f"set_image_sampling must be 'first' or 'random', "
                                    f"got {self.set_image_sampling!r}")
        if isinstance(self.gallery_sets, str) and self.gallery_sets != FIXED_PROTOCOL \
                and self.gallery_sets not in NAMED_PROTOCOLS:
            raise InvalidInputError(f'Unknown protocol rule {self.gallery_sets!r}')
        if isinstance(self.gallery_sets, int) and self.gallery_sets < 1:
            raise InvalidInputError(f'gallery_sets must be at least 1, got {self.gallery_sets}')

    @property
    def fixed(self) -> bool:
        """Gallery and test sets come from the manifest roles."""
        return self.gallery_sets == FIXED_PROTOCOL

    @property
    def gallery_sets_per_class(self) -> int:
        if isinstance(self.gallery_sets, str):
            return NAMED_PROTOCOLS.get(self.gallery_sets, 0)
        return self.gallery_sets


def parse_gallery_sets(text: str) -> Union[int, str]:
    """'2' -> 2; named rules are kept as strings."""
    text = text.strip().lower()
    return int(text) if text.isdigit() else text


@dataclass
class Fold:
    """One repetition of the split: gallery set ids per class, and test sets."""

    index: int
    seed: int
    gallery: Dict[str, List[str]]
    test: List[SetKey]


def _sets_by_class(keys: Sequence[Tuple[str, str, Optional[str]]]) -> Dict[str, List[Tuple[str, Optional[str]]]]:
    grouped: Dict[str, List[Tuple[str, Optional[str]]]] = OrderedDict()
    for class_id, set_id, role in sorted(keys, key=lambda key: (key[0], key[1])):
        grouped.setdefault(class_id, []).append((set_id, role))
    return grouped


def make_splits(source: Union[DatasetManifest, ImageSetDataset], protocol: SplitProtocol) -> List[Fold]:
    """Draws the gallery/test assignment of every fold."""
    grouped = _sets_by_class(source.set_keys())
    if protocol.fixed:
        for class_id, sets in grouped.items():
            if not any(role == GALLERY_ROLE for _, role in sets):
                raise ProtocolError(f'Class {class_id} has no set with role "gallery"')
            missing = [set_id for set_id, role in sets if role is None]
            if missing:
                raise ProtocolError(f'Class {class_id} has sets without a role: {missing}')
    else:
        wanted = protocol.gallery_sets_per_class
        for class_id, sets in grouped.items():
            if len(sets) <= wanted:
                raise ProtocolError(f'Class {class_id} has {len(sets)} sets, needs more than '
                                    f'{wanted} to keep {wanted} for the gallery')
    folds = []
    for index in range(protocol.folds):
        seed = derive_seed(protocol.master_seed, 'fold', index)
        rng = np.random.default_rng(seed)
        gallery: Dict[str, List[str]] = OrderedDict()
        test: List[SetKey] = []
        for class_id, sets in grouped.items():
            if protocol.fixed:
                chosen = [position for position, (_, role) in enumerate(sets) if role == GALLERY_ROLE]
            else:
                chosen = sorted(rng.choice(len(sets), size=protocol.gallery_sets_per_class,
                                           replace=False).tolist())
            gallery[class_id] = [sets[position][0] for position in chosen]
            test.extend((class_id, set_id) for position, (set_id, role) in enumerate(sets)
                        if position not in chosen and (not protocol.fixed or role == PROBE_ROLE))
        folds.append(Fold(index, seed, gallery, test))
    return folds


def _capped(vectors: List[FeatureVector], protocol: SplitProtocol, seed: int) -> List[FeatureVector]:
    cap = protocol.set_image_cap
    if cap is None or len(vectors) <= cap:
        return list(vectors)
    if protocol.set_image_sampling == 'first':
        return list(vectors[:cap])
    rng = np.random.default_rng(seed)
    return [vectors[index] for index in np.sort(rng.choice(len(vectors), size=cap, replace=False))]


def materialize_fold(dataset: ImageSetDataset, fold: Fold, protocol: SplitProtocol) \
        -> Tuple[Dict[str, List[FeatureVector]], List[ProbeSet]]:
    """Gallery images per class, and one probe set per test set, for a fold."""
    gallery_sets: Dict[str, List[FeatureVector]] = OrderedDict()
    for class_id, set_ids in fold.gallery.items():
        gallery_sets[class_id] = []
        for set_id in set_ids:
            seed = derive_seed(fold.seed, 'set-images', class_id, set_id)
            gallery_sets[class_id].extend(_capped(dataset.sets[(class_id, set_id)], protocol, seed))
    probes = []
    for class_id, set_id in fold.test:
        seed = derive_seed(fold.seed, 'set-images', class_id, set_id)
        vectors = _capped(dataset.sets[(class_id, set_id)], protocol, seed)
        probes.append(ProbeSet.from_vectors(vectors, f'{class_id}/{set_id}', class_id))
    return gallery_sets, probes
