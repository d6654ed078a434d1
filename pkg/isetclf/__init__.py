"""Imports everything necessary to use the library."""

from .preprocess import ImageRaster, FeatureVector, PreprocessConfig, preprocess_image, load_image
from .gallery import Regressor, Gallery, GalleryConfig, build_gallery
from .gallery_io import save_gallery, load_gallery
from .classify import ProbeSet, residual_matrix, classify_set, classify_set_all
from .strategies import Decision, ResidualMatrix, get_strategy
from .dataset import SplitProtocol, load_manifest, load_dataset, generate_synthetic, make_splits
from .evaluation import EngineConfig, evaluate, evaluate_resolutions
from .bench import BenchScenario, run_bench
from .errors import IsetclfError
