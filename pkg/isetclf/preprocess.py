"""Everything related with turning images into feature vectors.

Pipeline: grayscale -> downsample -> histogram equalization -> vectorize.
Intensities stay on the 0-255 scale the whole way through.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

from .auxiliary_functions import Resolution
from .errors import InvalidInputError

logger = logging.getLogger(__name__)

DEFAULT_RESOLUTION: Resolution = (20, 20)
REC601_LUMA = np.array([0.299, 0.587, 0.114])
INTENSITY_LEVELS = 256


@dataclass(frozen=True)
class PreprocessConfig:
    """Decisions applied to every image of a dataset."""

    resolution: Resolution = DEFAULT_RESOLUTION
    histeq: bool = True

    @property
    def tau(self) -> int:
        """Length of the feature vectors produced."""
        return self.resolution[0] * self.resolution[1]


@dataclass(frozen=True, eq=False)
class ImageRaster:
    """A height x width grid of intensities, with 1 (gray) or 3 (RGB) channels."""

    pixels: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        pixels = np.asarray(self.pixels, dtype=np.float64)
        if pixels.ndim not in (2, 3) or (pixels.ndim == 3 and pixels.shape[2] not in (1, 3)):
            raise InvalidInputError(f'Raster of shape {pixels.shape} is neither gray nor RGB')
        if pixels.ndim == 3 and pixels.shape[2] == 1:
            pixels = pixels[:, :, 0]
        if pixels.shape[0] < 1 or pixels.shape[1] < 1:
            raise InvalidInputError('Raster must be at least 1x1')
        if not np.all(np.isfinite(pixels)) or pixels.min() < 0 or pixels.max() > 255:
            raise InvalidInputError('Raster intensities must lie within [0, 255]')
        object.__setattr__(self, 'pixels', pixels)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.pixels.ndim == 2 else self.pixels.shape[2]

    def __repr__(self):
        return f'ImageRaster({self.height}x{self.width}, channels={self.channels})'


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Column-major concatenation of a c x d gray raster."""

    values: np.ndarray = field(repr=False)
    source_resolution: Resolution

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        rows, columns = self.source_resolution
        if values.size != rows * columns:
            raise InvalidInputError(f'Feature vector of length {values.size} does not match '
                                    f'resolution {rows}x{columns}')
        if not np.all(np.isfinite(values)) or values.min() < 0 or values.max() > 255:
            raise InvalidInputError('Feature vector values must lie within [0, 255]')
        object.__setattr__(self, 'values', values)

    @property
    def tau(self) -> int:
        return self.values.size

    def __len__(self):
        return self.values.size

    def __repr__(self):
        return f'FeatureVector(tau={self.tau}, resolution={self.source_resolution})'


def to_grayscale(img: ImageRaster) -> ImageRaster:
    """Converts an RGB raster to gray with Rec.601 luma; gray rasters pass through."""
    if img.channels == 1:
        return img
    gray = np.clip(img.pixels @ REC601_LUMA, 0, 255)
    return ImageRaster(gray)


def _resize_channel(channel: np.ndarray, target: Resolution) -> np.ndarray:
    """Bilinear resize of one channel; Pillow widens the filter support when
    reducing, which averages over the covered area."""
    image = Image.fromarray(np.ascontiguousarray(channel, dtype=np.float32))
    resized = image.resize((target[1], target[0]), resample=Image.Resampling.BILINEAR)
    out = np.asarray(resized, dtype=np.float64)
    # Convex filter weights: the output range is contained in the input range.
    return np.clip(out, channel.min(), channel.max())


def downsample(img: ImageRaster, target: Resolution) -> ImageRaster:
    """Resamples a raster to target = (rows, columns)."""
    rows, columns = target
    if rows < 1 or columns < 1:
        raise InvalidInputError(f'Target resolution {rows}x{columns} must be positive')
    if (img.height, img.width) == (rows, columns):
        return img
    if rows > img.height or columns > img.width:
        logger.warning('Upsampling %dx%d image to %dx%d', img.height, img.width, rows, columns)
    if img.channels == 1:
        return ImageRaster(_resize_channel(img.pixels, target))
    planes = [_resize_channel(img.pixels[:, :, k], target) for k in range(img.channels)]
    return ImageRaster(np.stack(planes, axis=2))


def equalize_histogram(img: ImageRaster) -> ImageRaster:
    """Histogram equalization with the cdf-min mapping on integer levels."""
    if img.channels != 1:
        raise InvalidInputError('Histogram equalization needs a single-channel raster')
    levels = np.clip(np.rint(img.pixels), 0, 255).astype(np.int64)
    histogram = np.bincount(levels.ravel(), minlength=INTENSITY_LEVELS)
    cdf = np.cumsum(histogram)
    total = levels.size
    cdf_min = histogram[np.flatnonzero(histogram)[0]]
    if total == cdf_min:
        # A single occupied level: the mapping would be 0/0.
        return img
    lut = np.rint(255.0 * (cdf - cdf_min) / (total - cdf_min))
    lut = np.clip(lut, 0, 255)
    return ImageRaster(lut[levels])


def vectorize(img: ImageRaster, resolution: Union[Resolution, None] = None) -> FeatureVector:
    """Concatenates the columns of a gray raster, column 1 top-to-bottom first."""
    if img.channels != 1:
        raise InvalidInputError('Only single-channel rasters can be vectorized')
    shape = (img.height, img.width)
    if resolution is not None and tuple(resolution) != shape:
        raise InvalidInputError(f'Raster is {shape[0]}x{shape[1]}, '
                                f'expected {resolution[0]}x{resolution[1]}')
    return FeatureVector(img.pixels.ravel(order='F'), shape)


def devectorize(vector: FeatureVector) -> ImageRaster:
    """Inverse of vectorize."""
    return ImageRaster(vector.values.reshape(vector.source_resolution, order='F'))


def preprocess_image(img: ImageRaster, config: PreprocessConfig) -> FeatureVector:
    """Runs the whole pipeline on one raster."""
    gray = to_grayscale(img)
    small = downsample(gray, config.resolution)
    if config.histeq:
        small = equalize_histogram(small)
    return vectorize(small, config.resolution)


def load_image(path: Union[str, Path]) -> ImageRaster:
    """Reads a raster from disk (PGM, PNG and anything else Pillow decodes)."""
    try:
        with Image.open(path) as image:
            image.load()
            if image.mode in ('I;16', 'I;16B', 'I;16L', 'I'):
                # 16-bit gray: rescale to the 0-255 scale
                pixels = np.asarray(image, dtype=np.float64) * (255.0 / 65535.0)
                return ImageRaster(np.clip(pixels, 0, 255))
            if image.mode == 'F':
                return ImageRaster(np.clip(np.asarray(image, dtype=np.float64), 0, 255))
            if image.mode not in ('L', 'RGB'):
                image = image.convert('L' if image.mode in ('1', 'LA') else 'RGB')
            return ImageRaster(np.asarray(image, dtype=np.float64))
    except OSError as error:
        raise InvalidInputError(f'Cannot read image {path}: {error}') from error


def load_feature_vector(path: Union[str, Path], config: PreprocessConfig) -> FeatureVector:
    """Loads an image file and runs the pipeline on it."""
    return preprocess_image(load_image(path), config)
