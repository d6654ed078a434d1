"""Binary gallery files.

Layout (little-endian):

    magic "ISRG" | version u32 | c u16 | d u16 | class count u32
    per class:
        id length u16 | id bytes (UTF-8) | N u32 | perturbed u8 |
        perturbation seed u64 (0 if absent) |
        matrix, tau*N f64 column-major |
        pinv present u8 | pinv, N*tau f64 row-major (if present)
    CRC32 u32 of every preceding byte
"""

import logging
import struct
import zlib
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from .errors import GalleryFormatError
from .gallery import Gallery, Regressor
from .preprocess import PreprocessConfig

logger = logging.getLogger(__name__)

MAGIC = b'ISRG'
FORMAT_VERSION = 1

_HEADER = struct.Struct('<4sIHHI')
_CLASS_ID_LENGTH = struct.Struct('<H')
_CLASS_HEADER = struct.Struct('<IBQ')
_FLAG = struct.Struct('<B')
_CRC = struct.Struct('<I')


def serialize_gallery(gallery: Gallery) -> bytes:
    """Returns the file representation of a gallery."""
    rows, columns = gallery.resolution
    chunks: List[bytes] = [_HEADER.pack(MAGIC, FORMAT_VERSION, rows, columns, len(gallery.regressors))]
    for regressor in gallery.regressors:
        encoded_id = regressor.class_id.encode('utf-8')
        seed = regressor.perturbation_seed if regressor.perturbation_seed is not None else 0
        chunks.append(_CLASS_ID_LENGTH.pack(len(encoded_id)))
        chunks.append(encoded_id)
        chunks.append(_CLASS_HEADER.pack(regressor.size, int(regressor.perturbed), seed))
        chunks.append(np.asarray(regressor.matrix, dtype='<f8').tobytes(order='F'))
        if regressor.pinv is None:
            chunks.append(_FLAG.pack(0))
        else:
            chunks.append(_FLAG.pack(1))
            chunks.append(np.asarray(regressor.pinv, dtype='<f8').tobytes(order='C'))
    body = b''.join(chunks)
    return body + _CRC.pack(zlib.crc32(body) & 0xFFFFFFFF)


class _Reader:
    """Cursor over the body of a gallery file."""

    def __init__(self, data: bytes) -> None:
        self._data = data
        self._offset = 0

    def take(self, size: int) -> bytes:
        if self._offset + size > len(self._data):
            raise GalleryFormatError('Gallery file is truncated')
        chunk = self._data[self._offset:self._offset + size]
        self._offset += size
        return chunk

    def unpack(self, layout: struct.Struct) -> Tuple:
        return layout.unpack(self.take(layout.size))

    def matrix(self, shape: Tuple[int, int], order: str) -> np.ndarray:
        count = shape[0] * shape[1]
        raw = np.frombuffer(self.take(8 * count), dtype='<f8')
        return raw.reshape(shape, order=order).astype(np.float64)

    @property
    def exhausted(self) -> bool:
        return self._offset == len(self._data)


def deserialize_gallery(data: bytes, preprocessing: Optional[PreprocessConfig] = None) -> Gallery:
    """Parses the file representation of a gallery, checking the CRC first."""
    if len(data) < _HEADER.size + _CRC.size:
        raise GalleryFormatError('Gallery file is truncated')
    body, (stored_crc,) = data[:-_CRC.size], _CRC.unpack(data[-_CRC.size:])
    if zlib.crc32(body) & 0xFFFFFFFF != stored_crc:
        raise GalleryFormatError('Gallery file CRC mismatch')
    reader = _Reader(body)
    magic, version, rows, columns, class_count = reader.unpack(_HEADER)
    if magic != MAGIC:
        raise GalleryFormatError(f'Not a gallery file (magic {magic!r})')
    if version != FORMAT_VERSION:
        raise GalleryFormatError(f'Unsupported gallery format version {version}')
    tau = rows * columns
    regressors = []
    for _ in range(class_count):
        (id_length,) = reader.unpack(_CLASS_ID_LENGTH)
        class_id = reader.take(id_length).decode('utf-8')
        size, perturbed, seed = reader.unpack(_CLASS_HEADER)
        matrix = reader.matrix((tau, size), order='F')
        (has_pinv,) = reader.unpack(_FLAG)
        pinv = reader.matrix((size, tau), order='C') if has_pinv else None
        regressors.append(Regressor(class_id, matrix, perturbed=bool(perturbed),
                                    perturbation_seed=seed if perturbed else None, pinv=pinv))
    if not reader.exhausted:
        raise GalleryFormatError('Trailing bytes after the last class')
    if preprocessing is None:
        preprocessing = PreprocessConfig(resolution=(rows, columns))
    return Gallery((rows, columns), regressors, preprocessing)


def save_gallery(gallery: Gallery, path: Union[str, Path]) -> None:
    """Writes a gallery file."""
    data = serialize_gallery(gallery)
    try:
        Path(path).write_bytes(data)
    except OSError as error:
        raise GalleryFormatError(f'Cannot write gallery file {path}: {error}') from error
    logger.info('Wrote gallery (%d classes, %d bytes) to %s', len(gallery.regressors), len(data), path)


def load_gallery(path: Union[str, Path], preprocessing: Optional[PreprocessConfig] = None) -> Gallery:
    """Reads a gallery file."""
    try:
        data = Path(path).read_bytes()
    except OSError as error:
        raise GalleryFormatError(f'Cannot read gallery file {path}: {error}') from error
    return deserialize_gallery(data, preprocessing)
