"""Precomputed audio embedding files.

Binary layout (little-endian):
    magic 'AEMB' | u16 version=1 | u8 encoder id | u8 overlap | f32 window_seconds | f32 hop_seconds
    | u32 T' | u32 F' | T' x F' f32 row-major
"""
import os
import struct
from dataclasses import dataclass
from typing import Dict, Iterable, Optional

import numpy as np

from util.errors import FormatError, MissingEmbeddingError


MAGIC = b'AEMB'
VERSION = 1
ENCODER_IDS = ('vggish', 'yamnet', 'openl3', 'coala', 'mock')
OVERLAPS = ('none', 'half')
ENCODER_DIMS = {'vggish': 128, 'yamnet': 1024, 'openl3': 512, 'coala': 1152}
_HEADER = struct.Struct('<4sHBBffII')
SUFFIX = '.aemb'


@dataclass
class EmbeddingSequence:
    """Z = E(X): T' x F' embeddings plus the encoder/overlap geometry they were extracted with."""
    values: np.ndarray
    encoder_id: str
    overlap: str
    window_seconds: float
    hop_seconds: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[0] < 1 or self.values.shape[1] < 1:
            raise ValueError('embedding sequence must be a non-empty T x F matrix, got %s' % (self.values.shape,))
        if self.encoder_id not in ENCODER_IDS:
            raise ValueError('encoder [%s] is not recognized' % self.encoder_id)
        if self.overlap not in OVERLAPS:
            raise ValueError('overlap [%s] is not recognized' % self.overlap)
        expected = ENCODER_DIMS.get(self.encoder_id)
        if expected is not None and self.values.shape[1] != expected:
            raise ValueError('encoder [%s] produces %d-dimensional embeddings, got %d'
                             % (self.encoder_id, expected, self.values.shape[1]))
        if self.window_seconds <= 0 or self.hop_seconds <= 0:
            raise ValueError('window and hop must be positive')
        nominal_hop = self.window_seconds / 2 if self.overlap == 'half' else self.window_seconds
        if not np.isclose(self.hop_seconds, nominal_hop, rtol=1e-6, atol=0):
            raise ValueError('hop %.6f s does not match overlap [%s] for a %.6f s window'
                             % (self.hop_seconds, self.overlap, self.window_seconds))

    @property
    def num_frames(self):
        return self.values.shape[0]

    @property
    def feature_dim(self):
        return self.values.shape[1]


def write_embedding_file(path, seq: EmbeddingSequence):
    rows, cols = seq.values.shape
    header = _HEADER.pack(MAGIC, VERSION, ENCODER_IDS.index(seq.encoder_id), OVERLAPS.index(seq.overlap),
                          seq.window_seconds, seq.hop_seconds, rows, cols)
    with open(path, 'wb') as f:
        f.write(header)
        f.write(np.ascontiguousarray(seq.values, dtype='<f4').tobytes())


def load_audio_embedding_file(path) -> EmbeddingSequence:
    with open(path, 'rb') as f:
        payload = f.read()
    if len(payload) < _HEADER.size:
        raise FormatError('truncated header', path)
    magic, version, encoder, overlap, window, hop, rows, cols = _HEADER.unpack_from(payload)
    if magic != MAGIC:
        raise FormatError('bad magic %r' % magic, path)
    if version != VERSION:
        raise FormatError('unsupported version %d' % version, path)
    if encoder >= len(ENCODER_IDS) or overlap >= len(OVERLAPS):
        raise FormatError('unknown encoder/overlap code %d/%d' % (encoder, overlap), path)
    expected = rows * cols * 4
    body = payload[_HEADER.size:]
    if len(body) != expected:
        raise FormatError('payload of %d bytes, header declares %d x %d floats' % (len(body), rows, cols), path)
    values = np.frombuffer(body, dtype='<f4').reshape(rows, cols).astype(np.float64)
    try:
        return EmbeddingSequence(values, ENCODER_IDS[encoder], OVERLAPS[overlap], float(window), float(hop))
    except ValueError as e:
        raise FormatError(str(e), path)


class EmbeddingStore:
    """Directory <root>/embeddings/<encoder>_<overlap>/<clip_id>.aemb, read lazily and cached."""

    def __init__(self, data_dir, encoder_id: str, overlap: str):
        self.directory = os.path.join(data_dir, 'embeddings', '%s_%s' % (encoder_id, overlap))
        self.encoder_id = encoder_id
        self.overlap = overlap
        self._cache: Dict[str, EmbeddingSequence] = {}

    def path(self, clip_id: str) -> str:
        return os.path.join(self.directory, clip_id + SUFFIX)

    def require(self, clip_ids: Iterable[str]):
        missing = [clip for clip in clip_ids if not os.path.isfile(self.path(clip))]
        if missing:
            raise MissingEmbeddingError(missing, self.directory)

    def __getitem__(self, clip_id: str) -> EmbeddingSequence:
        if clip_id not in self._cache:
            if not os.path.isfile(self.path(clip_id)):
                raise MissingEmbeddingError([clip_id], self.directory)
            seq = load_audio_embedding_file(self.path(clip_id))
            if (seq.encoder_id, seq.overlap) != (self.encoder_id, self.overlap):
                raise FormatError('file holds %s/%s embeddings, store expects %s/%s'
                                  % (seq.encoder_id, seq.overlap, self.encoder_id, self.overlap), self.path(clip_id))
            self._cache[clip_id] = seq
        return self._cache[clip_id]

    def feature_dim(self, clip_id: str) -> int:
        return self[clip_id].feature_dim
