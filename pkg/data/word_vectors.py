"""Word-embedding tables S' and the text vector format they are read from.

Text format: an optional header line '<count> <dim>', then '<token> <v1> ... <vdim>' per line.
"""
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Union

import numpy as np

from numerics import Rng, as_rng
from util.errors import FormatError


WORD_SOURCES = ('random', 'scratch', 'w2v', 'glove', 'fasttext', 'bert_static', 'cbow_clotho')
FILE_SOURCES = ('w2v', 'glove', 'fasttext', 'cbow_clotho', 'bert_static')
SOURCE_DIMS = {'w2v': 300, 'glove': 300, 'fasttext': 300, 'cbow_clotho': 300, 'bert_static': 768}
DEFAULT_RANDOM_DIM = 300


@dataclass
class WordEmbeddingTable:
    """W x W' rows in vocabulary order; <trainable> decides whether training may update them."""
    rows: np.ndarray
    source: str
    trainable: bool = False

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.float64)
        if self.source not in WORD_SOURCES:
            raise ValueError('word embedding source [%s] is not recognized' % self.source)
        if self.rows.ndim != 2:
            raise ValueError('word embedding table must be a W x W\' matrix')
        expected = SOURCE_DIMS.get(self.source)
        if expected is not None and self.rows.shape[1] != expected:
            raise ValueError('source [%s] has %d-dimensional vectors, got %d' % (self.source, expected, self.rows.shape[1]))
        if self.source == 'bert_static' and self.trainable:
            raise ValueError('bert_static embeddings are never fine-tuned')

    @property
    def dim(self):
        return self.rows.shape[1]

    def __len__(self):
        return self.rows.shape[0]


def random_rows(num_rows: int, dim: int, seed: Union[int, Rng]) -> np.ndarray:
    return as_rng(seed).normal(0.0, 1.0 / np.sqrt(dim), (num_rows, dim))


def random_word_table(vocab, dim: int = DEFAULT_RANDOM_DIM, seed: Union[int, Rng] = 0, source: str = 'random',
                      trainable: bool = False) -> WordEmbeddingTable:
    return WordEmbeddingTable(random_rows(len(vocab), dim, seed), source, trainable)


def read_word_vectors(path) -> Dict[str, np.ndarray]:
    """Parse the text vector format; the first occurrence of a token wins."""
    vectors: Dict[str, np.ndarray] = {}
    dim: Optional[int] = None
    declared: Optional[int] = None
    rows_read = 0
    with open(path, 'r', encoding='utf-8') as f:
        for line_no, line in enumerate(f, start=1):
            items = line.rstrip('\n').split(' ')
            items = [item for item in items if item != '']
            if not items:
                continue
            if line_no == 1 and len(items) == 2 and all(item.isdigit() for item in items):
                declared, dim = int(items[0]), int(items[1])
                continue
            token, values = items[0], items[1:]
            if not values:
                raise FormatError('token %r has no vector' % token, path, line_no)
            try:
                vector = np.array([float(v) for v in values])
            except ValueError:
                raise FormatError('non-numeric vector component', path, line_no)
            if dim is None:
                dim = len(vector)
            if len(vector) != dim:
                raise FormatError('vector of %d components, expected %d' % (len(vector), dim), path, line_no)
            vectors.setdefault(token, vector)
            rows_read += 1
    if not vectors:
        raise FormatError('no vectors found', path)
    if declared is not None and declared != rows_read:
        raise FormatError('header declares %d vectors, file holds %d' % (declared, rows_read), path, 1)
    return vectors


def load_word_embedding_table(path, vocab, source: str, seed: Union[int, Rng] = 0, trainable: bool = False) -> WordEmbeddingTable:
    """Table rows in vocabulary order; tokens missing from the file get rows drawn like the random source."""
    if source not in FILE_SOURCES:
        raise ValueError('source [%s] is not read from a file' % source)
    vectors = read_word_vectors(path)
    dim = len(next(iter(vectors.values())))
    if dim != SOURCE_DIMS[source]:
        raise FormatError('source [%s] needs %d-dimensional vectors, file has %d' % (source, SOURCE_DIMS[source], dim), path)
    rows = random_rows(len(vocab), dim, seed)
    found = 0
    for i, token in enumerate(vocab.tokens):
        if token in vectors:
            rows[i] = vectors[token]
            found += 1
    print('loaded %d / %d vocabulary vectors from %s' % (found, len(vocab), path))
    return WordEmbeddingTable(rows, source, trainable)


def write_word_vectors(path, tokens: Sequence[str], rows: np.ndarray, header: bool = True):
    with open(path, 'w', encoding='utf-8') as f:
        if header:
            f.write('%d %d\n' % rows.shape)
        for token, row in zip(tokens, rows):
            f.write(token + ' ' + ' '.join(repr(float(v)) for v in row) + '\n')
