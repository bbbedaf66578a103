import re
from collections import Counter
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from numerics import Rng
from .embeddings import EmbeddingSequence, ENCODER_DIMS


PAD, END, UNK = '<pad>', '<eos>', '<unk>'
RESERVED_TOKENS = (PAD, END, UNK)
PAD_INDEX, END_INDEX, UNK_INDEX = 0, 1, 2

_PUNCTUATION = re.compile(r"[^\w\s]")


###############################################################################
# Captions
###############################################################################

def tokenize_caption(text: str) -> List[str]:
    """Lowercase, strip punctuation and split on whitespace. The end token is appended downstream."""
    tokens = _PUNCTUATION.sub('', text.lower()).split()
    if not tokens:
        raise ValueError('caption %r has no tokens' % text)
    return tokens


class Vocabulary:
    """Bijection between tokens and [0, W). <pad>, <eos> and <unk> always hold indices 0, 1, 2."""

    def __init__(self, tokens: Sequence[str]):
        tokens = list(tokens)
        if tuple(tokens[:len(RESERVED_TOKENS)]) != RESERVED_TOKENS:
            raise ValueError('vocabulary must start with the reserved tokens %s' % (RESERVED_TOKENS,))
        if len(set(tokens)) != len(tokens):
            raise ValueError('vocabulary tokens must be unique')
        self.tokens = tokens
        self.index = {token: i for i, token in enumerate(tokens)}

    def __len__(self):
        return len(self.tokens)

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    def encode(self, tokens: Iterable[str]) -> List[int]:
        return [self.index.get(token, UNK_INDEX) for token in tokens]

    def decode(self, indices: Iterable[int]) -> List[str]:
        """Tokens up to (excluding) the first end token; padding is skipped."""
        words = []
        for i in indices:
            i = int(i)
            if i == END_INDEX:
                break
            if i != PAD_INDEX:
                words.append(self.tokens[i])
        return words


def build_vocabulary(train, min_count: int = 1) -> Vocabulary:
    """Vocabulary from the training split: reserved tokens, then tokens seen at least <min_count>
    times ordered by frequency (descending) with lexicographic tie-breaks."""
    if train.split != 'train':
        raise ValueError('the vocabulary is built from the train split only, got [%s]' % train.split)
    if min_count < 0:
        raise ValueError('min_count must be non-negative')
    if len(train) == 0:
        raise ValueError('cannot build a vocabulary from an empty dataset')
    counts = Counter()
    for _, caption in train.examples:
        counts.update(tokenize_caption(caption))
    kept = [token for token, count in counts.items() if count >= min_count and token not in RESERVED_TOKENS]
    kept.sort(key=lambda token: (-counts[token], token))
    return Vocabulary(list(RESERVED_TOKENS) + kept)


def encode_caption(text: str, vocab: Vocabulary, max_caption_len: int) -> List[int]:
    """Token indices followed by the end token, truncated so the result fits <max_caption_len>."""
    indices = vocab.encode(tokenize_caption(text))[:max_caption_len - 1]
    return indices + [END_INDEX]


###############################################################################
# Audio framing
###############################################################################

@dataclass(frozen=True)
class FeatureSequence:
    """X: T x F frame-level audio features at <frame_rate> frames per second."""
    values: np.ndarray
    frame_rate: float

    def __post_init__(self):
        if self.values.ndim != 2 or min(self.values.shape) < 1:
            raise ValueError('feature sequence must be a non-empty T x F matrix')
        if self.frame_rate <= 0:
            raise ValueError('frame_rate must be positive')


@dataclass(frozen=True)
class EncoderSpec:
    name: str
    embedding_dim: int
    window_seconds: float
    training_regime: str = ''


ENCODER_SPECS: Dict[str, EncoderSpec] = {
    'vggish': EncoderSpec('vggish', 128, 0.96, 'supervised'),
    'yamnet': EncoderSpec('yamnet', 1024, 0.96, 'supervised'),
    'openl3': EncoderSpec('openl3', 512, 1.00, 'self-supervised'),
    'coala': EncoderSpec('coala', 1152, 2.20, 'contrastive'),
}
assert all(ENCODER_DIMS[name] == spec.embedding_dim for name, spec in ENCODER_SPECS.items())


def get_hop(window: int, overlap: str) -> int:
    if overlap == 'none':
        return window
    if overlap == 'half':
        return max(1, window // 2)
    raise ValueError('overlap [%s] is not recognized' % overlap)


def get_num_windows(num_frames: int, window: int, hop: int) -> int:
    """T' = floor((T - w) / h) + 1; tail frames that do not fill a window are dropped."""
    if num_frames < window:
        raise ValueError('sequence of %d frames is shorter than the %d-frame window' % (num_frames, window))
    return (num_frames - window) // hop + 1


def encoder_projection(spec: EncoderSpec, num_features: int, seed: int = 0) -> np.ndarray:
    """Fixed random F -> embedding_dim matrix standing in for the pre-trained network."""
    offset = sorted(ENCODER_SPECS).index(spec.name) if spec.name in ENCODER_SPECS else len(ENCODER_SPECS)
    rng = Rng(seed).spawn(offset)
    return rng.normal(0.0, 1.0 / np.sqrt(num_features), (num_features, spec.embedding_dim))


def window_embed(x: FeatureSequence, spec: EncoderSpec, overlap: str, pool: str = 'mean',
                 seed: int = 0) -> EmbeddingSequence:
    """Mock windowed encoder: mean-pool each analysis window, then map F -> embedding_dim."""
    if pool != 'mean':
        raise NotImplementedError('pooling [%s] is not implemented' % pool)
    window = int(round(spec.window_seconds * x.frame_rate))
    if window < 1:
        raise ValueError('window of %.3f s is shorter than one frame' % spec.window_seconds)
    hop = get_hop(window, overlap)
    count = get_num_windows(x.values.shape[0], window, hop)
    pooled = np.stack([x.values[start:start + window].mean(axis=0) for start in range(0, count * hop, hop)])
    values = pooled @ encoder_projection(spec, x.values.shape[1], seed)
    hop_seconds = spec.window_seconds if overlap == 'none' else spec.window_seconds / 2
    encoder_id = spec.name if spec.name in ENCODER_SPECS else 'mock'
    return EmbeddingSequence(values, encoder_id, overlap, spec.window_seconds, hop_seconds)
