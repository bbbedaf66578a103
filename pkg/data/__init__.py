"""This package contains everything the captioning network consumes: caption datasets,
vocabulary and tokenization, word-embedding tables, audio embedding files, and batching.

    -- <preprocess.py>:    tokenizer, vocabulary, mock windowed encoder.
    -- <embeddings.py>:    EmbeddingSequence and its binary file format.
    -- <word_vectors.py>:  WordEmbeddingTable and the text vector format.
    -- <synthetic.py>:     desk-scale synthetic corpora.
"""
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from util.errors import FormatError
from .embeddings import EmbeddingSequence, EmbeddingStore, load_audio_embedding_file, write_embedding_file
from .preprocess import (Vocabulary, build_vocabulary, tokenize_caption, encode_caption,
                         PAD_INDEX, END_INDEX, UNK_INDEX)
from .word_vectors import WordEmbeddingTable, load_word_embedding_table, random_word_table


SPLITS = ('train', 'validation', 'evaluation')
CAPTION_COLUMNS = ['caption_%d' % i for i in range(1, 6)]
CAPTIONS_PER_CLIP = 5


@dataclass(frozen=True)
class CaptionDataset:
    """One (clip id, caption) pair per example. Caption CSVs give every clip exactly five captions."""
    examples: Tuple[Tuple[str, str], ...]
    split: str

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValueError('split [%s] is not recognized' % self.split)

    def __len__(self):
        return len(self.examples)

    @property
    def clip_ids(self) -> List[str]:
        return list(dict.fromkeys(clip for clip, _ in self.examples))

    def captions(self, clip_id: str) -> List[str]:
        return [caption for clip, caption in self.examples if clip == clip_id]

    def references(self) -> Dict[str, List[str]]:
        refs: Dict[str, List[str]] = {}
        for clip, caption in self.examples:
            refs.setdefault(clip, []).append(caption)
        return refs

    @classmethod
    def from_clips(cls, clips: Dict[str, Sequence[str]], split: str) -> "CaptionDataset":
        return cls(tuple((clip, caption) for clip, captions in clips.items() for caption in captions), split)


def caption_csv_path(data_dir, split):
    return os.path.join(data_dir, 'captions_%s.csv' % split)


def load_caption_csv(path, split) -> CaptionDataset:
    """Read a Clotho-style CSV: file_name,caption_1,...,caption_5, one row per clip."""
    df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding='utf-8')
    missing = [c for c in ['file_name'] + CAPTION_COLUMNS if c not in df.columns]
    if missing:
        raise FormatError('missing columns %s' % ', '.join(missing), path)
    examples = []
    for row_no, row in enumerate(df.itertuples(index=False), start=2):
        clip = getattr(row, 'file_name')
        for column in CAPTION_COLUMNS:
            caption = getattr(row, column)
            if not caption.strip():
                raise FormatError('clip %s has an empty %s' % (clip, column), path, row_no)
            examples.append((clip, caption))
    return CaptionDataset(tuple(examples), split)


def write_caption_csv(path, dataset: CaptionDataset):
    rows = [[clip] + captions for clip, captions in dataset.references().items()]
    pd.DataFrame(rows, columns=['file_name'] + CAPTION_COLUMNS).to_csv(path, index=False, encoding='utf-8')


def create_caption_datasets(data_dir) -> Dict[str, CaptionDataset]:
    datasets = {split: load_caption_csv(caption_csv_path(data_dir, split), split) for split in SPLITS}
    for split, dataset in datasets.items():
        print('The number of %s examples = %d (%d clips)' % (split, len(dataset), len(dataset.clip_ids)))
    return datasets


###############################################################################
# Batching
###############################################################################

class CaptionPairDataset:
    """Encoded (embedding sequence, caption tokens) pairs for teacher-forced training."""

    def __init__(self, dataset: CaptionDataset, vocab: Vocabulary, store: EmbeddingStore, max_caption_len: int):
        store.require(dataset.clip_ids)
        self.clip_ids = [clip for clip, _ in dataset.examples]
        self.targets = [encode_caption(caption, vocab, max_caption_len) for _, caption in dataset.examples]
        self.store = store

    def __len__(self):
        return len(self.targets)

    def __getitem__(self, idx):
        return {'clip_id': self.clip_ids[idx],
                'z': self.store[self.clip_ids[idx]].values,
                'targets': self.targets[idx]}


def pad_embeddings(sequences: Sequence[np.ndarray]):
    """Stack T'_i x F' matrices into B x T'max x F' with a B x T'max validity mask."""
    length = max(z.shape[0] for z in sequences)
    dim = sequences[0].shape[1]
    values = np.zeros((len(sequences), length, dim))
    mask = np.zeros((len(sequences), length), dtype=bool)
    for i, z in enumerate(sequences):
        values[i, :z.shape[0]] = z
        mask[i, :z.shape[0]] = True
    return values, mask


def collate_captions(items):
    """Teacher forcing: decoder inputs are the ground-truth prefix (the zero start row is added
    by the model), targets are the tokens followed by the end token, padding is masked out."""
    z, memory_mask = pad_embeddings([item['z'] for item in items])
    length = max(len(item['targets']) for item in items)
    targets = np.full((len(items), length), PAD_INDEX, dtype=np.int64)
    for i, item in enumerate(items):
        targets[i, :len(item['targets'])] = item['targets']
    return {'clip_ids': [item['clip_id'] for item in items],
            'z': z,
            'memory_mask': memory_mask,
            'input_tokens': targets[:, :-1],
            'targets': targets,
            'loss_mask': targets != PAD_INDEX}


class CaptionDataLoader:
    """Minibatches over a CaptionPairDataset; with <rng> each pass draws a fresh permutation.
    The final partial batch is kept."""

    def __init__(self, dataset: CaptionPairDataset, batch_size: int, rng=None):
        if batch_size < 1:
            raise ValueError('batch_size must be at least 1')
        self.dataset = dataset
        self.batch_size = batch_size
        self.rng = rng

    def __len__(self):
        return (len(self.dataset) + self.batch_size - 1) // self.batch_size

    def __iter__(self):
        order = self.rng.permutation(len(self.dataset)) if self.rng is not None else np.arange(len(self.dataset))
        for start in range(0, len(order), self.batch_size):
            yield collate_captions([self.dataset[int(i)] for i in order[start:start + self.batch_size]])
