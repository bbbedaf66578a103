"""Desk-scale synthetic corpora.

Every clip is one (subject, manner, place) combination of a small closed grammar. Its five
captions are paraphrases of that combination, and its frame-level features are the sum of one
seeded prototype vector per grammar slot plus noise, so captions are learnable from the audio
embeddings the mock encoders derive from those features.
"""
import os
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from numerics import Rng
from .preprocess import FeatureSequence, ENCODER_SPECS, window_embed
from .embeddings import EmbeddingSequence, OVERLAPS, write_embedding_file
from .word_vectors import FILE_SOURCES, SOURCE_DIMS, random_rows, write_word_vectors
from .preprocess import tokenize_caption


SPLIT_WEIGHTS = (('train', 130), ('validation', 35), ('evaluation', 35))


@dataclass(frozen=True)
class Grammar:
    subjects: Tuple[str, ...] = ('dog', 'bird', 'engine', 'bell', 'crowd', 'stream')
    manners: Tuple[str, ...] = ('loudly', 'quietly')
    places: Tuple[str, ...] = ('indoors', 'outside', 'in a park', 'on a street')
    templates: Tuple[str, ...] = ('A {subject} sounds {manner} {place}.',
                                  'A {subject} is heard {manner} {place}.',
                                  'There is a {subject} {manner} {place}.',
                                  '{Manner}, a {subject} makes noise {place}.',
                                  'The {subject} is {manner} audible {place}.')

    @property
    def combinations(self) -> List[Tuple[int, int, int]]:
        return [(s, m, p) for s in range(len(self.subjects))
                for m in range(len(self.manners)) for p in range(len(self.places))]

    def caption(self, combo, template=0) -> str:
        s, m, p = combo
        manner = self.manners[m]
        return self.templates[template].format(subject=self.subjects[s], manner=manner,
                                               Manner=manner.capitalize(), place=self.places[p])

    def token_set(self) -> List[str]:
        tokens = set()
        for combo in self.combinations:
            for t in range(len(self.templates)):
                tokens.update(tokenize_caption(self.caption(combo, t)))
        return sorted(tokens)


@dataclass
class SyntheticCorpus:
    datasets: Dict[str, "CaptionDataset"]
    features: Dict[str, FeatureSequence]
    combos: Dict[str, Tuple[int, int, int]]
    seed: int
    grammar: Grammar = field(default_factory=Grammar)

    def embeddings(self, encoder_id, overlap) -> Dict[str, EmbeddingSequence]:
        spec = ENCODER_SPECS[encoder_id]
        return {clip: window_embed(x, spec, overlap, seed=self.seed) for clip, x in self.features.items()}


###############################################################################
# Helper Functions
###############################################################################

def split_sizes(clips: int) -> Dict[str, int]:
    """Largest-remainder rounding of 65/17.5/17.5; equal remainders favour the later split and
    every split keeps at least one clip."""
    if clips < len(SPLIT_WEIGHTS):
        raise ValueError('a synthetic corpus needs at least %d clips' % len(SPLIT_WEIGHTS))
    total = sum(w for _, w in SPLIT_WEIGHTS)
    sizes = [clips * w // total for _, w in SPLIT_WEIGHTS]
    remainders = [clips * w % total for _, w in SPLIT_WEIGHTS]
    order = sorted(range(len(sizes)), key=lambda i: (-remainders[i], -i))
    for i in order[:clips - sum(sizes)]:
        sizes[i] += 1
    while min(sizes) == 0:
        sizes[sizes.index(max(sizes))] -= 1
        sizes[sizes.index(0)] += 1
    return {name: size for (name, _), size in zip(SPLIT_WEIGHTS, sizes)}


def assign_combinations(grammar: Grammar, clips: int, rng: Rng) -> List[Tuple[int, int, int]]:
    """The first combinations cover every grammar token; the rest follow in seeded order."""
    ns, nm, npl = len(grammar.subjects), len(grammar.manners), len(grammar.places)
    covering = []
    for i in range(max(ns * nm, npl)):
        combo = (i % ns, (i // ns) % nm, i % npl)
        if combo not in covering:
            covering.append(combo)
    rest = [c for c in grammar.combinations if c not in covering]
    rest = [rest[i] for i in rng.permutation(len(rest))]
    ordered = covering + rest
    return [ordered[i % len(ordered)] for i in range(clips)]


def make_synthetic_corpus(rng: Rng, clips: int, grammar: Grammar = None, paraphrase=True,
                          num_features=16, frame_rate=10.0, seconds=10.0, noise=0.1) -> SyntheticCorpus:
    """Build the three caption splits and the frame-level features behind their embeddings."""
    from . import CaptionDataset  # package-level dataset type

    grammar = grammar or Grammar()
    sizes = split_sizes(clips)
    combos = assign_combinations(grammar, clips, rng.spawn(1))
    proto_rng = rng.spawn(2)
    prototypes = [proto_rng.normal(0.0, 1.0, (len(slot), num_features))
                  for slot in (grammar.subjects, grammar.manners, grammar.places)]
    noise_rng = rng.spawn(3)
    num_frames = int(round(seconds * frame_rate))

    datasets, features, clip_combos = {}, {}, {}
    start = 0
    for split, size in sizes.items():
        captions = {}
        for i in range(start, start + size):
            clip = 'clip_%03d' % i
            combo = combos[i]
            templates = range(len(grammar.templates)) if paraphrase else [0] * len(grammar.templates)
            captions[clip] = [grammar.caption(combo, t) for t in templates]
            mean = sum(proto[k] for proto, k in zip(prototypes, combo))
            values = mean[None, :] + noise * noise_rng.normal(0.0, 1.0, (num_frames, num_features))
            features[clip] = FeatureSequence(values, frame_rate)
            clip_combos[clip] = combo
        datasets[split] = CaptionDataset.from_clips(captions, split)
        start += size
    return SyntheticCorpus(datasets, features, clip_combos, rng.seed, grammar)


def write_synthetic_corpus(out_dir, clips=20, seed=0, paraphrase=True, missing_per_source=2) -> SyntheticCorpus:
    """Write a complete data directory: caption CSVs, embeddings for every named encoder and
    overlap, and word-vector files for every file-backed source."""
    from . import caption_csv_path, write_caption_csv

    corpus = make_synthetic_corpus(Rng(seed), clips, paraphrase=paraphrase)
    os.makedirs(out_dir, exist_ok=True)
    for split, dataset in corpus.datasets.items():
        write_caption_csv(caption_csv_path(out_dir, split), dataset)

    for encoder_id in ENCODER_SPECS:
        for overlap in OVERLAPS:
            directory = os.path.join(out_dir, 'embeddings', '%s_%s' % (encoder_id, overlap))
            os.makedirs(directory, exist_ok=True)
            for clip, seq in corpus.embeddings(encoder_id, overlap).items():
                write_embedding_file(os.path.join(directory, clip + '.aemb'), seq)

    tokens = corpus.grammar.token_set()
    vector_dir = os.path.join(out_dir, 'word_vectors')
    os.makedirs(vector_dir, exist_ok=True)
    for offset, source in enumerate(FILE_SOURCES):
        rows = random_rows(len(tokens), SOURCE_DIMS[source], Rng(seed).spawn(500 + offset))
        keep = list(range(len(tokens)))
        if source != 'bert_static' and missing_per_source:
            dropped = {(offset * 3 + 5 * k) % len(tokens) for k in range(missing_per_source)}
            keep = [i for i in keep if i not in dropped]
        write_word_vectors(os.path.join(vector_dir, source + '.txt'), [tokens[i] for i in keep], rows[keep],
                           header=source in ('w2v', 'fasttext', 'bert_static'))
    print('synthetic corpus with %d clips written to %s (%s)'
          % (clips, out_dir, ', '.join('%s %d' % (s, len(d.clip_ids)) for s, d in corpus.datasets.items())))
    return corpus
