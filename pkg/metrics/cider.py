"""CIDEr-D: TF-IDF weighted n-gram cosine (n = 1..4) with count clipping and a Gaussian
length penalty, scaled by 10 and averaged over n-gram orders and references.

Document frequencies come from the references of the corpus being scored; each clip counts
once per n-gram no matter how many of its references contain it.
"""
import math
from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np


MAX_N = 4
SIGMA = 6.0


@dataclass(frozen=True)
class DocumentFrequency:
    counts: Counter
    num_docs: int

    @property
    def log_num_docs(self):
        return math.log(float(self.num_docs))


def ngrams(tokens: Sequence[str], max_n: int = MAX_N) -> Counter:
    counts = Counter()
    for n in range(1, max_n + 1):
        for i in range(len(tokens) - n + 1):
            counts[tuple(tokens[i:i + n])] += 1
    return counts


def document_frequency(references: Dict[str, List[Sequence[str]]], max_n: int = MAX_N) -> DocumentFrequency:
    """df over the reference sets of every clip; <references> maps clip id -> tokenized references."""
    df = Counter()
    for refs in references.values():
        df.update(set(ngram for ref in refs for ngram in ngrams(ref, max_n)))
    if not references:
        raise ValueError('document frequencies need at least one clip')
    return DocumentFrequency(df, len(references))


def _vector(counts: Counter, corpus_df: DocumentFrequency, max_n: int):
    """Per order n: ({ngram: tf-idf}, norm)."""
    vec = [dict() for _ in range(max_n)]
    norm = [0.0] * max_n
    for ngram, tf in counts.items():
        n = len(ngram) - 1
        weight = float(tf) * (corpus_df.log_num_docs - math.log(max(1.0, float(corpus_df.counts.get(ngram, 0)))))
        vec[n][ngram] = weight
        norm[n] += weight * weight
    return vec, [math.sqrt(x) for x in norm]


def length_penalty(length_hyp: int, length_ref: int, sigma: float = SIGMA) -> float:
    delta = float(length_hyp - length_ref)
    return math.exp(-(delta ** 2) / (2 * sigma ** 2))


def _similarity(vec_hyp, vec_ref, norm_hyp, norm_ref, length_hyp, length_ref, max_n, sigma):
    penalty = length_penalty(length_hyp, length_ref, sigma)
    val = np.zeros(max_n)
    for n in range(max_n):
        for ngram, weight in vec_hyp[n].items():
            if ngram in vec_ref[n]:
                val[n] += min(weight, vec_ref[n][ngram]) * vec_ref[n][ngram]
        if norm_hyp[n] != 0 and norm_ref[n] != 0:
            val[n] /= norm_hyp[n] * norm_ref[n]
        else:
            val[n] = 0.0
        val[n] *= penalty
    return val


def cider_d(candidate: Sequence[str], references: Sequence[Sequence[str]], corpus_df: DocumentFrequency,
            max_n: int = MAX_N, sigma: float = SIGMA) -> float:
    """Score one tokenized candidate against its tokenized references, in [0, 10]."""
    if not references:
        raise ValueError('cider_d needs at least one reference')
    if not candidate:
        return 0.0
    vec_hyp, norm_hyp = _vector(ngrams(candidate, max_n), corpus_df, max_n)
    per_reference = []
    for ref in references:
        vec_ref, norm_ref = _vector(ngrams(ref, max_n), corpus_df, max_n)
        val = _similarity(vec_hyp, vec_ref, norm_hyp, norm_ref, len(candidate), len(ref), max_n, sigma)
        per_reference.append(float(np.mean(val)))
    # fsum keeps the mean independent of reference order
    score = math.fsum(per_reference) / len(per_reference) * 10.0
    return min(max(score, 0.0), 10.0)


def corpus_cider_d(candidates: Dict[str, Sequence[str]], references: Dict[str, List[Sequence[str]]],
                   max_n: int = MAX_N, sigma: float = SIGMA) -> Tuple[float, Dict[str, float]]:
    """(corpus mean, per-clip scores) with document frequencies taken from <references>."""
    missing = sorted(set(references) - set(candidates))
    if missing:
        raise ValueError('no candidate for clips: %s' % ', '.join(missing))
    corpus_df = document_frequency(references, max_n)
    scores = {clip: cider_d(candidates[clip], refs, corpus_df, max_n, sigma) for clip, refs in references.items()}
    return float(np.mean(list(scores.values()))), scores
