"""Caption scoring and the statistics reported over seeds.

    -- <cider.py>:  CIDEr-D with corpus document frequencies.
    -- <stats.py>:  one-sided Wilcoxon signed-rank test and score summaries.

SPIDEr is the mean of CIDEr and SPICE. SPICE needs a scene-graph parser and is not computed,
so reports carry explicit absent markers for both SPICE and SPIDEr.
"""
import json
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from .cider import cider_d, corpus_cider_d, document_frequency, length_penalty, DocumentFrequency, ngrams
from .stats import (SignificanceResult, ScoreSummary, wilcoxon_one_sided, summarize_scores, summarize_runs,
                    summarize_by, SUMMARY_COLUMNS)


ABSENT = 'absent: SPICE is not computed'


@dataclass
class ScoreReport:
    scores: Dict[str, float]
    candidates: Dict[str, str] = field(default_factory=dict)
    setting_id: str = ''
    seed: Optional[int] = None
    spice: str = ABSENT
    spider: str = ABSENT

    def __post_init__(self):
        if not self.scores:
            raise ValueError('a score report needs at least one example')
        bad = [clip for clip, s in self.scores.items() if not 0.0 <= s <= 10.0]
        if bad:
            raise ValueError('CIDEr-D scores outside [0, 10] for clips: %s' % ', '.join(sorted(bad)))

    @property
    def corpus_cider_d(self) -> float:
        return float(np.mean([self.scores[clip] for clip in sorted(self.scores)]))

    def to_dict(self):
        return {'setting_id': self.setting_id, 'seed': self.seed, 'cider_d': self.corpus_cider_d,
                'n_examples': len(self.scores), 'spice': self.spice, 'spider': self.spider}

    def save(self, path):
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write('\n')
