"""One-sided Wilcoxon signed-rank test and per-setting score summaries."""
import math
from dataclasses import dataclass, asdict
from typing import Sequence

import numpy as np
import pandas as pd
from scipy.stats import norm, rankdata


EXACT_MAX_N = 20
ALTERNATIVES = ('greater', 'less')
SUMMARY_COLUMNS = ['setting_id', 'mean', 'sd', 'min', 'q1', 'median', 'q3', 'max', 'n']
SETTING_FIELDS = ('encoder', 'overlap', 'adapter', 'word_source', 'fine_tune')
MARGINAL_FIELDS = SETTING_FIELDS + ('encoder_overlap',)


@dataclass(frozen=True)
class SignificanceResult:
    W: float
    n_effective: int
    p_one_sided: float
    method: str
    alternative: str = 'greater'

    def to_dict(self):
        return asdict(self)


def _sign_count_distribution(doubled_ranks: Sequence[int]) -> np.ndarray:
    """counts[s]: how many of the 2^n sign assignments give a doubled positive-rank sum of s."""
    counts = np.zeros(int(sum(doubled_ranks)) + 1, dtype=np.int64)
    counts[0] = 1
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:len(counts) - r]
        counts = counts + shifted
    return counts


def wilcoxon_one_sided(diffs, alternative='greater') -> SignificanceResult:
    """Signed-rank test of paired differences against a zero median.

    Zero differences are dropped and tied magnitudes share mid-ranks. With at most 20 nonzero
    differences p is exact, P(W+ >= observed) over all sign assignments; above that a normal
    approximation with tie and continuity corrections is used.
    """
    if alternative not in ALTERNATIVES:
        raise ValueError('alternative [%s] is not recognized' % alternative)
    diffs = np.asarray(diffs, dtype=np.float64).ravel()
    if not np.all(np.isfinite(diffs)):
        raise ValueError('differences must be finite')
    nonzero = diffs[diffs != 0]
    n = len(nonzero)
    if n == 0:
        raise ValueError('all differences are zero')
    ranks = rankdata(np.abs(nonzero))
    w_plus = float(ranks[nonzero > 0].sum())

    if n <= EXACT_MAX_N:
        doubled = np.rint(2 * ranks).astype(np.int64)
        observed = int(doubled[nonzero > 0].sum())
        counts = _sign_count_distribution(doubled)
        tail = counts[observed:].sum() if alternative == 'greater' else counts[:observed + 1].sum()
        p = float(tail) / float(2 ** n)
        method = 'exact'
    else:
        mean = n * (n + 1) / 4.0
        _, ties = np.unique(ranks, return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(ties ** 3 - ties)) / 48.0
        sd = math.sqrt(var)
        if alternative == 'greater':
            p = float(norm.sf((w_plus - mean - 0.5) / sd))
        else:
            p = float(norm.cdf((w_plus - mean + 0.5) / sd))
        method = 'normal_approx'
    p = min(1.0, max(p, np.finfo(np.float64).tiny))
    return SignificanceResult(w_plus, n, p, method, alternative)


###############################################################################
# Summaries
###############################################################################

@dataclass(frozen=True)
class ScoreSummary:
    mean: float
    sd: float
    min: float
    q1: float
    median: float
    q3: float
    max: float
    n: int
    degenerate: bool = False


def summarize_scores(scores) -> ScoreSummary:
    """Mean, sample (n-1) SD and five-number summary; a single score reports SD 0 as degenerate."""
    values = np.asarray(scores, dtype=np.float64)
    if values.size == 0:
        raise ValueError('cannot summarize an empty score list')
    q1, median, q3 = np.percentile(values, [25, 50, 75])
    degenerate = values.size == 1
    sd = 0.0 if degenerate else float(np.std(values, ddof=1))
    return ScoreSummary(float(values.mean()), sd, float(values.min()), float(q1), float(median), float(q3),
                        float(values.max()), int(values.size), degenerate)


def summarize_runs(runs: pd.DataFrame) -> pd.DataFrame:
    """runs (setting_id, seed, cider_d) -> one summary row per setting, sorted by setting id."""
    rows = []
    for setting, group in runs.groupby('setting_id', sort=True):
        s = summarize_scores(group.sort_values('seed')['cider_d'].to_numpy())
        rows.append([setting, s.mean, s.sd, s.min, s.q1, s.median, s.q3, s.max, s.n])
    return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)


def setting_columns(setting_ids) -> pd.DataFrame:
    """Split '<encoder>-<overlap>-<adapter>-<source>-<ft|fixed>' ids into one column per factor."""
    parts = [str(s).split('-') for s in setting_ids]
    frame = pd.DataFrame(parts, columns=list(SETTING_FIELDS))
    frame['encoder_overlap'] = frame['encoder'] + '_' + frame['overlap']
    return frame


def summarize_by(runs: pd.DataFrame, field: str) -> pd.DataFrame:
    """Marginal over one grid factor: every run of every setting sharing the factor's value."""
    if field not in MARGINAL_FIELDS:
        raise ValueError('field [%s] is not recognized' % field)
    frame = pd.concat([runs.reset_index(drop=True), setting_columns(runs['setting_id'])], axis=1)
    rows = []
    for value, group in frame.groupby(field, sort=True):
        s = summarize_scores(group['cider_d'].to_numpy())
        rows.append([value, s.mean, s.sd, s.median, group['setting_id'].nunique(), s.n])
    return pd.DataFrame(rows, columns=[field, 'mean', 'sd', 'median', 'n_settings', 'n_runs'])
