"""Multi-seed suites over grid settings, their summaries, contrasts and report files."""
import os
from dataclasses import dataclass
from typing import List, Sequence

import pandas as pd
from joblib import Parallel, delayed, parallel_config
from threadpoolctl import threadpool_limits
from tqdm import tqdm

from data import create_caption_datasets
from metrics import wilcoxon_one_sided, summarize_runs, summarize_by
from metrics.stats import MARGINAL_FIELDS, SETTING_FIELDS, setting_columns
from util.errors import ConfigError, FormatError
from util.visualizer import save_boxplot, save_overview, write_csv, write_index
from .config import ExperimentConfig
from .trainer import train_and_evaluate


RUN_COLUMNS = ['setting_id', 'seed', 'cider_d']
FAILURE_COLUMNS = ['setting_id', 'seed', 'error']
SIGNIFICANCE_COLUMNS = ['contrast', 'group', 'n_pairs', 'W', 'n_effective', 'p_one_sided', 'method']
TOP_COLUMNS = ['encoder', 'setting_id', 'overlap', 'mean', 'sd']


@dataclass(frozen=True)
class Contrast:
    """One-sided paired comparison: <treatment> beats <control> on <field>, tested per <group_by>."""
    name: str
    field: str
    treatment: str
    control: str
    group_by: str


DEFAULT_CONTRASTS = (
    Contrast('overlap_half_vs_none', 'overlap', 'half', 'none', 'encoder'),
    Contrast('fine_tuned_vs_fixed', 'fine_tune', 'ft', 'fixed', 'word_source'),
)


@dataclass
class SuiteResult:
    runs: pd.DataFrame
    failures: pd.DataFrame

    @property
    def ok(self):
        return self.failures.empty


###############################################################################
# Helper Functions
###############################################################################

def run_directory(out_dir, cfg: ExperimentConfig):
    return os.path.join(out_dir, 'runs', cfg.setting_id, 'seed_%d' % cfg.seed)


def _run_one(cfg: ExperimentConfig, data_dir, out_dir, datasets):
    """Train and evaluate one (setting, seed); failures are returned, not raised."""
    run_dir = run_directory(out_dir, cfg) if out_dir else None
    try:
        with threadpool_limits(limits=1):
            report = train_and_evaluate(cfg, data_dir, run_dir, verbose=False, datasets=datasets)
        return {'setting_id': cfg.setting_id, 'seed': cfg.seed, 'cider_d': report.corpus_cider_d}
    except Exception as e:
        return {'setting_id': cfg.setting_id, 'seed': cfg.seed, 'error': '%s: %s' % (type(e).__name__, e)}


def run_suite(configs: Sequence[ExperimentConfig], seeds: Sequence[int], data_dir, out_dir=None, jobs=1,
              verbose=True) -> SuiteResult:
    """Train and evaluate every (setting, seed) independently.

    Results are collected in (setting_id, seed) order whatever the number of workers. A failed
    run is recorded and the suite carries on.
    """
    if not seeds:
        raise ConfigError('a suite needs at least one seed')
    if jobs < 1:
        raise ConfigError('jobs must be at least 1')
    tasks = sorted((cfg.with_setting(seed=seed) for cfg in configs for seed in seeds),
                   key=lambda c: (c.setting_id, c.seed))
    datasets = create_caption_datasets(data_dir)
    if jobs == 1:
        results = [_run_one(cfg, data_dir, out_dir, datasets)
                   for cfg in tqdm(tasks, desc='suite', disable=not verbose)]
    else:
        with parallel_config(backend='loky', inner_max_num_threads=1):
            results = Parallel(n_jobs=jobs)(delayed(_run_one)(cfg, data_dir, out_dir, datasets) for cfg in tasks)

    done = [r for r in results if 'error' not in r]
    failed = [r for r in results if 'error' in r]
    for r in failed:
        print('run %s seed %d failed: %s' % (r['setting_id'], r['seed'], r['error']))
    runs = pd.DataFrame(done, columns=RUN_COLUMNS).sort_values(['setting_id', 'seed']).reset_index(drop=True)
    failures = pd.DataFrame(failed, columns=FAILURE_COLUMNS)
    result = SuiteResult(runs, failures)
    if out_dir and not runs.empty:
        write_report(runs, out_dir, failures)
    elif out_dir:
        os.makedirs(out_dir, exist_ok=True)
        write_csv(failures, os.path.join(out_dir, 'failures.csv'))
    return result


###############################################################################
# Contrasts
###############################################################################

def paired_differences(runs: pd.DataFrame, contrast: Contrast) -> pd.DataFrame:
    """Treatment minus control for runs that agree on every other grid factor and the seed."""
    frame = pd.concat([runs.reset_index(drop=True), setting_columns(runs['setting_id'])], axis=1)
    keys = [f for f in SETTING_FIELDS if f != contrast.field] + ['seed']
    treated = frame[frame[contrast.field] == contrast.treatment]
    control = frame[frame[contrast.field] == contrast.control]
    merged = treated.merge(control, on=keys, suffixes=('_treatment', '_control'))
    merged['diff'] = merged['cider_d_treatment'] - merged['cider_d_control']
    return merged.sort_values(keys).reset_index(drop=True)


def run_contrasts(runs: pd.DataFrame, contrasts=DEFAULT_CONTRASTS) -> pd.DataFrame:
    rows = []
    for contrast in contrasts:
        pairs = paired_differences(runs, contrast)
        for group, sub in pairs.groupby(contrast.group_by, sort=True):
            diffs = sub['diff'].to_numpy()
            if (diffs == 0).all():
                rows.append([contrast.name, group, len(diffs), 0.0, 0, 1.0, 'degenerate'])
                continue
            result = wilcoxon_one_sided(diffs, 'greater')
            rows.append([contrast.name, group, len(diffs), result.W, result.n_effective, result.p_one_sided,
                         result.method])
    return pd.DataFrame(rows, columns=SIGNIFICANCE_COLUMNS)


def top_settings(summary: pd.DataFrame) -> pd.DataFrame:
    """Best setting per encoder by mean score; ties go to the smaller setting id."""
    frame = pd.concat([summary.reset_index(drop=True), setting_columns(summary['setting_id'])], axis=1)
    rows = []
    for encoder, group in frame.groupby('encoder', sort=True):
        best = group.sort_values(['mean', 'setting_id'], ascending=[False, True]).iloc[0]
        rows.append([encoder, best['setting_id'], best['overlap'], best['mean'], best['sd']])
    return pd.DataFrame(rows, columns=TOP_COLUMNS)


###############################################################################
# Reports
###############################################################################

def read_runs_csv(path) -> pd.DataFrame:
    try:
        runs = pd.read_csv(path, dtype={'setting_id': str})
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise FormatError('cannot read runs: %s' % e, path)
    missing = [c for c in RUN_COLUMNS if c not in runs.columns]
    if missing:
        raise FormatError('missing columns %s' % ', '.join(missing), path)
    if runs.empty:
        raise FormatError('no runs', path)
    bad = [s for s in runs['setting_id'] if len(str(s).split('-')) != len(SETTING_FIELDS)]
    if bad:
        raise FormatError('malformed setting ids: %s' % ', '.join(sorted(set(bad))), path)
    return runs[RUN_COLUMNS].sort_values(['setting_id', 'seed']).reset_index(drop=True)


def write_report(runs: pd.DataFrame, out_dir, failures: pd.DataFrame = None):
    """runs.csv, summary.csv, significance.csv, marginal_<field>.csv, top_settings.csv, a boxplot
    SVG per encoder x adapter group, an overview SVG and index.html. Returns the written file names."""
    if runs.empty:
        raise ConfigError('a report needs at least one successful run')
    figure_dir = os.path.join(out_dir, 'figures')
    try:
        os.makedirs(figure_dir, exist_ok=True)
    except OSError as e:
        raise ConfigError('cannot write the report to %s: %s' % (out_dir, e))
    runs = runs.sort_values(['setting_id', 'seed']).reset_index(drop=True)
    summary = summarize_runs(runs)
    tables = {'runs.csv': runs, 'summary.csv': summary, 'significance.csv': run_contrasts(runs),
              'top_settings.csv': top_settings(summary)}
    for field in MARGINAL_FIELDS:
        tables['marginal_%s.csv' % field] = summarize_by(runs, field)
    if failures is not None and not failures.empty:
        tables['failures.csv'] = failures
    for name, frame in tables.items():
        write_csv(frame, os.path.join(out_dir, name))

    frame = pd.concat([runs, setting_columns(runs['setting_id'])], axis=1)
    figures = []
    for (encoder, adapter), group in frame.groupby(['encoder', 'adapter'], sort=True):
        settings = sorted(group['setting_id'].unique())
        data = [group[group['setting_id'] == s].sort_values('seed')['cider_d'].to_numpy() for s in settings]
        name = 'box_%s_%s.svg' % (encoder, adapter)
        save_boxplot(os.path.join(figure_dir, name), settings, data, '%s / %s adapter' % (encoder, adapter))
        figures.append(name)
    save_overview(os.path.join(figure_dir, 'overview.svg'), summary)
    figures.append('overview.svg')
    write_index(out_dir, 'Audio captioning suite', summary, figures, list(tables))
    print('report with %d settings written to %s' % (len(summary), out_dir))
    return list(tables) + ['figures/' + f for f in figures] + ['index.html']
