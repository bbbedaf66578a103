"""Enumeration of the encoder x overlap x adapter x word-embedding grid."""
from typing import Iterable, List

from models.networks import ADAPTER_KINDS
from util.errors import ConfigError
from .config import ExperimentConfig, parse_setting_id


ENCODERS = ('vggish', 'yamnet', 'openl3', 'coala')
OVERLAP_SETTINGS = ('none', 'half')
ADAPTERS = ADAPTER_KINDS
TUNABLE_SOURCES = ('w2v', 'glove', 'fasttext', 'cbow_clotho', 'random')
WORD_SETTINGS = tuple((source, fine_tune) for source in TUNABLE_SOURCES for fine_tune in (False, True)) \
    + (('bert_static', False),)

FILTER_KEYS = {
    'encoder': 'encoder_id', 'encoder_id': 'encoder_id',
    'overlap': 'overlap',
    'adapter': 'adapter',
    'word': 'word_source', 'word_source': 'word_source', 'source': 'word_source',
    'fine_tune': 'fine_tune', 'ft': 'fine_tune',
}
_TRUE = ('1', 'true', 'yes', 'ft')
_FALSE = ('0', 'false', 'no', 'fixed')


def enumerate_grid(defaults: ExperimentConfig = None) -> List[ExperimentConfig]:
    """All settings in a fixed order; every config keeps the seed of <defaults>."""
    defaults = defaults or ExperimentConfig()
    return [defaults.with_setting(encoder_id=encoder, overlap=overlap, adapter=adapter,
                                  word_source=source, fine_tune=fine_tune)
            for encoder in ENCODERS
            for overlap in OVERLAP_SETTINGS
            for adapter in ADAPTERS
            for source, fine_tune in WORD_SETTINGS]


def parse_filter(expr: str):
    """'key=v1|v2,key2=v' -> {field: set of accepted values}. Empty expression accepts everything."""
    criteria = {}
    for clause in filter(None, (c.strip() for c in (expr or '').split(','))):
        if '=' not in clause:
            raise ConfigError('filter clause %r is not key=value' % clause)
        key, values = (s.strip() for s in clause.split('=', 1))
        if key not in FILTER_KEYS:
            raise ConfigError('filter key [%s] is not recognized (%s)' % (key, ', '.join(sorted(FILTER_KEYS))))
        name = FILTER_KEYS[key]
        accepted = set()
        for value in values.split('|'):
            value = value.strip()
            if name == 'fine_tune':
                if value.lower() in _TRUE:
                    value = True
                elif value.lower() in _FALSE:
                    value = False
                else:
                    raise ConfigError('fine_tune filter value %r is not true/false' % value)
            accepted.add(value)
        criteria[name] = criteria.get(name, accepted) & accepted
    return criteria


def setting_fields(cfg: ExperimentConfig):
    return {'encoder_id': cfg.encoder_id, 'overlap': cfg.overlap, 'adapter': cfg.adapter.kind,
            'word_source': cfg.word_source, 'fine_tune': cfg.fine_tune}


def filter_grid(configs: Iterable[ExperimentConfig], expr: str) -> List[ExperimentConfig]:
    criteria = parse_filter(expr)
    return [cfg for cfg in configs
            if all(setting_fields(cfg)[name] in accepted for name, accepted in criteria.items())]


def read_grid_file(path, defaults: ExperimentConfig = None) -> List[ExperimentConfig]:
    """One setting id per line; blank lines and '#' comments are skipped."""
    defaults = defaults or ExperimentConfig()
    configs = []
    try:
        with open(path, 'r', encoding='utf-8') as f:
            lines = f.readlines()
    except OSError as e:
        raise ConfigError('cannot read grid file %s: %s' % (path, e))
    for line_no, line in enumerate(lines, start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        try:
            configs.append(defaults.with_setting(**parse_setting_id(line)))
        except ValueError as e:
            raise ConfigError('%s:%d: %s' % (path, line_no, e))
    if not configs:
        raise ConfigError('grid file %s names no settings' % path)
    return configs


def write_grid_file(path, configs: Iterable[ExperimentConfig]):
    with open(path, 'w', encoding='utf-8') as f:
        for cfg in configs:
            f.write(cfg.setting_id + '\n')
