"""ExperimentConfig: one cell of the grid plus everything needed to train it."""
import json
import os
from dataclasses import dataclass, field, asdict, replace, fields

from data.embeddings import ENCODER_DIMS, OVERLAPS
from data.word_vectors import WORD_SOURCES, DEFAULT_RANDOM_DIM
from models.networks import AdapterConfig, DecoderConfig
from numerics import OptimizerConfig
from util.errors import ConfigError


PROFILE_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'options', 'profiles')

# sub-seed offsets derived from the run seed
INIT_OFFSET = 0
SHUFFLE_OFFSET = 1000
TABLE_OFFSET = 3000


@dataclass(frozen=True)
class ExperimentConfig:
    encoder_id: str = 'vggish'
    overlap: str = 'none'
    adapter: AdapterConfig = field(default_factory=AdapterConfig)
    word_source: str = 'random'
    fine_tune: bool = False
    seed: int = 0
    decoder: DecoderConfig = field(default_factory=DecoderConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    batch_size: int = 256
    patience: int = 10
    max_epochs: int = 200
    min_count: int = 1
    word_dim: int = DEFAULT_RANDOM_DIM
    init_type: str = 'xavier'

    def __post_init__(self):
        if self.encoder_id not in ENCODER_DIMS and self.encoder_id != 'mock':
            raise ConfigError('encoder [%s] is not recognized' % self.encoder_id)
        if self.overlap not in OVERLAPS:
            raise ConfigError('overlap [%s] is not recognized' % self.overlap)
        if self.word_source not in WORD_SOURCES:
            raise ConfigError('word source [%s] is not recognized' % self.word_source)
        if self.word_source == 'bert_static' and self.fine_tune:
            raise ConfigError('bert_static word embeddings cannot be fine-tuned')
        if self.batch_size < 1:
            raise ConfigError('batch_size must be at least 1')
        if self.patience < 1:
            raise ConfigError('patience must be at least 1')
        if self.max_epochs < 1:
            raise ConfigError('max_epochs must be at least 1')
        if self.min_count < 0 or self.word_dim < 1:
            raise ConfigError('min_count must be non-negative and word_dim positive')

    @property
    def setting_id(self) -> str:
        return setting_id(self.encoder_id, self.overlap, self.adapter.kind, self.word_source, self.fine_tune)

    def with_setting(self, **changes) -> "ExperimentConfig":
        adapter_kind = changes.pop('adapter', None)
        cfg = replace(self, **changes)
        if adapter_kind is not None:
            cfg = replace(cfg, adapter=replace(cfg.adapter, kind=adapter_kind))
        return cfg

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def save(self, path):
        with open(path, 'w', encoding='utf-8') as f:
            f.write(self.to_json() + '\n')

    @classmethod
    def from_dict(cls, values) -> "ExperimentConfig":
        values = dict(values)
        values.pop('profile', None)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError('unknown config fields: %s' % ', '.join(unknown))
        try:
            for key, sub in (('adapter', AdapterConfig), ('decoder', DecoderConfig), ('optimizer', OptimizerConfig)):
                if key in values:
                    values[key] = _sub_config(sub, values[key], key)
            return cls(**values)
        except ConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e))


def setting_id(encoder_id, overlap, adapter, word_source, fine_tune) -> str:
    return '%s-%s-%s-%s-%s' % (encoder_id, overlap, adapter, word_source, 'ft' if fine_tune else 'fixed')


def parse_setting_id(text: str):
    """'<encoder>-<overlap>-<adapter>-<source>-<ft|fixed>' -> dict of setting fields."""
    parts = text.strip().split('-')
    if len(parts) != 5 or parts[4] not in ('ft', 'fixed'):
        raise ConfigError('setting id %r is not <encoder>-<overlap>-<adapter>-<source>-<ft|fixed>' % text)
    return {'encoder_id': parts[0], 'overlap': parts[1], 'adapter': parts[2],
            'word_source': parts[3], 'fine_tune': parts[4] == 'ft'}


###############################################################################
# Helper Functions
###############################################################################

def _sub_config(cls, values, key):
    if not isinstance(values, dict):
        raise ConfigError('config field [%s] must be an object' % key)
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError('unknown %s fields: %s' % (key, ', '.join(unknown)))
    return cls(**values)


def _merge(base, override):
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _read_json(path):
    try:
        with open(path, 'r', encoding='utf-8') as f:
            values = json.load(f)
    except OSError as e:
        raise ConfigError('cannot read config %s: %s' % (path, e))
    except json.JSONDecodeError as e:
        raise ConfigError('config %s is not valid JSON: %s' % (path, e))
    if not isinstance(values, dict):
        raise ConfigError('config %s must hold a JSON object' % path)
    return values


def list_profiles():
    return sorted(name[:-5] for name in os.listdir(PROFILE_DIR) if name.endswith('.json'))


def resolve_config_dict(name_or_path, _seen=()):
    """Profile name or JSON path -> merged field dict. A file naming "profile" overrides that profile."""
    if name_or_path in _seen:
        raise ConfigError('config profiles form a cycle: %s' % ' -> '.join(_seen + (name_or_path,)))
    if os.path.isfile(name_or_path):
        values = _read_json(name_or_path)
    elif os.path.isfile(os.path.join(PROFILE_DIR, name_or_path + '.json')):
        values = _read_json(os.path.join(PROFILE_DIR, name_or_path + '.json'))
    else:
        raise ConfigError('config [%s] is neither a file nor a profile (%s)' % (name_or_path, ', '.join(list_profiles())))
    base = values.get('profile')
    if base:
        values = _merge(resolve_config_dict(base, _seen + (name_or_path,)), values)
    values.pop('profile', None)
    return values


def load_config(name_or_path='desk', **overrides) -> ExperimentConfig:
    values = resolve_config_dict(name_or_path)
    return ExperimentConfig.from_dict(_merge(values, overrides))
