"""This package contains the captioning network and its checkpoint format.

    -- <networks.py>:       layers, the three adapters, the Transformer decoder and the define_* helpers.
    -- <base_model.py>:     BaseModel and the binary checkpoint reader/writer.
    -- <caption_model.py>:  CaptionModel, which ties adapter, decoder and word table together.

<create_model> resolves a name such as 'caption' to the BaseModel subclass CaptionModel in
'caption_model.py', which implements <set_input>, <forward>, <optimize_parameters> and <greedy_decode>.
"""

import importlib
from .base_model import BaseModel


def find_model_using_name(model_name):
    """Import the module "models/[model_name]_model.py" and return its BaseModel subclass
    whose lowercase name matches [model_name]model."""
    model_filename = "models." + model_name + "_model"
    try:
        modellib = importlib.import_module(model_filename)
    except ImportError:
        raise NotImplementedError('model [%s] is not recognized' % model_name)
    target_model_name = model_name.replace('_', '') + 'model'
    for name, cls in modellib.__dict__.items():
        if name.lower() == target_model_name.lower() and isinstance(cls, type) and issubclass(cls, BaseModel):
            return cls
    raise NotImplementedError('In %s.py, there should be a subclass of BaseModel with class name that matches %s'
                              % (model_filename, target_model_name))


def create_model(cfg, vocab, table, feature_dim, is_train=True, model_name='caption'):
    """Create a model given the experiment config, vocabulary, word table and audio embedding width."""
    model = find_model_using_name(model_name)
    instance = model(cfg, vocab, table, feature_dim, is_train=is_train)
    print("model [%s] was created" % type(instance).__name__)
    return instance
