import numpy as np
import pytest

from data.synthetic import write_synthetic_corpus
from experiment.config import load_config
from numerics import Tensor, backward, no_grad


def numeric_gradcheck(loss_fn, params, eps=1e-6):
    """Relative error between the tape gradient and central differences, per parameter.

    <loss_fn> rebuilds the scalar loss from the current contents of <params>.
    """
    for p in params:
        p.zero_grad()
    backward(loss_fn())
    errors = []
    for p in params:
        analytic = p.grad.copy()
        numeric = np.zeros_like(p.data)
        with no_grad():
            for idx in np.ndindex(p.data.shape):
                original = p.data[idx]
                p.data[idx] = original + eps
                plus = loss_fn().item()
                p.data[idx] = original - eps
                minus = loss_fn().item()
                p.data[idx] = original
                numeric[idx] = (plus - minus) / (2 * eps)
        # floor for parameters whose exact gradient is zero (e.g. key biases under softmax)
        scale = max(np.linalg.norm(analytic) + np.linalg.norm(numeric), 1e-3)
        errors.append(np.linalg.norm(analytic - numeric) / scale)
    return max(errors)


@pytest.fixture
def gradcheck():
    return numeric_gradcheck


@pytest.fixture
def leaf():
    def make(shape, seed=0, scale=1.0):
        return Tensor(np.random.default_rng(seed).normal(0.0, scale, shape), requires_grad=True)
    return make


@pytest.fixture(scope='session')
def data_dir(tmp_path_factory):
    """20-clip paraphrased corpus: 13 train, 3 validation, 4 evaluation clips."""
    root = tmp_path_factory.mktemp('synthetic')
    write_synthetic_corpus(str(root), clips=20, seed=0)
    return str(root)


@pytest.fixture(scope='session')
def plain_data_dir(tmp_path_factory):
    """Same corpus with five identical captions per clip."""
    root = tmp_path_factory.mktemp('synthetic_plain')
    write_synthetic_corpus(str(root), clips=20, seed=0, paraphrase=False)
    return str(root)


def small_config(**overrides):
    values = dict(adapter={'kind': 'identity', 'hidden': 16, 'heads': 2, 'head_dim': 8},
                  decoder={'num_blocks': 1, 'heads': 2, 'head_dim': 8, 'model_width': 16, 'max_caption_len': 12},
                  word_source='random', word_dim=8, batch_size=16, patience=2, max_epochs=3)
    for key, value in overrides.items():
        values[key] = dict(values[key], **value) if isinstance(value, dict) and key in values else value
    return load_config('desk', **values)
