import math
from dataclasses import dataclass, asdict
from typing import List, Optional

import numpy as np

from numerics import Tensor, Rng
from numerics import functional as F


###############################################################################
# Configurations
###############################################################################

ADAPTER_KINDS = ('identity', 'mlp', 'mha')
FEED_FORWARD_KINDS = ('linear', 'standard')


@dataclass(frozen=True)
class AdapterConfig:
    """Audio embedding adapter. <output_dim> of 0 means "decided at build time"
    (F' for identity, the decoder width otherwise)."""
    kind: str = 'identity'
    hidden: int = 256
    heads: int = 4
    head_dim: int = 128
    output_dim: int = 0
    positional_encoding: bool = True

    def __post_init__(self):
        if self.kind not in ADAPTER_KINDS:
            raise ValueError('adapter kind [%s] is not recognized' % self.kind)
        if min(self.hidden, self.heads, self.head_dim) <= 0 or self.output_dim < 0:
            raise ValueError('adapter sizes must be positive: %s' % (self,))

    def resolved(self, feature_dim: int, model_width: int) -> "AdapterConfig":
        output_dim = feature_dim if self.kind == 'identity' else model_width
        if self.output_dim not in (0, output_dim):
            raise ValueError('adapter [%s] must output %d features, configured %d' % (self.kind, output_dim, self.output_dim))
        if self.kind == 'mha' and self.heads * self.head_dim != output_dim:
            raise ValueError('mha adapter needs heads x head_dim (%d x %d) == output_dim %d'
                             % (self.heads, self.head_dim, output_dim))
        return AdapterConfig(self.kind, self.hidden, self.heads, self.head_dim, output_dim, self.positional_encoding)

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class DecoderConfig:
    """Transformer decoder D. <vocab_size> and <word_dim> of 0 are filled in once the
    vocabulary and the word-embedding table are known."""
    num_blocks: int = 3
    heads: int = 4
    head_dim: int = 128
    model_width: int = 512
    max_caption_len: int = 30
    vocab_size: int = 0
    word_dim: int = 0
    feed_forward: str = 'linear'
    dropout: float = 0.0

    def __post_init__(self):
        if min(self.num_blocks, self.heads, self.head_dim, self.model_width) <= 0:
            raise ValueError('decoder sizes must be positive: %s' % (self,))
        if self.model_width != self.heads * self.head_dim:
            raise ValueError('model_width %d != heads x head_dim (%d x %d)' % (self.model_width, self.heads, self.head_dim))
        if self.max_caption_len < 2:
            raise ValueError('max_caption_len must be at least 2')
        if self.feed_forward not in FEED_FORWARD_KINDS:
            raise ValueError('feed_forward [%s] is not recognized' % self.feed_forward)
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError('dropout must lie in [0, 1)')

    @property
    def complete(self) -> bool:
        return self.vocab_size > 0 and self.word_dim > 0

    def to_dict(self):
        return asdict(self)


@dataclass
class AdaptedSequence:
    """Z' = A(Z): T' x F'' adapted audio embeddings."""
    values: np.ndarray


###############################################################################
# Helper Functions
###############################################################################

class Module:
    """Minimal parameter container: every Tensor attribute is a parameter, every Module
    (or list of Modules) attribute is a child. Declaration order is parameter order."""
    training = True

    def named_parameters(self, prefix=''):
        for name, value in vars(self).items():
            if isinstance(value, Tensor):
                yield prefix + name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(prefix + name + '.')
            elif isinstance(value, list):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters('%s%s.%d.' % (prefix, name, i))

    def parameters(self) -> List[Tensor]:
        return [p for _, p in self.named_parameters()]

    def modules(self):
        yield self
        for value in vars(self).values():
            children = value if isinstance(value, list) else [value]
            for child in children:
                if isinstance(child, Module):
                    yield from child.modules()

    def train(self, mode=True):
        for module in self.modules():
            module.training = mode
        return self

    def eval(self):
        return self.train(False)

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


def init_weights(net, rng, init_type='xavier', init_gain=0.02):
    """Initialize network weights from the seeded stream.

    Parameters:
        net (Module)     -- network to be initialized
        rng (Rng)        -- the run's initialization stream
        init_type (str)  -- the name of an initialization method: xavier | normal
        init_gain (float)-- standard deviation for normal

    Weight matrices (2-D) are drawn in declaration order; biases start at zero,
    layer-norm gains at one.
    """
    for name, param in net.named_parameters():
        if param.ndim == 2:
            fan_in, fan_out = param.shape
            if init_type == 'xavier':
                limit = math.sqrt(6.0 / (fan_in + fan_out))
                param.data = rng.uniform(-limit, limit, param.shape)
            elif init_type == 'normal':
                param.data = rng.normal(0.0, init_gain, param.shape)
            else:
                raise NotImplementedError('initialization method [%s] is not implemented' % init_type)
        elif name.endswith('gain'):
            param.data = np.ones(param.shape)
        else:
            param.data = np.zeros(param.shape)
        param.zero_grad()
    return net


def positional_encoding(length: int, dim: int) -> Tensor:
    """Sinusoidal encoding: (pos, 2i) = sin(pos / 10000^(2i/dim)), (pos, 2i+1) = cos(same)."""
    if length <= 0 or dim <= 0:
        raise ValueError('positional encoding needs positive length and dim')
    if dim % 2:
        raise ValueError('positional encoding needs an even dim, got %d' % dim)
    position = np.arange(length, dtype=np.float64)[:, None]
    rates = 10000.0 ** (np.arange(0, dim, 2, dtype=np.float64) / dim)
    angles = position / rates[None, :]
    table = np.empty((length, dim))
    table[:, 0::2] = np.sin(angles)
    table[:, 1::2] = np.cos(angles)
    return Tensor(table)


def causal_mask(length: int) -> np.ndarray:
    return np.tril(np.ones((length, length), dtype=bool))


def define_adapter(cfg: AdapterConfig, feature_dim: int, model_width: int, rng: Rng, init_type='xavier'):
    """Create the audio embedding adapter A.

    Parameters:
        cfg (AdapterConfig) -- adapter kind and sizes
        feature_dim (int)   -- F', the audio embedding dimensionality
        model_width (int)   -- the decoder width the mlp/mha adapters project to
        rng (Rng)           -- initialization stream

    Returns (adapter, resolved AdapterConfig). The identity adapter has no parameters and
    leaves F'' = F'.
    """
    cfg = cfg.resolved(feature_dim, model_width)
    if cfg.kind == 'identity':
        net = IdentityAdapter(feature_dim)
    elif cfg.kind == 'mlp':
        net = MLPAdapter(feature_dim, cfg.hidden, cfg.output_dim)
    elif cfg.kind == 'mha':
        net = MHAAdapter(feature_dim, cfg.output_dim, cfg.heads, cfg.positional_encoding)
    else:
        raise NotImplementedError('adapter [%s] is not recognized' % cfg.kind)
    return init_weights(net, rng, init_type), cfg


def define_decoder(cfg: DecoderConfig, memory_dim: int, rng: Rng, init_type='xavier'):
    """Create the Transformer decoder D attending over <memory_dim>-wide adapted audio embeddings."""
    if not cfg.complete:
        raise ValueError('decoder config needs vocab_size and word_dim before the network is built')
    net = TransformerDecoder(cfg, memory_dim, rng.spawn(1))
    return init_weights(net, rng, init_type)


##############################################################################
# Layers
##############################################################################

class Linear(Module):
    def __init__(self, in_features, out_features, bias=True):
        self.weight = Tensor(np.zeros((in_features, out_features)), requires_grad=True)
        self.bias = Tensor(np.zeros(out_features), requires_grad=True) if bias else None
        self.in_features = in_features
        self.out_features = out_features

    def forward(self, x):
        if x.shape[-1] != self.in_features:
            raise ValueError('linear layer expects %d input features, got %d' % (self.in_features, x.shape[-1]))
        return F.linear(x, self.weight, self.bias)


class LayerNorm(Module):
    def __init__(self, dim, eps=1e-5):
        self.gain = Tensor(np.ones(dim), requires_grad=True)
        self.bias = Tensor(np.zeros(dim), requires_grad=True)
        self.eps = eps

    def forward(self, x):
        return F.layer_norm(x, self.gain, self.bias, self.eps)


class MultiHeadAttention(Module):
    """Scaled dot-product attention over <heads> heads of width d/heads, heads concatenated and
    projected back to d. Keys/values may come from a sequence of a different width (kv_dim)."""

    def __init__(self, dim, heads, kv_dim=None):
        if dim % heads:
            raise ValueError('attention width %d is not divisible by %d heads' % (dim, heads))
        kv_dim = dim if kv_dim is None else kv_dim
        self.heads = heads
        self.scale = (dim // heads) ** -0.5
        self.to_q = Linear(dim, dim)
        self.to_k = Linear(kv_dim, dim)
        self.to_v = Linear(kv_dim, dim)
        self.to_out = Linear(dim, dim)
        self.last_attention = None

    def forward(self, queries, keys_values, mask=None):
        """queries (..., Lq, d), keys_values (..., Lk, kv_dim), mask broadcastable to (..., Lq, Lk)."""
        q, k, v = map(lambda t: t.rearrange('... l (h d) -> ... h l d', h=self.heads),
                      (self.to_q(queries), self.to_k(keys_values), self.to_v(keys_values)))
        sim = (q @ k.swapaxes(-1, -2)) * self.scale
        if mask is not None:
            mask = np.expand_dims(np.asarray(mask, dtype=bool), -3)
        attn = F.softmax(sim, axis=-1, mask=mask)
        self.last_attention = attn.data
        out = (attn @ v).rearrange('... h l d -> ... l (h d)', h=self.heads)
        return self.to_out(out)


class FeedForward(Module):
    """Position-wise stage of a block: a single linear layer, or the two-layer ReLU network."""

    def __init__(self, dim, kind='linear'):
        self.kind = kind
        if kind == 'linear':
            self.proj = Linear(dim, dim)
        else:
            self.proj = Linear(dim, 4 * dim)
            self.proj_out = Linear(4 * dim, dim)

    def forward(self, x):
        if self.kind == 'linear':
            return self.proj(x)
        return self.proj_out(self.proj(x).relu())


##############################################################################
# Adapters
##############################################################################

class IdentityAdapter(Module):
    def __init__(self, feature_dim):
        self.feature_dim = feature_dim

    def forward(self, z, mask=None):
        if z.shape[-1] != self.feature_dim:
            raise ValueError('adapter expects %d features, got %d' % (self.feature_dim, z.shape[-1]))
        return z


class MLPAdapter(Module):
    """linear(F' -> hidden) + ReLU + linear(hidden -> output_dim), shared across time steps."""

    def __init__(self, feature_dim, hidden, output_dim):
        self.fc1 = Linear(feature_dim, hidden)
        self.fc2 = Linear(hidden, output_dim)

    def forward(self, z, mask=None):
        return self.fc2(self.fc1(z).relu())


class MHAAdapter(Module):
    """Linear dimensionality reduction, positional encoding, then one Transformer encoder layer
    (self-attention, linear layer, post-residual layer normalization)."""

    def __init__(self, feature_dim, output_dim, heads, use_positional_encoding=True):
        self.reduce = Linear(feature_dim, output_dim)
        self.attention = MultiHeadAttention(output_dim, heads)
        self.norm1 = LayerNorm(output_dim)
        self.linear = Linear(output_dim, output_dim)
        self.norm2 = LayerNorm(output_dim)
        self.use_positional_encoding = use_positional_encoding

    def forward(self, z, mask=None):
        x = self.reduce(z)
        if self.use_positional_encoding:
            x = x + positional_encoding(x.shape[-2], x.shape[-1])
        key_mask = None if mask is None else np.asarray(mask, dtype=bool)[..., None, :]
        x = self.norm1(x + self.attention(x, x, key_mask))
        return self.norm2(x + self.linear(x))


##############################################################################
# Decoder
##############################################################################

class DecoderBlock(Module):
    """Causal self-attention, cross-attention over the adapted audio sequence, then the
    feed-forward stage; each followed by a residual connection and layer normalization."""

    def __init__(self, dim, heads, memory_dim, feed_forward='linear', dropout=0.0, rng=None):
        self.self_attention = MultiHeadAttention(dim, heads)
        self.norm1 = LayerNorm(dim)
        self.cross_attention = MultiHeadAttention(dim, heads, kv_dim=memory_dim)
        self.norm2 = LayerNorm(dim)
        self.feed_forward = FeedForward(dim, feed_forward)
        self.norm3 = LayerNorm(dim)
        self.dropout = dropout
        self._rng = rng

    def _drop(self, x):
        return F.dropout(x, self.dropout, self._rng, self.training)

    def forward(self, x, memory, self_mask, memory_mask=None):
        x = self.norm1(x + self._drop(self.self_attention(x, x, self_mask)))
        x = self.norm2(x + self._drop(self.cross_attention(x, memory, memory_mask)))
        return self.norm3(x + self._drop(self.feed_forward(x)))


class TransformerDecoder(Module):
    """S_k = D(Z', S'_0, ..., S'_{k-1}): word embeddings projected W' -> width plus positional
    encoding, N blocks, and an untied output projection to W logits."""

    def __init__(self, cfg: DecoderConfig, memory_dim: int, rng: Rng):
        self.cfg = cfg
        self.input_proj = Linear(cfg.word_dim, cfg.model_width)
        self.blocks = [DecoderBlock(cfg.model_width, cfg.heads, memory_dim, cfg.feed_forward, cfg.dropout,
                                    rng.spawn(i)) for i in range(cfg.num_blocks)]
        self.output_proj = Linear(cfg.model_width, cfg.vocab_size)

    def forward(self, memory, inputs, memory_mask=None):
        """memory (..., T', F''), inputs (..., K, W'), memory_mask (..., T') -> logits (..., K, W)."""
        length = inputs.shape[-2]
        if length > self.cfg.max_caption_len:
            raise ValueError('decoder input length %d exceeds max_caption_len %d' % (length, self.cfg.max_caption_len))
        x = self.input_proj(inputs) + positional_encoding(length, self.cfg.model_width)
        self_mask = causal_mask(length)
        cross_mask = None if memory_mask is None else np.asarray(memory_mask, dtype=bool)[..., None, :]
        for block in self.blocks:
            x = block(x, memory, self_mask, cross_mask)
        return self.output_proj(x)
