from collections import OrderedDict
from dataclasses import replace
from typing import List

import numpy as np

from numerics import Tensor, Rng, Adam, backward, no_grad, concatenate
from numerics import functional as F
from data.preprocess import Vocabulary, END_INDEX
from data.word_vectors import WordEmbeddingTable
from util.errors import TrainingError
from .base_model import BaseModel, read_checkpoint
from .networks import AdaptedSequence, define_adapter, define_decoder


class CaptionModel(BaseModel):
    """Encoder embeddings Z -> adapter A -> Transformer decoder D -> caption logits.

    The audio encoder is not part of the model: Z arrives precomputed. Networks are netA
    (adapter) and netD (decoder); the word-embedding table S' is held separately and is
    only optimized when it was loaded as trainable.
    """

    def __init__(self, cfg, vocab: Vocabulary, table: WordEmbeddingTable, feature_dim: int, is_train=True):
        BaseModel.__init__(self, cfg, is_train)
        if len(table) != len(vocab):
            raise ValueError('word table has %d rows for a %d-token vocabulary' % (len(table), len(vocab)))
        self.vocab = vocab
        self.feature_dim = feature_dim
        self.table_source = table.source
        self.loss_names = ['caption']
        self.model_names = ['A', 'D']

        rng = Rng(cfg.seed)
        self.decoder_cfg = replace(cfg.decoder, vocab_size=len(vocab), word_dim=table.dim)
        self.netA, self.adapter_cfg = define_adapter(cfg.adapter, feature_dim, self.decoder_cfg.model_width,
                                                     rng, cfg.init_type)
        self.netD = define_decoder(self.decoder_cfg, self.adapter_cfg.output_dim, rng, cfg.init_type)
        self.word_table = Tensor(table.rows.copy(), requires_grad=table.trainable)

        if self.isTrain:
            params = self.netA.parameters() + self.netD.parameters()
            if table.trainable:
                params.append(self.word_table)
            self.optimizer = Adam(params, cfg.optimizer)
            self.optimizers.append(self.optimizer)
        else:
            self.eval()

    @property
    def table(self) -> WordEmbeddingTable:
        return WordEmbeddingTable(self.word_table.data.copy(), self.table_source, self.word_table.requires_grad)

    def extra_tensors(self):
        return OrderedDict([('word_table', self.word_table)])

    # *** building blocks ***
    def embed_tokens(self, tokens) -> Tensor:
        """(..., L) token indices -> (..., L+1, W'): the zero start vector S'_0, then table rows."""
        tokens = np.asarray(tokens, dtype=np.int64)
        if tokens.ndim == 0:
            raise ValueError('embed_tokens expects a token sequence')
        start = Tensor(np.zeros(tokens.shape[:-1] + (1, self.word_table.shape[1])))
        if tokens.shape[-1] == 0:
            return start
        return concatenate([start, F.embedding(self.word_table, tokens)], axis=-2)

    def apply_adapter(self, z, memory_mask=None) -> Tensor:
        z = z if isinstance(z, Tensor) else Tensor(z)
        if z.shape[-1] != self.feature_dim:
            raise ValueError('model expects %d-dimensional audio embeddings, got %d' % (self.feature_dim, z.shape[-1]))
        return self.netA(z, memory_mask)

    def adapt(self, seq) -> AdaptedSequence:
        with no_grad():
            return AdaptedSequence(self.apply_adapter(seq.values).data)

    # *** training ***
    def set_input(self, input):
        """Unpack a batch from <collate_captions>."""
        self.clip_ids = input['clip_ids']
        self.z = input['z']
        self.memory_mask = input['memory_mask']
        self.input_tokens = input['input_tokens']
        self.targets = input['targets']
        self.loss_mask = input['loss_mask']

    def forward(self):
        self.zprime = self.apply_adapter(self.z, self.memory_mask)
        self.logits = self.netD(self.zprime, self.embed_tokens(self.input_tokens), self.memory_mask)

    def compute_loss(self, reduction='mean'):
        return F.cross_entropy_masked(self.logits, self.targets, self.loss_mask, reduction)

    def optimize_parameters(self):
        self.optimizer.zero_grad()
        self.forward()
        self.loss_caption = self.compute_loss()
        if not np.isfinite(self.loss_caption.item()):
            raise TrainingError('non-finite training loss %r for clips %s' % (self.loss_caption.item(), self.clip_ids))
        backward(self.loss_caption)
        self.optimizer.step()

    def evaluate_loss(self, input):
        """(summed token cross-entropy, unmasked token count) for one batch, without a tape."""
        self.set_input(input)
        with no_grad():
            self.forward()
            total = self.compute_loss('sum').item()
        return total, int(np.asarray(self.loss_mask).sum())

    # *** generation ***
    def greedy_decode(self, zprime, memory_mask=None):
        """Feed S'_0 = 0, then the rows of previously emitted argmax tokens; stop at the end token
        or max_caption_len. A T' x F'' input yields one token list, a batch yields a list of them."""
        values = zprime.values if isinstance(zprime, AdaptedSequence) else zprime
        memory = Tensor(values.data if isinstance(values, Tensor) else values)
        single = memory.ndim == 2
        if single:
            memory = memory.reshape(1, *memory.shape)
            memory_mask = None if memory_mask is None else np.asarray(memory_mask)[None]
        batch = memory.shape[0]
        outputs: List[List[int]] = [[] for _ in range(batch)]
        finished = np.zeros(batch, dtype=bool)
        tokens = np.zeros((batch, 0), dtype=np.int64)
        with no_grad():
            for _ in range(self.decoder_cfg.max_caption_len):
                logits = self.netD(memory, self.embed_tokens(tokens), memory_mask).data[:, -1]
                step = logits.argmax(axis=-1)
                for b in np.flatnonzero(~finished):
                    outputs[b].append(int(step[b]))
                    finished[b] = step[b] == END_INDEX
                if finished.all():
                    break
                tokens = np.concatenate([tokens, step[:, None]], axis=1)
        return outputs[0] if single else outputs

    def generate(self, z, memory_mask=None):
        with no_grad():
            zprime = self.apply_adapter(z, memory_mask)
        return self.greedy_decode(zprime, memory_mask)

    # *** checkpoints ***
    def checkpoint_header(self):
        return {'experiment': self.cfg.to_dict(),
                'adapter': self.adapter_cfg.to_dict(),
                'decoder': self.decoder_cfg.to_dict(),
                'feature_dim': self.feature_dim,
                'vocab': list(self.vocab.tokens),
                'word_table': {'source': self.table_source, 'trainable': bool(self.word_table.requires_grad)}}

    def save_checkpoint(self, path):
        self.save_networks(path, self.checkpoint_header())

    @classmethod
    def load_checkpoint(cls, path, is_train=False) -> "CaptionModel":
        from experiment.config import ExperimentConfig

        header, tensors = read_checkpoint(path)
        print('loading the model from %s' % path)
        cfg = ExperimentConfig.from_dict(header['experiment'])
        table_info = header['word_table']
        table = WordEmbeddingTable(tensors['word_table'], table_info['source'], table_info['trainable'])
        model = cls(cfg, Vocabulary(header['vocab']), table, header['feature_dim'], is_train=is_train)
        model.load_state_dict(tensors)
        return model
