"""Training of one (setting, seed) with early stopping, and its evaluation."""
import os
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from tqdm import tqdm

from data import (CaptionDataset, CaptionPairDataset, CaptionDataLoader, create_caption_datasets,
                  pad_embeddings)
from data.embeddings import EmbeddingStore
from data.preprocess import Vocabulary, build_vocabulary, tokenize_caption
from data.word_vectors import FILE_SOURCES, WordEmbeddingTable, load_word_embedding_table, random_word_table
from metrics import ScoreReport, corpus_cider_d
from models import create_model
from numerics import Rng
from util.errors import ConfigError, TrainingError
from util.util import diagnose_network
from util.visualizer import Visualizer, write_csv
from .config import ExperimentConfig, SHUFFLE_OFFSET, TABLE_OFFSET


CHECKPOINT_NAME = 'checkpoint.aack'


@dataclass
class TrainState:
    """Early-stopping bookkeeping. Only a strictly lower validation loss counts as improvement."""
    epoch: int = 0
    best_loss: float = float('inf')
    best_epoch: int = 0
    epochs_since_improvement: int = 0
    best_state: Optional[dict] = field(default=None, repr=False)

    def update(self, val_loss: float) -> bool:
        self.epoch += 1
        if val_loss < self.best_loss:
            self.best_loss = val_loss
            self.best_epoch = self.epoch
            self.epochs_since_improvement = 0
            return True
        self.epochs_since_improvement += 1
        return False

    def should_stop(self, patience: int, max_epochs: int) -> bool:
        return self.epochs_since_improvement >= patience or self.epoch >= max_epochs


def simulate_early_stopping(val_losses, patience: int, max_epochs: int):
    """(stop epoch, best epoch) that a run with this validation-loss sequence would reach."""
    state = TrainState()
    for loss in val_losses:
        state.update(loss)
        if state.should_stop(patience, max_epochs):
            break
    return state.epoch, state.best_epoch


@dataclass
class TrainingData:
    datasets: Dict[str, CaptionDataset]
    vocab: Vocabulary
    table: WordEmbeddingTable
    store: EmbeddingStore


@dataclass
class TrainResult:
    model: object
    state: TrainState
    log: List[tuple]
    checkpoint: Optional[str] = None


###############################################################################
# Helper Functions
###############################################################################

def build_word_table(cfg: ExperimentConfig, vocab: Vocabulary, data_dir) -> WordEmbeddingTable:
    """S' for <cfg.word_source>: read from <data>/word_vectors/<source>.txt, or drawn at random."""
    table_rng = Rng(cfg.seed).spawn(TABLE_OFFSET)
    if cfg.word_source in FILE_SOURCES:
        path = os.path.join(data_dir, 'word_vectors', cfg.word_source + '.txt')
        if not os.path.isfile(path):
            raise ConfigError('word vector file %s is missing' % path)
        return load_word_embedding_table(path, vocab, cfg.word_source, table_rng, trainable=cfg.fine_tune)
    return random_word_table(vocab, cfg.word_dim, table_rng, cfg.word_source, trainable=cfg.fine_tune)


def prepare_data(cfg: ExperimentConfig, data_dir, datasets=None) -> TrainingData:
    """Caption splits, train-split vocabulary, word table and the embedding store for <cfg>."""
    datasets = datasets or create_caption_datasets(data_dir)
    vocab = build_vocabulary(datasets['train'], cfg.min_count)
    table = build_word_table(cfg, vocab, data_dir)
    store = EmbeddingStore(data_dir, cfg.encoder_id, cfg.overlap)
    return TrainingData(datasets, vocab, table, store)


def token_weighted_loss(model, loader):
    total, count = 0.0, 0
    for batch in loader:
        batch_total, batch_count = model.evaluate_loss(batch)
        total += batch_total
        count += batch_count
    return total / count


def run_training(cfg: ExperimentConfig, data: TrainingData, out_dir=None, verbose=False) -> TrainResult:
    """Teacher-forced Adam training with early stopping on the validation loss.

    Every epoch draws a fresh permutation of the training pairs; the final partial batch is
    kept. Training stops once <patience> epochs pass without a strictly lower validation loss
    or at <max_epochs>; the best epoch's parameters are restored before returning.
    """
    train, val = data.datasets['train'], data.datasets['validation']
    if len(train) == 0:
        raise TrainingError('the train split is empty')
    if len(val) == 0:
        raise TrainingError('the validation split is empty')
    max_len = cfg.decoder.max_caption_len
    train_pairs = CaptionPairDataset(train, data.vocab, data.store, max_len)
    val_pairs = CaptionPairDataset(val, data.vocab, data.store, max_len)
    feature_dim = data.store.feature_dim(train.clip_ids[0])

    model = create_model(cfg, data.vocab, data.table, feature_dim)
    model.print_networks(verbose)
    train_loader = CaptionDataLoader(train_pairs, cfg.batch_size, Rng(cfg.seed).spawn(SHUFFLE_OFFSET))
    val_loader = CaptionDataLoader(val_pairs, cfg.batch_size)
    visualizer = Visualizer(out_dir, cfg.setting_id, verbose) if out_dir else None
    try:
        state, log = _fit(model, cfg, train_loader, val_loader, visualizer, verbose)
    finally:
        if visualizer is not None:
            visualizer.close()

    print('End of training at epoch %d / %d: best validation loss %.6f at epoch %d'
          % (state.epoch, cfg.max_epochs, state.best_loss, state.best_epoch))
    model.load_state_dict(state.best_state)
    model.eval()

    checkpoint = None
    if out_dir:
        checkpoint = os.path.join(out_dir, CHECKPOINT_NAME)
        model.save_checkpoint(checkpoint)
        cfg.save(os.path.join(out_dir, 'config.json'))
        visualizer.plot_losses()
    return TrainResult(model, state, log, checkpoint)


def _fit(model, cfg: ExperimentConfig, train_loader, val_loader, visualizer, verbose):
    """Epoch loop of <run_training>; returns the early-stopping state and the per-epoch log."""
    state = TrainState()
    log = []
    while True:
        epoch_start_time = time.time()
        model.train()
        total, count = 0.0, 0
        for batch in tqdm(train_loader, desc='epoch %d' % (state.epoch + 1), leave=False, disable=not verbose):
            model.set_input(batch)
            model.optimize_parameters()
            tokens = int(batch['loss_mask'].sum())
            total += model.get_current_losses()['caption'] * tokens
            count += tokens
        train_loss = total / count

        model.eval()
        val_loss = token_weighted_loss(model, val_loader)
        if not np.isfinite(val_loss):
            raise TrainingError('non-finite validation loss at epoch %d' % (state.epoch + 1))
        improved = state.update(val_loss)
        if improved:
            state.best_state = model.state_dict()
        log.append((state.epoch, train_loss, val_loss, improved))
        if visualizer is not None:
            visualizer.print_current_losses(state.epoch, cfg.max_epochs,
                                            {'train': train_loss, 'val': val_loss}, time.time() - epoch_start_time)
            visualizer.save_epoch(state.epoch, train_loss, val_loss, improved)
        if verbose:
            diagnose_network(model.netD, 'decoder')
        if state.should_stop(cfg.patience, cfg.max_epochs):
            return state, log


def evaluate_model(model, dataset: CaptionDataset, store: EmbeddingStore, batch_size=64, setting_id='',
                   seed=None) -> ScoreReport:
    """Greedy-decode one caption per clip and score it against the clip's references with CIDEr-D."""
    clips = dataset.clip_ids
    store.require(clips)
    candidates = {}
    model.eval()
    for start in range(0, len(clips), batch_size):
        chunk = clips[start:start + batch_size]
        z, mask = pad_embeddings([store[clip].values for clip in chunk])
        for clip, tokens in zip(chunk, model.generate(z, mask)):
            candidates[clip] = model.vocab.decode(tokens)
    references = {clip: [tokenize_caption(c) for c in captions] for clip, captions in dataset.references().items()}
    _, scores = corpus_cider_d(candidates, references)
    return ScoreReport(scores, {clip: ' '.join(words) for clip, words in candidates.items()}, setting_id, seed)


def write_scores(report: ScoreReport, out_dir):
    """scores.csv (clip_id, cider_d, candidate) and corpus.json."""
    os.makedirs(out_dir, exist_ok=True)
    rows = [(clip, report.scores[clip], report.candidates.get(clip, '')) for clip in sorted(report.scores)]
    write_csv(pd.DataFrame(rows, columns=['clip_id', 'cider_d', 'candidate']), os.path.join(out_dir, 'scores.csv'))
    report.save(os.path.join(out_dir, 'corpus.json'))


def train_and_evaluate(cfg: ExperimentConfig, data_dir, out_dir=None, verbose=False, datasets=None) -> ScoreReport:
    """One (setting, seed): train, restore the best epoch, evaluate on the evaluation split."""
    data = prepare_data(cfg, data_dir, datasets)
    result = run_training(cfg, data, out_dir, verbose)
    report = evaluate_model(result.model, data.datasets['evaluation'], data.store, cfg.batch_size,
                            cfg.setting_id, cfg.seed)
    if out_dir:
        write_scores(report, out_dir)
    return report
