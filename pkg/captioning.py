import os

from data import create_caption_datasets
from data.embeddings import EmbeddingStore
from experiment.trainer import prepare_data, run_training, evaluate_model, write_scores
from models.caption_model import CaptionModel
from options.base_options import config_from_options
from util.errors import FormatError
from util.util import mkdir


def train(opt):
    cfg = config_from_options(opt, seed=opt.seed)
    mkdir(opt.out)
    print('training setting %s with seed %d' % (cfg.setting_id, cfg.seed))

    data = prepare_data(cfg, opt.data)
    print('prepare data done: vocabulary of %d tokens, %s word table (%d x %d)'
          % (len(data.vocab), data.table.source, len(data.table), data.table.dim))
    result = run_training(cfg, data, opt.out, opt.verbose)
    print('saving the best model (epoch %d) to %s' % (result.state.best_epoch, result.checkpoint))

    if opt.test_after_train:
        report = evaluate_model(result.model, data.datasets['evaluation'], data.store, cfg.batch_size,
                                cfg.setting_id, cfg.seed)
        write_scores(report, opt.out)
        print('evaluation CIDEr-D %.4f over %d clips' % (report.corpus_cider_d, len(report.scores)))
    return 0


def test(opt):
    model = CaptionModel.load_checkpoint(opt.checkpoint)
    cfg = model.cfg
    out = opt.out or os.path.dirname(os.path.abspath(opt.checkpoint))
    mkdir(out)

    datasets = create_caption_datasets(opt.data)
    if opt.split not in datasets:
        raise FormatError('split [%s] is not recognized' % opt.split)
    store = EmbeddingStore(opt.data, cfg.encoder_id, cfg.overlap)
    dataset = datasets[opt.split]
    store.require(dataset.clip_ids)
    feature_dim = store.feature_dim(dataset.clip_ids[0])
    if feature_dim != model.feature_dim:
        raise FormatError('checkpoint expects %d-dimensional embeddings, %s holds %d'
                          % (model.feature_dim, store.directory, feature_dim))

    report = evaluate_model(model, dataset, store, opt.batch_size, cfg.setting_id, cfg.seed)
    write_scores(report, out)
    print('%s CIDEr-D %.4f over %d clips (SPIDEr not computed: SPICE unavailable)'
          % (opt.split, report.corpus_cider_d, len(report.scores)))
    return 0
