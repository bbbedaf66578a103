from .base_options import BaseOptions, ExperimentOptions


class TrainOptions(ExperimentOptions):
    """This class includes training options.

    It also includes shared options defined in BaseOptions and ExperimentOptions.
    """
    command = 'train'

    def initialize(self, parser):
        parser = ExperimentOptions.initialize(self, parser)
        parser.add_argument('--seed', type=int, default=0, help='run seed: initialization, shuffling and random word rows')
        parser.add_argument('--data', type=str, default='data', help='data directory (captions_*.csv, embeddings/, word_vectors/)')
        parser.add_argument('--out', type=str, required=True, help='run directory for checkpoint, loss logs and config')
        parser.add_argument('--test_after_train', default=False, action='store_true', help='evaluate the best checkpoint on the evaluation split')
        return parser


class EvalOptions(BaseOptions):
    """This class includes evaluation options."""
    command = 'eval'

    def initialize(self, parser):
        parser = BaseOptions.initialize(self, parser)
        parser.add_argument('--checkpoint', type=str, required=True, help='checkpoint written by train')
        parser.add_argument('--data', type=str, default='data', help='data directory')
        parser.add_argument('--split', type=str, default='evaluation', help='caption split to score [train | validation | evaluation]')
        parser.add_argument('--out', type=str, default=None, help='directory for scores.csv and corpus.json; defaults to the checkpoint directory')
        parser.add_argument('--batch_size', type=int, default=64, help='clips decoded per batch')
        return parser
