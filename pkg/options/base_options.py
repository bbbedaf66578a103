import argparse
import os

from util import util


class BaseOptions():
    """This class defines options shared by every command.

    It also implements printing and saving the parsed options.
    Subclasses add their own flags in <initialize>; <out_option> names the flag holding the
    directory that receives '<command>_opt.txt' (None: nothing is saved).
    """
    command = ''
    out_option = 'out'

    def initialize(self, parser):
        """Define the common options."""
        parser.add_argument('--verbose', action='store_true', help='if specified, print more debugging information')
        self.parser = parser
        return parser

    def print_options(self, opt):
        """Print and save options

        It will print both current options and default values(if different).
        It will save options into a text file <out>/<command>_opt.txt
        """
        message = ''
        message += '----------------- Options ---------------\n'
        for k, v in sorted(vars(opt).items()):
            if callable(v):
                continue
            comment = ''
            default = self.parser.get_default(k) if getattr(self, 'parser', None) is not None else None
            if v != default:
                comment = '\t[default: %s]' % str(default)
            message += '{:>25}: {:<30}{}\n'.format(str(k), str(v), comment)
        message += '----------------- End -------------------'
        print(message)

        expr_dir = getattr(opt, self.out_option, None) if self.out_option else None
        if expr_dir:
            util.mkdirs(expr_dir)
            file_name = os.path.join(expr_dir, '{}_opt.txt'.format(self.command or getattr(opt, 'command', 'run')))
            with open(file_name, 'wt') as opt_file:
                opt_file.write(message)
                opt_file.write('\n')


class ExperimentOptions(BaseOptions):
    """Options that select an ExperimentConfig: a profile or JSON file plus per-field overrides."""

    def initialize(self, parser):
        parser = BaseOptions.initialize(self, parser)
        parser.add_argument('--config', type=str, default='desk', help='config JSON file or profile name [desk | full]')
        parser.add_argument('--encoder', dest='encoder_id', type=str, default=None, help='override: [vggish | yamnet | openl3 | coala]')
        parser.add_argument('--overlap', type=str, default=None, help='override: [none | half]')
        parser.add_argument('--adapter', type=str, default=None, help='override: [identity | mlp | mha]')
        parser.add_argument('--word_source', type=str, default=None, help='override: [w2v | glove | fasttext | cbow_clotho | random | scratch | bert_static]')
        parser.add_argument('--fine_tune', default=None, action=argparse.BooleanOptionalAction, help='override: fine-tune the word embeddings')
        parser.add_argument('--batch_size', type=int, default=None, help='override: minibatch size')
        parser.add_argument('--patience', type=int, default=None, help='override: epochs without improvement before stopping')
        parser.add_argument('--max_epochs', type=int, default=None, help='override: epoch cap')
        parser.add_argument('--lr', type=float, default=None, help='override: Adam alpha')
        return parser


def config_from_options(opt, **extra):
    """Load <opt.config> and apply every override flag that was given."""
    from experiment.config import load_config

    overrides = {key: getattr(opt, key) for key in ('encoder_id', 'overlap', 'word_source', 'fine_tune',
                                                     'batch_size', 'patience', 'max_epochs')
                 if getattr(opt, key, None) is not None}
    if getattr(opt, 'adapter', None) is not None:
        overrides['adapter'] = {'kind': opt.adapter}
    if getattr(opt, 'lr', None) is not None:
        overrides['optimizer'] = {'alpha': opt.lr}
    overrides.update(extra)
    return load_config(opt.config, **overrides)
