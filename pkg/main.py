import argparse
import sys

import captioning
import suite
from options.suite_options import GridOptions, SuiteOptions, ReportOptions, SynthOptions
from options.train_options import TrainOptions, EvalOptions
from util.errors import TrainingError


COMMANDS = {
    'train': (TrainOptions, captioning.train),
    'eval': (EvalOptions, captioning.test),
    'grid': (GridOptions, suite.grid),
    'suite': (SuiteOptions, suite.suite),
    'report': (ReportOptions, suite.report),
    'synth': (SynthOptions, suite.synth),
}

EXIT_OK, EXIT_RUN_FAILURES, EXIT_INVALID_INPUT = 0, 1, 2


def main(argv=None):
    main_parser = argparse.ArgumentParser(description="Transformer audio captioning: training, evaluation and experiment grids")
    subparsers = main_parser.add_subparsers(dest="command", required=True)
    options = {}
    for name, (option_class, _) in COMMANDS.items():
        options[name] = option_class()
        options[name].initialize(subparsers.add_parser(name=name, formatter_class=argparse.ArgumentDefaultsHelpFormatter))

    opt = main_parser.parse_args(argv)
    _, driver = COMMANDS[opt.command]
    try:
        options[opt.command].print_options(opt)
        return driver(opt)
    except TrainingError as e:
        print('training failed: %s' % e, file=sys.stderr)
        return EXIT_RUN_FAILURES
    except (ValueError, OSError) as e:
        print('invalid input: %s' % e, file=sys.stderr)
        return EXIT_INVALID_INPUT


if __name__ == '__main__':
    sys.exit(main())
