from data.synthetic import write_synthetic_corpus
from experiment.grid import enumerate_grid, filter_grid, read_grid_file, write_grid_file
from experiment.runner import run_suite, read_runs_csv, write_report
from options.base_options import config_from_options
from util.errors import ConfigError
from util.util import parse_seeds


def select_settings(opt):
    base = config_from_options(opt)
    if getattr(opt, 'grid', None):
        return read_grid_file(opt.grid, base)
    configs = filter_grid(enumerate_grid(base), opt.filter)
    if not configs:
        raise ConfigError('filter %r selects no settings' % opt.filter)
    return configs


def grid(opt):
    configs = select_settings(opt)
    if opt.list:
        for cfg in configs:
            print(cfg.setting_id)
    if opt.out:
        write_grid_file(opt.out, configs)
    print('%d settings' % len(configs))
    return 0


def suite(opt):
    configs = select_settings(opt)
    try:
        seeds = parse_seeds(opt.seeds)
    except ValueError as e:
        raise ConfigError(str(e))
    print('suite of %d settings x %d seeds on %d worker(s)' % (len(configs), len(seeds), opt.jobs))
    result = run_suite(configs, seeds, opt.data, opt.out, opt.jobs, verbose=True)
    print('%d runs finished, %d failed' % (len(result.runs), len(result.failures)))
    return 0 if result.ok else 1


def report(opt):
    runs = read_runs_csv(opt.runs)
    write_report(runs, opt.out)
    return 0


def synth(opt):
    if opt.clips < 3:
        raise ConfigError('a synthetic corpus needs at least 3 clips')
    write_synthetic_corpus(opt.out, opt.clips, opt.seed, paraphrase=not opt.no_paraphrase)
    return 0
