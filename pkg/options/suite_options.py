from .base_options import BaseOptions, ExperimentOptions


class GridOptions(ExperimentOptions):
    """Options for listing the settings grid."""
    command = 'grid'
    out_option = None

    def initialize(self, parser):
        parser = ExperimentOptions.initialize(self, parser)
        parser.add_argument('--filter', type=str, default='', help="restrict the grid, e.g. 'encoder=vggish,adapter=mlp|mha'")
        parser.add_argument('--list', action='store_true', help='print one setting id per line')
        parser.add_argument('--out', type=str, default=None, help='write the selected setting ids to this grid file')
        return parser


class SuiteOptions(ExperimentOptions):
    """Options for multi-seed suites."""
    command = 'suite'

    def initialize(self, parser):
        parser = ExperimentOptions.initialize(self, parser)
        parser.add_argument('--grid', type=str, default=None, help='grid file with one setting id per line; default: the filtered full grid')
        parser.add_argument('--filter', type=str, default='', help='restrict the full grid when --grid is not given')
        parser.add_argument('--seeds', type=str, default='1..10', help="seed list, e.g. '1..10' or '1,2,3'")
        parser.add_argument('--jobs', type=int, default=1, help='worker processes')
        parser.add_argument('--data', type=str, default='data', help='data directory')
        parser.add_argument('--out', type=str, required=True, help='suite directory')
        return parser


class ReportOptions(BaseOptions):
    """Options for rebuilding a report from a runs CSV."""
    command = 'report'

    def initialize(self, parser):
        parser = BaseOptions.initialize(self, parser)
        parser.add_argument('--runs', type=str, required=True, help='CSV with setting_id,seed,cider_d')
        parser.add_argument('--out', type=str, required=True, help='report directory')
        return parser


class SynthOptions(BaseOptions):
    """Options for writing a synthetic data directory."""
    command = 'synth'

    def initialize(self, parser):
        parser = BaseOptions.initialize(self, parser)
        parser.add_argument('--clips', type=int, default=20, help='number of clips over all three splits')
        parser.add_argument('--seed', type=int, default=0, help='corpus seed')
        parser.add_argument('--out', type=str, required=True, help='data directory to create')
        parser.add_argument('--no-paraphrase', dest='no_paraphrase', action='store_true', help='give every clip five identical captions')
        return parser
