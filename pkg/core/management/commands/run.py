from core.libs.experiment_processor import run_experiment
from core.libs.io_lib import load_config_file

from ._solver_command import SolverCommand


class Command(SolverCommand):
    help = 'Run the solver for a key = value config file and write snapshot + summary'

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help='Path of the config file')
        self.add_output_arguments(parser)

    def solve(self, **options):
        config = load_config_file(options['config']).replace(experiment_id='config')
        outcome = run_experiment(config)
        self.write_outcome(outcome, self.output_dir(options), 'config', record=options['record'])
