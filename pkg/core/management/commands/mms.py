from core.libs.oracle_lib import DEFAULT_MMS_CASE, MMS_CASES, format_rate_table, get_mms_case, mms_convergence

from ._solver_command import SolverCommand


class Command(SolverCommand):
    help = 'Manufactured-solution convergence table (h, tau, L2 error, rate)'

    def add_arguments(self, parser):
        parser.add_argument('--levels', type=int, required=True, help='Number of refinement levels (>= 2)')
        parser.add_argument('--case', default=DEFAULT_MMS_CASE, help=f"One of {', '.join(sorted(MMS_CASES))}")

    def solve(self, **options):
        case = get_mms_case(options['case'])
        table = mms_convergence(case, options['levels'])
        self.stdout.write(f"MMS case {case.name} ({case.bc_mode.value} bc)")
        self.stdout.write(format_rate_table(table))
