from django.core.management.base import BaseCommand, CommandError
from rest_framework.exceptions import ValidationError

from core.exceptions import InvalidInput
from scenarios.kinds import TASK_SIDS
from scenarios.plots import PLOT_KINDS, emit_plot_data
from scenarios.runner import EXIT_INVALID, EXIT_OK, load_pack, run_scenario
from scenarios.serializers import error_pointer
from spacetime.presets import PRESET_SIDS


class Command(BaseCommand):
    help = 'Run scenarios, emit plot data and list presets'

    def add_arguments(self, parser):
        actions = parser.add_subparsers(dest='action', required=True)

        run = actions.add_parser('run', help='Run a scenario config file or a pack scenario')
        run.add_argument('config', help='JSON config path or pack scenario name')
        run.add_argument('--parallel', action='store_true', help='Dispatch tasks as a celery group')
        run.add_argument('--out', help='Output directory')

        plot = actions.add_parser('plot', help='Plain CSV plot data from a task report')
        plot.add_argument('report')
        plot.add_argument('--kind', required=True, choices=sorted(PLOT_KINDS))
        plot.add_argument('--out', help='CSV path')

        actions.add_parser('presets', help='List presets, task kinds and pack scenarios')

    def handle(self, *args, **options):
        getattr(self, f'handle_{options["action"]}')(**options)

    def handle_run(self, config, parallel=False, out=None, **options):
        try:
            result = run_scenario(config, parallel, out)
        except ValidationError as exc:
            raise CommandError(f'Invalid scenario config at {error_pointer(exc.detail)}', returncode=EXIT_INVALID)

        for entry in result.summary['tasks']:
            self.stdout.write(f'{entry["report"]}: {entry["status"]}')

        self.stdout.write(f'Summary written to {result.output_dir / "summary.json"}')

        if result.exit_code != EXIT_OK:
            raise CommandError(f'Scenario {result.name} has failed tasks', returncode=result.exit_code)

    def handle_plot(self, report, kind, out=None, **options):
        try:
            path = emit_plot_data(report, kind, out)
        except InvalidInput as exc:
            raise CommandError(str(exc), returncode=EXIT_INVALID)

        self.stdout.write(str(path))

    def handle_presets(self, **options):
        self.stdout.write('Presets:')

        for sid, description in PRESET_SIDS:
            self.stdout.write(f'  {sid}: {description}')

        self.stdout.write('Task kinds:')

        for sid, description in TASK_SIDS:
            self.stdout.write(f'  {sid}: {description}')

        self.stdout.write('Pack scenarios:')

        for name in load_pack():
            self.stdout.write(f'  {name}')
