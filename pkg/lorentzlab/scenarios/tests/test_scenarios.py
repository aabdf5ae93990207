import json
from io import StringIO
from pathlib import Path
from tempfile import TemporaryDirectory

import numpy as np
from django.core.management import CommandError, call_command
from django.test import SimpleTestCase

from core.exceptions import InvalidInput
from core.export import read_csv, write_json

from scenarios.kinds import TASK_SIDS, TaskKind, task_seed
from scenarios.plots import emit_plot_data
from scenarios.runner import EXIT_OK, EXIT_TASK_ERROR, load_pack, run_scenario, task_stems
from scenarios.serializers import ScenarioSerializer, error_pointer

BUDGET = {
    'geodesics': 64,
    'geodesic_length': 20.0,
    'geodesic_dt': 0.05,
    'walks': 8,
    'walk_steps': 200,
    'walk_step_len': 0.05,
    'min_length': 5.0,
    'frak_radius': 0,
    'distance_samples': 2,
}

FLAT_CONE = {
    'name': 'flat-cone',
    'preset': {'name': 'flat'},
    'seed': 3,
    'tasks': [{'kind': 'cone_estimate', 'params': {'budget': BUDGET}}],
}


def pointer(config: dict) -> str:
    serializer = ScenarioSerializer(data=config)
    assert not serializer.is_valid()
    return error_pointer(serializer.errors)


class ScenarioSerializerTestCase(SimpleTestCase):

    def test_every_kind_is_registered(self):
        for sid, _ in TASK_SIDS:
            self.assertEqual(TaskKind.get_proxy(sid).sid, sid)

        with self.assertRaises(InvalidInput):
            TaskKind.get_proxy('klein')

    def test_unknown_preset_names_the_field(self):
        config = {**FLAT_CONE, 'preset': {'name': 'klein'}}
        self.assertTrue(pointer(config).startswith('preset.name:'))

    def test_unknown_kind(self):
        config = {**FLAT_CONE, 'tasks': [{'kind': 'teleport'}]}
        self.assertTrue(pointer(config).startswith('tasks.0.kind:'))

    def test_task_parameters_are_validated_by_their_kind(self):
        config = {**FLAT_CONE, 'tasks': [{'kind': 'cone_estimate'}, {'kind': 'lipschitz', 'params': {'eps': -1}}]}
        self.assertTrue(pointer(config).startswith('tasks.1.params.eps:'))

    def test_unknown_task_parameter(self):
        config = {**FLAT_CONE, 'tasks': [{'kind': 'sctp', 'params': {'alpha': [1, 0], 'bogus': 1}}]}
        self.assertEqual(pointer(config), 'tasks.0.params.bogus: Unknown parameter')

    def test_vectors_must_match_the_preset_dimension(self):
        config = {**FLAT_CONE, 'tasks': [{'kind': 'reach', 'params': {'x': [0.0, 0.0, 0.0]}}]}
        self.assertTrue(pointer(config).startswith('tasks.0.params.x:'))

        pairs = [{'p': [0.0, 0.0], 'q': [1.0, 0.0]}]
        config = {**FLAT_CONE, 'preset': {'name': 'e1_counterexample'}, 'tasks': [
            {'kind': 'timesep', 'params': {'pairs': pairs}},
        ]}
        self.assertTrue(pointer(config).startswith('tasks.0.params.pairs.0:'))

    def test_seeds_are_derived_per_task(self):
        config = {**FLAT_CONE, 'tasks': [
            {'kind': 'cone_estimate'},
            {'kind': 'cone_estimate'},
            {'kind': 'cone_estimate', 'params': {'seed': 17}},
            {'kind': 'sctp', 'params': {'alpha': [1, 0]}},
        ]}
        serializer = ScenarioSerializer(data=config)
        self.assertTrue(serializer.is_valid(), serializer.errors)
        tasks = serializer.validated_data['tasks']

        self.assertEqual(tasks[0]['params']['seed'], task_seed(3, 0))
        self.assertEqual(tasks[1]['params']['seed'], task_seed(3, 1))
        self.assertNotEqual(tasks[0]['params']['seed'], tasks[1]['params']['seed'])
        self.assertEqual(tasks[2]['params']['seed'], 17)
        self.assertNotIn('seed', tasks[3]['params'])

    def test_defaults_are_resolved(self):
        serializer = ScenarioSerializer(data=FLAT_CONE)
        self.assertTrue(serializer.is_valid(), serializer.errors)
        params = serializer.validated_data['tasks'][0]['params']

        self.assertEqual(params['budget'], BUDGET)
        self.assertEqual((params['reverse'], params['check']), (False, True))

    def test_stems(self):
        tasks = [{'kind': 'cone_estimate'}, {'kind': 'timesep'}, {'kind': 'timesep'}]
        self.assertEqual(task_stems(tasks), ['cone_estimate', 'timesep-1', 'timesep-2'])

    def test_pack_scenarios_validate(self):
        pack = load_pack()
        self.assertIn('accept/flat-cone', pack)
        self.assertIn('accept/e1-vicious', pack)

        for name, config in pack.items():
            serializer = ScenarioSerializer(data={'name': name, **config})
            self.assertTrue(serializer.is_valid(), f'{name}: {serializer.errors}')


class RunScenarioTestCase(SimpleTestCase):

    def test_flat_cone_reports(self):
        with TemporaryDirectory() as directory:
            run = run_scenario(FLAT_CONE, output_dir=directory)
            report = json.loads((Path(directory) / 'cone_estimate.json').read_text())
            summary = json.loads((Path(directory) / 'summary.json').read_text())
            header, rows = read_csv(Path(directory) / 'cone_estimate-cross-section.csv')

        self.assertEqual(run.exit_code, EXIT_OK)
        self.assertEqual(report['status'], 'ok')
        self.assertEqual(report['files'], ['cone_estimate-cross-section.csv'])
        self.assertEqual(report['config']['params']['budget'], BUDGET)
        self.assertEqual(report['config']['seed'], task_seed(3, 0))
        preset = {'name': 'flat', 'params': {'dim': 2, 'riemannian_amplitude': 0.0}}
        self.assertEqual(report['config']['preset'], preset)
        self.assertEqual(summary['tasks'], [{'kind': 'cone_estimate', 'index': 0, 'report': 'cone_estimate.json',
                                             'status': 'ok'}])
        self.assertEqual(header, ['p0', 'p1'])
        self.assertEqual(len(rows), report['result']['cross_section_size'])

    def test_reruns_are_byte_identical(self):
        config = {**FLAT_CONE, 'tasks': [
            {'kind': 'cone_estimate', 'params': {'budget': BUDGET, 'check': False}},
            {'kind': 'timesep', 'params': {'pairs': [{'p': [0, 0], 'q': [2, 1]}], 'restarts': 2}},
        ]}

        with TemporaryDirectory() as first, TemporaryDirectory() as second, TemporaryDirectory() as third:
            run_scenario(config, output_dir=first)
            run_scenario(config, output_dir=second)
            run_scenario(config, parallel=True, output_dir=third)

            for name in ('cone_estimate.json', 'timesep.json', 'summary.json'):
                content = (Path(first) / name).read_bytes()
                self.assertEqual(content, (Path(second) / name).read_bytes())
                self.assertEqual(content, (Path(third) / name).read_bytes())

    def test_task_errors_are_embedded(self):
        config = {**FLAT_CONE, 'tasks': [
            {'kind': 'reach', 'params': {'x': [5.0, 0.0], 'window': 1}},
            {'kind': 'sctp', 'params': {'alpha': [1.0, 0.0], 'resolution': 16}},
        ]}

        with TemporaryDirectory() as directory:
            run = run_scenario(config, output_dir=directory)
            failed = json.loads((Path(directory) / 'reach.json').read_text())
            passed = json.loads((Path(directory) / 'sctp.json').read_text())

        self.assertEqual(run.exit_code, EXIT_TASK_ERROR)
        self.assertEqual(failed['status'], 'error')
        self.assertEqual(failed['error']['code'], 'invalid-input')
        self.assertEqual(passed['status'], 'ok')
        self.assertTrue(passed['result']['graph_ok'])

    def test_flow_rotation_reports_cone_membership(self):
        config = {**FLAT_CONE, 'tasks': [{'kind': 'flow_rho', 'params': {
            'vector_field': [2.0, 1.0], 'x0': [0.3, 0.1], 'duration': 10.0, 'budget': BUDGET,
        }}]}

        with TemporaryDirectory() as directory:
            run = run_scenario(config, output_dir=directory)
            report = json.loads((Path(directory) / 'flow_rho.json').read_text())

        self.assertEqual(run.exit_code, EXIT_OK)
        np.testing.assert_allclose(report['result']['rho'], np.array([2.0, 1.0]) / np.sqrt(5), atol=1e-8)
        self.assertTrue(report['result']['in_cone']['ok'])
        self.assertEqual(report['result']['in_cone']['distance'], 0.0)
        self.assertEqual(report['config']['params']['tol'], 0.02)

    def test_rejected_form_is_a_result(self):
        config = {
            'preset': {'name': 'e1_counterexample'},
            'tasks': [{'kind': 'form', 'params': {'alpha': [0, 0, 1], 'resolution': 16, 'chains': 0}}],
        }

        with TemporaryDirectory() as directory:
            run = run_scenario(config, output_dir=directory)
            report = json.loads((Path(directory) / 'form.json').read_text())

        self.assertEqual(run.exit_code, EXIT_OK)
        self.assertIsNone(report['result']['temporal'])
        self.assertEqual(report['result']['rejected']['code'], 'rejected-form')
        self.assertFalse(report['result']['check']['accepted'])


class PlotDataTestCase(SimpleTestCase):

    def test_cone_section_is_on_the_unit_circle(self):
        with TemporaryDirectory() as directory:
            run_scenario(FLAT_CONE, output_dir=directory)
            path = emit_plot_data(Path(directory) / 'cone_estimate.json', 'cone_section')
            header, rows = read_csv(path)

        self.assertEqual(path.name, 'cone_estimate-cone_section.csv')
        self.assertEqual(header, ['p0', 'p1'])
        np.testing.assert_allclose(np.linalg.norm(np.array(rows, dtype=float), axis=1), 1.0, atol=1e-9)

    def test_plateau_columns(self):
        config = {
            'preset': {'name': 'flat'},
            'tasks': [{'kind': 'stable_norm', 'params': {'directions': [[1, 0]], 'n_max': 8, 'resolution': 4}}],
        }

        with TemporaryDirectory() as directory:
            run_scenario(config, output_dir=directory)
            header, rows = read_csv(emit_plot_data(Path(directory) / 'stable_norm.json', 'plateau'))

        self.assertEqual(header, ['h', 'n', 'value'])
        self.assertEqual([int(row[1]) for row in rows], list(range(1, 9)))
        self.assertAlmostEqual(float(rows[-1][2]), 1.0, places=6)

    def test_histogram_counts(self):
        histogram = [{'low': 0.0, 'high': 0.5, 'count': 7}, {'low': 0.5, 'high': 1.0, 'count': 3}]
        report = {'kind': 'lipschitz', 'status': 'ok', 'result': {'samples': 10, 'ratio_histogram': histogram}}

        with TemporaryDirectory() as directory:
            path = write_json(Path(directory) / 'lipschitz.json', report)
            header, rows = read_csv(emit_plot_data(path, 'lipschitz_hist'))

        self.assertEqual(header, ['low', 'high', 'count'])
        self.assertEqual(sum(int(row[2]) for row in rows), 10)

    def test_kind_mismatch(self):
        report = {'kind': 'cone_estimate', 'status': 'ok', 'result': {'cross_section': [[1.0, 0.0]]}}

        with TemporaryDirectory() as directory:
            path = write_json(Path(directory) / 'cone_estimate.json', report)

            with self.assertRaises(InvalidInput):
                emit_plot_data(path, 'plateau')

            with self.assertRaises(InvalidInput):
                emit_plot_data(path, 'histogram')


class LabCommandTestCase(SimpleTestCase):

    def test_run_config_file(self):
        out = StringIO()

        with TemporaryDirectory() as directory:
            config = Path(directory) / 'flat.json'
            config.write_text(json.dumps(FLAT_CONE))
            call_command('lab', 'run', str(config), '--out', str(Path(directory) / 'out'), stdout=out)

            self.assertTrue((Path(directory) / 'out' / 'summary.json').is_file())

        self.assertIn('cone_estimate.json: ok', out.getvalue())

    def test_invalid_configs_exit_1(self):
        with TemporaryDirectory() as directory:
            unknown = Path(directory) / 'klein.json'
            unknown.write_text(json.dumps({**FLAT_CONE, 'preset': {'name': 'klein'}}))
            malformed = Path(directory) / 'broken.json'
            malformed.write_text('{"preset": ')

            with self.assertRaises(CommandError) as raised:
                call_command('lab', 'run', str(unknown), stdout=StringIO())

            self.assertEqual(raised.exception.returncode, 1)
            self.assertIn('preset.name', str(raised.exception))

            with self.assertRaises(CommandError) as raised:
                call_command('lab', 'run', str(malformed), stdout=StringIO())

            self.assertEqual(raised.exception.returncode, 1)

            with self.assertRaises(CommandError) as raised:
                call_command('lab', 'run', str(Path(directory) / 'missing.json'), stdout=StringIO())

            self.assertEqual(raised.exception.returncode, 1)

    def test_failed_task_exits_2(self):
        config = {'preset': {'name': 'flat'}, 'tasks': [{'kind': 'reach', 'params': {'x': [5.0, 0.0], 'window': 1}}]}

        with TemporaryDirectory() as directory:
            path = Path(directory) / 'reach.json'
            path.write_text(json.dumps(config))

            with self.assertRaises(CommandError) as raised:
                call_command('lab', 'run', str(path), '--out', str(Path(directory) / 'out'), stdout=StringIO())

        self.assertEqual(raised.exception.returncode, 2)

    def test_plot_kind_mismatch_exits_1(self):
        report = {'kind': 'reach', 'status': 'ok', 'result': {'slice': [[0.0]]}}

        with TemporaryDirectory() as directory:
            path = write_json(Path(directory) / 'reach.json', report)

            with self.assertRaises(CommandError) as raised:
                call_command('lab', 'plot', str(path), '--kind', 'cone_section', stdout=StringIO())

        self.assertEqual(raised.exception.returncode, 1)

    def test_presets(self):
        out = StringIO()
        call_command('lab', 'presets', stdout=out)

        self.assertIn('e1_counterexample', out.getvalue())
        self.assertIn('lipschitz', out.getvalue())
        self.assertIn('accept/e1-vicious', out.getvalue())
