import logging
from dataclasses import asdict
from pathlib import Path

import numpy as np

from certify.certificate import certify_class_a, perturbation_smoke_test
from certify.forms import evaluate_form, temporal_function_check
from certify.lipschitz import coarse_lipschitz, export_histogram
from certify.sctp import sctp_check
from certify.serializers import (
    CertifyQuerySerializer, FormQuerySerializer, LipschitzQuerySerializer, PerturbationQuerySerializer,
    SctpQuerySerializer,
)
from cones.serializers import ConeSerializer
from core.exceptions import InvalidInput, RejectedForm, Unavailable
from core.export import write_csv
from reach.causality import fill_constant, frak_table, is_vicious
from reach.grid import export_reach, forward_reach, reach_slice
from reach.serializers import FrakQuerySerializer, ReachQuerySerializer, ViciousnessQuerySerializer
from spacetime.presets import E1_SID, PresetSpec, make_preset
from stable.checks import (
    check_ball_inclusion, check_cross_section_convexity, check_flow_in_cone, check_open_interior, check_subset_sums,
    flow_rotation_vector, frak_growth,
)
from stable.cone import check_bounded_distance, estimate_stable_cone, export_cross_section
from stable.norm import stable_norm_estimate
from stable.serializers import (
    BoundedDistanceQuerySerializer, ConeChecksQuerySerializer, ConeQuerySerializer, FlowQuerySerializer,
    FrakGrowthQuerySerializer, StableNormQuerySerializer,
)
from timesep.maximize import confinement_delta, export_trace, refinement_trace, time_separation
from timesep.oracle import time_separation_oracle
from timesep.serializers import MaxPathResultSerializer, TimeSeparationQuerySerializer

logger = logging.getLogger(__name__)

TASK_SIDS = (
    ('cone_estimate', 'Stable time cone estimate'),
    ('cone_checks', 'Convexity, interior, ball inclusion and subset sums of the cone estimate'),
    ('bounded_distance', 'Two-sided distance between the cone and reached sets'),
    ('stable_norm', 'Stable norm plateaus on lattice directions'),
    ('frak_f', 'Lattice-class function f(h)'),
    ('frak_growth', 'Growth of f(n h) against n a(h)'),
    ('flow_rho', 'Rotation vector of a flow line and its membership in the cone estimate'),
    ('timesep', 'Time separation lower bounds'),
    ('reach', 'Causal future on the grid'),
    ('vicious', 'Viciousness witnesses and fill constant'),
    ('certify', 'Class A certificate'),
    ('perturb', 'Class A certificate of a perturbed preset'),
    ('form', 'Transversal form and temporal function check'),
    ('sctp', 'Steep temporal function translation check'),
    ('lipschitz', 'Coarse Lipschitz ratios of the time separation'),
)


def task_seed(seed: int, index: int) -> int:
    """ Seed of the index-th task, derived from the scenario seed """

    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def preset_dim(preset: dict) -> int:
    if preset['name'] == E1_SID:
        return 3

    return int(preset.get('params', {}).get('dim', 2))


class TaskKind:
    """
    Batch task over one preset

    sid: task kind unique string identifier
    serializer_class: validates the task parameters
    vector_fields: parameters holding points or covectors of the preset dimension
    """

    sid = None
    serializer_class = None
    vector_fields = ()
    nested_vector_fields = ()

    def __init__(self, preset: dict, params: dict, output_dir: Path, stem: str):
        self.preset = preset
        self.params = params
        self.output_dir = Path(output_dir)
        self.stem = stem
        self.files = []

    @classmethod
    def get_proxy(cls, sid: str):
        """
        Returns task kind class with the given sid

        :raises: InvalidInput
        """

        for subclass in cls.__subclasses__():
            if subclass.sid == sid:
                return subclass

        raise InvalidInput(f'Task kind with sid={sid} not found')

    @classmethod
    def dimension_errors(cls, params: dict, dim: int) -> dict:
        """ Parameters whose vectors do not match the preset dimension """

        errors = {}

        for name in cls.vector_fields:
            value = params.get(name)

            if isinstance(value, list) and len(value) != dim:
                errors[name] = [f'Expected {dim} components, got {len(value)}']

        for name, key in cls.nested_vector_fields:
            for index, item in enumerate(params.get(name) or []):
                value = item[key] if key else item

                if len(value) != dim:
                    errors.setdefault(name, {})[index] = [f'Expected {dim} components, got {len(value)}']

        return errors

    def metric(self):
        return make_preset(self.preset)

    def export(self, what: str, writer) -> None:
        """ Write a CSV artifact next to the report and record its name """

        path = writer(self.output_dir / f'{self.stem}-{what}.csv')
        self.files.append(Path(path).name)

    def run(self) -> dict:
        raise NotImplementedError


class ConeEstimateKind(TaskKind):
    sid = 'cone_estimate'
    serializer_class = ConeQuerySerializer

    def run(self) -> dict:
        p = self.params
        est = estimate_stable_cone(self.metric(), p.get('budget'), p['seed'], p['reverse'], check=p['check'])
        self.export('cross-section', lambda path: export_cross_section(est, path))

        return {**est.as_dict(), 'cone': ConeSerializer(est.cone).data, 'cross_section': est.cross_section}


class ConeChecksKind(TaskKind):
    sid = 'cone_checks'
    serializer_class = ConeChecksQuerySerializer

    def run(self) -> dict:
        m, p = self.metric(), self.params
        est = estimate_stable_cone(m, p.get('budget'), p['seed'], p['reverse'], check=p['check'])

        return {
            'cone': est.as_dict(),
            'convexity': check_cross_section_convexity(est, p['pairs'], p['seed']),
            'interior': check_open_interior(est),
            'ball_inclusion': check_ball_inclusion(
                m, est, p['radius'], p['ball_pairs'], p['seed'], resolution=p.get('resolution'),
            ),
            'subset_sums': check_subset_sums(est, p['families'], seed=p['seed']),
        }


class BoundedDistanceKind(TaskKind):
    sid = 'bounded_distance'
    serializer_class = BoundedDistanceQuerySerializer

    def run(self) -> dict:
        m, p = self.metric(), self.params
        est = estimate_stable_cone(m, p.get('budget'), p['seed'], p['reverse'], check=False)
        h_range = tuple(p['h_range'])
        resolution, window = p.get('resolution'), p.get('window')

        report = check_bounded_distance(m, est, p.get('samples'), p['seed'], h_range, resolution, window)
        doubled = check_bounded_distance(
            m, est, p.get('samples'), p['seed'], tuple(2 * value for value in h_range), resolution, window,
        )

        return {'err_est': report.err_est, 'err_est_doubled': doubled.err_est, 'per_sample': report.per_sample}


class StableNormKind(TaskKind):
    sid = 'stable_norm'
    serializer_class = StableNormQuerySerializer
    nested_vector_fields = (('directions', None),)

    def run(self) -> dict:
        p = self.params
        estimate = stable_norm_estimate(self.metric(), p.get('directions'), p.get('n_max'), p.get('resolution'))

        def writer(path):
            rows = (
                [' '.join(str(v) for v in h), n, value]
                for h, trace in estimate.plateau_trace.items() for n, value in enumerate(trace, start=1)
            )
            return write_csv(path, ['h', 'n', 'value'], rows)

        self.export('plateau', writer)
        return estimate.as_dict()


class FrakKind(TaskKind):
    sid = 'frak_f'
    serializer_class = FrakQuerySerializer
    nested_vector_fields = (('hs', None),)

    def run(self) -> dict:
        p = self.params
        results = frak_table(self.metric(), p['hs'], p.get('resolution'), p.get('window'))
        return {'results': [asdict(result) for result in results]}


class FrakGrowthKind(TaskKind):
    sid = 'frak_growth'
    serializer_class = FrakGrowthQuerySerializer
    nested_vector_fields = (('hs', None),)

    def run(self) -> dict:
        m, p = self.metric(), self.params
        est = estimate_stable_cone(m, p.get('budget'), p['seed'], p['reverse'], check=False)
        return asdict(frak_growth(m, est, p['hs'], p['n_max'], p.get('resolution')))


class FlowKind(TaskKind):
    sid = 'flow_rho'
    serializer_class = FlowQuerySerializer
    vector_fields = ('vector_field', 'x0')

    def run(self) -> dict:
        m, p = self.metric(), self.params
        rho = flow_rotation_vector(m, p['vector_field'], p['x0'], p['duration'])
        est = estimate_stable_cone(m, p.get('budget'), p['seed'], p['reverse'], check=p['check'])

        return {'rho': rho, 'duration': p['duration'], 'in_cone': check_flow_in_cone(est, rho, p['tol'])}


class TimeSeparationKind(TaskKind):
    sid = 'timesep'
    serializer_class = TimeSeparationQuerySerializer
    nested_vector_fields = (('pairs', 'p'), ('pairs', 'q'))

    def run(self) -> dict:
        m, p = self.metric(), self.params
        results = []

        for index, pair in enumerate(p['pairs']):
            result = time_separation(m, pair['p'], pair['q'], p['segments'], p['restarts'], p['seed'])
            record = {'p': pair['p'], 'q': pair['q'], **MaxPathResultSerializer(result).data}
            record['confinement'] = None if result.path is None else confinement_delta(result.path, m)

            if p['oracle_resolution']:
                record['oracle'] = time_separation_oracle(m, pair['p'], pair['q'], p['oracle_resolution'])

            if p['trace']:
                trace = refinement_trace(m, pair['p'], pair['q'], p['trace'], p['restarts'], p['seed'])
                record['trace'] = trace
                self.export(f'trace-{index}', lambda path: export_trace(trace, path))

            results.append(record)

        return {'pairs': results}


class ReachKind(TaskKind):
    sid = 'reach'
    serializer_class = ReachQuerySerializer
    vector_fields = ('x',)

    def run(self) -> dict:
        p = self.params
        grid = forward_reach(self.metric(), p['x'], p.get('window'), p.get('resolution'), p['margin'], p['past'])
        result = {
            'source': p['x'],
            'window': grid.window,
            'resolution': grid.resolution,
            'reached_nodes': int(np.isfinite(grid.arrival).sum()),
            'slice_time': p['slice_time'],
            'slice': None,
        }

        self.export('points', lambda path: export_reach(grid, path))

        if p['slice_time'] is not None:
            points = reach_slice(grid, p['slice_time'])
            result['slice'] = points
            header = [f'p{i}' for i in range(points.shape[1])]
            self.export('slice', lambda path: write_csv(path, header, (point.tolist() for point in points)))

        return result


class ViciousnessKind(TaskKind):
    sid = 'vicious'
    serializer_class = ViciousnessQuerySerializer

    def run(self) -> dict:
        m, p = self.metric(), self.params
        report = is_vicious(m, p.get('resolution'), p.get('window'), p.get('margin'))
        result = {
            'vicious': report.vicious,
            'resolution': report.resolution,
            'window': report.window,
            'margin': report.margin,
            'sources': [asdict(source) for source in report.sources],
        }

        if p['fill']:
            try:
                result['fill'] = fill_constant(m, report=report)
            except Unavailable as exc:
                result['fill'] = None
                result['fill_error'] = exc.as_dict()

        return result


class CertifyKind(TaskKind):
    sid = 'certify'
    serializer_class = CertifyQuerySerializer

    def run(self) -> dict:
        p = self.params
        certificate = certify_class_a(
            self.metric(), p.get('budget'), p['seed'], p.get('resolution'), p.get('window'),
            p.get('form_resolution'), p['chains'],
        )
        return certificate.as_dict()


class PerturbationKind(TaskKind):
    sid = 'perturb'
    serializer_class = PerturbationQuerySerializer

    def run(self) -> dict:
        p = self.params
        certificate = perturbation_smoke_test(
            PresetSpec(self.preset['name'], self.preset.get('params') or {}), p['amplitude'], p['mode'],
            budget=p.get('budget'), seed=p['seed'], resolution=p.get('resolution'), window=p.get('window'),
            form_resolution=p.get('form_resolution'), chains=p['chains'],
        )
        return certificate.as_dict()


class FormKind(TaskKind):
    sid = 'form'
    serializer_class = FormQuerySerializer
    vector_fields = ('alpha',)

    def run(self) -> dict:
        m, p = self.metric(), self.params
        check = evaluate_form(m, p['alpha'], p.get('resolution'))
        result = {'check': asdict(check), 'temporal': None, 'rejected': None}

        try:
            record = temporal_function_check(m, p['alpha'], p['chains'], p['seed'], p.get('resolution'))
        except RejectedForm as exc:
            logger.info(f'Form {p["alpha"]} rejected on {m.name}')
            result['rejected'] = exc.as_dict()
        else:
            result['temporal'] = asdict(record)

        return result


class SctpKind(TaskKind):
    sid = 'sctp'
    serializer_class = SctpQuerySerializer
    vector_fields = ('alpha',)

    def run(self) -> dict:
        p = self.params
        return sctp_check(self.metric(), p['alpha'], p.get('resolution'), p['window']).as_dict()


class LipschitzKind(TaskKind):
    sid = 'lipschitz'
    serializer_class = LipschitzQuerySerializer

    def run(self) -> dict:
        m, p = self.metric(), self.params
        est = estimate_stable_cone(m, p.get('budget'), p['seed'], check=False)
        report = coarse_lipschitz(m, est, p['eps'], p['samples'], p['seed'], p['segments'], p['restarts'])
        self.export('histogram', lambda path: export_histogram(report, path))

        return {**report.as_dict(), 'ratios': report.ratios}
