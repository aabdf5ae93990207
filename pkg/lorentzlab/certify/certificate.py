import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from django.conf import settings

from cones.cone import is_compact_cone
from cones.sphere import directions
from core.exceptions import InvalidInput, LabError, RejectedForm
from reach.causality import is_vicious
from spacetime.metric import MetricField
from spacetime.presets import PresetSpec, make_preset
from stable.cone import estimate_stable_cone

from .forms import FourierForm, find_transversal_form, temporal_function_check

logger = logging.getLogger(__name__)

VERDICT_SIDS = (
    ('class_a', 'Vicious with globally hyperbolic Abelian cover'),
    ('not_class_a', 'Not of class A, backed by a known witness'),
    ('inconclusive', 'Undecided at this budget'),
)

CLASS_A = VERDICT_SIDS[0][0]
NOT_CLASS_A = VERDICT_SIDS[1][0]
INCONCLUSIVE = VERDICT_SIDS[2][0]

RATIO_DIRECTIONS = 64


@dataclass
class Certificate:
    """
    Class A verdict with the evidence of every sub-check

    vicious: verdict, resolution and the loop witness of each source
    zero_excluded: whether 0 is outside the hull of the unit cross-section, with its margin
    transversal_form: accepted covector and its achieved margin, None when none was found
    """

    metric_name: str
    vicious: dict
    zero_excluded: dict
    transversal_form: Optional[dict]
    temporal_constant: Optional[float]
    verdict: str
    reason: str = ''
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            'metric': self.metric_name,
            'verdict': self.verdict,
            'reason': self.reason,
            'vicious': self.vicious,
            'zero_excluded': self.zero_excluded,
            'transversal_form': self.transversal_form,
            'temporal_constant': self.temporal_constant,
            'diagnostics': self.diagnostics,
        }


def metric_ratio_bound(m: MetricField, samples: int = None, seed: int = 0) -> float:
    """ Largest sampled |g(v, v)| / g_R(v, v), so that L^g <= sqrt(Lambda) L^{g_R} """

    samples = samples or settings.SIGNATURE_SAMPLES
    points = np.random.default_rng(seed).uniform(size=(samples, m.dim)) * m.periods
    vectors = directions(m.dim, RATIO_DIRECTIONS)

    points = np.repeat(points, len(vectors), axis=0)
    vectors = np.tile(vectors, (samples, 1))

    return float(np.max(np.abs(m.quad(points, vectors)) / m.riemannian_norm(points, vectors) ** 2))


def _vicious_record(report) -> dict:
    return {
        'verdict': report.vicious,
        'resolution': report.resolution,
        'window': report.window,
        'witnesses': [source.witness for source in report.sources],
        'coverage': [source.coverage for source in report.sources],
    }


def certify_class_a(m: MetricField, budget: dict = None, seed: int = 0, resolution: int = None,
                    window: int = None, form_resolution: int = None, chains: int = 100) -> Certificate:
    """
    Class A verdict from viciousness, the stable cone, and a transversal form

    Failures of sub-checks make the verdict inconclusive. A negative verdict needs
    the preset's own knowledge that it is not vicious.
    """

    diagnostics = {'lambda': metric_ratio_bound(m, seed=seed)}
    report = is_vicious(m, resolution, window)
    vicious = _vicious_record(report)

    def certificate(verdict, reason='', zero_excluded=None, transversal=None, temporal=None):
        if verdict != CLASS_A:
            logger.warning(f'Certificate of {m.name}: {verdict} ({reason})')

        return Certificate(
            metric_name=m.name,
            vicious=vicious,
            zero_excluded=zero_excluded or {'verdict': None},
            transversal_form=transversal,
            temporal_constant=temporal,
            verdict=verdict,
            reason=reason,
            diagnostics=diagnostics,
        )

    if not report.vicious:
        if m.known_not_vicious:
            return certificate(NOT_CLASS_A, 'viciousness')

        return certificate(INCONCLUSIVE, 'no viciousness witness at this resolution')

    try:
        est = estimate_stable_cone(m, budget, seed, check=False)
    except LabError as exc:
        return certificate(INCONCLUSIVE, f'stable cone: {exc}')

    diagnostics['cone'] = {'kind': est.cone.kind, 'rays': est.cone.rays.tolist(), 'sources': est.sources}

    compact, witness = is_compact_cone(est.cone)
    margin = float(np.min(est.cross_section @ witness)) if compact and witness is not None else 0.0
    zero_excluded = {
        'verdict': bool(compact and margin > 0),
        'margin': margin,
        'witness': None if witness is None else witness.tolist(),
    }

    search = find_transversal_form(m, est, form_resolution)
    diagnostics['candidates'] = search.tried
    transversal, temporal = None, None

    if search.found:
        transversal = {'alpha': search.alpha, 'margin': search.c, 'fourier': search.fourier}
        alpha = np.array(search.alpha)

        if search.fourier is not None:
            alpha = FourierForm(alpha, np.array(search.fourier), m.periods)

        try:
            record = temporal_function_check(m, alpha, chains, seed, form_resolution)
        except RejectedForm as exc:
            diagnostics['temporal'] = exc.as_dict()
        else:
            temporal = record.c
            diagnostics['temporal'] = {
                'length_constant': record.length_constant,
                'sweep_rate': record.sweep_rate,
                'level_spacing': record.level_spacing,
                'chains': record.chains,
                'violations': record.violations,
            }

    if zero_excluded['verdict'] or transversal is not None:
        return certificate(CLASS_A, '', zero_excluded, transversal, temporal)

    return certificate(INCONCLUSIVE, search.reason or '0 not excluded from the cone', zero_excluded)


def perturbation_smoke_test(base, amplitude: float = 0.05, mode: int = 1, **kwargs) -> Certificate:
    """
    Re-certification of a class A preset under a smooth periodic bump of the given C0 amplitude

    The base preset is certified first with the same arguments.

    :raises: InvalidInput, ConstructionError
    """

    if isinstance(base, dict):
        base = PresetSpec(base['name'], base.get('params') or {})

    base_certificate = certify_class_a(make_preset(base), **kwargs)

    if base_certificate.verdict != CLASS_A:
        raise InvalidInput(
            f'Perturbation needs a class A base, {base.name} is {base_certificate.verdict} ({base_certificate.reason})'
        )

    if not amplitude:
        return base_certificate

    spec = PresetSpec(base.name, {**base.params, 'perturbation': {'amplitude': amplitude, 'mode': mode}})
    certificate = certify_class_a(make_preset(spec), **kwargs)
    certificate.diagnostics['perturbation'] = {'amplitude': amplitude, 'mode': mode}

    return certificate
