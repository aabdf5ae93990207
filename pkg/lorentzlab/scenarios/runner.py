import json
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import yaml
from celery import group
from django.conf import settings
from rest_framework import serializers

from core.export import write_json

from .serializers import ScenarioSerializer
from .tasks import OK, run_task

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_TASK_ERROR = 2


@dataclass
class ScenarioRun:
    name: str
    output_dir: Path
    summary: dict

    @property
    def exit_code(self) -> int:
        return self.summary['exit_code']


def load_pack(path: Path = None) -> dict:
    """ Named scenario configs of the YAML pack """

    path = Path(path or settings.SCENARIO_PACK)

    if not path.is_file():
        return {}

    with open(path) as file:
        return yaml.safe_load(file) or {}


def load_config(source: str) -> dict:
    """
    Scenario config from a JSON file or a pack name

    :raises: ValidationError
    """

    path = Path(source)

    if path.is_file():
        try:
            config = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise serializers.ValidationError({'config': [f'Malformed JSON: {exc}']})

        if not isinstance(config, dict):
            raise serializers.ValidationError({'config': ['Expected a JSON object']})

        config.setdefault('name', path.stem)
        return config

    pack = load_pack()

    if source not in pack:
        raise serializers.ValidationError({'config': [f'No such file or pack scenario: {source}']})

    return {'name': source.replace('/', '-'), **pack[source]}


def task_stems(tasks: list) -> list:
    """ '<kind>' for kinds used once, '<kind>-<index>' otherwise """

    counts = Counter(task['kind'] for task in tasks)
    return [
        task['kind'] if counts[task['kind']] == 1 else f'{task["kind"]}-{index}'
        for index, task in enumerate(tasks)
    ]


def run_scenario(source, parallel: bool = False, output_dir=None) -> ScenarioRun:
    """
    Validate a scenario config, run its tasks and write one report per task plus summary.json

    Reports hold the fully resolved configuration so each one can be re-run alone.

    :raises: ValidationError
    """

    config = load_config(source) if isinstance(source, (str, Path)) else dict(source)
    serializer = ScenarioSerializer(data=config)
    serializer.is_valid(raise_exception=True)
    scenario = serializer.validated_data

    name = scenario['name']
    output_dir = Path(output_dir or scenario['output_dir'] or settings.SCENARIO_OUTPUT_DIR / name)
    preset = {'name': scenario['preset']['name'], 'params': scenario['preset']['params']}
    tasks = scenario['tasks']
    stems = task_stems(tasks)

    logger.info(f'Scenario {name}: {len(tasks)} tasks on {preset["name"]}, output in {output_dir}')

    signatures = [
        run_task.s(preset, task['kind'], task['params'], str(output_dir), stem)
        for task, stem in zip(tasks, stems)
    ]

    if parallel:
        outcomes = group(signatures).apply_async().get()
    else:
        outcomes = [signature.apply().get() for signature in signatures]

    entries = []

    for index, (task, stem, outcome) in enumerate(zip(tasks, stems, outcomes)):
        report = {
            'kind': task['kind'],
            'index': index,
            'config': {'preset': preset, 'seed': task['params'].get('seed'), 'params': task['params']},
            **outcome,
        }
        write_json(output_dir / f'{stem}.json', report)
        entries.append({'kind': task['kind'], 'index': index, 'report': f'{stem}.json', 'status': outcome['status']})

    failed = [entry for entry in entries if entry['status'] != OK]
    summary = {
        'scenario': name,
        'preset': preset,
        'seed': scenario['seed'],
        'tasks': entries,
        'exit_code': EXIT_TASK_ERROR if failed else EXIT_OK,
    }
    write_json(output_dir / 'summary.json', summary)

    if failed:
        logger.warning(f'Scenario {name}: {len(failed)} of {len(entries)} tasks failed')

    return ScenarioRun(name, output_dir, summary)
