from rest_framework import serializers

from core.export import plain
from spacetime.serializers import PresetSpecSerializer

from .kinds import TASK_SIDS, TaskKind, preset_dim, task_seed


class TaskSerializer(serializers.Serializer):
    kind = serializers.ChoiceField(choices=TASK_SIDS)
    params = serializers.DictField(required=False, default=dict)


class ScenarioSerializer(serializers.Serializer):
    """
    Scenario config: one preset, a list of tasks and the scenario seed

    Task parameters are validated by the serializer of their kind. A task without
    an explicit seed gets one derived from the scenario seed and its index.
    """

    name = serializers.CharField(required=False, default='scenario')
    preset = PresetSpecSerializer()
    tasks = TaskSerializer(many=True, allow_empty=False)
    seed = serializers.IntegerField(min_value=0, default=0)
    output_dir = serializers.CharField(required=False, allow_null=True, default=None)

    def validate(self, attrs: dict) -> dict:
        dim = preset_dim(attrs['preset'])
        errors = {}

        for index, task in enumerate(attrs['tasks']):
            kind = TaskKind.get_proxy(task['kind'])
            params = dict(task['params'])
            fields = kind.serializer_class().fields

            if 'seed' in fields and 'seed' not in params:
                params['seed'] = task_seed(attrs['seed'], index)

            unknown = sorted(set(params) - set(fields))

            if unknown:
                errors[index] = {'params': {unknown[0]: ['Unknown parameter']}}
                continue

            serializer = kind.serializer_class(data=params)

            if not serializer.is_valid():
                errors[index] = {'params': serializer.errors}
                continue

            mismatched = kind.dimension_errors(serializer.validated_data, dim)

            if mismatched:
                errors[index] = {'params': mismatched}
                continue

            task['params'] = plain(serializer.validated_data)

        if errors:
            raise serializers.ValidationError({'tasks': errors})

        return attrs


def error_pointer(detail, prefix: str = '') -> str:
    """ Dotted path and message of the first error in a nested ValidationError detail """

    if isinstance(detail, dict):
        key = next(iter(detail))
        return error_pointer(detail[key], f'{prefix}.{key}' if prefix else str(key))

    if isinstance(detail, list):
        if detail and isinstance(detail[0], (dict, list)):
            for index, item in enumerate(detail):
                if item:
                    return error_pointer(item, f'{prefix}.{index}' if prefix else str(index))

        return f'{prefix or "config"}: {detail[0] if detail else "invalid"}'

    return f'{prefix or "config"}: {detail}'
