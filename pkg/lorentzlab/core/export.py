import csv

from pathlib import Path
from itertools import chain, islice

from rest_framework.renderers import JSONRenderer

CHUNK_SIZE = 1000


def write_csv(file_path: Path, header: list, rows) -> Path:
    """ Write rows to a plain CSV file with a one-line header, by chunks """

    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    iterator = iter(rows)

    with open(file_path, 'w', newline='') as file:
        writer = csv.writer(file)
        writer.writerow(header)

        # write by chunks without memory abuse

        for first in iterator:
            chunk = list(chain([first], islice(iterator, CHUNK_SIZE - 1)))
            writer.writerows([[_cell(value) for value in row] for row in chunk])

    return file_path


def read_csv(file_path: Path) -> tuple:
    """ Returns header and rows of a CSV file written by 'write_csv' """

    with open(file_path, newline='') as file:
        reader = csv.reader(file)
        header = next(reader)
        return header, [row for row in reader]


def render_json(data) -> bytes:
    """ Deterministic JSON rendering of a report """

    return JSONRenderer().render(clean(data), renderer_context={'indent': 2})


def write_json(file_path: Path, data) -> Path:
    file_path = Path(file_path)
    file_path.parent.mkdir(parents=True, exist_ok=True)
    file_path.write_bytes(render_json(data))
    return file_path


def clean(value):
    """ Convert numpy values to plain python, non-finite floats to None """

    if isinstance(value, dict):
        return {str(key): clean(item) for key, item in value.items()}

    if isinstance(value, (list, tuple)):
        return [clean(item) for item in value]

    if hasattr(value, 'tolist'):
        return clean(value.tolist())

    if isinstance(value, float):
        return value if value == value and abs(value) != float('inf') else None

    return value


def plain(data):
    """ Nested serializer output as plain dicts and lists """

    if isinstance(data, dict):
        return {key: plain(value) for key, value in data.items()}

    if isinstance(data, list):
        return [plain(value) for value in data]

    return data


def _cell(value):
    if isinstance(value, float):
        return repr(value)

    return value
