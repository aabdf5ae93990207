import json
from collections import OrderedDict
from pathlib import Path
from tempfile import TemporaryDirectory

import numpy as np
from django.test import SimpleTestCase

from core import export
from core.exceptions import ConstructionError, RejectedForm, WindowOverflow


class CsvTestCase(SimpleTestCase):

    def test_chunked_rows_are_all_written(self):
        rows = ([i, i / 3] for i in range(2 * export.CHUNK_SIZE + 5))

        with TemporaryDirectory() as directory:
            path = export.write_csv(Path(directory) / 'nested' / 'data.csv', ['i', 'x'], rows)
            header, read_rows = export.read_csv(path)

        self.assertEqual(header, ['i', 'x'])
        self.assertEqual(len(read_rows), 2 * export.CHUNK_SIZE + 5)
        self.assertEqual(float(read_rows[7][1]), 7 / 3)

    def test_empty_rows(self):
        with TemporaryDirectory() as directory:
            header, rows = export.read_csv(export.write_csv(Path(directory) / 'a.csv', ['a'], []))

        self.assertEqual((header, rows), (['a'], []))


class JsonTestCase(SimpleTestCase):

    def test_numpy_and_non_finite_values(self):
        data = {'array': np.arange(3), 'value': np.float64(0.5), 'bad': float('nan'), 'flag': np.bool_(True)}
        loaded = json.loads(export.render_json(data))

        self.assertEqual(loaded, {'array': [0, 1, 2], 'value': 0.5, 'bad': None, 'flag': True})

    def test_rendering_is_deterministic(self):
        data = {'b': [1.0, 2.0], 'a': {'c': np.inf}}
        self.assertEqual(export.render_json(data), export.render_json(dict(data)))

    def test_errors_serialize(self):
        self.assertEqual(ConstructionError('bad', point=np.array([1, 2])).as_dict()['point'], [1.0, 2.0])
        self.assertEqual(WindowOverflow('small', required=8).as_dict()['code'], 'window-overflow')
        self.assertEqual(RejectedForm('no', {'pairing': -1.0}).as_dict()['witness'], {'pairing': -1.0})

    def test_plain_unwraps_nested_mappings(self):
        data = OrderedDict(pairs=[OrderedDict(p=[0, 0], q=[2, 1])], budget=OrderedDict(walks=8))
        result = export.plain(data)

        self.assertEqual(result, {'pairs': [{'p': [0, 0], 'q': [2, 1]}], 'budget': {'walks': 8}})
        self.assertIs(type(result), dict)
        self.assertIs(type(result['pairs'][0]), dict)
        self.assertIs(type(result['budget']), dict)
