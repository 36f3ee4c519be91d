import math

import numpy as np
import pytest

from wavelab import WavelabError
from wavelab._persist import PersistError, read_csv, read_json, write_csv, write_json


class TestCsv:
    def test_header_metadata_and_rows(self, tmp_path):
        path = write_csv(
            tmp_path / "out" / "series.csv",
            ["t", "energy"],
            [[0.0, 1.5], [0.1, math.nan]],
            {"reason": "completed", "grid": {"n": 8}},
        )

        meta, header, data = read_csv(path)

        assert path.read_text().startswith("# schema-version: 1\n")
        assert meta == {"reason": "completed", "grid": {"n": 8}}
        assert header == ["t", "energy"]
        assert data[0].tolist() == [0.0, 1.5]
        assert math.isnan(data[1, 1])

    def test_floats_survive_exactly(self, tmp_path):
        values = np.random.default_rng(5).normal(size=(4, 2))
        _, _, data = read_csv(write_csv(tmp_path / "exact.csv", ["a", "b"], values))

        np.testing.assert_array_equal(data, values)

    def test_missing_schema_header(self, tmp_path):
        path = tmp_path / "plain.csv"
        path.write_text("a,b\n1,2\n")

        with pytest.raises(PersistError, match="schema"):
            read_csv(path)

    def test_ragged_rows(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("# schema-version: 1\na,b\n1,2\n3\n")

        with pytest.raises(PersistError, match="ragged"):
            read_csv(path)

    def test_read_errors_are_wavelab_errors(self, tmp_path):
        path = tmp_path / "plain.csv"
        path.write_text("a,b\n1,2\n")

        with pytest.raises(WavelabError):
            read_csv(path)

        assert issubclass(PersistError, ValueError)


class TestJson:
    def test_numpy_values_and_sorted_keys(self, tmp_path):
        path = write_json(tmp_path / "report.json", {"values": np.array([1.0, 2.0]), "a": 1})

        assert read_json(path) == {"a": 1, "values": [1.0, 2.0]}
        assert path.read_text().index('"a"') < path.read_text().index('"values"')
