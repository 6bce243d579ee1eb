"""Paths, artifact I/O and the counter-based generator."""

import json
import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wienerlab import io as wio
from wienerlab import rng
from wienerlab.errors import InvalidParameter, MissingArtifact
from wienerlab.paths import SamplePath, as_array, from_array, uniform_grid, uniform_step


class TestSamplePath:
    def test_frozen_arrays(self):
        p = SamplePath(uniform_grid(1.0, 4), np.arange(5.0), 3)
        with pytest.raises(ValueError):
            p.values[0] = 1.0
        assert p.step == pytest.approx(0.25)
        assert len(p) == 5

    @pytest.mark.parametrize(
        "times,values",
        [
            ([0.0, 0.5, 0.4], [0, 1, 2]),
            ([0.0, 1.0], [0.0, np.nan]),
            ([0.0, 1.0], [0.0]),
            ([], []),
        ],
    )
    def test_rejects_bad_input(self, times, values):
        with pytest.raises(InvalidParameter):
            SamplePath(times, values)

    def test_equality_and_with_values(self):
        t = uniform_grid(1.0, 3)
        a = SamplePath(t, [0, 1, 2, 3], 1)
        assert a == SamplePath(t, [0, 1, 2, 3], 1)
        assert a != a.with_values([0, 1, 2, 4])

    def test_non_uniform_step(self):
        with pytest.raises(InvalidParameter):
            uniform_step([0.0, 0.1, 0.3])

    def test_array_roundtrip(self):
        t = uniform_grid(2.0, 8)
        vals = np.random.default_rng(0).standard_normal((3, 9))
        paths = from_array(t, vals, first_id=10)
        assert [p.seed_id for p in paths] == [10, 11, 12]
        t2, v2 = as_array(paths)
        np.testing.assert_array_equal(v2, vals)

    def test_common_grid_required(self):
        a = SamplePath(uniform_grid(1.0, 2), [0, 1, 2])
        b = SamplePath(uniform_grid(2.0, 2), [0, 1, 2])
        with pytest.raises(InvalidParameter):
            as_array([a, b])


class TestIO:
    def test_paths_csv_roundtrip(self, tmp_path):
        t = uniform_grid(1.0, 5)
        paths = from_array(t, np.random.default_rng(1).standard_normal((2, 6)))
        f = wio.write_paths_csv(tmp_path / "p.csv", paths)
        back = wio.read_paths_csv(f)
        assert back == paths  # 17 significant digits are lossless

    def test_two_column_csv(self, tmp_path):
        (tmp_path / "f.csv").write_text("t,value\n0,1\n0.5,2\n1,3\n")
        (p,) = wio.read_paths_csv(tmp_path / "f.csv")
        np.testing.assert_array_equal(p.values, [1, 2, 3])

    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingArtifact):
            wio.read_paths_csv(tmp_path / "nope.csv")
        with pytest.raises(MissingArtifact):
            wio.read_json(tmp_path / "nope.json")

    def test_json_numpy_and_atomic(self, tmp_path):
        f = wio.write_json(tmp_path / "a" / "x.json", {"b": np.float64(1.5), "a": np.arange(3)})
        assert json.loads(f.read_text()) == {"a": [0, 1, 2], "b": 1.5}
        assert not [p for p in f.parent.iterdir() if p.name.startswith(".")]

    def test_table_formats(self):
        txt = wio.table_text(["i", "x", "s"], [np.array([1, 2]), np.array([0.1, 1 / 3]), np.array(["a", "b"])])
        print(txt)
        assert txt.splitlines()[1] == "1,0.10000000000000001,a"


class TestRng:
    def test_counter_based(self):
        a = rng.normals(5, 4, 10, start=0)
        b = rng.normals(5, 2, 10, start=2)
        np.testing.assert_array_equal(a[2:], b)

    def test_streams_differ(self):
        a = rng.normals(5, 1, 10, stream=rng.STREAM_GAUSS)
        b = rng.normals(5, 1, 10, stream=rng.STREAM_WIENER)
        assert not np.allclose(a, b)

    @pytest.mark.parametrize("seed", [-1, -10])
    def test_negative_seed(self, seed):
        with pytest.raises(InvalidParameter):
            rng.check_seed(seed)

    def test_map_chunks_worker_independent(self):
        seen = set()

        def fn(a, b):
            seen.add(threading.get_ident())
            return rng.normals(1, b - a, 3, start=a)

        one = rng.map_chunks(fn, 1000, workers=1)
        many = rng.map_chunks(fn, 1000, workers=4)
        print("threads used:", len(seen))
        np.testing.assert_array_equal(one, many)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32), st.integers(1, 600), st.integers(1, 8))
    def test_chunking_property(self, seed, n_paths, workers):
        out = rng.map_chunks(lambda a, b: np.arange(a, b)[:, None] + seed, n_paths, workers)
        assert out[:, 0].tolist() == list(range(seed, seed + n_paths))


@pytest.mark.parametrize(
    "name,base",
    [
        ("InvalidParameter", ValueError),
        ("MissingArtifact", ValueError),
        ("ConditionAViolation", ValueError),
        ("NormDivergence", ArithmeticError),
        ("EntropyDivergence", ArithmeticError),
        ("FactorizationFailure", ArithmeticError),
    ],
)
def test_error_hierarchy(name, base):
    from wienerlab import errors

    cls = getattr(errors, name)
    assert issubclass(cls, errors.WienerlabError) and issubclass(cls, base)
