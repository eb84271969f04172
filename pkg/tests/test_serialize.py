"""JSON/CSV round-trips for states, channels, specs, and results."""

import json
import math

import numpy as np
import pytest

from roofkit import (
    DimensionError,
    GaussianDensity,
    RandomPhaseSpec,
    RoofOptions,
    TabulatedDensity,
    UniformDensity,
    ccooe,
    dephasing,
    ensemble_from_mixing,
    noiseless,
    random_density,
    random_stinespring,
)
from roofkit.serialize import (
    ADDITIVITY_CSV_FIELDS,
    TRUNCATION_CSV_FIELDS,
    additivity_csv_rows,
    csv_text,
    decode_channel,
    decode_matrix,
    decode_phase_spec,
    decode_state,
    decode_vector,
    dumps,
    encode_channel,
    encode_ensemble,
    decode_ensemble,
    encode_matrix,
    encode_phase_spec,
    encode_roof_result,
    encode_state,
    encode_vector,
    read_json,
    truncation_csv_rows,
    write_json,
)


class TestMatrixRoundTrip:
    def test_square_exact(self):
        rng = np.random.default_rng(1)
        arr = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        data = json.loads(json.dumps(encode_matrix(arr)))
        back = decode_matrix(data)
        assert np.array_equal(back, arr)

    def test_rectangular_exact(self):
        rng = np.random.default_rng(2)
        arr = rng.normal(size=(3, 5)) + 1j * rng.normal(size=(3, 5))
        data = json.loads(json.dumps(encode_matrix(arr)))
        assert data["rows"] == 3 and data["cols"] == 5
        assert np.array_equal(decode_matrix(data), arr)

    def test_square_uses_dim_key(self):
        data = encode_matrix(np.eye(2))
        assert data["dim"] == 2
        assert "rows" not in data

    def test_shape_mismatch_rejected(self):
        data = encode_matrix(np.eye(2))
        data["re"] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
        data["im"] = [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]
        with pytest.raises(DimensionError):
            decode_matrix(data)

    def test_vector_round_trip(self):
        vec = np.array([0.5, -0.5j, complex(1 / 3, -2 / 7)])
        back = decode_vector(json.loads(json.dumps(encode_vector(vec))))
        assert np.array_equal(back, vec)


class TestStateAndChannel:
    def test_state_round_trip(self):
        rho = random_density(3, 2, 7)
        back = decode_state(json.loads(json.dumps(encode_state(rho))))
        assert np.array_equal(back.entries, rho.entries)

    def test_channel_round_trip(self):
        ch = random_stinespring(2, 3, 2, 9)
        data = json.loads(json.dumps(encode_channel(ch)))
        assert data["in_dim"] == 2 and data["out_dim"] == 3
        back = decode_channel(data)
        assert back.label == ch.label
        assert all(np.array_equal(a, b) for a, b in zip(back.kraus, ch.kraus))

    def test_channel_dim_validation(self):
        data = encode_channel(dephasing(0.25))
        data["out_dim"] = 3
        with pytest.raises(DimensionError):
            decode_channel(data)


class TestPhaseSpec:
    def test_gaussian_round_trip(self):
        spec = RandomPhaseSpec(1.5, 8, GaussianDensity(0.7))
        data = json.loads(json.dumps(encode_phase_spec(spec)))
        assert data["a"] == 1.5 and data["d"] == 8
        assert data["density"]["family"] == "gaussian"
        back = decode_phase_spec(data)
        assert back.half_width == spec.half_width
        assert back.grid_size == spec.grid_size
        assert back.density.std == 0.7

    def test_uniform_round_trip(self):
        spec = RandomPhaseSpec(2.0, 4, UniformDensity(1.25))
        back = decode_phase_spec(json.loads(json.dumps(encode_phase_spec(spec))))
        assert isinstance(back.density, UniformDensity)
        assert back.density.half_width == 1.25

    def test_custom_round_trip(self):
        dens = TabulatedDensity(
            np.array([-1.0, 0.0, 1.0]), np.array([0.25, 0.5, 0.25]), np.ones(3)
        )
        spec = RandomPhaseSpec(1.0, 4, dens)
        back = decode_phase_spec(json.loads(json.dumps(encode_phase_spec(spec))))
        assert isinstance(back.density, TabulatedDensity)
        assert np.array_equal(back.density.points, dens.points)
        assert np.array_equal(back.density.values, dens.values)

    def test_unknown_family_rejected(self):
        with pytest.raises(Exception):
            decode_phase_spec({"a": 1.0, "d": 4, "density": {"family": "cauchy"}})


class TestEnsembleAndRoofResult:
    def test_ensemble_round_trip(self):
        rho = random_density(3, 2, 11)
        m = np.linalg.qr(np.random.default_rng(5).normal(size=(3, 2)))[0]
        ens = ensemble_from_mixing(rho, m)
        back = decode_ensemble(json.loads(json.dumps(encode_ensemble(ens))))
        assert np.array_equal(back.weights, ens.weights)
        for a, b in zip(back.states, ens.states):
            assert np.array_equal(a.amplitudes, b.amplitudes)

    def test_roof_result_fields(self):
        res = ccooe(dephasing(0.3), random_density(2, 2, 13), RoofOptions(restarts=4, seed=1))
        data = json.loads(json.dumps(encode_roof_result(res)))
        assert data["upper_bound"] is True
        assert data["value_nats"] == res.value
        assert data["restarts_used"] == res.restarts_used
        assert isinstance(data["converged"], bool)
        assert set(data["ensemble"]) == {"weights", "states"}
        assert data["diagnostics"]["iterations"] == res.iterations


class TestDumpsAndFiles:
    def test_floats_round_trip_exactly(self):
        payload = {"x": 1.0 / 3.0, "y": math.pi, "z": 2.2250738585072014e-308}
        text = dumps(payload)
        back = json.loads(text)
        assert back["x"] == payload["x"]
        assert back["y"] == payload["y"]
        assert back["z"] == payload["z"]

    def test_dumps_is_stable(self):
        a = dumps({"b": 1, "a": 2})
        b = dumps({"a": 2, "b": 1})
        assert a == b
        assert a.endswith("\n")

    def test_write_and_read(self, tmp_path):
        target = tmp_path / "report.json"
        write_json(target, {"value": 0.1 + 0.2})
        assert read_json(target)["value"] == 0.1 + 0.2


class TestCsv:
    def test_column_order_is_pinned(self):
        assert ADDITIVITY_CSV_FIELDS == (
            "item",
            "lhs",
            "lhs_bound_dir",
            "rhs",
            "rhs_bound_dir",
            "margin",
            "verdict",
        )
        assert TRUNCATION_CSV_FIELDS == ("n", "weight", "H_n", "roof_n", "lambda_min")

    def test_csv_text_golden(self):
        rows = [{"a": 1, "b": "x"}, {"a": 2, "b": "y"}]
        assert csv_text(("a", "b"), rows) == "a,b\n1,x\n2,y\n"

    def test_additivity_rows_shape(self):
        from roofkit import superadditivity_margin, random_density as rd

        report = superadditivity_margin(
            noiseless(2), noiseless(2), rd(4, 4, 17), RoofOptions(restarts=4, seed=0)
        )
        rows = additivity_csv_rows([report])
        assert list(rows[0]) == list(ADDITIVITY_CSV_FIELDS)
        assert rows[0]["item"] == 0
        assert rows[0]["verdict"] == "consistent"

    def test_truncation_rows_shape(self):
        from roofkit import SubsystemShape, truncation_experiment

        omega = random_density(16, 16, 19)
        trace = truncation_experiment(omega, SubsystemShape((2, 2, 2, 2)), ranks=(1, 2))
        rows = truncation_csv_rows(trace)
        assert list(rows[0]) == list(TRUNCATION_CSV_FIELDS)
        assert [r["n"] for r in rows] == [1, 2]
