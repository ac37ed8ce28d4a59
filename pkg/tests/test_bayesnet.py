"""Structure validation, CPT mechanics, batch updates, serialization."""

import numpy as np
import pytest

import bn_enum
from conftest import chain_fps_cpu_time, record
from platoonsim.bayesnet.cpt import Cpt
from platoonsim.bayesnet.model import build_model, parl_update
from platoonsim.bayesnet.serialize import (
    model_fingerprint,
    model_from_text,
    model_to_text,
    structure_fingerprint,
)
from platoonsim.bayesnet.structure import NetworkStructure, VariableSpec
from platoonsim.errors import (
    CyclicStructureError,
    RecordSchemaMismatchError,
    UnknownVariableError,
)
from platoonsim.slo_core import MetricsRecord, Observation


def hw(name, n=2):
    edges = tuple(i / n for i in range(n + 1))
    return VariableSpec(name=name, states=tuple(f"b{i}" for i in range(n)),
                        role="hardware", edges=edges)


class TestStructure:
    def test_parents_in_declared_order(self):
        a = VariableSpec(name="a", states=("0", "1"), role="constraint")
        b = VariableSpec(name="b", states=("0", "1"), role="constraint")
        c = hw("c")
        s = NetworkStructure(variables=(a, b, c), edges=(("b", "c"), ("a", "c")))
        assert s.parents("c") == ("a", "b")

    def test_cycle_rejected(self):
        a, b = hw("a"), hw("b")
        with pytest.raises(CyclicStructureError):
            NetworkStructure(variables=(a, b), edges=(("a", "b"), ("b", "a")))

    def test_unknown_edge_endpoint(self):
        with pytest.raises(UnknownVariableError):
            NetworkStructure(variables=(hw("a"),), edges=(("a", "ghost"),))

    def test_duplicate_variable_name(self):
        with pytest.raises(ValueError):
            NetworkStructure(variables=(hw("a"), hw("a")), edges=())

    def test_roles_listed(self):
        model = chain_fps_cpu_time()
        s = model.structure
        assert s.names_by_role("constraint") == ("fps",)
        assert s.names_by_role("hardware") == ("cpu",)
        assert s.names_by_role("metric") == ("time",)

    def test_variable_validation(self):
        with pytest.raises(ValueError):
            VariableSpec(name="x", states=("only",), role="metric")
        with pytest.raises(ValueError):
            VariableSpec(name="x", states=("a", "a"), role="metric")
        with pytest.raises(ValueError):  # edge count must be states + 1
            VariableSpec(name="x", states=("a", "b"), role="metric",
                         edges=(0.0, 1.0))
        with pytest.raises(ValueError):  # hardware bins must span [0, 1]
            VariableSpec(name="x", states=("a", "b"), role="hardware",
                         edges=(0.0, 0.4, 0.8))

    def test_state_index(self):
        model = chain_fps_cpu_time()
        assert model.structure.variable("cpu").state_index("hi") == 1
        with pytest.raises(UnknownVariableError):
            model.structure.variable("cpu").state_index("nope")


class TestCpt:
    def test_fresh_rows_uniform(self):
        model = build_model(chain_fps_cpu_time().structure, "T", "D")
        probs = model.cpt("cpu").probabilities()
        assert np.allclose(probs, 0.5)
        probs = model.cpt("fps").probabilities()
        assert np.allclose(probs, 0.5)

    def test_rows_normalize(self):
        cpt = chain_fps_cpu_time().cpt("cpu")
        probs = cpt.probabilities()
        assert np.allclose(probs.sum(axis=-1), 1.0, atol=1e-12)
        assert np.allclose(probs[0], [0.8, 0.2])

    def test_counts_below_floor_rejected(self):
        with pytest.raises(ValueError):
            Cpt(child="x", parents=(), counts=np.array([0.5, 2.0]), alpha=1.0)

    def test_absorb_formula(self):
        cpt = Cpt(child="x", parents=(), counts=np.array([5.0, 3.0]), alpha=1.0)
        cpt.absorb(np.array([2.0, 0.0]), decay=0.5)
        # alpha + (counts - alpha) * decay + tally
        assert np.allclose(cpt.counts, [1 + 4 * 0.5 + 2, 1 + 2 * 0.5 + 0])

    def test_absorb_preserves_floor(self):
        cpt = Cpt(child="x", parents=(), counts=np.array([9.0, 1.0]), alpha=1.0)
        for _ in range(40):
            cpt.absorb(np.zeros(2), decay=0.1)
        assert np.all(cpt.counts >= 1.0 - 1e-12)
        assert cpt.probabilities()[1] > 0.0

    def test_absorb_validates(self):
        cpt = Cpt(child="x", parents=(), counts=np.array([1.0, 1.0]), alpha=1.0)
        with pytest.raises(ValueError):
            cpt.absorb(np.zeros(2), decay=1.5)
        with pytest.raises(ValueError):
            cpt.absorb(np.zeros(2), decay=-0.1)
        with pytest.raises(ValueError):
            cpt.absorb(np.zeros(3), decay=1.0)

    def test_copy_is_deep(self):
        cpt = Cpt(child="x", parents=(), counts=np.array([1.0, 1.0]), alpha=1.0)
        clone = cpt.copy()
        clone.counts[0] = 99.0
        assert cpt.counts[0] == 1.0


def make_records(model, rng, n):
    """Joint samples in record form, covering every variable."""
    names = model.structure.topological_order()
    out = []
    for t in range(n):
        values = {}
        for name in names:
            spec = model.structure.variable(name)
            state = spec.states[int(rng.integers(0, len(spec.states)))]
            values[name] = Observation(value=state, bin=state)
        out.append(MetricsRecord(tick=t, values=values))
    return out


class TestParlUpdate:
    def test_empty_batch_bumps_version_only(self):
        model = chain_fps_cpu_time()
        updated = parl_update(model, [])
        assert updated.version == model.version + 1
        for name in ("fps", "cpu", "time"):
            assert np.array_equal(updated.cpt(name).counts, model.cpt(name).counts)

    def test_binary_root_counts(self):
        spec = VariableSpec(name="x", states=("hi", "lo"), role="metric",
                            edges=(0.0, 1.0, 2.0))
        structure = NetworkStructure(variables=(spec,), edges=())
        model = build_model(structure, "T", "D")
        records = [MetricsRecord(tick=t, values={"x": Observation(0.5, "hi")})
                   for t in range(8)]
        updated = parl_update(model, records)
        probs = updated.cpt("x").probabilities()
        assert probs[0] == pytest.approx(9.0 / 10.0, abs=1e-12)
        assert probs[1] == pytest.approx(1.0 / 10.0, abs=1e-12)

    def test_batch_additivity(self):
        rng = np.random.default_rng(99)
        for _ in range(20):
            model = bn_enum.random_model(rng)
            b1 = make_records(model, rng, 7)
            b2 = make_records(model, rng, 5)
            split = parl_update(parl_update(model, b1), b2)
            joint = parl_update(model, b1 + b2)
            for name in model.structure.topological_order():
                assert np.allclose(split.cpt(name).counts, joint.cpt(name).counts,
                                   atol=1e-12)

    def test_decay_forgets_history(self):
        spec = VariableSpec(name="x", states=("hi", "lo"), role="metric",
                            edges=(0.0, 1.0, 2.0))
        structure = NetworkStructure(variables=(spec,), edges=())
        model = build_model(structure, "T", "D")
        hot = [MetricsRecord(tick=t, values={"x": Observation(0.5, "hi")})
               for t in range(20)]
        model = parl_update(model, hot)
        cold = [MetricsRecord(tick=t, values={"x": Observation(1.5, "lo")})
                for t in range(20)]
        forgetting = parl_update(model, cold, decay=0.1)
        retaining = parl_update(model, cold, decay=1.0)
        assert forgetting.cpt("x").probabilities()[1] > retaining.cpt("x").probabilities()[1]
        # decay applies before the tally lands: alpha + (counts-alpha)*d + tally
        expected_hi = 1.0 + 20.0 * 0.1 + 0.0
        assert forgetting.cpt("x").counts[0] == pytest.approx(expected_hi, abs=1e-12)

    def test_original_untouched(self):
        model = chain_fps_cpu_time()
        before = {n: model.cpt(n).counts.copy() for n in model.structure.topological_order()}
        parl_update(model, make_records(model, np.random.default_rng(3), 6))
        for name, counts in before.items():
            assert np.array_equal(model.cpt(name).counts, counts)

    def test_schema_mismatch(self):
        model = chain_fps_cpu_time()
        missing = MetricsRecord(tick=0, values={"fps": Observation("15", "15")})
        with pytest.raises(RecordSchemaMismatchError):
            parl_update(model, [missing])
        bad_bin = MetricsRecord(tick=0, values={
            "fps": Observation("15", "15"),
            "cpu": Observation(0.1, "never-a-bin"),
            "time": Observation(10.0, "ok"),
        })
        with pytest.raises(RecordSchemaMismatchError):
            parl_update(model, [bad_bin])


class TestSerialize:
    def test_round_trip_exact(self):
        rng = np.random.default_rng(17)
        model = bn_enum.random_model(rng)
        model = parl_update(model, make_records(model, rng, 12), decay=0.7)
        text = model_to_text(model)
        back = model_from_text(text)
        assert back.service_type == model.service_type
        assert back.device_type == model.device_type
        assert back.version == model.version
        assert structure_fingerprint(back.structure) == structure_fingerprint(model.structure)
        for name in model.structure.topological_order():
            assert np.array_equal(back.cpt(name).counts, model.cpt(name).counts)
        assert model_fingerprint(back) == model_fingerprint(model)

    def test_fresh_model_serializes_sparse(self):
        model = build_model(chain_fps_cpu_time().structure, "T", "D")
        text = model_to_text(model)
        assert '"cells": []' in text

    def test_fingerprint_tracks_content(self):
        model = chain_fps_cpu_time()
        fp = model_fingerprint(model)
        updated = parl_update(model, make_records(model, np.random.default_rng(0), 4))
        assert model_fingerprint(updated) != fp

    def test_bad_format_rejected(self):
        with pytest.raises(ValueError):
            model_from_text('{"format": "something-else/9"}')
