"""Conditional queries, fulfillment inference, and hardware marginals.

The reference implementation is the brute-force joint enumeration in
bn_enum; every random comparison runs against it.
"""

import numpy as np
import pytest

import bn_enum
from conftest import chain_fps_cpu_time, deterministic_cpt
from platoonsim import DistributionSet, Slo, SloSet, infer_slo, marginal_hw
from platoonsim.bayesnet.inference import query_conditional
from platoonsim.bayesnet.model import SloIModel, build_model
from platoonsim.bayesnet.structure import NetworkStructure, VariableSpec
from platoonsim.errors import InconsistentEvidenceError, UnknownVariableError


def metric_var(name="time", edges=(0.0, 66.0, 200.0), states=("ok", "late")):
    return VariableSpec(name=name, states=states, role="metric", edges=edges)


def hw_var(name="cpu", n=2):
    return VariableSpec(name=name, states=tuple(f"b{i}" for i in range(n)),
                        role="hardware", edges=tuple(i / n for i in range(n + 1)))


class TestQueryConditional:
    def test_root_marginal_from_counts(self):
        cpu = hw_var()
        structure = NetworkStructure(variables=(cpu,), edges=())
        model = build_model(structure, "T", "D")
        model.cpts["cpu"].counts = np.array([1.0, 4.0])
        probs = query_conditional(model, ("cpu",), {})
        assert np.allclose(probs, [0.2, 0.8], atol=1e-12)

    def test_evidence_selects_cpt_row(self):
        model = chain_fps_cpu_time()
        probs = query_conditional(model, ("cpu",), {"fps": "30"})
        row = model.cpt("cpu").probabilities()[1]
        assert np.allclose(probs, row, atol=1e-12)

    def test_d_separated_root_unmoved(self):
        # two disconnected chains; evidence on one leaves the other's prior
        a, b = hw_var("cpu"), hw_var("gpu")
        ma = metric_var("m1", edges=(0.0, 1.0, 2.0))
        structure = NetworkStructure(variables=(a, b, ma), edges=(("cpu", "m1"),))
        model = build_model(structure, "T", "D")
        model.cpts["gpu"].counts = np.array([3.0, 7.0])
        model.cpts["m1"].counts = np.array([[9.0, 1.0], [1.0, 9.0]])
        prior = query_conditional(model, ("gpu",), {})
        posterior = query_conditional(model, ("gpu",), {"m1": "late"})
        assert np.allclose(prior, posterior, atol=1e-12)
        assert np.allclose(prior, [0.3, 0.7], atol=1e-12)

    def test_query_overlapping_evidence_rejected(self):
        model = chain_fps_cpu_time()
        with pytest.raises(ValueError):
            query_conditional(model, ("cpu",), {"cpu": "lo"})

    def test_unknown_names_rejected(self):
        model = chain_fps_cpu_time()
        with pytest.raises(UnknownVariableError):
            query_conditional(model, ("ghost",), {})
        with pytest.raises(UnknownVariableError):
            query_conditional(model, ("cpu",), {"ghost": "x"})

    def test_impossible_evidence_rejected(self):
        solo = VariableSpec(name="solo", states=("yes", "no"), role="constraint")
        cpu = hw_var()
        structure = NetworkStructure(variables=(solo, cpu), edges=(("solo", "cpu"),))
        cpts = {
            "solo": deterministic_cpt("solo", (), [1.0, 0.0]),   # never "no"
            "cpu": deterministic_cpt("cpu", ("solo",), [[1.0, 0.0], [1.0, 0.0]]),
        }
        model = SloIModel(service_type="T", device_type="D", structure=structure,
                          cpts=cpts, version=0)
        with pytest.raises(InconsistentEvidenceError):
            query_conditional(model, ("cpu",), {"solo": "no"})

    def test_matches_enumeration_on_chain(self):
        model = chain_fps_cpu_time()
        oracle = bn_enum.EnumOracle(model)
        for evidence in ({}, {"fps": "15"}, {"time": "ok"}, {"fps": "30", "time": "late"}):
            got = query_conditional(model, ("cpu",), evidence)
            want = oracle.conditional(("cpu",), evidence)
            assert np.allclose(got, want, atol=1e-12)


class TestInferSlo:
    def test_deterministic_satisfaction(self):
        time = metric_var()
        structure = NetworkStructure(variables=(time,), edges=())
        model = SloIModel(service_type="T", device_type="D", structure=structure,
                          cpts={"time": deterministic_cpt("time", (), [5.0, 0.0])},
                          version=0)
        slos = SloSet(slos=(Slo(metric="time", max=66.0),))
        assert infer_slo(model, slos, {}) == 1.0

    def test_mean_over_slos(self):
        # one certainly-satisfied and one certainly-violated SLO average to 0.5
        t1 = metric_var("time")
        t2 = metric_var("energy", edges=(0.0, 15.0, 40.0), states=("ok", "over"))
        structure = NetworkStructure(variables=(t1, t2), edges=())
        model = SloIModel(service_type="T", device_type="D", structure=structure,
                          cpts={"time": deterministic_cpt("time", (), [5.0, 0.0]),
                                "energy": deterministic_cpt("energy", (), [0.0, 5.0])},
                          version=0)
        slos = SloSet(slos=(Slo(metric="time", max=66.0),
                            Slo(metric="energy", max=15.0)))
        assert infer_slo(model, slos, {}) == pytest.approx(0.5, abs=1e-12)

    def test_empty_slo_set(self):
        assert infer_slo(chain_fps_cpu_time(), SloSet(slos=()), {}) == 1.0

    def test_band_inside_one_bin_has_no_satisfying_bin(self):
        model = chain_fps_cpu_time()  # time bins split at 66
        slos = SloSet(slos=(Slo(metric="time", min=10.0, max=20.0),))
        assert infer_slo(model, slos, {"fps": "15"}) == 0.0

    def test_slo_on_variable_without_grid(self):
        model = chain_fps_cpu_time()
        slos = SloSet(slos=(Slo(metric="fps", max=20.0),))
        with pytest.raises(UnknownVariableError):
            infer_slo(model, slos, {})

    def test_worked_chain_value(self):
        model = chain_fps_cpu_time()
        slos = SloSet(slos=(Slo(metric="time", max=66.0),))
        # P(time=ok | fps=15) = 0.8 * 0.9 + 0.2 * 0.2
        assert infer_slo(model, slos, {"fps": "15"}) == pytest.approx(0.76, abs=1e-12)


class TestSoftEvidence:
    def test_one_hot_equals_hard_evidence(self):
        model = chain_fps_cpu_time()
        slos = SloSet(slos=(Slo(metric="time", max=66.0),))
        soft = DistributionSet(entries={"cpu": np.array([0.0, 1.0])})
        assert infer_slo(model, slos, {}, soft=soft) == infer_slo(
            model, slos, {"cpu": "hi"})

    def test_mixture_arithmetic(self):
        model = chain_fps_cpu_time()
        slos = SloSet(slos=(Slo(metric="time", max=66.0),))
        soft = DistributionSet(entries={"cpu": np.array([0.3, 0.7])})
        p_lo = infer_slo(model, slos, {"cpu": "lo"})
        p_hi = infer_slo(model, slos, {"cpu": "hi"})
        want = 0.3 * p_lo + 0.7 * p_hi
        assert infer_slo(model, slos, {}, soft=soft) == pytest.approx(want, abs=1e-12)

    def _gated_model(self):
        # solo=yes forces cpu into b0; other bins are unreachable under it
        solo = VariableSpec(name="solo", states=("yes", "no"), role="constraint")
        cpu = VariableSpec(name="cpu", states=("b0", "b1", "b2"), role="hardware",
                           edges=(0.0, 1 / 3, 2 / 3, 1.0))
        time = metric_var(edges=(0.0, 66.0, 200.0))
        structure = NetworkStructure(variables=(solo, cpu, time),
                                     edges=(("solo", "cpu"), ("cpu", "time")))
        cpts = {
            "solo": deterministic_cpt("solo", (), [1.0, 1.0]),
            "cpu": deterministic_cpt("cpu", ("solo",),
                                     [[1.0, 0.0, 0.0], [0.0, 0.5, 0.5]]),
            "time": deterministic_cpt("time", ("cpu",),
                                      [[1.0, 0.0], [0.5, 0.5], [0.0, 1.0]]),
        }
        return SloIModel(service_type="T", device_type="D", structure=structure,
                         cpts=cpts, version=0)

    def test_infeasible_states_renormalized_away(self):
        model = self._gated_model()
        slos = SloSet(slos=(Slo(metric="time", max=66.0),))
        soft = DistributionSet(entries={"cpu": np.array([0.5, 0.25, 0.25])})
        # under solo=yes only b0 is feasible, so the mixture collapses to it
        got = infer_slo(model, slos, {"solo": "yes"}, soft=soft)
        assert got == pytest.approx(1.0, abs=1e-12)

    def test_all_mass_infeasible_rejected(self):
        model = self._gated_model()
        slos = SloSet(slos=(Slo(metric="time", max=66.0),))
        soft = DistributionSet(entries={"cpu": np.array([0.0, 0.3, 0.7])})
        with pytest.raises(InconsistentEvidenceError):
            infer_slo(model, slos, {"solo": "yes"}, soft=soft)

    def test_soft_on_non_hardware_rejected(self):
        model = chain_fps_cpu_time()
        slos = SloSet(slos=(Slo(metric="time", max=66.0),))
        soft = DistributionSet(entries={"fps": np.array([0.5, 0.5])})
        with pytest.raises(UnknownVariableError):
            infer_slo(model, slos, {}, soft=soft)

    def test_soft_and_hard_on_same_variable_rejected(self):
        model = chain_fps_cpu_time()
        slos = SloSet(slos=(Slo(metric="time", max=66.0),))
        soft = DistributionSet(entries={"cpu": np.array([0.5, 0.5])})
        with pytest.raises(ValueError):
            infer_slo(model, slos, {"cpu": "lo"}, soft=soft)

    def test_wrong_length_vector_rejected(self):
        model = chain_fps_cpu_time()
        slos = SloSet(slos=(Slo(metric="time", max=66.0),))
        soft = DistributionSet(entries={"cpu": np.array([0.5, 0.25, 0.25])})
        with pytest.raises(ValueError):
            infer_slo(model, slos, {}, soft=soft)


class TestDistributionSet:
    def test_validation(self):
        with pytest.raises(ValueError):
            DistributionSet(entries={"cpu": np.array([0.6, 0.6])})
        with pytest.raises(ValueError):
            DistributionSet(entries={"cpu": np.array([-0.2, 1.2])})
        with pytest.raises(ValueError):
            DistributionSet(entries={"cpu": np.eye(2)})


class TestMarginalHw:
    def test_matches_cpt_row_under_evidence(self):
        model = chain_fps_cpu_time()
        got = marginal_hw(model, {"fps": "30"})
        assert np.allclose(got.vector("cpu"),
                           model.cpt("cpu").probabilities()[1], atol=1e-12)

    def test_evidence_on_hw_gives_point_mass(self):
        model = chain_fps_cpu_time()
        got = marginal_hw(model, {"cpu": "hi"})
        assert np.allclose(got.vector("cpu"), [0.0, 1.0], atol=1e-12)

    def test_requires_hardware_variables(self):
        time = metric_var()
        structure = NetworkStructure(variables=(time,), edges=())
        model = build_model(structure, "T", "D")
        with pytest.raises(UnknownVariableError):
            marginal_hw(model, {})


class TestAgainstEnumeration:
    def test_random_networks(self):
        rng = np.random.default_rng(4242)
        worst = 0.0
        for _ in range(60):
            model = bn_enum.random_model(rng)
            oracle = bn_enum.EnumOracle(model)
            for _ in range(3):
                slos, constraints, soft = bn_enum.random_query(rng, model)
                soft_set = DistributionSet(entries=soft) if soft else None
                try:
                    want = oracle.infer_slo(slos, constraints, soft)
                except (InconsistentEvidenceError, ValueError):
                    with pytest.raises((InconsistentEvidenceError, ValueError)):
                        infer_slo(model, slos, constraints, soft=soft_set)
                    continue
                got = infer_slo(model, slos, constraints, soft=soft_set)
                worst = max(worst, abs(got - want))
            hw_want = oracle.marginal_hw(constraints)
            hw_got = marginal_hw(model, constraints)
            for name in hw_want:
                worst = max(worst, float(np.max(np.abs(
                    hw_got.vector(name) - hw_want[name]))))
        assert worst <= 1e-9
