"""Shared builders: hand-filled models, wrapper harnesses, tiny worlds."""

from __future__ import annotations

import numpy as np

from platoonsim import (
    AssignmentMap,
    MetricsBuffer,
    ModelCatalog,
    ModelRegistry,
    ServiceSpec,
    SlidingWindow,
    Slo,
    SloSet,
    WrapperConfig,
    WrapperState,
)
from platoonsim.bayesnet.cpt import Cpt
from platoonsim.bayesnet.model import SloIModel, build_model
from platoonsim.bayesnet.structure import NetworkStructure, VariableSpec
from platoonsim.platoon import PlatoonView, Vehicle
from platoonsim.slo_core import MetricsRecord, Observation
from platoonsim.worldsim.profiles import DeviceProfile


def record(tick: int = 0, **values) -> MetricsRecord:
    """Record from keyword pairs; pass (raw, bin) tuples or a shared value."""
    out = {}
    for name, value in values.items():
        if isinstance(value, tuple):
            out[name] = Observation(value=value[0], bin=value[1])
        else:
            out[name] = Observation(value=value, bin=str(value))
    return MetricsRecord(tick=tick, values=out)


def chain_fps_cpu_time() -> SloIModel:
    """fps -> cpu -> time with hand-filled counts, all floors at alpha=1."""
    fps = VariableSpec(name="fps", states=("15", "30"), role="constraint")
    cpu = VariableSpec(name="cpu", states=("lo", "hi"), role="hardware",
                       edges=(0.0, 0.5, 1.0))
    time = VariableSpec(name="time", states=("ok", "late"), role="metric",
                        edges=(0.0, 66.0, 200.0))
    structure = NetworkStructure(variables=(fps, cpu, time),
                                 edges=(("fps", "cpu"), ("cpu", "time")))
    model = build_model(structure, "T", "D")
    model.cpts["fps"].counts = np.array([3.0, 1.0])
    model.cpts["cpu"].counts = np.array([[8.0, 2.0], [1.0, 9.0]])
    model.cpts["time"].counts = np.array([[9.0, 1.0], [2.0, 8.0]])
    return model


def deterministic_cpt(child: str, parents: tuple[str, ...], table) -> Cpt:
    """Exact 0/1 rows; alpha=0 disables smoothing so zeros are real."""
    return Cpt(child=child, parents=parents, counts=np.asarray(table, dtype=float),
               alpha=0.0)


# --- crowding micro-world: two services doom one host, empty hosts heal -------

CROWD_SLOS = SloSet(slos=(Slo(metric="m", max=1.0),))


def crowding_model() -> SloIModel:
    """solo -> cpu -> m where one service fits a host and two never do.

    Solo footprint is a point mass one bin below the satisfaction edge,
    so a convolved pair lands exactly on the first failing bin. All
    rows are exact deltas: gains come out as whole numbers.
    """
    solo = VariableSpec(name="solo", states=("yes", "no"), role="constraint")
    cpu = VariableSpec(name="cpu", states=("b0", "b1", "b2", "b3", "b4"),
                       role="hardware", edges=(0.0, 0.2, 0.4, 0.6, 0.8, 1.0))
    metric = VariableSpec(name="m", states=("ok", "bad"), role="metric",
                          edges=(0.0, 1.0, 2.0))
    structure = NetworkStructure(variables=(solo, cpu, metric),
                                 edges=(("solo", "cpu"), ("cpu", "m")))
    cpts = {
        "solo": deterministic_cpt("solo", (), [1.0, 1.0]),
        "cpu": deterministic_cpt("cpu", ("solo",),
                                 [[0.0, 1.0, 0.0, 0.0, 0.0],
                                  [0.0, 0.0, 0.5, 0.25, 0.25]]),
        "m": deterministic_cpt("m", ("cpu",),
                               [[1.0, 0.0], [1.0, 0.0],
                                [0.0, 1.0], [0.0, 1.0], [0.0, 1.0]]),
    }
    return SloIModel(service_type="X", device_type="D", structure=structure,
                     cpts=cpts, version=1)


class FixedModels:
    """Registry stand-in returning one shared model for every key."""

    def __init__(self, model: SloIModel):
        self.model = model

    def lookup(self, service_type: str, device_type: str) -> SloIModel:
        return self.model


def crowding_instance(n_vehicles: int = 3, services_on_source: int = 2):
    """(view, assignments, models, services, profiles) around crowding_model.

    Source v1 carries the listed services; every other vehicle is empty
    and identical, so positive gains tie exactly and the lowest id wins.
    """
    model = crowding_model()
    profiles = {"D": DeviceProfile(name="D",
                                   capacity={"cpu": 8.0, "gpu": 2.0, "memory": 8.0},
                                   energy_base=5.0, energy_slope=10.0)}
    vehicles = tuple(Vehicle(id=f"v{i}", device_type="D", is_leader=(i == 1))
                     for i in range(1, n_vehicles + 1))
    view = PlatoonView(members=vehicles, leader="v1", tick=0)
    services = {}
    assignments = AssignmentMap()
    for i in range(1, services_on_source + 1):
        sid = f"s{i}"
        services[sid] = ServiceSpec(id=sid, service_type="X", constraints={},
                                    slos=CROWD_SLOS, energy_tracks_role=False)
        assignments.assign(sid, "v1")
    return view, assignments, FixedModels(model), services, profiles


def wrapper_harness(p_sat_counts, *, rho=1.0, omega=10.0, window=None, buffered=0,
                    window_size=10, buffer_capacity=10, retrain_mode="adaptive",
                    retrain_interval=100, cooldown=20):
    """One service on one vehicle with a root-metric model of known p.

    p_sat_counts are the counts over (ok, bad) for the metric "m"; the
    predicted fulfillment is their normalized first entry. Returns
    (state, view, kwargs) ready for wrapper_tick.
    """
    metric = VariableSpec(name="m", states=("ok", "bad"), role="metric",
                          edges=(0.0, 1.0, 2.0))
    cpu = VariableSpec(name="cpu", states=("lo", "hi"), role="hardware",
                       edges=(0.0, 0.5, 1.0))
    structure = NetworkStructure(variables=(cpu, metric), edges=())
    model = SloIModel(service_type="X", device_type="D", structure=structure,
                      cpts={"cpu": Cpt(child="cpu", parents=(),
                                       counts=np.array([1.0, 1.0]), alpha=0.0),
                            "m": Cpt(child="m", parents=(),
                                     counts=np.asarray(p_sat_counts, dtype=float),
                                     alpha=0.0)},
                      version=1)
    spec = ServiceSpec(id="svc", service_type="X", constraints={},
                       slos=CROWD_SLOS, energy_tracks_role=False)
    config = WrapperConfig(rho=rho, omega=omega, window_size=window_size,
                           buffer_capacity=buffer_capacity, cooldown_ticks=cooldown,
                           retrain_mode=retrain_mode, retrain_interval=retrain_interval)
    state = WrapperState(service=spec, vehicle_id="v1", config=config)
    for value in window or []:
        state.window.push(value)
    for i in range(buffered):
        state.buffer.append(record(tick=i, m=(0.5, "ok")))
    view = PlatoonView(members=(Vehicle(id="v1", device_type="D", is_leader=True),),
                       leader="v1", tick=0)
    profiles = {"D": DeviceProfile(name="D",
                                   capacity={"cpu": 8.0, "gpu": 2.0, "memory": 8.0},
                                   energy_base=5.0, energy_slope=10.0)}
    assignments = AssignmentMap({"svc": "v1"})
    kwargs = dict(models=FixedModels(model), assignments=assignments,
                  services={"svc": spec}, profiles=profiles)
    return state, view, kwargs


def sat_record(tick: int = 0) -> MetricsRecord:
    return record(tick=tick, m=(0.5, "ok"))


def bad_record(tick: int = 0) -> MetricsRecord:
    return record(tick=tick, m=(1.5, "bad"))
