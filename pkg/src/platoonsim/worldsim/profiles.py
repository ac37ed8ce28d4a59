"""Device capabilities and per-service ground-truth workloads.

These numbers are the hidden truth the simulator samples from; the
decision layer only ever sees the monitored records. Everything here
can be overridden per scenario, which is how the bundled experiments
tune contention to their narratives.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

RESOURCES = ("cpu", "gpu", "memory")


@dataclass(frozen=True)
class DeviceProfile:
    """One device type: capacity scalars and its energy envelope."""

    name: str
    capacity: Mapping[str, float]
    energy_base: float
    energy_slope: float
    member_energy_limit: float = 15.0
    leader_energy_limit: float = 25.0

    def __post_init__(self):
        missing = [r for r in RESOURCES if r not in self.capacity]
        if missing:
            raise ValueError(f"device {self.name!r} lacks capacity for {missing}")
        if any(self.capacity[r] <= 0 for r in RESOURCES):
            raise ValueError(f"device {self.name!r} has nonpositive capacity")


@dataclass(frozen=True)
class ServiceGroundTruth:
    """Hidden workload of one service type.

    demand holds absolute resource units; the per-device utilization
    fraction is demand divided by the device's capacity. base_time_ms is
    the uncontended processing time per frame. rate_by_pixel, when
    present, gives the detection rate at each supported resolution.
    """

    service_type: str
    demand: Mapping[str, float]
    base_time_ms: float
    constraint_domains: Mapping[str, tuple] = field(default_factory=dict)
    rate_by_pixel: Mapping[str, float] | None = None

    def __post_init__(self):
        missing = [r for r in RESOURCES if r not in self.demand]
        if missing:
            raise ValueError(f"service type {self.service_type!r} lacks demand for {missing}")

    def fraction(self, resource: str, profile: DeviceProfile) -> float:
        return self.demand[resource] / profile.capacity[resource]


def default_devices() -> dict[str, DeviceProfile]:
    """Jetson-class pair: the larger board has roughly double the GPU,
    half again the CPU, and far more memory headroom."""
    return {
        "NX": DeviceProfile(
            name="NX",
            capacity={"cpu": 8.0, "gpu": 1.0, "memory": 8.0},
            energy_base=6.0,
            energy_slope=11.0,
        ),
        "AGX": DeviceProfile(
            name="AGX",
            capacity={"cpu": 12.0, "gpu": 2.0, "memory": 64.0},
            energy_base=9.0,
            energy_slope=12.0,
        ),
    }


def default_types() -> dict[str, ServiceGroundTruth]:
    return {
        "CV": ServiceGroundTruth(
            service_type="CV",
            demand={"cpu": 2.0, "gpu": 0.62, "memory": 2.2},
            base_time_ms=48.0,
            constraint_domains={"fps": (5, 15, 30), "pixel": (480, 720, 1080)},
            rate_by_pixel={"480": 0.65, "720": 0.82, "1080": 0.92},
        ),
        "QR": ServiceGroundTruth(
            service_type="QR",
            demand={"cpu": 2.2, "gpu": 0.02, "memory": 0.9},
            base_time_ms=75.0,
            constraint_domains={"fps": (5, 10, 20), "pixel": (480, 720, 1080)},
        ),
        "LI": ServiceGroundTruth(
            service_type="LI",
            demand={"cpu": 1.2, "gpu": 0.55, "memory": 2.6},
            base_time_ms=80.0,
            constraint_domains={"fps": (5, 10, 20), "mode": ("near", "far")},
        ),
    }


def default_slo_templates() -> dict[str, dict[str, dict[str, object]]]:
    """SLO bounds per service type, before per-instance resolution.

    "1000/fps" resolves against the instance's fps constraint; the
    energy bound "energy-limit" tracks the host's role envelope.
    """
    return {
        "CV": {
            "time": {"max": "1000/fps"},
            "energy": {"max": "energy-limit"},
            "rate": {"min": 0.6},
        },
        "QR": {
            "time": {"max": "1000/fps"},
            "energy": {"max": "energy-limit"},
        },
        "LI": {
            "time": {"max": "1000/fps"},
            "energy": {"max": "energy-limit"},
        },
    }
