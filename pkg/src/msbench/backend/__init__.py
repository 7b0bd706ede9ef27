"""Inference backends sharing the ``infer(batch) -> PredictionSet`` contract."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import BackendError
from .base import DEFAULT_CLASS_COUNT, Backend, PredictionSet
from .external import ExternalBackend
from .reference import ReferenceBackend, reference_infer
from .synthetic import LatencyModel, SyntheticBackend, simulate_latency

KINDS = ("reference", "synthetic", "external")


@dataclass(frozen=True)
class BackendDescriptor:
    """Which backend to build and its kind-specific parameters.

    ``reference`` takes ``seed``; ``synthetic`` takes the :class:`LatencyModel`
    fields; ``external`` takes ``command``.
    """

    kind: str
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown backend kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if self.kind == "external" and not self.parameters.get("command"):
            raise ValueError("external backend needs a command")
        if self.kind == "synthetic":
            LatencyModel(**self.parameters)

    def to_dict(self) -> dict:
        return {"kind": self.kind, **self.parameters}

    @classmethod
    def from_dict(cls, data: dict):
        data = dict(data)
        return cls(data.pop("kind"), data)


def make_backend(descriptor: BackendDescriptor, sleep: bool = True) -> Backend:
    params = descriptor.parameters
    try:
        if descriptor.kind == "reference":
            return ReferenceBackend(seed=params.get("seed", 0))
        if descriptor.kind == "synthetic":
            return SyntheticBackend(LatencyModel(**params), sleep=sleep)
        return ExternalBackend(params["command"])
    except BackendError:
        raise
    except (TypeError, ValueError) as exc:
        raise BackendError(f"cannot construct {descriptor.kind} backend: {exc}") from None


def infer(backend: Backend, batch) -> PredictionSet:
    return backend.infer(batch)


__all__ = [
    "Backend", "BackendDescriptor", "DEFAULT_CLASS_COUNT", "ExternalBackend", "LatencyModel",
    "PredictionSet", "ReferenceBackend", "SyntheticBackend", "infer", "make_backend",
    "reference_infer", "simulate_latency",
]
