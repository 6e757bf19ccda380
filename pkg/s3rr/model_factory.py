import math
from collections.abc import Mapping
from dataclasses import dataclass, replace
from typing import Any

import numpy as np

from s3rr.constants import OutputTransform
from s3rr.exceptions import DimensionMismatchError


ACTIVATIONS = ("tanh",)


@dataclass(frozen=True)
class ApproximatorSpec:
    input_dim: int
    output_dim: int
    hidden_layers: int = 1
    hidden_width: int = 8
    activation: str = "tanh"
    output_transform: OutputTransform = OutputTransform.IDENTITY

    def __post_init__(self) -> None:
        if self.input_dim < 1 or self.output_dim < 1:
            raise ValueError("input_dim and output_dim must be positive")
        if self.hidden_layers < 0:
            raise ValueError("hidden_layers must be >= 0")
        if self.hidden_width < 1:
            raise ValueError("hidden_width must be positive")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unsupported activation {self.activation!r}")

    def layer_dims(self) -> list[tuple[int, int]]:
        widths = [self.input_dim, *([self.hidden_width] * self.hidden_layers), self.output_dim]
        return list(zip(widths[:-1], widths[1:], strict=False))

    def parameter_count(self) -> int:
        return sum((fan_in + 1) * fan_out for fan_in, fan_out in self.layer_dims())

    def with_hidden_layers(self, hidden_layers: int) -> "ApproximatorSpec":
        return replace(self, hidden_layers=hidden_layers)

    def to_dict(self) -> dict[str, Any]:
        return {
            "input_dim": self.input_dim,
            "output_dim": self.output_dim,
            "hidden_layers": self.hidden_layers,
            "hidden_width": self.hidden_width,
            "activation": self.activation,
            "output_transform": self.output_transform.value,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ApproximatorSpec":
        return cls(
            input_dim=int(data["input_dim"]),
            output_dim=int(data["output_dim"]),
            hidden_layers=int(data["hidden_layers"]),
            hidden_width=int(data["hidden_width"]),
            activation=str(data.get("activation", "tanh")),
            output_transform=OutputTransform(data.get("output_transform", "identity")),
        )


@dataclass(frozen=True)
class LayerSlot:
    offset: int
    fan_in: int
    fan_out: int

    @property
    def weight_size(self) -> int:
        return self.fan_in * self.fan_out

    @property
    def end(self) -> int:
        return self.offset + self.weight_size + self.fan_out


class ParamVector:
    """Flat parameter storage with per-layer offsets.

    Layer ``i`` stores its ``(fan_in, fan_out)`` weight matrix row-major followed
    by its bias. The values are read-only; updates produce new vectors.
    """

    __slots__ = ("layout", "spec", "values")

    def __init__(self, spec: ApproximatorSpec, values: np.ndarray) -> None:
        values = np.array(values, dtype=float, copy=True).reshape(-1)
        if values.size != spec.parameter_count():
            raise DimensionMismatchError(
                f"expected {spec.parameter_count()} parameters, got {values.size}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("parameter vector contains non-finite values")
        values.flags.writeable = False
        self.spec = spec
        self.values = values
        self.layout = build_layout(spec)

    def __len__(self) -> int:
        return self.values.size

    def __repr__(self) -> str:
        return f"ParamVector(count={self.values.size}, spec={self.spec})"

    def layers(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return [unpack_layer(self.values, slot) for slot in self.layout]

    def with_values(self, values: np.ndarray) -> "ParamVector":
        return ParamVector(self.spec, values)


def build_layout(spec: ApproximatorSpec) -> tuple[LayerSlot, ...]:
    slots = []
    offset = 0
    for fan_in, fan_out in spec.layer_dims():
        slot = LayerSlot(offset=offset, fan_in=fan_in, fan_out=fan_out)
        slots.append(slot)
        offset = slot.end
    return tuple(slots)


def unpack_layer(values: np.ndarray, slot: LayerSlot) -> tuple[np.ndarray, np.ndarray]:
    weights_end = slot.offset + slot.weight_size
    weights = values[slot.offset : weights_end].reshape(slot.fan_in, slot.fan_out)
    bias = values[weights_end : slot.end]
    return weights, bias


def init_params(spec: ApproximatorSpec, rng: np.random.Generator) -> ParamVector:
    """Uniform in ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]`` per layer."""
    values = np.empty(spec.parameter_count())
    for slot in build_layout(spec):
        limit = 1.0 / math.sqrt(slot.fan_in)
        values[slot.offset : slot.end] = rng.uniform(-limit, limit, size=slot.end - slot.offset)
    return ParamVector(spec, values)


def zero_params(spec: ApproximatorSpec) -> ParamVector:
    return ParamVector(spec, np.zeros(spec.parameter_count()))
