"""Fixed-topology tanh MLPs with exact backpropagation.

Inputs may be a single vector ``(input_dim,)`` or a batch ``(n, input_dim)``;
outputs follow the same convention. ``gradient`` sums over the batch.
"""

import numpy as np

from s3rr.exceptions import DimensionMismatchError, NonFiniteGradientError
from s3rr.model_factory import ApproximatorSpec, ParamVector


def _as_batch(spec: ApproximatorSpec, inputs: np.ndarray) -> tuple[np.ndarray, bool]:
    inputs = np.asarray(inputs, dtype=float)
    single = inputs.ndim == 1
    batch = inputs.reshape(1, -1) if single else inputs
    if batch.ndim != 2 or batch.shape[1] != spec.input_dim:
        raise DimensionMismatchError(
            f"expected input of width {spec.input_dim}, got shape {inputs.shape}"
        )
    return batch, single


def _check_params(spec: ApproximatorSpec, params: ParamVector) -> None:
    if params.spec != spec:
        raise DimensionMismatchError(f"parameters were built for {params.spec}, not {spec}")


def _forward_activations(
    spec: ApproximatorSpec, params: ParamVector, batch: np.ndarray
) -> tuple[list[np.ndarray], np.ndarray]:
    activations = [batch]
    layers = params.layers()
    hidden = batch
    for weights, bias in layers[:-1]:
        hidden = np.tanh(hidden @ weights + bias)
        activations.append(hidden)
    weights, bias = layers[-1]
    return activations, hidden @ weights + bias


def forward(spec: ApproximatorSpec, params: ParamVector, inputs: np.ndarray) -> np.ndarray:
    _check_params(spec, params)
    batch, single = _as_batch(spec, inputs)
    _, output = _forward_activations(spec, params, batch)
    return output[0] if single else output


def gradient(
    spec: ApproximatorSpec, params: ParamVector, inputs: np.ndarray, upstream: np.ndarray
) -> np.ndarray:
    """Gradient of ``sum_i <upstream_i, forward(inputs_i)>`` w.r.t. the flat parameters."""
    _check_params(spec, params)
    batch, single = _as_batch(spec, inputs)
    upstream = np.asarray(upstream, dtype=float)
    upstream = upstream.reshape(1, -1) if single else upstream
    if upstream.shape != (batch.shape[0], spec.output_dim):
        raise DimensionMismatchError(
            f"upstream shape {upstream.shape} does not match ({batch.shape[0]}, {spec.output_dim})"
        )
    if not np.all(np.isfinite(upstream)):
        raise NonFiniteGradientError("upstream gradient contains non-finite values")

    activations, _ = _forward_activations(spec, params, batch)
    layers = params.layers()
    grad = np.zeros(params.values.size)
    delta = upstream
    for index in range(len(layers) - 1, -1, -1):
        slot = params.layout[index]
        layer_input = activations[index]
        weights, _ = layers[index]
        weights_end = slot.offset + slot.weight_size
        grad[slot.offset : weights_end] = (layer_input.T @ delta).reshape(-1)
        grad[weights_end : slot.end] = delta.sum(axis=0)
        if index > 0:
            delta = (delta @ weights.T) * (1.0 - layer_input**2)
    return grad


def l1_penalty(params: ParamVector | np.ndarray) -> tuple[float, np.ndarray]:
    values = params.values if isinstance(params, ParamVector) else np.asarray(params, dtype=float)
    return float(np.abs(values).sum()), np.sign(values)
