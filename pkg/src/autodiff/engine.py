"""
Reverse-mode differentiation engine
Hand-written vector-Jacobian products per primitive, composed through a named trace
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Protocol, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from src.errors import NonFiniteError, ShapeMismatchError
from src.tensors.tensor_core import (
    concat_vectors,
    linear_map,
    mode_n_vector_product,
    softmax,
    tanh_map,
)

logger = logging.getLogger(__name__)


class Primitive:
    """
    A differentiable operation

    `forward(*inputs)` returns the output array; `backward(inputs, output, cotangent)`
    returns one cotangent per input, each shaped like that input.
    """

    name = 'primitive'

    def forward(self, *inputs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, inputs: Tuple[np.ndarray, ...], output: np.ndarray,
                 cotangent: np.ndarray) -> Tuple[np.ndarray, ...]:
        raise NotImplementedError


class LinearMap(Primitive):
    """Inputs (m, x) -> x^T m; x is a vector or a matrix of row vectors"""

    name = 'linear_map'

    def forward(self, m, x):
        return linear_map(m, x)

    def backward(self, inputs, output, cotangent):
        m, x = inputs
        if x.ndim == 1:
            d_m = np.outer(x, cotangent)
        else:
            d_m = x.T @ cotangent
        d_x = cotangent @ m.T
        return d_m, d_x


class ModeProduct(Primitive):
    """Inputs (t, v) -> t x_mode v for a rank-3 tensor t"""

    name = 'mode_product'

    def __init__(self, mode: int):
        self.mode = mode

    def forward(self, t, v):
        return mode_n_vector_product(t, v, self.mode).numpy()

    def backward(self, inputs, output, cotangent):
        t, v = inputs
        axis = self.mode - 1
        d_t = np.moveaxis(np.multiply.outer(v, cotangent), 0, axis)
        remaining = [a for a in range(3) if a != axis]
        d_v = np.tensordot(t, cotangent, axes=(remaining, [0, 1]))
        return d_t, d_v


class Tanh(Primitive):
    name = 'tanh'

    def forward(self, x):
        return tanh_map(x)

    def backward(self, inputs, output, cotangent):
        return (cotangent * (1.0 - output ** 2),)


class Softmax(Primitive):
    """Softmax over the last axis (each row of a matrix independently)"""

    name = 'softmax'

    def forward(self, logits):
        return softmax(logits)

    def backward(self, inputs, output, cotangent):
        inner = np.sum(cotangent * output, axis=-1, keepdims=True)
        return (output * (cotangent - inner),)


class Transpose(Primitive):
    name = 'transpose'

    def forward(self, x):
        if x.ndim != 2:
            raise ShapeMismatchError(f"transpose needs a matrix, got shape {x.shape}")
        return np.ascontiguousarray(x.T)

    def backward(self, inputs, output, cotangent):
        return (np.ascontiguousarray(cotangent.T),)


class Concat(Primitive):
    name = 'concat'

    def forward(self, a, b):
        return concat_vectors(a, b)

    def backward(self, inputs, output, cotangent):
        a, b = inputs
        return cotangent[:a.size].reshape(a.shape), cotangent[a.size:].reshape(b.shape)


class WeightedSum(Primitive):
    """Inputs (weights [g x L], features [L x n_v]) -> glimpse-major pooled vector of g*n_v"""

    name = 'weighted_sum'

    def forward(self, weights, features):
        if weights.ndim != 2 or features.ndim != 2 or weights.shape[1] != features.shape[0]:
            raise ShapeMismatchError(
                f"weights {weights.shape} do not match features {features.shape}"
            )
        return (weights @ features).reshape(-1)

    def backward(self, inputs, output, cotangent):
        weights, features = inputs
        pooled = cotangent.reshape(weights.shape[0], features.shape[1])
        return pooled @ features.T, weights.T @ pooled


class SoftmaxCrossEntropy(Primitive):
    """Inputs (logits,) -> -log softmax(logits)[target] as a 0-d array"""

    name = 'cross_entropy'

    def __init__(self, target: int):
        self.target = int(target)

    def forward(self, logits):
        logits = np.asarray(logits, dtype=np.float64)
        if logits.ndim != 1:
            raise ShapeMismatchError(f"cross-entropy needs a logit vector, got shape {logits.shape}")
        if not 0 <= self.target < logits.shape[0]:
            raise ValueError(f"target {self.target} out of range for {logits.shape[0]} classes")
        if not np.all(np.isfinite(logits)):
            raise NonFiniteError("cross-entropy received non-finite logits")
        top = np.max(logits)
        log_norm = top + np.log(np.sum(np.exp(logits - top)))
        return np.asarray(log_norm - logits[self.target])

    def backward(self, inputs, output, cotangent):
        (logits,) = inputs
        d_logits = softmax(logits)
        d_logits[self.target] -= 1.0
        return (d_logits * cotangent,)


LINEAR = LinearMap()
TANH = Tanh()
SOFTMAX = Softmax()
TRANSPOSE = Transpose()
CONCAT = Concat()
WEIGHTED_SUM = WeightedSum()


@dataclass
class TraceNode:
    name: str
    primitive: Primitive
    inputs: Tuple[np.ndarray, ...]
    output: np.ndarray


class Trace:
    """
    Record of one forward evaluation of a fixed-topology graph

    Composite code calls `apply` in forward order and `vjp` in reverse order;
    every node is addressed by a unique dotted name such as `image.fusion.q_proj`.
    """

    def __init__(self):
        self.nodes: Dict[str, TraceNode] = {}

    def apply(self, name: str, primitive: Primitive, *inputs: Any) -> np.ndarray:
        if name in self.nodes:
            raise ValueError(f"Duplicate trace node '{name}'")

        arrays = tuple(np.asarray(x, dtype=np.float64) for x in inputs)
        try:
            output = primitive.forward(*arrays)
        except NonFiniteError as e:
            raise NonFiniteError(f"node '{name}': {e}") from e
        except ShapeMismatchError as e:
            raise ShapeMismatchError(f"node '{name}': {e}") from e

        output = np.asarray(output, dtype=np.float64)
        if not np.all(np.isfinite(output)):
            raise NonFiniteError(f"node '{name}' ({primitive.name}) produced non-finite output")

        self.nodes[name] = TraceNode(name, primitive, arrays, output)
        return output

    def output(self, name: str) -> np.ndarray:
        return self.nodes[name].output

    def vjp(self, name: str, cotangent: Any) -> Tuple[np.ndarray, ...]:
        node = self.nodes[name]
        cotangent = np.asarray(cotangent, dtype=np.float64)
        if cotangent.shape != node.output.shape:
            raise ShapeMismatchError(
                f"node '{name}': cotangent shape {cotangent.shape} != output shape {node.output.shape}"
            )

        grads = node.primitive.backward(node.inputs, node.output, cotangent)
        for x, g in zip(node.inputs, grads):
            if np.shape(g) != x.shape:
                raise ShapeMismatchError(
                    f"node '{name}': input cotangent shape {np.shape(g)} != input shape {x.shape}"
                )
        return grads


class DifferentiableGraph(Protocol):
    """What forward_backward needs from a model"""

    def parameters(self) -> Dict[str, np.ndarray]:
        ...

    def with_parameters(self, params: Dict[str, np.ndarray]) -> 'DifferentiableGraph':
        ...

    def build_loss(self, trace: Trace, example: Any) -> float:
        ...

    def backprop(self, trace: Trace) -> Dict[str, np.ndarray]:
        ...


def evaluate_loss(graph: DifferentiableGraph, params: Dict[str, np.ndarray], example: Any) -> float:
    """Forward pass only"""
    return float(graph.with_parameters(params).build_loss(Trace(), example))


def forward_backward(graph: DifferentiableGraph, params: Dict[str, np.ndarray],
                     example: Any) -> Tuple[float, Dict[str, np.ndarray]]:
    """
    Loss and gradient of every parameter for one example

    Raises:
        NonFiniteError: a node produced NaN/Inf (the message names the node)
        ShapeMismatchError: an input or parameter does not conform
    """
    bound = graph.with_parameters(params)
    trace = Trace()
    loss = float(bound.build_loss(trace, example))
    if not np.isfinite(loss):
        raise NonFiniteError(f"non-finite loss {loss}")

    grads = bound.backprop(trace)
    if set(grads) != set(params):
        missing = sorted(set(params) - set(grads))
        raise ShapeMismatchError(f"backprop did not produce gradients for {missing}")
    for name, value in params.items():
        if grads[name].shape != value.shape:
            raise ShapeMismatchError(
                f"gradient of '{name}' has shape {grads[name].shape}, parameter has {value.shape}"
            )
    return loss, grads


def batch_forward_backward(graph: DifferentiableGraph, params: Dict[str, np.ndarray],
                           examples: Sequence[Any],
                           threads: int = 1) -> Tuple[float, Dict[str, np.ndarray]]:
    """
    Mean loss and mean gradients over a batch

    Per-example work may run on a thread pool; the reduction always sums in
    example order, so the result does not depend on the thread count.
    """
    if len(examples) == 0:
        raise ValueError("Cannot differentiate an empty batch")

    if threads > 1:
        results: List[Tuple[float, Dict[str, np.ndarray]]] = Parallel(
            n_jobs=threads, backend='threading'
        )(delayed(forward_backward)(graph, params, example) for example in examples)
    else:
        results = [forward_backward(graph, params, example) for example in examples]

    total_loss = 0.0
    totals = {name: np.zeros_like(value) for name, value in params.items()}
    for loss, grads in results:
        total_loss += loss
        for name in totals:
            totals[name] += grads[name]

    count = len(results)
    return total_loss / count, {name: total / count for name, total in totals.items()}
