"""One-hidden-layer perceptron with analytic gradients and Adam.

All arithmetic is float64. Inputs may be a single feature vector or a batch
of row vectors.
"""

import math
import struct
from dataclasses import dataclass, field
from typing import BinaryIO, Dict, List, Sequence, Tuple

import numpy as np

from .errors import CheckpointError, NonFiniteError

PARAM_NAMES: Tuple[str, ...] = ("w1", "b1", "w2", "b2")

Gradients = Dict[str, np.ndarray]

CHECKPOINT_MAGIC = b"AOSNET\x00\x00"
CHECKPOINT_VERSION = 1


class Mlp:
    """``y = W2 relu(W1 x + b1) + b2``."""

    def __init__(self, w1: np.ndarray, b1: np.ndarray, w2: np.ndarray, b2: np.ndarray) -> None:
        self.w1 = np.asarray(w1, dtype=np.float64)
        self.b1 = np.asarray(b1, dtype=np.float64)
        self.w2 = np.asarray(w2, dtype=np.float64)
        self.b2 = np.asarray(b2, dtype=np.float64)
        hidden, inputs = self.w1.shape
        outputs = self.w2.shape[0]
        if self.b1.shape != (hidden,) or self.w2.shape != (outputs, hidden) or self.b2.shape != (outputs,):
            raise ValueError("inconsistent parameter shapes")

    @classmethod
    def initialize(
        cls, input_dim: int, hidden_dim: int, output_dim: int, rng: np.random.Generator
    ) -> "Mlp":
        """Glorot-uniform weights, zero biases."""
        limit1 = math.sqrt(6.0 / (input_dim + hidden_dim))
        limit2 = math.sqrt(6.0 / (hidden_dim + output_dim))
        return cls(
            rng.uniform(-limit1, limit1, (hidden_dim, input_dim)),
            np.zeros(hidden_dim),
            rng.uniform(-limit2, limit2, (output_dim, hidden_dim)),
            np.zeros(output_dim),
        )

    @classmethod
    def zeros(cls, input_dim: int, hidden_dim: int, output_dim: int) -> "Mlp":
        return cls(
            np.zeros((hidden_dim, input_dim)),
            np.zeros(hidden_dim),
            np.zeros((output_dim, hidden_dim)),
            np.zeros(output_dim),
        )

    @property
    def input_dim(self) -> int:
        return int(self.w1.shape[1])

    @property
    def hidden_dim(self) -> int:
        return int(self.w1.shape[0])

    @property
    def output_dim(self) -> int:
        return int(self.w2.shape[0])

    def parameters(self) -> Dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def copy(self) -> "Mlp":
        return Mlp(self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy())

    def load_from(self, other: "Mlp") -> None:
        """Overwrite parameters in place with a copy of ``other``'s."""
        for name in PARAM_NAMES:
            getattr(self, name)[...] = getattr(other, name)

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.input_dim or x.ndim not in (1, 2):
            raise ValueError(
                f"expected input of dimension {self.input_dim}, got shape {x.shape}"
            )
        return x

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = self._check_input(x)
        hidden = np.maximum(x @ self.w1.T + self.b1, 0.0)
        return hidden @ self.w2.T + self.b2

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)

    def backward(self, x: np.ndarray, upstream: np.ndarray) -> Gradients:
        """Parameter gradients of a scalar loss whose output gradient is
        ``upstream`` (same shape as ``forward(x)``)."""
        x = self._check_input(x)
        batch = np.atleast_2d(x)
        grad_out = np.atleast_2d(np.asarray(upstream, dtype=np.float64))
        if grad_out.shape != (batch.shape[0], self.output_dim):
            raise ValueError("upstream gradient does not match the output shape")

        pre = batch @ self.w1.T + self.b1
        hidden = np.maximum(pre, 0.0)
        grad_hidden = (grad_out @ self.w2) * (pre > 0.0)
        return {
            "w1": grad_hidden.T @ batch,
            "b1": grad_hidden.sum(axis=0),
            "w2": grad_out.T @ hidden,
            "b2": grad_out.sum(axis=0),
        }


@dataclass
class OptimizerState:
    """Adam moments for one network."""

    learning_rate: float = 3.0e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1.0e-8
    step: int = 0
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_net(
        cls,
        net: Mlp,
        learning_rate: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1.0e-8,
    ) -> "OptimizerState":
        params = net.parameters()
        return cls(
            learning_rate=learning_rate,
            beta1=beta1,
            beta2=beta2,
            eps=eps,
            first_moment={k: np.zeros_like(v) for k, v in params.items()},
            second_moment={k: np.zeros_like(v) for k, v in params.items()},
        )


def check_finite(grads: Gradients) -> None:
    for name, grad in grads.items():
        if not np.all(np.isfinite(grad)):
            raise NonFiniteError(f"non-finite gradient for {name}")


def optimizer_step(net: Mlp, grads: Gradients, opt: OptimizerState) -> None:
    """Bias-corrected Adam update of ``net`` in place.

    Raises :class:`NonFiniteError` before touching any parameter when a
    gradient is not finite.
    """
    check_finite(grads)
    if not opt.first_moment:
        fresh = OptimizerState.for_net(net, opt.learning_rate, opt.beta1, opt.beta2, opt.eps)
        opt.first_moment, opt.second_moment = fresh.first_moment, fresh.second_moment

    opt.step += 1
    correction1 = 1.0 - opt.beta1 ** opt.step
    correction2 = 1.0 - opt.beta2 ** opt.step
    for name in PARAM_NAMES:
        grad = grads[name]
        m = opt.first_moment[name]
        v = opt.second_moment[name]
        m *= opt.beta1
        m += (1.0 - opt.beta1) * grad
        v *= opt.beta2
        v += (1.0 - opt.beta2) * grad * grad
        param = getattr(net, name)
        param -= opt.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + opt.eps)


def add_gradients(first: Gradients, second: Gradients) -> Gradients:
    return {name: first[name] + second[name] for name in PARAM_NAMES}


@dataclass(frozen=True)
class Checkpoint:
    agent_type: str
    nets: List[Mlp]


def _write_net(handle: BinaryIO, net: Mlp) -> None:
    handle.write(struct.pack("<III", net.input_dim, net.hidden_dim, net.output_dim))
    for name in PARAM_NAMES:
        handle.write(np.ascontiguousarray(getattr(net, name), dtype="<f8").tobytes())


def _read_exact(handle: BinaryIO, size: int, path: str) -> bytes:
    data = handle.read(size)
    if len(data) != size:
        raise CheckpointError(f"{path}: truncated checkpoint")
    return data


def _read_net(handle: BinaryIO, path: str) -> Mlp:
    inputs, hidden, outputs = struct.unpack("<III", _read_exact(handle, 12, path))
    shapes = {
        "w1": (hidden, inputs),
        "b1": (hidden,),
        "w2": (outputs, hidden),
        "b2": (outputs,),
    }
    params = {}
    for name in PARAM_NAMES:
        count = int(np.prod(shapes[name]))
        raw = _read_exact(handle, 8 * count, path)
        params[name] = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shapes[name])
    return Mlp(**params)


def save_checkpoint(path: str, nets: Sequence[Mlp], agent_type: str = "mlp") -> None:
    """Write ``nets`` under an agent-type header."""
    label = agent_type.encode("utf-8")
    with open(path, "wb") as handle:
        handle.write(CHECKPOINT_MAGIC)
        handle.write(struct.pack("<HH", CHECKPOINT_VERSION, len(label)))
        handle.write(label)
        handle.write(struct.pack("<H", len(nets)))
        for net in nets:
            _write_net(handle, net)


def load_checkpoint(path: str) -> Checkpoint:
    try:
        handle = open(path, "rb")
    except FileNotFoundError:
        raise CheckpointError(f"checkpoint not found at {path}") from None
    with handle:
        if _read_exact(handle, len(CHECKPOINT_MAGIC), path) != CHECKPOINT_MAGIC:
            raise CheckpointError(f"{path}: not a parameter checkpoint")
        version, label_size = struct.unpack("<HH", _read_exact(handle, 4, path))
        if version != CHECKPOINT_VERSION:
            raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
        agent_type = _read_exact(handle, label_size, path).decode("utf-8")
        (count,) = struct.unpack("<H", _read_exact(handle, 2, path))
        nets = [_read_net(handle, path) for _ in range(count)]
    return Checkpoint(agent_type=agent_type, nets=nets)
