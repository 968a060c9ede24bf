"""Define-by-run reverse-mode differentiation tape.

The tape records one node per executed operation; nodes are appended in
execution order, so topological order holds by construction and a single
reverse sweep propagates adjoints. Tapes are rebuilt per forward pass and are
confined to one worker; leaf parameters may be shared read-only across
workers, each running its own tape.
"""

from __future__ import annotations

import numpy as np

from ..exceptions import DetachedOutput, NotScalar, UnknownAttribute

_PRECISION_DTYPES = {"single": np.float32, "double": np.float64}

_ACTIVE_TAPES: list["Tape"] = []


def active_tape() -> "Tape | None":
    return _ACTIVE_TAPES[-1] if _ACTIVE_TAPES else None


class _Node:
    __slots__ = ("node_id", "kind", "input_ids", "backward_fn")

    def __init__(self, node_id, kind, input_ids, backward_fn):
        self.node_id = node_id
        self.kind = kind
        self.input_ids = input_ids
        self.backward_fn = backward_fn


class Tensor:
    """n-dimensional float array, optionally attached to the active tape.

    A tensor with ``requires_grad=False`` never receives a gradient buffer;
    it participates in graphs only as a constant.
    """

    __slots__ = ("data", "requires_grad", "node_id", "tape")

    def __init__(self, data, requires_grad=False, dtype=None):
        if dtype is None and not (
            isinstance(data, np.ndarray) and data.dtype in (np.float32, np.float64)
        ):
            dtype = np.float64
        self.data = np.asarray(data, dtype=dtype) if dtype is not None else data
        self.requires_grad = bool(requires_grad)
        self.node_id = None
        self.tape = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def item(self):
        return float(self.data.reshape(-1)[0])

    def __repr__(self):
        return (
            f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, "
            f"requires_grad={self.requires_grad})"
        )

    # Operator sugar resolves through the ops module (imported lazily to
    # avoid a module cycle).
    def _ops(self):
        from . import ops

        return ops

    def __add__(self, other):
        return self._ops().add(self, _lift(other, self.dtype))

    def __radd__(self, other):
        return self._ops().add(_lift(other, self.dtype), self)

    def __sub__(self, other):
        return self._ops().sub(self, _lift(other, self.dtype))

    def __rsub__(self, other):
        return self._ops().sub(_lift(other, self.dtype), self)

    def __mul__(self, other):
        return self._ops().mul(self, _lift(other, self.dtype))

    def __rmul__(self, other):
        return self._ops().mul(_lift(other, self.dtype), self)

    def __truediv__(self, other):
        return self._ops().div(self, _lift(other, self.dtype))

    def __rtruediv__(self, other):
        return self._ops().div(_lift(other, self.dtype), self)

    def __neg__(self):
        return self._ops().scale(self, -1.0)

    def __matmul__(self, other):
        return self._ops().matmul(self, _lift(other, self.dtype))


def _lift(x, dtype):
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype))


def tensor(data, requires_grad=False, dtype=None):
    return Tensor(data, requires_grad=requires_grad, dtype=dtype)


def constant(data, dtype=None):
    return Tensor(data, requires_grad=False, dtype=dtype)


class Tape:
    """Append-only record of executed operations, usable as a context manager.

    ``precision`` fixes the element dtype every recorded operation must
    produce; single precision is meant for training throughput, double for
    gradient verification.
    """

    def __init__(self, precision="single"):
        if precision not in _PRECISION_DTYPES:
            raise UnknownAttribute(f"precision must be single or double, got {precision!r}")
        self.precision = precision
        self.dtype = _PRECISION_DTYPES[precision]
        self.nodes: list[_Node] = []
        self._leaf_meta: dict[int, tuple[tuple, np.dtype]] = {}
        self._needs_grad: list[bool] = []

    def __enter__(self):
        _ACTIVE_TAPES.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        popped = _ACTIVE_TAPES.pop()
        assert popped is self
        return False

    def __len__(self):
        return len(self.nodes)

    # ---------------------------------------------------------------- record

    def watch(self, t: Tensor) -> int:
        """Register ``t`` as a leaf; repeated calls reuse the same node."""
        if t.tape is self and t.node_id is not None:
            return t.node_id
        node_id = len(self.nodes)
        self.nodes.append(_Node(node_id, "leaf", (), None))
        self._needs_grad.append(t.requires_grad)
        t.node_id = node_id
        t.tape = self
        if t.requires_grad:
            self._leaf_meta[node_id] = (t.data.shape, t.data.dtype)
        return node_id

    def record(self, kind, inputs, out_data, backward_fn) -> Tensor:
        """Append an op node; inputs not yet on this tape are registered as leaves."""
        input_ids = tuple(
            self.watch(t) if (t.tape is not self or t.node_id is None) else t.node_id
            for t in inputs
        )
        out = Tensor(out_data)
        out.requires_grad = True
        out.node_id = len(self.nodes)
        out.tape = self
        self.nodes.append(_Node(out.node_id, kind, input_ids, backward_fn))
        self._needs_grad.append(True)
        return out

    # -------------------------------------------------------------- backward

    def backward(self, output: Tensor) -> dict[int, np.ndarray]:
        """Gradient of the scalar ``output`` with respect to every node.

        Returns a map node_id -> gradient array. Every requires_grad leaf
        registered on the tape appears in the map; leaves the output does not
        depend on get zero gradients.
        """
        if not isinstance(output, Tensor) or output.size != 1:
            raise NotScalar("backward requires a scalar output tensor")
        if output.tape is not self or output.node_id is None:
            raise DetachedOutput("output was not produced on this tape")

        grads: dict[int, np.ndarray] = {
            output.node_id: np.ones_like(output.data)
        }

        needs_grad = self._needs_grad

        def accumulate(node_id, g):
            # Constants (requires_grad False leaves) never get a buffer.
            if not needs_grad[node_id]:
                return
            prev = grads.get(node_id)
            grads[node_id] = g if prev is None else prev + g

        # Append order is topological, so one reverse sweep visits each node
        # exactly once.
        for node in reversed(self.nodes):
            if node.backward_fn is None:
                continue
            g = grads.get(node.node_id)
            if g is None:
                continue
            for input_id, input_grad in zip(node.input_ids, node.backward_fn(g)):
                if input_grad is not None:
                    accumulate(input_id, input_grad)

        for leaf_id, (shape, dtype) in self._leaf_meta.items():
            if leaf_id not in grads:
                grads[leaf_id] = np.zeros(shape, dtype=dtype)
        return grads

    def gradient(self, grads: dict[int, np.ndarray], t: Tensor) -> np.ndarray:
        """Look up the gradient for a leaf tensor, zero-filled if untouched."""
        if t.tape is not self or t.node_id is None or t.node_id not in grads:
            return np.zeros_like(t.data)
        return grads[t.node_id]


def backward(tape: Tape, output: Tensor) -> dict[int, np.ndarray]:
    """Module-level alias for :meth:`Tape.backward`."""
    return tape.backward(output)
