"""Reverse-mode automatic differentiation over dense float64 matrices.

A :class:`Tape` is an append-only list of :class:`Node` objects. Every value
is a 2-D array (vectors are columns, scalars are 1x1). Operations whose inputs
carry no tape are evaluated eagerly and leave no graph behind, so the same
filtering code serves both training (taped) and evaluation (untaped).

Example
-------
>>> tape = Tape()
>>> x = tape.leaf([[1.0], [2.0]])
>>> y = scale(reduce_sumsq(x), 0.5)
>>> tape.backward(y)[x.id].ravel().tolist()
[1.0, 2.0]
"""
import numbers

import numpy as np

from ..exceptions import NonScalarRoot, ShapeError
from .primitives import PRIMITIVES


def as_matrix(value):
    """Coerce scalars, 1-D and 2-D inputs to a 2-D float64 array."""
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        return arr.reshape(1, 1)
    if arr.ndim == 1:
        return arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ShapeError(f"expected at most 2 dimensions, got {arr.ndim}")
    return arr


class Node:
    """A value on (or off) a tape.

    Untaped nodes have ``tape is None`` and ``id == -1``.
    """

    __slots__ = ("id", "value", "op", "parents", "attrs", "cache", "tape", "adjoint")
    __array_priority__ = 100  # make numpy defer to our reflected operators

    def __init__(self, value, op="const", parents=(), attrs=None, cache=None, tape=None, id=-1):
        self.value = value
        self.op = op
        self.parents = parents
        self.attrs = attrs
        self.cache = cache
        self.tape = tape
        self.id = id
        self.adjoint = None

    @property
    def shape(self):
        return self.value.shape

    @property
    def T(self):
        return transpose(self)

    def __repr__(self):
        where = f"#{self.id}" if self.tape is not None else "untaped"
        return f"Node({self.op}, {where}, shape={self.value.shape})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __neg__(self):
        return negate(self)

    def __mul__(self, other):
        if isinstance(other, numbers.Real):
            return scale(self, float(other))
        other = _lift(other, self.tape)
        if other.shape == (1, 1) and self.shape != (1, 1):
            return scale(self, other)
        if self.shape == (1, 1) and other.shape != (1, 1):
            return scale(other, self)
        return hadamard(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        if isinstance(other, numbers.Real):
            return scale(self, 1.0 / float(other))
        return self * reciprocal(other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)


class Tape:
    """Append-only record of primitive applications."""

    def __init__(self):
        self.nodes = []
        self.leaves = []

    def __len__(self):
        return len(self.nodes)

    def _append(self, node):
        node.id = len(self.nodes)
        node.tape = self
        self.nodes.append(node)
        return node

    def leaf(self, value, name=None):
        """Register a differentiable parameter."""
        node = self._append(Node(as_matrix(value).copy(), op="leaf", attrs={"name": name}))
        self.leaves.append(node.id)
        return node

    def const(self, value):
        return self._append(Node(as_matrix(value), op="const"))

    def record(self, kind, inputs, attrs=None):
        """Apply primitive ``kind`` to tape nodes ``inputs`` and append the result."""
        forward = PRIMITIVES[kind][0]
        attrs = attrs or {}
        value, cache = forward([n.value for n in inputs], attrs)
        return self._append(
            Node(value, op=kind, parents=tuple(n.id for n in inputs), attrs=attrs, cache=cache)
        )

    def reset_adjoints(self):
        for node in self.nodes:
            node.adjoint = None

    def backward(self, root):
        """Adjoints of the scalar ``root`` with respect to every leaf.

        Returns a dict ``leaf id -> array``. Leaves that do not influence
        ``root`` get zeros. Only leaf adjoints are kept on the nodes afterwards.
        """
        if root.tape is not self:
            raise ValueError("root does not belong to this tape")
        if root.value.shape != (1, 1):
            raise NonScalarRoot(f"root must be 1x1, got {root.value.shape}")
        self.reset_adjoints()
        nodes = self.nodes
        root.adjoint = np.ones((1, 1))
        for i in range(root.id, -1, -1):
            node = nodes[i]
            g = node.adjoint
            if g is None or not node.parents:
                continue
            vjp = PRIMITIVES[node.op][1]
            parents = [nodes[p] for p in node.parents]
            grads = vjp(g, [p.value for p in parents], node.value, node.attrs, node.cache)
            for parent, gp in zip(parents, grads):
                if gp is None or parent.op == "const":
                    continue
                parent.adjoint = gp if parent.adjoint is None else parent.adjoint + gp
            if node.op != "leaf":
                node.adjoint = None
        out = {}
        for lid in self.leaves:
            leaf = nodes[lid]
            if leaf.adjoint is None:
                leaf.adjoint = np.zeros_like(leaf.value)
            out[lid] = leaf.adjoint
        return out

    def replay(self):
        """Recompute every forward value from leaves and constants.

        Returns the list of recomputed values, index-aligned with ``nodes``.
        """
        values = []
        for node in self.nodes:
            if not node.parents and node.op in ("leaf", "const"):
                values.append(node.value)
                continue
            forward = PRIMITIVES[node.op][0]
            value, _ = forward([values[p] for p in node.parents], node.attrs)
            values.append(value)
        return values

    def replay_matches(self):
        return all(np.array_equal(a, n.value) for a, n in zip(self.replay(), self.nodes))


def _lift(x, tape):
    if isinstance(x, Node):
        if x.tape is None and tape is not None:
            return tape.const(x.value)
        return x
    if tape is None:
        return Node(as_matrix(x))
    return tape.const(x)


def _apply(kind, inputs, attrs=None):
    tape = None
    for x in inputs:
        if isinstance(x, Node) and x.tape is not None:
            if tape is not None and x.tape is not tape:
                raise ValueError("operands live on different tapes")
            tape = x.tape
    nodes = [_lift(x, tape) for x in inputs]
    if tape is not None:
        return tape.record(kind, nodes, attrs)
    attrs = attrs or {}
    value, _ = PRIMITIVES[kind][0]([n.value for n in nodes], attrs)
    return Node(value, op=kind)


def constant(value):
    """An untaped node (no gradient flows into it)."""
    return Node(as_matrix(value))


def detach(x):
    return Node(x.value if isinstance(x, Node) else as_matrix(x))


def value_of(x):
    return x.value if isinstance(x, Node) else as_matrix(x)


def add(a, b):
    return _apply("add", (a, b))


def sub(a, b):
    return _apply("sub", (a, b))


def negate(a):
    return _apply("negate", (a,))


def scale(a, c):
    """``c * a`` for a Python float ``c`` or a 1x1 node ``c``."""
    if isinstance(c, numbers.Real):
        return _apply("scale", (a,), {"c": float(c)})
    return _apply("scale", (a, c))


def hadamard(a, b):
    return _apply("hadamard", (a, b))


def matmul(a, b):
    return _apply("matmul", (a, b))


def transpose(a):
    return _apply("transpose", (a,))


def gather_rows(a, idx):
    """Rows ``idx`` of ``a`` (result has ``len(idx)`` rows)."""
    idx = np.asarray(idx, dtype=np.intp).ravel()
    unique = len(np.unique(idx)) == len(idx)
    return _apply("gather_rows", (a,), {"idx": idx, "unique": unique})


def concat_cols(items):
    return _apply("concat_cols", tuple(items))


def reshape(a, shape):
    return _apply("reshape", (a,), {"shape": (int(shape[0]), int(shape[1]))})


def sum(a):  # noqa: A001 - mirrors the primitive name
    return _apply("sum", (a,))


def mean(a):
    return _apply("mean", (a,))


def reduce_sumsq(a):
    return _apply("reduce_sumsq", (a,))


def cholesky_solve_psd(s, y):
    """``S^{-1} y`` for symmetric positive definite ``S``."""
    return _apply("cholesky_solve_psd", (s, y))


def logdet_psd(s):
    return _apply("logdet_psd", (s,))


def sigmoid(a):
    return _apply("sigmoid", (a,))


def softplus(a):
    return _apply("softplus", (a,))


def abs(a):  # noqa: A001
    return _apply("abs", (a,))


def exp(a):
    return _apply("exp", (a,))


def log(a):
    return _apply("log", (a,))


def sqrt(a):
    return _apply("sqrt", (a,))


def reciprocal(a):
    return _apply("reciprocal", (a,))


def gelu(a):
    return _apply("gelu", (a,))


def record(tape, kind, inputs, attrs=None):
    """Low-level entry point: apply ``kind`` to nodes already on ``tape``."""
    if kind not in PRIMITIVES:
        raise KeyError(f"unknown primitive {kind!r}")
    return tape.record(kind, list(inputs), attrs)
