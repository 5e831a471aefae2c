"""Dense float64 tensors with a reverse-mode tape, Adadelta and gradient clipping.

Every op returns a new :class:`Tensor` holding a closure that pushes its
output gradient back to its inputs.  ``backward`` walks the graph in reverse
topological order.  Arrays are numpy; nothing here knows about SRL.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np


class ShapeError(ValueError):
    pass


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_done", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None,
                 _parents: tuple = (), _backward: Callable | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in _parents)
        self._parents = _parents
        self._backward = _backward
        self._done = False
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape})"

    def __len__(self) -> int:
        return len(self.data)

    # operator sugar for the common cases
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return hadamard(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _accum(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.array(g, dtype=np.float64, copy=True)
    else:
        t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, ext in enumerate(shape):
        if ext == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def _result(data, parents: tuple, backward: Callable) -> Tensor:
    return Tensor(data, _parents=parents, _backward=backward)


# ---------------------------------------------------------------------------
# forward ops


def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim not in (1, 2) or b.data.ndim != 2 or a.shape[-1] != b.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    out = _result(a.data @ b.data, (a, b), None)

    def backward():
        g = out.grad
        if a.requires_grad:
            _accum(a, g @ b.data.T)
        if b.requires_grad:
            _accum(b, np.outer(a.data, g) if a.data.ndim == 1 else a.data.T @ g)

    out._backward = backward
    return out


def _check_broadcast(op: str, a: Tensor, b: Tensor) -> tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from None


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast("add", a, b)
    out = _result(a.data + b.data, (a, b), None)

    def backward():
        _accum(a, _unbroadcast(out.grad, a.shape))
        _accum(b, _unbroadcast(out.grad, b.shape))

    out._backward = backward
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast("sub", a, b)
    out = _result(a.data - b.data, (a, b), None)

    def backward():
        _accum(a, _unbroadcast(out.grad, a.shape))
        _accum(b, _unbroadcast(-out.grad, b.shape))

    out._backward = backward
    return out


def hadamard(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_broadcast("hadamard", a, b)
    out = _result(a.data * b.data, (a, b), None)

    def backward():
        if a.requires_grad:
            _accum(a, _unbroadcast(out.grad * b.data, a.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(out.grad * a.data, b.shape))

    out._backward = backward
    return out


def one_minus(a: Tensor) -> Tensor:
    out = _result(1.0 - a.data, (a,), None)
    out._backward = lambda: _accum(a, -out.grad)
    return out


def scale(a: Tensor, c: float) -> Tensor:
    out = _result(a.data * c, (a,), None)
    out._backward = lambda: _accum(a, out.grad * c)
    return out


def concat(parts: Sequence[Tensor], axis: int = -1) -> Tensor:
    parts = [_as_tensor(p) for p in parts]
    if not parts:
        raise ShapeError("concat: no inputs")
    try:
        data = np.concatenate([p.data for p in parts], axis=axis)
    except ValueError as exc:
        raise ShapeError(f"concat: {exc}") from None
    sizes = np.cumsum([p.shape[axis] for p in parts])[:-1]
    out = _result(data, tuple(parts), None)

    def backward():
        for p, g in zip(parts, np.split(out.grad, sizes, axis=axis)):
            _accum(p, g)

    out._backward = backward
    return out


def stack(rows: Sequence[Tensor]) -> Tensor:
    """Stack equal-shaped tensors along a new leading axis."""
    rows = [_as_tensor(r) for r in rows]
    if len({r.shape for r in rows}) != 1:
        raise ShapeError(f"stack: mixed shapes {[r.shape for r in rows]}")
    out = _result(np.stack([r.data for r in rows]), tuple(rows), None)

    def backward():
        for k, r in enumerate(rows):
            _accum(r, out.grad[k])

    out._backward = backward
    return out


def sigmoid(a: Tensor) -> Tensor:
    a = _as_tensor(a)
    x = a.data
    # split by sign so exp never overflows
    e = np.exp(-np.abs(x))
    s = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    out = _result(s, (a,), None)
    out._backward = lambda: _accum(a, out.grad * s * (1.0 - s))
    return out


def tanh(a: Tensor) -> Tensor:
    a = _as_tensor(a)
    t = np.tanh(a.data)
    out = _result(t, (a,), None)
    out._backward = lambda: _accum(a, out.grad * (1.0 - t * t))
    return out


def embedding_lookup(table: Tensor, ids) -> Tensor:
    """Rows of ``table``; a scalar id gives a vector, a list of ids a matrix."""
    if table.data.ndim != 2:
        raise ShapeError(f"embedding_lookup: table must be 2-d, got {table.shape}")
    idx = np.asarray(ids, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        raise ShapeError(f"embedding_lookup: id out of range for {table.shape[0]} rows")
    out = _result(table.data[idx], (table,), None)

    def backward():
        if table.requires_grad:
            g = np.zeros_like(table.data)
            np.add.at(g, idx, out.grad)
            _accum(table, g)

    out._backward = backward
    return out


def row(a: Tensor, i: int) -> Tensor:
    out = _result(a.data[i], (a,), None)

    def backward():
        if a.requires_grad:
            g = np.zeros_like(a.data)
            g[i] = out.grad
            _accum(a, g)

    out._backward = backward
    return out


def cols(a: Tensor, start: int, stop: int) -> Tensor:
    """Slice of the last axis."""
    out = _result(a.data[..., start:stop], (a,), None)

    def backward():
        if a.requires_grad:
            g = np.zeros_like(a.data)
            g[..., start:stop] = out.grad
            _accum(a, g)

    out._backward = backward
    return out


def elementwise_max(parts: Sequence[Tensor]) -> Tensor:
    """Coordinate-wise max over equal-shaped tensors (max pooling).

    Ties send the gradient to the first maximal input.
    """
    parts = [_as_tensor(p) for p in parts]
    if not parts or len({p.shape for p in parts}) != 1:
        raise ShapeError(f"elementwise_max: need equal shapes, got {[p.shape for p in parts]}")
    stacked = np.stack([p.data for p in parts])
    winner = np.argmax(stacked, axis=0)
    out = _result(stacked.max(axis=0), tuple(parts), None)

    def backward():
        for k, p in enumerate(parts):
            if p.requires_grad:
                _accum(p, np.where(winner == k, out.grad, 0.0))

    out._backward = backward
    return out


def log_softmax(a: Tensor) -> Tensor:
    """Normalize along the last axis."""
    a = _as_tensor(a)
    x = a.data
    shifted = x - x.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    y = shifted - lse
    out = _result(y, (a,), None)

    def backward():
        g = out.grad
        _accum(a, g - np.exp(y) * g.sum(axis=-1, keepdims=True))

    out._backward = backward
    return out


def pick(a: Tensor, idx: Sequence[int]) -> Tensor:
    """``a[k, idx[k]]`` for each row k of a matrix."""
    rows_ = np.arange(len(idx))
    idx = np.asarray(idx, dtype=np.int64)
    if a.data.ndim != 2 or len(idx) != a.shape[0]:
        raise ShapeError(f"pick: {len(idx)} indices for shape {a.shape}")
    out = _result(a.data[rows_, idx], (a,), None)

    def backward():
        if a.requires_grad:
            g = np.zeros_like(a.data)
            g[rows_, idx] = out.grad
            _accum(a, g)

    out._backward = backward
    return out


def total(a: Tensor) -> Tensor:
    out = _result(a.data.sum(), (a,), None)
    out._backward = lambda: _accum(a, np.broadcast_to(out.grad, a.shape))
    return out


def mean(a: Tensor) -> Tensor:
    return scale(total(a), 1.0 / a.data.size)


# ---------------------------------------------------------------------------
# reverse pass


class BackwardError(RuntimeError):
    pass


def _topological(root: Tensor) -> list[Tensor]:
    order, seen = [], set()
    stack_ = [(root, False)]
    while stack_:
        node, expanded = stack_.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack_.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack_.append((p, False))
    return order


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into every reachable leaf's ``grad``.

    A graph can be walked once; interior gradients are freed afterwards.
    """
    if loss.data.size != 1:
        raise ShapeError(f"backward: loss must be scalar, got shape {loss.shape}")
    if loss._done:
        raise BackwardError("backward already called on this graph")
    order = _topological(loss)
    for node in order:
        if node._backward is not None:
            node.grad = None
    loss.grad = np.ones_like(loss.data)
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward()
    for node in order:
        if node._backward is not None:
            node.grad = None
            node._done = True


# ---------------------------------------------------------------------------
# parameters


@dataclass
class ParameterStore:
    """Named trainable tensors plus Adadelta running averages."""

    params: dict[str, Tensor] = field(default_factory=dict)
    sq_grad: dict[str, np.ndarray] = field(default_factory=dict)
    sq_update: dict[str, np.ndarray] = field(default_factory=dict)

    def add(self, name: str, value) -> Tensor:
        if name in self.params:
            raise KeyError(f"duplicate parameter {name!r}")
        t = Tensor(np.array(value, dtype=np.float64), requires_grad=True, name=name)
        self.params[name] = t
        self.sq_grad[name] = np.zeros_like(t.data)
        self.sq_update[name] = np.zeros_like(t.data)
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def __iter__(self):
        return iter(self.params)

    def items(self):
        return self.params.items()

    def zero_grad(self) -> None:
        for t in self.params.values():
            t.grad = np.zeros_like(t.data)

    def snapshot(self) -> dict[str, np.ndarray]:
        return {k: t.data.copy() for k, t in self.params.items()}

    def restore(self, values: dict[str, np.ndarray]) -> None:
        for k, v in values.items():
            self.params[k].data = np.array(v, dtype=np.float64)

    def grad_norm(self) -> float:
        return math.sqrt(sum(float((t.grad ** 2).sum()) for t in self.params.values()
                             if t.grad is not None))


def clip_global_norm(store: ParameterStore, max_norm: float = 1.0) -> float:
    """Rescale all gradients so their joint L2 norm is at most ``max_norm``."""
    norm = store.grad_norm()
    if norm <= max_norm:
        return 1.0
    factor = max_norm / norm
    for t in store.params.values():
        if t.grad is not None:
            t.grad *= factor
    return factor


def adadelta_step(store: ParameterStore, rho: float = 0.95, eps: float = 1e-6,
                  lr: float = 1.0) -> None:
    """One Adadelta update (Zeiler 2012) from the gradients currently held."""
    missing = [k for k, t in store.params.items() if t.grad is None]
    if missing:
        raise BackwardError(f"no gradient for parameters: {', '.join(missing)}")
    for name, t in store.params.items():
        g = t.grad
        acc_g = store.sq_grad[name]
        acc_g *= rho
        acc_g += (1.0 - rho) * g * g
        delta = -np.sqrt(store.sq_update[name] + eps) / np.sqrt(acc_g + eps) * g
        acc_u = store.sq_update[name]
        acc_u *= rho
        acc_u += (1.0 - rho) * delta * delta
        t.data = t.data + lr * delta


# ---------------------------------------------------------------------------
# gradient checking


@dataclass
class GradCheckReport:
    max_rel_error: dict[str, float]
    tol: float

    @property
    def worst(self) -> float:
        return max(self.max_rel_error.values(), default=0.0)

    @property
    def ok(self) -> bool:
        return self.worst < self.tol


def grad_check(f: Callable[[], Tensor], params: dict[str, Tensor] | ParameterStore,
               h: float = 1e-5, tol: float = 1e-4, floor: float = 1e-6,
               max_entries: int | None = None, rng: np.random.Generator | None = None
               ) -> GradCheckReport:
    """Compare taped gradients of ``f()`` against central differences.

    The relative error of one entry is ``|a - n| / max(|a|, |n|, floor)``.
    ``max_entries`` checks a random subset of each tensor's entries.
    """
    if isinstance(params, ParameterStore):
        params = params.params
    for t in params.values():
        t.grad = np.zeros_like(t.data)
    backward(f())
    analytic = {k: t.grad.copy() for k, t in params.items()}
    report = {}
    for name, t in params.items():
        flat = t.data.reshape(-1)
        entries = np.arange(flat.size)
        if max_entries is not None and flat.size > max_entries:
            rng = rng or np.random.default_rng(0)
            entries = rng.choice(flat.size, size=max_entries, replace=False)
        worst = 0.0
        a_flat = analytic[name].reshape(-1)
        for k in entries:
            orig = flat[k]
            flat[k] = orig + h
            fp = float(f().data)
            flat[k] = orig - h
            fm = float(f().data)
            flat[k] = orig
            num = (fp - fm) / (2 * h)
            a = a_flat[k]
            err = abs(a - num) / max(abs(a), abs(num), floor)
            worst = max(worst, err)
        report[name] = worst
    return GradCheckReport(report, tol)


# ---------------------------------------------------------------------------
# checkpoints

CHECKPOINT_FORMAT = "synsrl-params"
CHECKPOINT_VERSION = 1


def params_to_json(store: ParameterStore, meta: dict | None = None) -> str:
    """Serialize parameter values; Python float repr keeps the round-trip exact."""
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "meta": meta or {},
        "params": {
            name: {"shape": list(t.shape), "values": t.data.reshape(-1).tolist()}
            for name, t in store.params.items()
        },
    }
    return json.dumps(payload)


def params_from_json(text: str) -> tuple[ParameterStore, dict]:
    payload = json.loads(text)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError("not a parameter checkpoint")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {payload.get('version')}")
    store = ParameterStore()
    for name, entry in payload["params"].items():
        values = np.array(entry["values"], dtype=np.float64)
        shape = tuple(entry["shape"])
        if values.size != math.prod(shape):
            raise ValueError(f"parameter {name!r}: {values.size} values for shape {shape}")
        store.add(name, values.reshape(shape))
    return store, payload.get("meta", {})


# ---------------------------------------------------------------------------
# initializers


def uniform(rng: np.random.Generator, shape: Iterable[int], scale_: float) -> np.ndarray:
    return rng.uniform(-scale_, scale_, size=tuple(shape))


def glorot(rng: np.random.Generator, rows: int, cols_: int) -> np.ndarray:
    bound = math.sqrt(6.0 / (rows + cols_))
    return rng.uniform(-bound, bound, size=(rows, cols_))


def orthogonal(rng: np.random.Generator, rows: int, cols_: int) -> np.ndarray:
    """Orthogonal init via QR of a Gaussian matrix (Saxe et al.)."""
    a = rng.standard_normal((max(rows, cols_), min(rows, cols_)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    return q if rows >= cols_ else q.T
