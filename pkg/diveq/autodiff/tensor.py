import itertools
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from diveq.utils.checks import NonFiniteError, TapeUsageError

Pullback = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_tape_ids = itertools.count(1)
_local = threading.local()


def _tape_stack() -> List["Tape"]:
    if not hasattr(_local, "tapes"):
        _local.tapes = []
    return _local.tapes


def active_tape() -> Optional["Tape"]:
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tensor:
    """Dense float64 array taking part in reverse-mode differentiation

    Parameters
    ----------
    data : array-like
        Values, converted to a 64-bit float array.
    requires_grad : bool, optional
        Whether the tensor is a leaf whose cotangent is wanted.
    name : str, optional
        Label used in error messages and ``repr``.

    Attributes
    ----------
    tape_id: Optional[int]
        Identity of the tape that recorded the operation producing this tensor,
        ``None`` for leaves and constants.
    """

    __array_priority__ = 1000

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        name: str = None,
    ):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.name = name
        self.tape_id = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.size == 1 else float("nan")

    def __len__(self) -> int:
        return len(self.data)

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        grad = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor({np.array2string(self.data, precision=4)}{grad}{label})"

    def __add__(self, other):
        from diveq.autodiff.ops import add

        return add(self, other)

    def __radd__(self, other):
        from diveq.autodiff.ops import add

        return add(other, self)

    def __sub__(self, other):
        from diveq.autodiff.ops import sub

        return sub(self, other)

    def __rsub__(self, other):
        from diveq.autodiff.ops import sub

        return sub(other, self)

    def __mul__(self, other):
        from diveq.autodiff.ops import mul

        return mul(self, other)

    def __rmul__(self, other):
        from diveq.autodiff.ops import mul

        return mul(other, self)

    def __truediv__(self, other):
        from diveq.autodiff.ops import div

        return div(self, other)

    def __rtruediv__(self, other):
        from diveq.autodiff.ops import div

        return div(other, self)

    def __neg__(self):
        from diveq.autodiff.ops import neg

        return neg(self)

    def __matmul__(self, other):
        from diveq.autodiff.ops import matmul

        return matmul(self, other)

    def __rmatmul__(self, other):
        from diveq.autodiff.ops import matmul

        return matmul(other, self)


def as_tensor(value) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


@dataclass
class Record:
    primitive: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    pullback: Pullback


class Tape:
    """Ordered list of the operations recorded during one forward pass

    A tape records while it is the innermost active tape of the current thread.
    It can be consumed by a single ``backward`` call; running the forward pass
    again requires a new tape.

    Examples
    --------
    ```python
    from diveq.autodiff import Tape, Tensor, backward, square, total

    x = Tensor([1.0, 2.0], requires_grad=True)
    with Tape() as tape:
        loss = total(square(x))
    backward(tape, loss)[x]
    ```
    """

    def __init__(self):
        self.id = next(_tape_ids)
        self.records: List[Record] = []
        self.consumed = False

    def __enter__(self) -> "Tape":
        if self.consumed:
            raise TapeUsageError(
                "This tape has already been consumed by backward, please record a new one"
            )
        _tape_stack().append(self)
        return self

    def __exit__(self, *exc) -> None:
        _tape_stack().remove(self)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[Record]:
        return iter(self.records)


def record(
    primitive: str,
    inputs: Sequence[Tensor],
    value: np.ndarray,
    pullback: Pullback,
) -> Tensor:
    if not np.all(np.isfinite(value)):
        raise NonFiniteError(primitive)
    output = Tensor(value)
    tape = active_tape()
    if tape is not None and any(tensor.requires_grad for tensor in inputs):
        output.requires_grad = True
        output.tape_id = tape.id
        tape.records.append(Record(primitive, tuple(inputs), output, pullback))
    return output


class Gradients:
    """Cotangents of the leaves reached by a backward pass

    Indexing with a tensor that received no cotangent (a constant, a stopped
    value or an unused leaf) returns zeros of its shape.
    """

    def __init__(self, cotangents: Dict[int, Tuple[Tensor, np.ndarray]]):
        self._cotangents = cotangents

    def __getitem__(self, tensor: Tensor) -> np.ndarray:
        if id(tensor) in self._cotangents:
            return self._cotangents[id(tensor)][1]
        return np.zeros_like(tensor.data)

    def __contains__(self, tensor: Tensor) -> bool:
        return id(tensor) in self._cotangents

    def __len__(self) -> int:
        return len(self._cotangents)

    def items(self):
        return list(self._cotangents.values())


def backward(
    tape: Tape,
    output: Tensor,
    seed: np.ndarray = None,
) -> Gradients:
    """Propagates cotangents from ``output`` back to every leaf of ``tape``

    Parameters
    ----------
    tape : Tape
        Tape recorded during the forward pass producing ``output``.
    output : Tensor
        Terminal value, typically a scalar loss.
    seed : np.ndarray, optional
        Output cotangent, ones by default.

    Returns
    -------
    Gradients
        Mapping from leaf tensors to their cotangents.
    """
    if tape.consumed:
        raise TapeUsageError(
            "This tape has already been consumed by backward, please run the forward pass again"
        )
    if not tape.records:
        raise TapeUsageError(
            "The tape is empty: backward was called before any forward pass"
        )
    seed = np.ones_like(output.data) if seed is None else np.asarray(seed, np.float64)
    if seed.shape != output.shape:
        raise TapeUsageError(
            "Seed shape {} does not match output shape {}".format(
                seed.shape, output.shape
            )
        )
    tape.consumed = True
    if output.tape_id != tape.id:
        return Gradients({})

    cotangents: Dict[int, np.ndarray] = {id(output): seed}
    produced = {id(rec.output) for rec in tape.records}
    leaves: Dict[int, Tensor] = {}
    for rec in reversed(tape.records):
        grad_output = cotangents.pop(id(rec.output), None)
        if grad_output is None:
            continue
        grad_inputs = rec.pullback(grad_output)
        for tensor, grad in zip(rec.inputs, grad_inputs):
            if grad is None or not tensor.requires_grad:
                continue
            if id(tensor) not in produced:
                leaves[id(tensor)] = tensor
            if id(tensor) in cotangents:
                cotangents[id(tensor)] = cotangents[id(tensor)] + grad
            else:
                cotangents[id(tensor)] = np.array(grad, dtype=np.float64)

    return Gradients(
        {key: (tensor, cotangents[key]) for key, tensor in leaves.items()}
    )


def forward(expr: Callable[..., Tensor], *inputs) -> Tuple[Tensor, Tape]:
    """Evaluates a composed expression on a fresh tape

    Returns
    -------
    Tuple[Tensor, Tape]
        The forward value and the tape ready for ``backward``.
    """
    with Tape() as tape:
        output = expr(*inputs)
    return output, tape


# Stop-gradient freezing. While recording, every stopped value is stored in
# call order; while replaying, stopped values are read back instead of being
# computed, so that finite differences hold them constant.


def _sg_state():
    if not hasattr(_local, "sg_mode"):
        _local.sg_mode = None
        _local.sg_values = []
        _local.sg_cursor = 0
    return _local


@contextmanager
def recording_stop_gradients(enabled: bool = True):
    state = _sg_state()
    previous = (state.sg_mode, state.sg_values, state.sg_cursor)
    values: List[np.ndarray] = []
    if enabled:
        state.sg_mode, state.sg_values, state.sg_cursor = "record", values, 0
    try:
        yield values
    finally:
        state.sg_mode, state.sg_values, state.sg_cursor = previous


@contextmanager
def replaying_stop_gradients(values: List[np.ndarray], enabled: bool = True):
    state = _sg_state()
    previous = (state.sg_mode, state.sg_values, state.sg_cursor)
    if enabled:
        state.sg_mode, state.sg_values, state.sg_cursor = "replay", values, 0
    try:
        yield
    finally:
        state.sg_mode, state.sg_values, state.sg_cursor = previous


def freeze_value(value: np.ndarray) -> np.ndarray:
    state = _sg_state()
    if state.sg_mode == "record":
        state.sg_values.append(value.copy())
    elif state.sg_mode == "replay":
        if state.sg_cursor >= len(state.sg_values):
            raise TapeUsageError(
                "Replayed forward pass stopped more values than the recorded one"
            )
        frozen = state.sg_values[state.sg_cursor]
        state.sg_cursor += 1
        if frozen.shape != value.shape:
            raise TapeUsageError(
                "Replayed stop-gradient shape {} differs from recorded {}".format(
                    value.shape, frozen.shape
                )
            )
        return frozen.copy()
    return value


def is_replaying() -> bool:
    return _sg_state().sg_mode == "replay"
