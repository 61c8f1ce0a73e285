from typing import Callable, Union

import numpy as np

from diveq.autodiff.tensor import (
    Tape,
    Tensor,
    backward,
    recording_stop_gradients,
    replaying_stop_gradients,
)
from diveq.utils.checks import NonFiniteError, ShapeError


def _scalar(output, where: str) -> float:
    value = output.data if isinstance(output, Tensor) else np.asarray(output, np.float64)
    if value.size != 1:
        raise ShapeError(where, [value.shape], "the checked function must return a scalar")
    return float(value.reshape(-1)[0])


def check_gradient(
    f: Callable[[Tensor], Tensor],
    point: Union[Tensor, np.ndarray],
    h: float = 1e-5,
    freeze_stop_gradients: bool = True,
    atol: float = 1e-8,
) -> float:
    r"""Compares the analytic gradient of ``f`` against central differences

    The error of coordinate $k$ is

    $$
    e_k = \frac{|a_k - n_k|}{|n_k| + 10^{-12}}, \quad
    n_k = \frac{f(x + h e_k) - f(x - h e_k)}{2h}
    $$

    and the maximum over coordinates is returned. Coordinates where
    $|a_k - n_k| \leq$ ``atol`` count as exact: the central difference of a
    coordinate whose true derivative is zero carries roundoff of order
    $\epsilon f / h$, around $10^{-11}$ for unit-scale values, and the
    relative error of that noise against $10^{-12}$ would be meaningless.
    ``atol=0`` disables the floor.

    Parameters
    ----------
    f : Callable[[Tensor], Tensor]
        Scalar function, deterministic under a frozen noise seed.
    point : Union[Tensor, np.ndarray]
        Where the gradient is evaluated.
    h : float, optional
        Finite-difference step.
    freeze_stop_gradients : bool, optional
        Hold every stop-gradient value, straight-through offset and
        nearest-neighbour selection of the base evaluation constant in the
        perturbed evaluations. A latent within $h$ of a selection boundary
        then keeps its codeword or segment, as the analytic gradient does.
    atol : float, optional
        Absolute agreement below which a coordinate error is zero.

    Returns
    -------
    float
        Maximum relative error.
    """
    base = np.array(point.data if isinstance(point, Tensor) else point, dtype=np.float64)

    with recording_stop_gradients(enabled=freeze_stop_gradients) as frozen:
        leaf = Tensor(base.copy(), requires_grad=True, name="point")
        with Tape() as tape:
            output = f(leaf)
        _scalar(output, "check_gradient")
        if isinstance(output, Tensor) and tape.records:
            analytic = backward(tape, output)[leaf]
        else:
            analytic = np.zeros_like(base)

    def evaluate(values: np.ndarray) -> float:
        with replaying_stop_gradients(frozen, enabled=freeze_stop_gradients):
            return _scalar(f(Tensor(values)), "check_gradient")

    numeric = np.zeros_like(base)
    for coordinate in np.ndindex(base.shape):
        if not np.isfinite(analytic[coordinate]):
            raise NonFiniteError("analytic gradient", coordinate)
        shifted = base.copy()
        shifted[coordinate] += h
        upper = evaluate(shifted)
        shifted[coordinate] -= 2 * h
        lower = evaluate(shifted)
        if not (np.isfinite(upper) and np.isfinite(lower)):
            raise NonFiniteError("central difference", coordinate)
        numeric[coordinate] = (upper - lower) / (2 * h)

    gap = np.abs(analytic - numeric)
    errors = gap / (np.abs(numeric) + 1e-12)
    errors[gap <= atol] = 0.0
    return float(errors.max()) if errors.size else 0.0
