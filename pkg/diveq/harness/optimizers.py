from abc import ABCMeta, abstractmethod
from typing import Dict, List

import catalogue
import numpy as np

from diveq.autodiff import Gradients, Tensor

optimizers = catalogue.create("diveq", "optimizers")


class Optimizer(metaclass=ABCMeta):
    """Updates trainable tensors in place from their cotangents

    Parameters
    ----------
    parameters : List[Tensor]
        Leaves updated by ``step``.
    learning_rate : float
        Current learning rate, rewritten by the trainer at every epoch.
    """

    def __init__(self, parameters: List[Tensor], learning_rate: float):
        self.parameters = list(parameters)
        self.learning_rate = learning_rate

    @abstractmethod
    def direction(self, position: int, grad: np.ndarray) -> np.ndarray:
        """Update direction of parameter ``position``, scaled by the learning rate in ``step``"""

    def step(self, gradients: Gradients) -> None:
        for position, parameter in enumerate(self.parameters):
            parameter.data -= self.learning_rate * self.direction(position, gradients[parameter])

    def reset_state(self, parameter: Tensor, rows: np.ndarray = None) -> None:
        """Forgets the optimizer state of ``parameter``, or of some of its rows"""

    def _position(self, parameter: Tensor) -> int:
        for position, candidate in enumerate(self.parameters):
            if candidate is parameter:
                return position
        raise ValueError("Tensor {} is not optimized".format(parameter))


@optimizers.register("sgd")
class SGD(Optimizer):
    def direction(self, position: int, grad: np.ndarray) -> np.ndarray:
        return grad


@optimizers.register("adam")
class Adam(Optimizer):
    r"""Adaptive moments

    $$
    m \leftarrow \beta_1 m + (1 - \beta_1) g, \quad
    v \leftarrow \beta_2 v + (1 - \beta_2) g^2, \quad
    \Delta = \frac{\hat{m}}{\sqrt{\hat{v}} + \epsilon}
    $$

    with bias-corrected $\hat{m}$ and $\hat{v}$.
    """

    def __init__(
        self,
        parameters: List[Tensor],
        learning_rate: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
    ):
        super().__init__(parameters, learning_rate)
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.moments: Dict[int, np.ndarray] = {}
        self.squares: Dict[int, np.ndarray] = {}
        self.steps: Dict[int, int] = {}

    def direction(self, position: int, grad: np.ndarray) -> np.ndarray:
        if position not in self.moments:
            self.moments[position] = np.zeros_like(grad)
            self.squares[position] = np.zeros_like(grad)
            self.steps[position] = 0
        self.steps[position] += 1
        step = self.steps[position]
        self.moments[position] = self.beta1 * self.moments[position] + (1 - self.beta1) * grad
        self.squares[position] = self.beta2 * self.squares[position] + (1 - self.beta2) * grad**2
        moment = self.moments[position] / (1 - self.beta1**step)
        square = self.squares[position] / (1 - self.beta2**step)
        return moment / (np.sqrt(square) + self.epsilon)

    def reset_state(self, parameter: Tensor, rows: np.ndarray = None) -> None:
        position = self._position(parameter)
        if position not in self.moments:
            return
        if rows is None:
            del self.moments[position], self.squares[position], self.steps[position]
            return
        self.moments[position][rows] = 0.0
        self.squares[position][rows] = 0.0
