from dataclasses import asdict, dataclass, field
from typing import List

import catalogue
import numpy as np

from diveq.autodiff import Tensor, add, as_tensor, matmul, relu, tanh
from diveq.utils.checks import ShapeError, Violation, join_path, raise_on_errors

activations = catalogue.create("diveq", "activations")

activations.register("relu", func=relu)
activations.register("tanh", func=tanh)


@dataclass
class AutoencoderArchitecture:
    """Layer sizes of the encoder; the decoder mirrors them

    Parameters
    ----------
    input_dim : int
        Dimension of the data x.
    latent_dim : int
        Dimension of z, equal to the codebook D.
    hidden_sizes : List[int], optional
        Hidden widths of the encoder, reversed for the decoder.
        **EXAMPLE**: `[64, 32]`
    activation : str, optional
        Name in the ``activations`` registry.
    """

    input_dim: int = 2
    latent_dim: int = 2
    hidden_sizes: List[int] = field(default_factory=lambda: [32])
    activation: str = "relu"

    def __post_init__(self):
        self.hidden_sizes = list(self.hidden_sizes)
        self.activation = str(self.activation).lower()
        raise_on_errors(self.violations())

    def violations(self, prefix: str = "") -> List[Violation]:
        found = []
        for name in ("input_dim", "latent_dim"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                found.append(
                    Violation(join_path(prefix, name), f"must be an integer >= 1, got {value}")
                )
        if any(not isinstance(size, int) or size < 1 for size in self.hidden_sizes):
            found.append(
                Violation(
                    join_path(prefix, "hidden_sizes"),
                    f"must hold integers >= 1, got {self.hidden_sizes}",
                )
            )
        if self.activation not in activations.get_all():
            found.append(
                Violation(
                    join_path(prefix, "activation"),
                    f"unknown activation {self.activation}, options are {tuple(activations.get_all())}",
                )
            )
        return found

    def to_dict(self):
        return asdict(self)


class MLP:
    """Fully connected layers with an activation between them, none after the last

    Weights are drawn with a fan-in scaled normal law.
    """

    def __init__(
        self,
        sizes: List[int],
        activation: str,
        generator: np.random.Generator,
        name: str = "mlp",
    ):
        self.sizes = list(sizes)
        self.activation = activation
        self.weights: List[Tensor] = []
        self.biases: List[Tensor] = []
        for layer, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
            self.weights.append(
                Tensor(
                    generator.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out)),
                    requires_grad=True,
                    name=f"{name}.weight{layer}",
                )
            )
            self.biases.append(
                Tensor(np.zeros(fan_out), requires_grad=True, name=f"{name}.bias{layer}")
            )

    def parameters(self) -> List[Tensor]:
        return [*self.weights, *self.biases]

    def __call__(self, inputs) -> Tensor:
        hidden = as_tensor(inputs)
        if hidden.ndim != 2 or hidden.shape[1] != self.sizes[0]:
            raise ShapeError("mlp", [hidden.shape], f"expected N x {self.sizes[0]} inputs")
        last = len(self.weights) - 1
        for layer, (weight, bias) in enumerate(zip(self.weights, self.biases)):
            hidden = add(matmul(hidden, weight), bias)
            if layer < last:
                hidden = activations.get(self.activation)(hidden)
        return hidden


class Autoencoder:
    r"""Encoder $E$ and decoder $D$ around a quantization bottleneck

    $$
    z = E(x), \quad x_r = D(z_q)
    $$

    Examples
    --------
    ```python
    import numpy as np
    from diveq.harness import Autoencoder, AutoencoderArchitecture

    model = Autoencoder(AutoencoderArchitecture(input_dim=64, latent_dim=4))
    z = model.encode(np.zeros((10, 64)))
    ```
    """

    def __init__(self, architecture: AutoencoderArchitecture, seed: int = 0):
        self.architecture = architecture
        generator = np.random.default_rng(seed)
        sizes = [architecture.input_dim, *architecture.hidden_sizes, architecture.latent_dim]
        self.encoder = MLP(sizes, architecture.activation, generator, name="encoder")
        self.decoder = MLP(sizes[::-1], architecture.activation, generator, name="decoder")

    def parameters(self) -> List[Tensor]:
        return [*self.encoder.parameters(), *self.decoder.parameters()]

    def encode(self, x) -> Tensor:
        return self.encoder(x)

    def decode(self, z_q) -> Tensor:
        return self.decoder(z_q)
