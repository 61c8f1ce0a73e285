from diveq.autodiff.gradcheck import check_gradient
from diveq.autodiff.ops import (
    EPS,
    add,
    div,
    exp,
    gather_rows,
    l2norm,
    log,
    matmul,
    mean,
    mul,
    neg,
    relu,
    reshape,
    scale,
    softmax,
    square,
    stop_gradient,
    straight_through,
    sub,
    tanh,
    total,
    transpose,
)
from diveq.autodiff.tensor import (
    Gradients,
    Record,
    Tape,
    Tensor,
    as_tensor,
    backward,
    forward,
)
