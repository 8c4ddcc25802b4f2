"""Two-layer graph-convolution forward/backward, loss and optimizer.

Everything is float64 and deterministic. The forward pass is
``relu(A @ (X @ W0))`` then ``A @ (H @ W1)`` with an optional row softmax;
gradients are hand-derived for the no-final-activation case (softmax is only
consumed jointly with cross-entropy, whose gradient is taken w.r.t. logits).
A is assumed symmetric, which the normalized adjacency guarantees.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass
class GcnParams:
    """Weights of a two-layer GCN, optionally with a linear scoring head."""

    w0: np.ndarray
    w1: np.ndarray
    head_w: np.ndarray | None = None
    head_b: np.ndarray | None = None

    def arrays(self) -> dict[str, np.ndarray]:
        out = {"w0": self.w0, "w1": self.w1}
        if self.head_w is not None:
            out["head_w"] = self.head_w
            out["head_b"] = self.head_b
        return out

    def copy(self) -> "GcnParams":
        return GcnParams(
            self.w0.copy(), self.w1.copy(),
            None if self.head_w is None else self.head_w.copy(),
            None if self.head_b is None else self.head_b.copy())


@dataclass
class AdamState:
    """Per-parameter first/second moments plus the shared step counter."""

    first_moment: dict[str, np.ndarray]
    second_moment: dict[str, np.ndarray]
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_params(cls, params: GcnParams) -> "AdamState":
        return cls(
            first_moment={k: np.zeros_like(v) for k, v in params.arrays().items()},
            second_moment={k: np.zeros_like(v) for k, v in params.arrays().items()})


def glorot(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


def init_gcn_params(rng: np.random.Generator, in_dim: int, hidden_dim: int,
                    out_dim: int, with_head: bool = False) -> GcnParams:
    """Glorot-uniform weights; the head maps out_dim -> 1 with a zero bias."""
    w0 = glorot(rng, in_dim, hidden_dim)
    w1 = glorot(rng, hidden_dim, out_dim)
    if not with_head:
        return GcnParams(w0, w1)
    head_w = glorot(rng, out_dim, 1)
    head_b = np.zeros(1)
    return GcnParams(w0, w1, head_w, head_b)


def gcn_forward(norm_adj, x: np.ndarray, params: GcnParams,
                final_activation: str = "none"):
    """Run the two GCN layers.

    Returns (hidden, output): hidden is the post-ReLU first layer and output
    the second layer, row-softmaxed when final_activation == "softmax_rows".
    """
    n = x.shape[0]
    if norm_adj.shape != (n, n):
        raise ValueError(f"adjacency is {norm_adj.shape}, input has {n} rows")
    if x.shape[1] != params.w0.shape[0]:
        raise ValueError(f"input width {x.shape[1]} != w0 rows "
                         f"{params.w0.shape[0]}")
    if params.w0.shape[1] != params.w1.shape[0]:
        raise ValueError(f"w0 cols {params.w0.shape[1]} != w1 rows "
                         f"{params.w1.shape[0]}")
    hidden = np.maximum(norm_adj.matmul(x @ params.w0), 0.0)
    output = norm_adj.matmul(hidden @ params.w1)
    if final_activation == "softmax_rows":
        output = row_softmax(output)
    elif final_activation != "none":
        raise ValueError(f"unknown final_activation {final_activation!r}")
    return hidden, output


def gcn_backward(norm_adj, x: np.ndarray, params: GcnParams,
                 hidden: np.ndarray, grad_output: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of the (no-final-activation) forward pass w.r.t. w0 and w1.

    hidden must be the cached forward value for the same inputs; the ReLU
    subgradient at 0 is taken as 0 (hidden > 0 is exactly the active set).
    """
    if grad_output.shape[1] != params.w1.shape[1]:
        raise ValueError(f"grad_output width {grad_output.shape[1]} != w1 cols "
                         f"{params.w1.shape[1]}")
    g1 = norm_adj.matmul(grad_output)
    grad_w1 = hidden.T @ g1
    grad_hidden = g1 @ params.w1.T
    grad_pre0 = np.where(hidden > 0.0, grad_hidden, 0.0)
    grad_w0 = x.T @ norm_adj.matmul(grad_pre0)
    return {"w0": grad_w0, "w1": grad_w1}


def row_softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax over each row."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray, rows):
    """Mean negative log-likelihood over the given rows.

    Returns (loss, grad_logits); gradient rows outside the mask are zero.
    """
    rows = np.asarray(rows, dtype=np.int64)
    if rows.size == 0:
        raise ValueError("empty row mask: nothing to train on")
    sub = logits[rows]
    sub_labels = np.asarray(labels)[rows]
    shifted = sub - sub.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    log_probs = shifted[np.arange(rows.size), sub_labels] - log_z
    loss = -log_probs.mean()
    probs = np.exp(shifted - log_z[:, None])
    probs[np.arange(rows.size), sub_labels] -= 1.0
    grad = np.zeros_like(logits)
    grad[rows] = probs / rows.size
    return float(loss), grad


def adam_step(params: GcnParams, grads: dict[str, np.ndarray],
              state: AdamState, lr: float) -> None:
    """One bias-corrected Adam update, in place on params and state."""
    state.step_count += 1
    for name, arr in params.arrays().items():
        kernels.adam_update(arr, grads[name],
                            state.first_moment[name], state.second_moment[name],
                            state.step_count, lr,
                            state.beta1, state.beta2, state.epsilon)


def params_to_json(params: GcnParams) -> dict:
    """Shape-annotated named arrays, exact under JSON float round-trip."""
    return {name: {"shape": list(arr.shape), "data": arr.reshape(-1).tolist()}
            for name, arr in params.arrays().items()}


def params_from_json(blob: dict) -> GcnParams:
    arrays = {name: np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
              for name, entry in blob.items()}
    return GcnParams(arrays["w0"], arrays["w1"],
                     arrays.get("head_w"), arrays.get("head_b"))
