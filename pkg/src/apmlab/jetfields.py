"""Tensor fields carrying derivative jets, vectorized over components.

A ``JetTensor`` stores the component values of a tensor field at one point
together with their coordinate derivatives up to a chosen order: ``data[k]``
has the component shape followed by k derivative axes (each of length
``dim``), symmetric in the derivative axes.  Products propagate derivatives
by the Leibniz rule through ordinary float einsums, ``partial()`` peels one
derivative level off (dropping the order by one), and matrix inverses are
obtained by Newton iteration, which is exact on jets.
"""

from __future__ import annotations

import numpy as np

from .exprs import Jet

_DERIV_LETTERS = "VWXYZ"


class JetOrderError(ValueError):
    """Raised when an operation needs a higher derivative order than carried."""


class JetTensor:
    __slots__ = ("data", "dim")

    def __init__(self, data: tuple[np.ndarray, ...], dim: int):
        self.data = tuple(np.asarray(a, dtype=float) for a in data)
        self.dim = dim

    # -- constructors -------------------------------------------------------

    @staticmethod
    def constant(values: np.ndarray, dim: int, order: int) -> "JetTensor":
        values = np.asarray(values, dtype=float)
        data = [values]
        for k in range(1, order + 1):
            data.append(np.zeros(values.shape + (dim,) * k))
        return JetTensor(tuple(data), dim)

    @staticmethod
    def from_jets(jets: np.ndarray, dim: int, order: int) -> "JetTensor":
        """Assemble from an object array of scalar ``Jet`` results."""
        jets = np.asarray(jets, dtype=object)
        shape = jets.shape
        data = [np.zeros(shape + (dim,) * k) for k in range(order + 1)]
        for idx in np.ndindex(shape):
            jet: Jet = jets[idx]
            if jet.order < order:
                raise JetOrderError(f"component jet has order {jet.order} < {order}")
            parts = (jet.value, jet.grad, jet.hess, jet.third)
            for k in range(order + 1):
                data[k][idx] = parts[k]
        return JetTensor(tuple(data), dim)

    # -- basics --------------------------------------------------------------

    @property
    def order(self) -> int:
        return len(self.data) - 1

    @property
    def values(self) -> np.ndarray:
        return self.data[0]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data[0].shape

    def partial(self) -> "JetTensor":
        """Coordinate derivative: appends one axis to the component shape.

        result.values[..., k] = d_k (self.values[...]); order drops by one.
        """
        if self.order < 1:
            raise JetOrderError("jet order insufficient for a derivative")
        return JetTensor(self.data[1:], self.dim)

    def __add__(self, other: "JetTensor") -> "JetTensor":
        order = min(self.order, other.order)
        return JetTensor(
            tuple(self.data[k] + other.data[k] for k in range(order + 1)), self.dim
        )

    def __sub__(self, other: "JetTensor") -> "JetTensor":
        order = min(self.order, other.order)
        return JetTensor(
            tuple(self.data[k] - other.data[k] for k in range(order + 1)), self.dim
        )

    def __neg__(self) -> "JetTensor":
        return JetTensor(tuple(-a for a in self.data), self.dim)

    def scaled(self, factor: float) -> "JetTensor":
        return JetTensor(tuple(factor * a for a in self.data), self.dim)

    def transpose(self, spec: str) -> "JetTensor":
        """Permute component axes with an einsum-style spec like 'kij->ijk'."""
        src, dst = spec.split("->")
        return JetTensor(
            tuple(np.einsum(f"{src}...->{dst}...", a) for a in self.data), self.dim
        )


def _sym_pair(m: np.ndarray) -> np.ndarray:
    return m + m.swapaxes(-1, -2)


def _sym_lone(m: np.ndarray) -> np.ndarray:
    # (..., X, Y | Z) with symmetric (X, Y): sum over placements of Z.
    return (
        m
        + np.einsum("...ikj->...ijk", m)
        + np.einsum("...jki->...ijk", m)
    )


def jt_einsum(spec: str, a: JetTensor, b: JetTensor) -> JetTensor:
    """Two-operand einsum with Leibniz propagation of the derivative axes."""
    lhs, out = spec.split("->")
    sa, sb = lhs.split(",")
    used = set(spec)
    free = [c for c in _DERIV_LETTERS if c not in used]
    x, y, z = free[0], free[1], free[2]
    order = min(a.order, b.order)
    es = np.einsum

    data = [es(f"{sa},{sb}->{out}", a.data[0], b.data[0])]
    if order >= 1:
        data.append(
            es(f"{sa}{x},{sb}->{out}{x}", a.data[1], b.data[0])
            + es(f"{sa},{sb}{x}->{out}{x}", a.data[0], b.data[1])
        )
    if order >= 2:
        mixed = es(f"{sa}{x},{sb}{y}->{out}{x}{y}", a.data[1], b.data[1])
        data.append(
            es(f"{sa}{x}{y},{sb}->{out}{x}{y}", a.data[2], b.data[0])
            + es(f"{sa},{sb}{x}{y}->{out}{x}{y}", a.data[0], b.data[2])
            + _sym_pair(mixed)
        )
    if order >= 3:
        a2b1 = es(f"{sa}{x}{y},{sb}{z}->{out}{x}{y}{z}", a.data[2], b.data[1])
        a1b2 = es(f"{sa}{z},{sb}{x}{y}->{out}{x}{y}{z}", a.data[1], b.data[2])
        data.append(
            es(f"{sa}{x}{y}{z},{sb}->{out}{x}{y}{z}", a.data[3], b.data[0])
            + es(f"{sa},{sb}{x}{y}{z}->{out}{x}{y}{z}", a.data[0], b.data[3])
            + _sym_lone(a2b1)
            + _sym_lone(a1b2)
        )
    return JetTensor(tuple(data), a.dim)


def jt_matmul(a: JetTensor, b: JetTensor) -> JetTensor:
    return jt_einsum("ab,bc->ac", a, b)


def jt_inverse(a: JetTensor, newton_steps: int = 3) -> JetTensor:
    """Inverse of a jet-valued square matrix via Newton iteration.

    Starting from the exact value-level inverse, each step squares the error
    grading, so two steps already suffice for order <= 3; one extra step is
    run for slack and the residual is checked.
    """
    values = a.values
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ValueError("jet inverse needs a square matrix of components")
    eye2 = JetTensor.constant(2.0 * np.eye(values.shape[0]), a.dim, a.order)
    x = JetTensor.constant(np.linalg.inv(values), a.dim, a.order)
    for _ in range(newton_steps):
        x = jt_matmul(x, eye2 - jt_matmul(a, x))
    residual = jt_matmul(a, x)
    err = max(
        float(np.max(np.abs(part - ref)))
        for part, ref in zip(
            residual.data, JetTensor.constant(np.eye(values.shape[0]), a.dim, a.order).data
        )
    )
    if not err < 1e-8:
        raise ValueError(f"jet matrix inverse did not converge (residual {err:.3e})")
    return x
