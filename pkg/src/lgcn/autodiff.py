"""Minimal reverse-mode automatic differentiation over scalar graphs.

A Tape records one scalar node per arithmetic operation.  Local partial
derivatives are computed eagerly at build time, so a node only stores its
two parent indices and the two partials; the backward pass is then a single
opcode-free sweep over the tape in reverse creation order (creation order is
already topological).  The sweep is the hot kernel and runs under numba when
the numba backend is active.

Trainable parameters are plain Euclidean numpy tensors.  Staging a Parameter
on a tape creates one leaf node per entry; backward() scatters the tape
gradients back into Parameter.grads, accumulating across calls until
zero_grad().  Tapes are single-threaded; independent tapes may run in
parallel.
"""

from __future__ import annotations

import math
from array import array
from dataclasses import dataclass, field

import numpy as np

from ._backend import USE_NUMBA

# Additive floor keeping the softplus-reparameterized curvature positive.
EPS_BETA = 1e-4
# arcosh derivative is clamped at arguments below 1 + ARCOSH_EPS.
ARCOSH_EPS = 1e-12


class Value:
    """Handle to one scalar node on a tape; supports arithmetic with floats."""

    __slots__ = ("t", "i", "d")

    def __init__(self, t: "Tape", i: int, d: float):
        self.t = t
        self.i = i
        self.d = d

    @property
    def data(self) -> float:
        return self.d

    def __repr__(self):
        return f"Value({self.d})"

    def backward(self) -> None:
        self.t.backward(self)

    def __add__(self, other):
        t = self.t
        if other.__class__ is Value:
            i = t._push(1.0, self.i, 1.0, other.i)
            return Value(t, i, self.d + other.d)
        i = t._push(1.0, self.i, 0.0, -1)
        return Value(t, i, self.d + other)

    __radd__ = __add__

    def __sub__(self, other):
        t = self.t
        if other.__class__ is Value:
            i = t._push(1.0, self.i, -1.0, other.i)
            return Value(t, i, self.d - other.d)
        i = t._push(1.0, self.i, 0.0, -1)
        return Value(t, i, self.d - other)

    def __rsub__(self, other):
        t = self.t
        i = t._push(-1.0, self.i, 0.0, -1)
        return Value(t, i, other - self.d)

    def __neg__(self):
        t = self.t
        i = t._push(-1.0, self.i, 0.0, -1)
        return Value(t, i, -self.d)

    def __mul__(self, other):
        t = self.t
        if other.__class__ is Value:
            i = t._push(other.d, self.i, self.d, other.i)
            return Value(t, i, self.d * other.d)
        i = t._push(other, self.i, 0.0, -1)
        return Value(t, i, self.d * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        t = self.t
        if other.__class__ is Value:
            if other.d == 0.0:
                raise ZeroDivisionError("division by a zero-valued node")
            inv = 1.0 / other.d
            i = t._push(inv, self.i, -self.d * inv * inv, other.i)
            return Value(t, i, self.d * inv)
        if other == 0.0:
            raise ZeroDivisionError("division by zero")
        inv = 1.0 / other
        i = t._push(inv, self.i, 0.0, -1)
        return Value(t, i, self.d * inv)

    def __rtruediv__(self, other):
        if self.d == 0.0:
            raise ZeroDivisionError("division by a zero-valued node")
        t = self.t
        i = t._push(-other / (self.d * self.d), self.i, 0.0, -1)
        return Value(t, i, other / self.d)

    def __pow__(self, p):
        t = self.t
        i = t._push(p * self.d ** (p - 1), self.i, 0.0, -1)
        return Value(t, i, self.d ** p)


class Tape:
    """Append-only scalar computation graph; creation order is topological."""

    def __init__(self):
        self._d0 = array("d")
        self._p0 = array("q")
        self._d1 = array("d")
        self._p1 = array("q")
        self._bindings: list[tuple[int, Parameter]] = []

    def __len__(self) -> int:
        return len(self._d0)

    def _push(self, d0: float, p0: int, d1: float, p1: int) -> int:
        i = len(self._d0)
        self._d0.append(d0)
        self._p0.append(p0)
        self._d1.append(d1)
        self._p1.append(p1)
        return i

    def constant(self, x: float) -> Value:
        """Leaf node; gradients stop here."""
        return Value(self, self._push(0.0, -1, 0.0, -1), float(x))

    def stage(self, param: "Parameter") -> np.ndarray:
        """Create leaf nodes for every entry of a parameter tensor.

        Returns an object array shaped like the parameter.  backward() will
        scatter-add the tape gradients of these leaves into param.grads.
        """
        flat = param.values.ravel()
        start = len(self._d0)
        vals = np.empty(flat.size, dtype=object)
        for k in range(flat.size):
            vals[k] = Value(self, self._push(0.0, -1, 0.0, -1), float(flat[k]))
        self._bindings.append((start, param))
        return vals.reshape(param.values.shape)

    def backward(self, loss: Value) -> np.ndarray:
        """Reverse sweep from ``loss``; adds into the grads of staged parameters.

        Repeated calls accumulate additively (clear with Parameter.zero_grad).
        Parameters staged but unreachable from the loss receive zero.
        Returns the full tape gradient vector (diagnostics and tests).
        """
        if loss.t is not self:
            raise ValueError("loss lives on a different tape")
        n = len(self._d0)
        grad = np.zeros(n)
        grad[loss.i] = 1.0
        d0 = np.frombuffer(self._d0, dtype=np.float64, count=n)
        p0 = np.frombuffer(self._p0, dtype=np.int64, count=n)
        d1 = np.frombuffer(self._d1, dtype=np.float64, count=n)
        p1 = np.frombuffer(self._p1, dtype=np.int64, count=n)
        _sweep(d0, p0, d1, p1, grad, loss.i)
        for start, param in self._bindings:
            size = param.values.size
            if param.trainable:
                param.grads += grad[start : start + size].reshape(param.values.shape)
        return grad


def _sweep_py(d0, p0, d1, p1, grad, start):
    for i in range(start, -1, -1):
        g = grad[i]
        if g != 0.0:
            j = p0[i]
            if j >= 0:
                grad[j] += g * d0[i]
            j = p1[i]
            if j >= 0:
                grad[j] += g * d1[i]


if USE_NUMBA:
    import numba

    _sweep = numba.njit(
        "void(float64[::1], int64[::1], float64[::1], int64[::1], float64[::1], int64)",
        cache=True,
    )(_sweep_py)
else:
    _sweep = _sweep_py


def backward(loss: Value) -> np.ndarray:
    """Module-level alias for Tape.backward."""
    return loss.t.backward(loss)


# ---------------------------------------------------------------------------
# Unary/binary primitives beyond the operator overloads.
# ---------------------------------------------------------------------------


def exp(x: Value) -> Value:
    v = math.exp(x.d)
    return Value(x.t, x.t._push(v, x.i, 0.0, -1), v)


def log(x: Value) -> Value:
    if x.d <= 0.0:
        raise ValueError(f"log of non-positive value {x.d}")
    return Value(x.t, x.t._push(1.0 / x.d, x.i, 0.0, -1), math.log(x.d))


def sqrt(x: Value) -> Value:
    if x.d < 0.0:
        raise ValueError(f"sqrt of negative value {x.d}")
    v = math.sqrt(x.d)
    # Subgradient 0 at the origin; callers clamp away from 0 wherever the
    # true derivative matters, and this avoids inf * 0 in the sweep.
    d = 0.5 / v if v > 0.0 else 0.0
    return Value(x.t, x.t._push(d, x.i, 0.0, -1), v)


def tanh(x: Value) -> Value:
    v = math.tanh(x.d)
    return Value(x.t, x.t._push(1.0 - v * v, x.i, 0.0, -1), v)


def cosh(x: Value) -> Value:
    return Value(x.t, x.t._push(math.sinh(x.d), x.i, 0.0, -1), math.cosh(x.d))


def sinh(x: Value) -> Value:
    return Value(x.t, x.t._push(math.cosh(x.d), x.i, 0.0, -1), math.sinh(x.d))


def arcosh(x: Value) -> Value:
    """acosh with the argument clamped to 1 from below.

    The derivative uses the argument clamped to 1 + ARCOSH_EPS, bounding it
    instead of blowing up at the branch point.
    """
    a = max(x.d, 1.0)
    xc = max(a, 1.0 + ARCOSH_EPS)
    d = 1.0 / math.sqrt(xc * xc - 1.0)
    return Value(x.t, x.t._push(d, x.i, 0.0, -1), math.acosh(a))


def relu(x: Value) -> Value:
    if x.d > 0.0:
        return Value(x.t, x.t._push(1.0, x.i, 0.0, -1), x.d)
    return Value(x.t, x.t._push(0.0, x.i, 0.0, -1), 0.0)


def leaky_relu(x: Value, slope: float) -> Value:
    if x.d > 0.0:
        return Value(x.t, x.t._push(1.0, x.i, 0.0, -1), x.d)
    return Value(x.t, x.t._push(slope, x.i, 0.0, -1), slope * x.d)


def maximum(a: Value, b) -> Value:
    """max(a, b); at ties the gradient goes to the second argument."""
    t = a.t
    if b.__class__ is Value:
        if a.d > b.d:
            return Value(t, t._push(1.0, a.i, 0.0, b.i), a.d)
        return Value(t, t._push(0.0, a.i, 1.0, b.i), b.d)
    if a.d > b:
        return Value(t, t._push(1.0, a.i, 0.0, -1), a.d)
    return Value(t, t._push(0.0, a.i, 0.0, -1), float(b))


def minimum(a: Value, b) -> Value:
    t = a.t
    if b.__class__ is Value:
        if a.d < b.d:
            return Value(t, t._push(1.0, a.i, 0.0, b.i), a.d)
        return Value(t, t._push(0.0, a.i, 1.0, b.i), b.d)
    if a.d < b:
        return Value(t, t._push(1.0, a.i, 0.0, -1), a.d)
    return Value(t, t._push(0.0, a.i, 0.0, -1), float(b))


def softplus(x: Value) -> Value:
    """log(1 + e^x), composed overflow-free: max(x,0) + log(1 + e^-|x|)."""
    ax = maximum(x, -x)
    return maximum(x, 0.0) + log(exp(-ax) + 1.0)


def sigmoid(x: Value) -> Value:
    """1 / (1 + e^-x), composed so no exponent argument is positive."""
    m = maximum(x, 0.0)
    a = exp(x - m)
    return a / (a + exp(-m))


# ---------------------------------------------------------------------------
# Parameters and optimization.
# ---------------------------------------------------------------------------


@dataclass
class Parameter:
    """Euclidean tensor with an accumulated-gradient buffer."""

    values: np.ndarray
    name: str = ""
    trainable: bool = True
    grads: np.ndarray = field(init=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.grads = np.zeros_like(self.values)

    def zero_grad(self) -> None:
        self.grads[...] = 0.0


class CurvatureParam:
    """Unconstrained pre-parameter theta with beta = softplus(theta) + 1e-4 > 0."""

    def __init__(self, theta: float, name: str = "theta_beta"):
        self.param = Parameter(np.array([float(theta)]), name=name)

    @classmethod
    def from_beta(cls, beta: float, name: str = "theta_beta") -> "CurvatureParam":
        if beta <= EPS_BETA:
            raise ValueError(f"beta must exceed {EPS_BETA}")
        # Inverse softplus.
        return cls(math.log(math.expm1(beta - EPS_BETA)), name=name)

    @property
    def theta(self) -> float:
        return float(self.param.values[0])

    def beta(self) -> float:
        t = self.theta
        return (max(t, 0.0) + math.log1p(math.exp(-abs(t)))) + EPS_BETA

    def beta_value(self, tape: Tape) -> Value:
        """Stage theta on the tape and return beta as a differentiable node."""
        theta = tape.stage(self.param)[0]
        return softplus(theta) + EPS_BETA


@dataclass
class AdamState:
    """First/second moment buffers and step counter for one parameter."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def for_param(cls, param: Parameter) -> "AdamState":
        return cls(np.zeros_like(param.values), np.zeros_like(param.values))


def adam_step(
    values: np.ndarray,
    grads: np.ndarray,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """One bias-corrected Adam update, in place; deterministic given state."""
    if values.shape != grads.shape or values.shape != state.m.shape:
        raise ValueError("shape mismatch between values, grads and state")
    state.t += 1
    state.m[...] = beta1 * state.m + (1.0 - beta1) * grads
    state.v[...] = beta2 * state.v + (1.0 - beta2) * grads * grads
    m_hat = state.m / (1.0 - beta1 ** state.t)
    v_hat = state.v / (1.0 - beta2 ** state.t)
    values -= lr * m_hat / (np.sqrt(v_hat) + eps)


class Adam:
    """Adam over a list of Parameters, driven by their accumulated grads."""

    def __init__(self, params: list[Parameter], lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.states = [AdamState.for_param(p) for p in self.params]

    def step(self) -> None:
        for p, s in zip(self.params, self.states):
            if p.trainable:
                adam_step(p.values, p.grads, s, self.lr, self.beta1, self.beta2, self.eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()


def dropconnect_mask(shape, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Inverted-scaling Bernoulli keep mask for weight entries.

    Entries survive with probability 1-rate and are scaled by 1/(1-rate) so
    the mask is the identity in expectation.  Training-time only; evaluation
    bypasses masking entirely.
    """
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"rate must be in [0, 1), got {rate}")
    if rate == 0.0:
        return np.ones(shape)
    keep = 1.0 - rate
    return (rng.random(shape) < keep).astype(np.float64) / keep
