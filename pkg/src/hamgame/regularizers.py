"""Regularizers, convex conjugates, and the divergences built from them.

A regularizer is a strongly convex function h on a compact convex domain,
here either the probability simplex or the unit box [0, 1]^k.  The learning
dynamics interact with h only through derived objects:

  conjugate     h*(y) = max_x { <x, y> - h(x) }
  choice map    grad h*(y), the maximizer above
  Bregman       D(x_ref, x) = h(x_ref) - h(x) - <grad h(x), x_ref - x>
  Fenchel       F(x_ref, y) = h*(y) - <y, x_ref> + h(x_ref)

Two families are provided: negative entropy (sum x log x), whose choice map
is the softmax, and the squared euclidean norm, whose choice map is an exact
sorted-threshold projection onto the simplex.  On the box the two-outcome
collapsed forms are used (h(x) = x log x + (1-x) log(1-x), respectively
x^2 + (1-x)^2, summed over coordinates), which is what a two-strategy
simplex turns into under the substitution x2 = 1 - x1.

Every operation broadcasts over leading batch axes: the last axis is the
strategy dimension, anything in front of it is carried through unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

KINDS = ("entropy", "euclidean")
DOMAINS = ("simplex", "box")

DOMAIN_TOL = 1e-9


@dataclass(frozen=True)
class Regularizer:
    """One agent's regularizer: kind, domain, dimension and positive scale.

    The scale multiplies h pointwise; choice_map with scale s at y equals
    choice_map with scale 1 at y / s.
    """

    kind: str
    domain: str = "simplex"
    dim: int = 2
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown regularizer kind {self.kind!r}")
        if self.domain not in DOMAINS:
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")
        if not self.scale > 0:
            raise ValueError("scale must be positive")


@dataclass(frozen=True)
class ProductRegularizer:
    """Separable regularizer on a product domain, one block per factor.

    h(x) is the sum of the block values on the corresponding slices of x,
    so the choice map, conjugate and divergences all decompose blockwise.
    Used for the meta-agents of a bipartite reduction.
    """

    blocks: tuple[Regularizer, ...]

    def __post_init__(self):
        if not self.blocks:
            raise ValueError("product regularizer needs at least one block")

    @property
    def dim(self) -> int:
        return sum(b.dim for b in self.blocks)

    def slices(self):
        start = 0
        for b in self.blocks:
            yield b, slice(start, start + b.dim)
            start += b.dim


AnyRegularizer = Regularizer | ProductRegularizer


def _softmax(u):
    m = u.max(axis=-1, keepdims=True)
    e = np.exp(u - m)
    return e / e.sum(axis=-1, keepdims=True)


def _logsumexp(u):
    m = u.max(axis=-1, keepdims=True)
    return np.squeeze(m, axis=-1) + np.log(np.exp(u - m).sum(axis=-1))


def _sigmoid(u):
    # tanh form is stable for large |u|
    return 0.5 * (1.0 + np.tanh(0.5 * u))


def _xlogx(x):
    safe = np.where(x > 0.0, x, 1.0)
    return x * np.log(safe)


def project_simplex(v):
    """Euclidean projection of v onto the probability simplex (last axis).

    Exact O(k log k) sorted-threshold rule; no iteration, no tolerance.
    """
    v = np.asarray(v, dtype=float)
    u = np.flip(np.sort(v, axis=-1), axis=-1)
    css = np.cumsum(u, axis=-1)
    k = np.arange(1, v.shape[-1] + 1)
    rho = np.sum(u > (css - 1.0) / k, axis=-1, keepdims=True)
    tau = (np.take_along_axis(css, rho - 1, axis=-1) - 1.0) / rho
    return np.maximum(v - tau, 0.0)


def _check_domain(reg: Regularizer, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != reg.dim:
        raise ValueError(f"point has dimension {x.shape[-1]}, expected {reg.dim}")
    if reg.domain == "simplex":
        bad = (np.abs(np.sum(x, axis=-1) - 1.0) > DOMAIN_TOL) | np.any(
            x < -DOMAIN_TOL, axis=-1
        )
    else:
        bad = np.any((x < -DOMAIN_TOL) | (x > 1.0 + DOMAIN_TOL), axis=-1)
    if np.any(bad):
        raise ValueError(f"point outside {reg.domain} domain beyond {DOMAIN_TOL}")
    return x


def h_value(reg: AnyRegularizer, x):
    """Value of the regularizer at x (batched over leading axes)."""
    if isinstance(reg, ProductRegularizer):
        x = np.asarray(x, dtype=float)
        return sum(h_value(b, x[..., s]) for b, s in reg.slices())
    x = _check_domain(reg, x)
    if reg.kind == "entropy":
        if reg.domain == "simplex":
            val = np.sum(_xlogx(x), axis=-1)
        else:
            val = np.sum(_xlogx(x) + _xlogx(1.0 - x), axis=-1)
    else:
        if reg.domain == "simplex":
            val = np.sum(x * x, axis=-1)
        else:
            val = np.sum(x * x + (1.0 - x) * (1.0 - x), axis=-1)
    return reg.scale * val


def choice_map(reg: AnyRegularizer, y):
    """grad h*(y): the strategy maximizing <x, y> - h(x) over the domain."""
    if isinstance(reg, ProductRegularizer):
        y = np.asarray(y, dtype=float)
        return np.concatenate(
            [choice_map(b, y[..., s]) for b, s in reg.slices()], axis=-1
        )
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != reg.dim:
        raise ValueError(f"payoff vector has dimension {y.shape[-1]}, expected {reg.dim}")
    if not np.isfinite(y.sum()):  # one reduction; nan/inf both poison the sum
        raise ValueError("choice map requires finite payoff vector")
    u = y / reg.scale
    if reg.kind == "entropy":
        return _softmax(u) if reg.domain == "simplex" else _sigmoid(u)
    if reg.domain == "simplex":
        return project_simplex(u / 2.0)
    return np.clip(u / 4.0 + 0.5, 0.0, 1.0)


def conjugate_value(reg: AnyRegularizer, y):
    """h*(y) = <x, y> - h(x) at x = choice_map(y).

    Entropy kinds use the closed forms (scaled logsumexp / softplus), which
    agree with the generic expression but stay accurate for large y.
    """
    if isinstance(reg, ProductRegularizer):
        y = np.asarray(y, dtype=float)
        return sum(conjugate_value(b, y[..., s]) for b, s in reg.slices())
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("conjugate requires finite payoff vector")
    if reg.kind == "entropy":
        u = y / reg.scale
        if reg.domain == "simplex":
            return reg.scale * _logsumexp(u)
        return reg.scale * np.sum(np.logaddexp(0.0, u), axis=-1)
    x = choice_map(reg, y)
    return np.sum(x * y, axis=-1) - h_value(reg, x)


def gradient_h(reg: AnyRegularizer, x):
    """grad h(x); undefined (raises) on the boundary for entropy kinds."""
    if isinstance(reg, ProductRegularizer):
        x = np.asarray(x, dtype=float)
        return np.concatenate(
            [gradient_h(b, x[..., s]) for b, s in reg.slices()], axis=-1
        )
    x = _check_domain(reg, x)
    if reg.kind == "entropy":
        if reg.domain == "simplex":
            if np.any(x <= 0.0):
                raise ValueError("gradient undefined on boundary (zero coordinate)")
            return reg.scale * (1.0 + np.log(x))
        if np.any((x <= 0.0) | (x >= 1.0)):
            raise ValueError("gradient undefined on boundary (coordinate at 0 or 1)")
        return reg.scale * (np.log(x) - np.log(1.0 - x))
    if reg.domain == "simplex":
        return 2.0 * reg.scale * x
    return reg.scale * (4.0 * x - 2.0)


def bregman_distance(reg: AnyRegularizer, x_ref, x):
    """D(x_ref, x) = h(x_ref) - h(x) - <grad h(x), x_ref - x>.

    Nonnegative, zero iff x_ref == x.  Entropy kinds reduce to the
    Kullback-Leibler divergence and require x strictly interior.
    """
    x_ref = np.asarray(x_ref, dtype=float)
    x = np.asarray(x, dtype=float)
    grad = gradient_h(reg, x)
    return (
        h_value(reg, x_ref)
        - h_value(reg, x)
        - np.sum(grad * (x_ref - x), axis=-1)
    )


def fenchel_coupling(reg: AnyRegularizer, x_ref, y):
    """F(x_ref, y) = h*(y) - <y, x_ref> + h(x_ref).

    Upper bound on bregman_distance(x_ref, choice_map(y)), with equality
    whenever the choice map lands in the interior.
    """
    x_ref = np.asarray(x_ref, dtype=float)
    y = np.asarray(y, dtype=float)
    return conjugate_value(reg, y) - np.sum(y * x_ref, axis=-1) + h_value(reg, x_ref)


def restrict_to_interval(reg: Regularizer) -> Regularizer:
    """Collapse a two-strategy simplex regularizer to its [0, 1] form.

    The substitution x2 = 1 - x1 turns h on the 2-simplex into the
    one-dimensional box regularizer of the same kind and scale.
    """
    if isinstance(reg, ProductRegularizer) or reg.domain != "simplex" or reg.dim != 2:
        raise ValueError("only a two-strategy simplex regularizer can be collapsed")
    return replace(reg, domain="box", dim=1)


def payoffs_from_profile(reg: AnyRegularizer, x):
    """A payoff vector y with choice_map(reg, y) == x, for interior x.

    Convenient for starting a trajectory at a prescribed strategy profile.
    """
    if isinstance(reg, ProductRegularizer):
        x = np.asarray(x, dtype=float)
        return np.concatenate(
            [payoffs_from_profile(b, x[..., s]) for b, s in reg.slices()], axis=-1
        )
    x = _check_domain(reg, x)
    if reg.kind == "entropy":
        if np.any(x <= 0.0) or (reg.domain == "box" and np.any(x >= 1.0)):
            raise ValueError("profile must be strictly interior")
        if reg.domain == "simplex":
            return reg.scale * np.log(x)
        return reg.scale * (np.log(x) - np.log(1.0 - x))
    if reg.domain == "simplex":
        return 2.0 * reg.scale * x
    return 4.0 * reg.scale * (x - 0.5)
