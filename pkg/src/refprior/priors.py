"""Prior approximations that can be sampled with gradients.

Both families map standard-normal noise ``eps`` through a deterministic,
differentiable function of the variational parameters ``lam`` (a flat
vector).  :meth:`vjp` returns ``cot^T d(theta)/d(lam)`` summed over noise rows,
computed by hand-written reverse accumulation.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .models import LikelihoodModel

__all__ = [
    "ParametricPrior",
    "ImplicitSampler",
    "init_sampler",
    "sample_prior",
    "domain_map_for",
    "prior_to_dict",
    "prior_from_dict",
]

_FAMILY_MAPS = {"normal": "identity", "lognormal": "exp", "logitnormal": "sigmoid"}
_LOWER = np.finfo(float).tiny
_UPPER = 1.0 - np.finfo(float).epsneg


def _forward_map(name: str, z: np.ndarray) -> np.ndarray:
    if name == "identity":
        return z
    if name == "exp":
        return np.exp(z)
    if name == "softplus":
        return np.logaddexp(0.0, z)
    if name == "sigmoid":
        # keep the open interval even when the logit saturates
        return np.clip(special.expit(z), _LOWER, _UPPER)
    raise ValueError(f"unknown domain map {name!r}")


def _map_derivative(name: str, z: np.ndarray) -> np.ndarray:
    if name == "identity":
        return np.ones_like(z)
    if name == "exp":
        return np.exp(z)
    if name == "softplus":
        return special.expit(z)
    if name == "sigmoid":
        s = special.expit(z)
        return s * (1 - s)
    raise ValueError(f"unknown domain map {name!r}")


def domain_map_for(model: LikelihoodModel, positive: str = "exp") -> str:
    """Output map that lands in the model's parameter domain."""
    lo, hi = model.domain
    if lo == 0.0 and hi == 1.0:
        return "sigmoid"
    if lo == 0.0:
        return positive
    return "identity"


@dataclass(frozen=True)
class ParametricPrior:
    """Independent Normal / LogNormal / LogitNormal per output dimension.

    ``lam = [m_1..m_D, log s_1..log s_D]``.
    """

    family: str
    dim: int = 1

    def __post_init__(self):
        if self.family not in _FAMILY_MAPS:
            raise ValueError(f"unknown family {self.family!r}")

    @property
    def n_params(self) -> int:
        return 2 * self.dim

    @property
    def noise_dim(self) -> int:
        return self.dim

    @property
    def out_dim(self) -> int:
        return self.dim

    @property
    def domain_map(self) -> str:
        return _FAMILY_MAPS[self.family]

    def init_params(self, rng=None, loc=0.0, log_scale=0.0) -> np.ndarray:
        return np.concatenate([np.full(self.dim, float(loc)), np.full(self.dim, float(log_scale))])

    def split(self, lam):
        lam = np.asarray(lam, dtype=float)
        return lam[: self.dim], lam[self.dim :]

    def _pre(self, lam, eps):
        m, log_s = self.split(lam)
        return m + np.exp(log_s) * np.atleast_2d(eps)

    def transform(self, lam, eps) -> np.ndarray:
        return _forward_map(self.domain_map, self._pre(lam, eps))

    def vjp(self, lam, eps, cot) -> np.ndarray:
        eps = np.atleast_2d(eps)
        m, log_s = self.split(lam)
        z = m + np.exp(log_s) * eps
        gz = np.atleast_2d(cot) * _map_derivative(self.domain_map, z)
        return np.concatenate([gz.sum(axis=0), (gz * eps).sum(axis=0) * np.exp(log_s)])

    def describe(self) -> dict:
        return {"family": self.family, "dim": self.dim}


_ACTIVATIONS = ("identity", "tanh", "relu")


@dataclass(frozen=True)
class ImplicitSampler:
    """Feed-forward sampler ``theta = out_map(net(eps))``.

    ``widths = [d0, h1, ..., D]``; hidden layers use ``activation``, the last
    affine layer is followed only by ``out_map``.  ``lam`` packs each layer's
    weight matrix (``fan_out x fan_in``, row-major) followed by its bias.
    """

    widths: tuple[int, ...]
    activation: str = "identity"
    out_map: str = "identity"
    _shapes: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        if len(widths) < 2:
            raise ValueError("need at least input and output widths")
        if any(w < 1 for w in widths):
            raise ValueError(f"layer widths must be positive, got {widths}")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        _forward_map(self.out_map, np.zeros(1))
        object.__setattr__(self, "widths", widths)
        object.__setattr__(self, "_shapes", tuple(zip(widths[1:], widths[:-1])))

    @property
    def noise_dim(self) -> int:
        return self.widths[0]

    @property
    def out_dim(self) -> int:
        return self.widths[-1]

    @property
    def n_params(self) -> int:
        return sum(o * i + o for o, i in self._shapes)

    @property
    def domain_map(self) -> str:
        return self.out_map

    def unpack(self, lam):
        lam = np.asarray(lam, dtype=float)
        if lam.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got {lam.shape}")
        layers, pos = [], 0
        for o, i in self._shapes:
            w = lam[pos : pos + o * i].reshape(o, i)
            pos += o * i
            b = lam[pos : pos + o]
            pos += o
            layers.append((w, b))
        return layers

    def _act(self, z):
        if self.activation == "tanh":
            return np.tanh(z)
        if self.activation == "relu":
            return np.maximum(z, 0.0)
        return z

    def _act_grad(self, z, a):
        if self.activation == "tanh":
            return 1 - a**2
        if self.activation == "relu":
            return (z > 0).astype(float)
        return np.ones_like(z)

    def _forward(self, lam, eps):
        layers = self.unpack(lam)
        h = np.atleast_2d(np.asarray(eps, dtype=float))
        if h.shape[1] != self.noise_dim:
            raise ValueError(f"noise rows must have dimension {self.noise_dim}")
        cache = [(h, None)]
        for k, (w, b) in enumerate(layers):
            z = h @ w.T + b
            h = self._act(z) if k < len(layers) - 1 else z
            cache.append((h, z))
        return layers, cache

    def transform(self, lam, eps) -> np.ndarray:
        _, cache = self._forward(lam, eps)
        return _forward_map(self.out_map, cache[-1][0])

    def vjp(self, lam, eps, cot) -> np.ndarray:
        layers, cache = self._forward(lam, eps)
        delta = np.atleast_2d(cot) * _map_derivative(self.out_map, cache[-1][0])
        grads = []
        for k in range(len(layers) - 1, -1, -1):
            w, _ = layers[k]
            h_in = cache[k][0]
            grads.append((delta.T @ h_in, delta.sum(axis=0)))
            if k > 0:
                h_prev, z_prev = cache[k]
                delta = (delta @ w) * self._act_grad(z_prev, h_prev)
        flat = []
        for gw, gb in reversed(grads):
            flat.extend([gw.ravel(), gb])
        return np.concatenate(flat)

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        """Glorot-uniform weights, zero biases."""
        parts = []
        for o, i in self._shapes:
            bound = np.sqrt(6.0 / (i + o))
            parts.append(rng.uniform(-bound, bound, size=o * i))
            parts.append(np.zeros(o))
        return np.concatenate(parts)

    def describe(self) -> dict:
        return {"widths": list(self.widths), "activation": self.activation, "out_map": self.out_map}


def init_sampler(widths, rng: np.random.Generator, activation="identity", out_map="identity"):
    """Build an :class:`ImplicitSampler` and draw its initial parameters."""
    sampler = ImplicitSampler(tuple(widths), activation=activation, out_map=out_map)
    return sampler, sampler.init_params(rng)


def sample_prior(prior, lam, n: int, rng: np.random.Generator):
    """Draw ``n`` parameter vectors; returns ``(theta, eps)`` with the noise kept for gradients."""
    if n < 1:
        raise ValueError("sample count must be >= 1")
    eps = rng.standard_normal((n, prior.noise_dim))
    return prior.transform(lam, eps), eps


def prior_to_dict(prior, lam, seed_history=()) -> dict:
    doc = {"version": 1, "lambda": [float(x) for x in np.asarray(lam)], "seed_history": list(seed_history)}
    if isinstance(prior, ParametricPrior):
        doc["family"] = prior.describe()
    else:
        doc["arch"] = prior.describe()
    return doc


def prior_from_dict(doc: dict):
    """Inverse of :func:`prior_to_dict`; returns ``(prior, lam, seed_history)``."""
    if doc.get("version") != 1:
        raise ValueError(f"unsupported prior document version {doc.get('version')!r}")
    if "family" in doc:
        prior = ParametricPrior(doc["family"]["family"], int(doc["family"]["dim"]))
    else:
        arch = doc["arch"]
        prior = ImplicitSampler(tuple(arch["widths"]), arch["activation"], arch["out_map"])
    lam = np.asarray(doc["lambda"], dtype=float)
    if lam.shape != (prior.n_params,):
        raise ValueError("lambda length does not match the architecture")
    return prior, lam, list(doc.get("seed_history", []))


def dumps(prior, lam, seed_history=()) -> str:
    return json.dumps(prior_to_dict(prior, lam, seed_history), sort_keys=True)
