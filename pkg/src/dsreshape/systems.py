"""Dynamical systems, goals and additive composition.

A system is represented behaviorally: it maps an n-dimensional state to a
state derivative and carries a declared goal (equilibrium) plus a stability
flag. Systems are immutable after construction and safe to evaluate from
multiple threads.
"""

from __future__ import annotations

import numpy as np

# Stability flags. GAS means the goal is a globally asymptotically stable
# equilibrium; reshaping such a system keeps the convergence guarantee.
# Systems without a verified equilibrium (e.g. GP-learned fields) are
# flagged unstable-unknown and downstream convergence claims are refused.
GAS = "gas"
UNSTABLE_UNKNOWN = "unstable-unknown"

_EQUILIBRIUM_TOL = 1e-12


class DimensionMismatchError(ValueError):
    """State dimension does not match the system it is used with."""


class NonFiniteInputError(ValueError):
    """State contains NaN or Inf entries."""


def as_state(x, dim=None) -> np.ndarray:
    """Validate and convert `x` to a 1-D float state vector.

    Parameters
    ----------
    x : array-like
        Candidate state.
    dim : int, optional
        Required dimension; mismatch raises DimensionMismatchError.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1 or arr.size < 1:
        raise DimensionMismatchError(f"state must be a 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInputError(f"state contains non-finite entries: {arr}")
    if dim is not None and arr.size != dim:
        raise DimensionMismatchError(f"expected dimension {dim}, got {arr.size}")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


class DynamicalSystem:
    """Base class: a map from state to state derivative with a goal point.

    Attributes
    ----------
    kind : str
        One of linear-gain, handcrafted-nonlinear, gp-learned, composed,
        second-order-wrapper.
    dimension : int
    goal : ndarray, shape (dimension,)
        Declared goal point.
    stability : str
        GAS or UNSTABLE_UNKNOWN.
    """

    kind = "abstract"

    def __init__(self, goal, stability=UNSTABLE_UNKNOWN):
        self.goal = _frozen(as_state(goal))
        self.dimension = self.goal.size
        if stability not in (GAS, UNSTABLE_UNKNOWN):
            raise ValueError(f"unknown stability flag {stability!r}")
        self.stability = stability

    def _field(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def evaluate(self, x) -> np.ndarray:
        """Return the state derivative f(x). Pure and deterministic in x."""
        x = as_state(x, self.dimension)
        return np.asarray(self._field(x), dtype=float)

    __call__ = evaluate

    def _check_equilibrium(self):
        # Kinds that declare an equilibrium must actually vanish at the goal.
        residual = float(np.linalg.norm(self._field(self.goal)))
        if residual >= _EQUILIBRIUM_TOL:
            raise ValueError(
                f"goal is not an equilibrium of this {self.kind} system "
                f"(|f(goal)| = {residual:.3e})"
            )

    def parameters(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "dimension": self.dimension,
            "goal": self.goal.tolist(),
            "stability": self.stability,
            "parameters": self.parameters(),
        }

    def __repr__(self):
        return f"<{type(self).__name__} kind={self.kind} dim={self.dimension}>"


class LinearGain(DynamicalSystem):
    """Linear point attractor f(x) = gain * (goal - x), GAS for gain > 0."""

    kind = "linear-gain"

    def __init__(self, gain, goal):
        if gain <= 0:
            raise ValueError(f"gain must be positive, got {gain}")
        self.gain = float(gain)
        super().__init__(goal, stability=GAS)
        self._check_equilibrium()

    def _field(self, x):
        return self.gain * (self.goal - x)

    def parameters(self):
        return {"gain": self.gain}


# Named registry so handcrafted fields can round-trip through JSON.
HANDCRAFTED_REGISTRY: dict[str, "Handcrafted"] = {}


def register_handcrafted(name: str, system: "Handcrafted") -> "Handcrafted":
    HANDCRAFTED_REGISTRY[name] = system
    return system


class Handcrafted(DynamicalSystem):
    """Wraps an arbitrary state-to-derivative callable.

    The caller declares the goal and, optionally, that the system is GAS;
    a GAS declaration is spot-checked at the goal point. Serialization is
    only possible for systems registered under a name.
    """

    kind = "handcrafted-nonlinear"

    def __init__(self, fn, goal, stability=UNSTABLE_UNKNOWN, name=None):
        self.fn = fn
        self.name = name
        super().__init__(goal, stability=stability)
        if stability == GAS:
            self._check_equilibrium()

    def _field(self, x):
        return np.asarray(self.fn(x), dtype=float)

    def parameters(self):
        if self.name is None or self.name not in HANDCRAFTED_REGISTRY:
            raise ValueError("handcrafted system is not registered; cannot serialize")
        return {"name": self.name}


class ComposedSystem(DynamicalSystem):
    """Additive composition: base field plus weighted controller outputs.

    Each addend is a state-to-vector controller with a constant gate weight
    (1.0 unless given). Time-varying gating of a learned controller is the
    job of the reshaping clock, not of this static composition.
    """

    kind = "composed"

    def __init__(self, base: DynamicalSystem, addends, stability=None):
        self.base = base
        norm = []
        for item in addends:
            if isinstance(item, tuple):
                u, weight = item
            else:
                u, weight = item, 1.0
            norm.append((u, float(weight)))
        self.addends = tuple(norm)
        if stability is None:
            stability = base.stability if not norm else UNSTABLE_UNKNOWN
        super().__init__(base.goal, stability=stability)

    def _field(self, x):
        out = self.base.evaluate(x)
        for u, weight in self.addends:
            term = u.evaluate(x) if isinstance(u, DynamicalSystem) else np.asarray(u(x), dtype=float)
            if term.shape != out.shape:
                raise DimensionMismatchError(
                    f"controller output has shape {term.shape}, expected {out.shape}"
                )
            out = out + weight * term
        return out

    def parameters(self):
        items = []
        for u, weight in self.addends:
            if not isinstance(u, DynamicalSystem):
                raise ValueError("composed addend is a bare callable; cannot serialize")
            items.append({"system": u.to_dict(), "weight": weight})
        return {"base": self.base.to_dict(), "addends": items}


class SecondOrderWrapper(DynamicalSystem):
    """First-order form of a stiffness/damping second-order attractor.

    Over the stacked state (x1, x2) of dimension 2n:

        dx1 = x2
        dx2 = stiffness * (goal1 - x1) - damping * x2

    with equilibrium (goal1, 0), GAS for positive gains.
    """

    kind = "second-order-wrapper"

    def __init__(self, stiffness, damping, goal1):
        if stiffness <= 0 or damping <= 0:
            raise ValueError("stiffness and damping must be positive")
        self.stiffness = float(stiffness)
        self.damping = float(damping)
        goal1 = as_state(goal1)
        self.n_pos = goal1.size
        super().__init__(np.concatenate([goal1, np.zeros_like(goal1)]), stability=GAS)
        self._check_equilibrium()

    def _field(self, x):
        n = self.n_pos
        x1, x2 = x[:n], x[n:]
        return np.concatenate([x2, self.stiffness * (self.goal[:n] - x1) - self.damping * x2])

    def parameters(self):
        return {"stiffness": self.stiffness, "damping": self.damping}


def compose(base: DynamicalSystem, addends, stability=None) -> ComposedSystem:
    """Additively compose `base` with controllers.

    `addends` is a list of state-to-vector callables (or systems), each
    optionally paired with a constant gate weight: `[u]` or `[(u, 0.5)]`.
    The composed field is base(x) + sum(weight * u(x)).
    """
    return ComposedSystem(base, addends, stability=stability)


def wrap_second_order(stiffness, damping, goal1) -> SecondOrderWrapper:
    """Lift an n-dimensional goal into a GAS second-order point attractor."""
    return SecondOrderWrapper(stiffness, damping, goal1)


# kind -> constructor-from-dict, extended by other modules (gp registers
# the gp-learned kind on import).
_KIND_DECODERS = {}


def register_kind(kind: str, decoder):
    _KIND_DECODERS[kind] = decoder


def from_dict(d: dict) -> DynamicalSystem:
    """Rebuild a system from its to_dict() document."""
    kind = d.get("kind")
    goal = d["goal"]
    params = d.get("parameters", {})
    if kind == "linear-gain":
        return LinearGain(params["gain"], goal)
    if kind == "second-order-wrapper":
        n = len(goal) // 2
        return SecondOrderWrapper(params["stiffness"], params["damping"], goal[:n])
    if kind == "handcrafted-nonlinear":
        name = params["name"]
        if name not in HANDCRAFTED_REGISTRY:
            raise ValueError(f"handcrafted system {name!r} is not registered")
        return HANDCRAFTED_REGISTRY[name]
    if kind == "composed":
        base = from_dict(params["base"])
        addends = [(from_dict(a["system"]), a["weight"]) for a in params["addends"]]
        return ComposedSystem(base, addends, stability=d.get("stability"))
    if kind in _KIND_DECODERS:
        return _KIND_DECODERS[kind](d)
    raise ValueError(f"unknown system kind {kind!r}")
