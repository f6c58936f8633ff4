"""State-dependent discrete memoryless channels and information-density moments.

All alphabets are index sets ``{0, ..., size-1}``. The kernel is stored as a
4-d array ``W[x, s, y, z]`` giving the probability of receiver output ``y`` and
transmitter feedback ``z`` when ``x`` is sent and the state is ``s``.

All information quantities are in bits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from os import PathLike
from typing import Any

import numpy as np

PMF_TOL = 1e-12


class ChannelError(ValueError):
    """Raised when a channel description violates one of its invariants."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _check_pmf(p: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(p)):
        i = int(np.flatnonzero(~np.isfinite(p))[0])
        raise ChannelError(f"{what}[{i}] is not finite")
    if np.any(p < 0):
        i = int(np.flatnonzero(p < 0)[0])
        raise ChannelError(f"{what}[{i}] = {p[i]!r} is negative")
    total = p.sum()
    if abs(total - 1.0) > PMF_TOL:
        raise ChannelError(f"{what} sums to {total!r}, expected 1")


@dataclass(frozen=True, eq=False)
class StateDMC:
    """A discrete memoryless channel with i.i.d. state and generalized feedback.

    Parameters
    ----------
    state_prior : array of shape (S,)
        The state pmf.
    kernel : array of shape (X, S, Y, Z)
        ``kernel[x, s, y, z]`` is the probability of ``(y, z)`` given ``(x, s)``.
    distortion : array of shape (S, S)
        ``distortion[s, s_hat]``; the estimate alphabet equals the state alphabet.
    name : str, optional
        Free-form label carried into reports.
    """

    state_prior: np.ndarray
    kernel: np.ndarray
    distortion: np.ndarray
    name: str = ""

    def __post_init__(self) -> None:
        prior = _readonly(self.state_prior)
        kernel = _readonly(self.kernel)
        dist = _readonly(self.distortion)
        validate(prior, kernel, dist)
        object.__setattr__(self, "state_prior", prior)
        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "distortion", dist)

    @property
    def x_size(self) -> int:
        return self.kernel.shape[0]

    @property
    def s_size(self) -> int:
        return self.kernel.shape[1]

    @property
    def y_size(self) -> int:
        return self.kernel.shape[2]

    @property
    def z_size(self) -> int:
        return self.kernel.shape[3]

    def feedback_likelihood(self) -> np.ndarray:
        """``P_{Z|XS}`` as an array of shape (X, S, Z)."""
        return self.kernel.sum(axis=2)


def validate(state_prior: np.ndarray, kernel: np.ndarray, distortion: np.ndarray) -> None:
    """Check channel invariants, raising `ChannelError` on the first violation."""
    if state_prior.ndim != 1 or state_prior.size == 0:
        raise ChannelError("state_prior must be a non-empty 1-d array")
    if kernel.ndim != 4 or 0 in kernel.shape:
        raise ChannelError(
            f"kernel must be a non-empty 4-d array [x][s][y][z], got shape {kernel.shape}"
        )
    s_size = state_prior.size
    if kernel.shape[1] != s_size:
        raise ChannelError(
            f"kernel state axis has length {kernel.shape[1]}, state_prior has {s_size}"
        )
    if distortion.shape != (s_size, s_size):
        raise ChannelError(
            f"distortion must have shape ({s_size}, {s_size}), got {distortion.shape}"
        )
    _check_pmf(state_prior, "state_prior")

    bad = ~np.isfinite(kernel) | (kernel < 0)
    if bad.any():
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise ChannelError(f"kernel{list(idx)} = {kernel[idx]!r} is negative or not finite")
    sums = kernel.sum(axis=(2, 3))
    off = np.abs(sums - 1.0) > PMF_TOL
    if off.any():
        x, s = (int(i) for i in np.argwhere(off)[0])
        raise ChannelError(f"kernel[{x}][{s}] sums to {sums[x, s]!r}, expected 1")

    bad = ~np.isfinite(distortion) | (distortion < 0)
    if bad.any():
        s, t = (int(i) for i in np.argwhere(bad)[0])
        raise ChannelError(
            f"distortion[{s}][{t}] = {distortion[s, t]!r} is negative or not finite"
        )


@dataclass(frozen=True, eq=False)
class InputDist:
    """A pmf over the input alphabet."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        p = _readonly(self.probs)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probs must be a non-empty 1-d array")
        try:
            _check_pmf(p, "probs")
        except ChannelError as exc:
            raise ValueError(str(exc)) from None
        object.__setattr__(self, "probs", p)

    @classmethod
    def binary(cls, alpha: float) -> InputDist:
        """Binary input with ``Pr[X = 1] = alpha``."""
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {alpha!r}")
        return cls(np.array([1.0 - alpha, alpha]))

    @classmethod
    def point_mass(cls, x: int, size: int) -> InputDist:
        p = np.zeros(size)
        p[x] = 1.0
        return cls(p)

    @classmethod
    def uniform(cls, size: int) -> InputDist:
        return cls(np.full(size, 1.0 / size))

    @property
    def size(self) -> int:
        return self.probs.size

    def __repr__(self) -> str:
        return f"InputDist({np.array2string(self.probs, precision=6, separator=', ')})"


@dataclass(frozen=True)
class InfoMoments:
    """Mean, variance and third absolute central moment of the information density."""

    mutual_info: float
    var: float
    third_abs: float


def marginal_channel(dmc: StateDMC) -> np.ndarray:
    """Receiver channel ``P(y|x)`` averaged over state and feedback.

    Returns an array of shape (Y, X); column ``x`` is a pmf over outputs.
    """
    # P(y|x) = sum_s P_S(s) sum_z W[x, s, y, z]
    return np.einsum("s,xsyz->yx", dmc.state_prior, dmc.kernel)


def output_dist(px: InputDist, pyx: np.ndarray) -> np.ndarray:
    if pyx.shape[1] != px.size:
        raise ValueError(f"input size {px.size} does not match channel with {pyx.shape[1]} inputs")
    return pyx @ px.probs


def info_density(x: int, y: int, px: InputDist, pyx: np.ndarray) -> float:
    """Information density ``log2 P(y|x) / P_Y(y)`` of a single pair."""
    py = output_dist(px, pyx)[y]
    if py <= 0.0:
        raise ValueError(f"output {y} has zero probability under this input distribution")
    pxy = pyx[y, x]
    if pxy == 0.0:
        return -np.inf
    return float(np.log2(pxy / py))


def density_table(px: InputDist, pyx: np.ndarray) -> np.ndarray:
    """All information densities as an (X, Y) array.

    Pairs with ``P(y|x) = 0`` get ``-inf``. Outputs with ``P_Y(y) = 0`` never
    occur under the joint law and are also set to ``-inf``.
    """
    py = output_dist(px, pyx)
    table = np.full((pyx.shape[1], pyx.shape[0]), -np.inf)
    ok = (pyx.T > 0) & (py[None, :] > 0)
    ratio = np.divide(pyx.T, py[None, :], out=np.ones_like(table), where=ok)
    np.log2(ratio, out=table, where=ok)
    return table


def info_moments(px: InputDist, pyx: np.ndarray) -> InfoMoments:
    """Exact moments of the information density under ``P_X P_{Y|X}``.

    Only the joint support contributes, so ``0 log 0 = 0``. When the density is
    constant on the support the variance and third moment are exactly zero.
    """
    joint = pyx.T * px.probs[:, None]  # (X, Y)
    support = joint > 0
    dens = density_table(px, pyx)[support]
    w = joint[support]
    mi = float(np.dot(w, dens))
    dev = dens - mi
    if np.max(np.abs(dev)) <= 1e-12 * max(1.0, abs(mi)):
        return InfoMoments(mi, 0.0, 0.0)
    var = float(np.dot(w, dev**2))
    third = float(np.dot(w, np.abs(dev) ** 3))
    return InfoMoments(mi, var, third)


def moments_for(dmc: StateDMC, px: InputDist) -> InfoMoments:
    return info_moments(px, marginal_channel(dmc))


def binary_channel(q: float) -> StateDMC:
    """The multiplicative Bernoulli-state channel ``Y = S X`` with ``Z = Y``.

    The state is Bernoulli(q) and distortion is Hamming.
    """
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q!r}")
    kernel = np.zeros((2, 2, 2, 2))
    for x in range(2):
        for s in range(2):
            y = s * x
            kernel[x, s, y, y] = 1.0
    return StateDMC(
        state_prior=np.array([1.0 - q, q]),
        kernel=kernel,
        distortion=1.0 - np.eye(2),
        name=f"binary-q{q:g}",
    )


def channel_to_dict(dmc: StateDMC) -> dict[str, Any]:
    return {
        "name": dmc.name,
        "x_size": dmc.x_size,
        "s_size": dmc.s_size,
        "y_size": dmc.y_size,
        "z_size": dmc.z_size,
        "state_prior": dmc.state_prior.tolist(),
        "kernel": dmc.kernel.tolist(),
        "distortion": dmc.distortion.tolist(),
    }


_REQUIRED = ("x_size", "s_size", "y_size", "z_size", "state_prior", "kernel", "distortion")


def channel_from_dict(d: dict[str, Any]) -> StateDMC:
    """Build a channel from its JSON form, checking declared sizes against the arrays."""
    if not isinstance(d, dict):
        raise ChannelError("channel document must be a JSON object")
    for key in _REQUIRED:
        if key not in d:
            raise ChannelError(f"missing field {key!r}")
    sizes = {}
    for key in _REQUIRED[:4]:
        v = d[key]
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise ChannelError(f"{key} must be a positive integer, got {v!r}")
        sizes[key] = v
    try:
        prior = np.asarray(d["state_prior"], dtype=float)
        kernel = np.asarray(d["kernel"], dtype=float)
        dist = np.asarray(d["distortion"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ChannelError(f"arrays must be rectangular numeric lists: {exc}") from None
    expect = (sizes["x_size"], sizes["s_size"], sizes["y_size"], sizes["z_size"])
    if prior.shape != (sizes["s_size"],):
        raise ChannelError(f"state_prior has shape {prior.shape}, expected ({sizes['s_size']},)")
    if kernel.shape != expect:
        raise ChannelError(f"kernel has shape {kernel.shape}, expected {expect}")
    return StateDMC(prior, kernel, dist, name=str(d.get("name", "")))


def load_channel(path: str | PathLike) -> StateDMC:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ChannelError(f"{path}: not valid JSON ({exc})") from None
    return channel_from_dict(doc)


def save_channel(dmc: StateDMC, path: str | PathLike) -> None:
    with open(path, "w") as fh:
        json.dump(channel_to_dict(dmc), fh, indent=2)
        fh.write("\n")
