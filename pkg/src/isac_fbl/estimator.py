"""Bayes-optimal symbolwise state estimation at the transmitter.

The transmitter sees its own input ``x`` and the feedback ``z`` of each channel
use and guesses the state ``s`` of that use. Because states are i.i.d. and the
channel is memoryless, the per-symbol posterior ``P(s | x, z)`` is all that
matters, and the minimum-risk guess is applied symbol by symbol.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .channel import InputDist, StateDMC

TIE_TOL = 1e-12


def _argmin_first(risk: np.ndarray) -> int:
    # smallest index among near-ties, so float noise cannot flip the choice
    lo = risk.min()
    return int(np.flatnonzero(risk <= lo + TIE_TOL)[0])


@dataclass(frozen=True, eq=False)
class EstimatorTable:
    """Lookup table for the symbolwise estimator.

    Attributes
    ----------
    best : int array (X, Z)
        Minimum-risk state estimate for every ``(x, z)``.
    posterior : array (X, Z, S)
        State posterior; equal to the prior on unreachable pairs.
    reachable : bool array (X, Z)
        False where ``(x, z)`` has zero likelihood under every state.
    """

    best: np.ndarray
    posterior: np.ndarray
    reachable: np.ndarray

    def estimate(self, x_seq: np.ndarray, z_seq: np.ndarray) -> np.ndarray:
        return self.best[x_seq, z_seq]

    def to_dict(self) -> dict[str, Any]:
        return {
            "best": self.best.tolist(),
            "posterior": self.posterior.tolist(),
            "reachable": self.reachable.tolist(),
        }


def _posteriors(dmc: StateDMC) -> tuple[np.ndarray, np.ndarray]:
    # unnormalized P_S(s) P_{Z|XS}(z|x,s), arranged (X, Z, S)
    lik = np.einsum("s,xsz->xzs", dmc.state_prior, dmc.feedback_likelihood())
    norm = lik.sum(axis=2)
    reachable = norm > 0
    post = np.where(
        reachable[..., None],
        lik / np.where(reachable, norm, 1.0)[..., None],
        dmc.state_prior[None, None, :],
    )
    return post, reachable


def posterior(dmc: StateDMC, x: int, z: int) -> np.ndarray:
    """State posterior given input ``x`` and feedback ``z``.

    Falls back to the prior when ``(x, z)`` cannot occur.
    """
    lik = dmc.state_prior * dmc.kernel[x, :, :, z].sum(axis=1)
    total = lik.sum()
    if total <= 0:
        return dmc.state_prior.copy()
    return lik / total


def optimal_estimate(dmc: StateDMC, x: int, z: int) -> int:
    return _argmin_first(posterior(dmc, x, z) @ dmc.distortion)


def estimator_table(dmc: StateDMC) -> EstimatorTable:
    post, reachable = _posteriors(dmc)
    risk = post @ dmc.distortion  # (X, Z, S_hat)
    best = np.empty(reachable.shape, dtype=np.intp)
    for x in range(dmc.x_size):
        for z in range(dmc.z_size):
            best[x, z] = _argmin_first(risk[x, z])
    for a in (best, post, reachable):
        a.setflags(write=False)
    return EstimatorTable(best=best, posterior=post, reachable=reachable)


def distortion_per_input(dmc: StateDMC, table: EstimatorTable | None = None) -> np.ndarray:
    """Expected per-symbol distortion when input ``x`` is sent, for every ``x``.

    The expected distortion of any input pmf is the dot product of this vector
    with the pmf.
    """
    if table is None:
        table = estimator_table(dmc)
    pzxs = dmc.feedback_likelihood()  # (X, S, Z)
    # d(s, s_hat*(x, z)) laid out as (X, S, Z)
    d = dmc.distortion[np.arange(dmc.s_size)[None, :, None], table.best[:, None, :]]
    return np.einsum("s,xsz,xsz->x", dmc.state_prior, pzxs, d)


def expected_distortion(dmc: StateDMC, px: InputDist) -> float:
    return float(distortion_per_input(dmc) @ px.probs)


def d_trivial(dmc: StateDMC) -> float:
    """Best distortion of an estimator that ignores the feedback."""
    return float((dmc.state_prior @ dmc.distortion).min())


def d_min(dmc: StateDMC) -> tuple[float, InputDist]:
    """Smallest achievable expected distortion and an input attaining it.

    Expected distortion is linear in the input pmf, so a point mass is optimal.
    """
    c = distortion_per_input(dmc)
    x = _argmin_first(c)
    return float(c[x]), InputDist.point_mass(x, dmc.x_size)
