"""Monte Carlo simulation of the random-coding ISAC scheme.

Each trial draws a fresh i.i.d. codebook from the input pmf, sends a uniformly
chosen message over the channel, decodes it at the receiver from ``Y^n`` and
estimates the state sequence at the transmitter from ``(X^n, Z^n)``.

Two engines produce the same ensemble. ``"explicit"`` stores the whole
``M x n`` codebook. ``"types"`` draws only the transmitted codeword; every other
codeword is independent of it and of ``Y^n``, and its information density
depends only on its symbol counts inside each output class, so those counts
are drawn directly from multinomials. Decisions (including tie-breaking by
index) have the same law in both engines; the draws themselves differ.

Randomness: every trial gets its own Philox generator seeded by
``SeedSequence(seed, spawn_key=(trial,))``, so a report depends only on the
master seed and the trial count, not on how trials are split across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Literal

import numpy as np

from .bounds import q_inv
from .channel import InputDist, StateDMC, density_table, marginal_channel
from .estimator import EstimatorTable, estimator_table

Decoder = Literal["maxinfo", "threshold"]
Engine = Literal["explicit", "types"]
DEFAULT_MAX_SYMBOLS = 2**28
ERASURE = -1
Z95 = float(q_inv(0.025))


class SizeCapError(ValueError):
    """Codebook would exceed the configured memory cap."""


@dataclass(frozen=True, eq=False)
class CodeParams:
    n: int
    msg_count: int
    input_dist: InputDist
    threshold_gamma: float | None = None
    seed: int = 0
    max_symbols: int = DEFAULT_MAX_SYMBOLS

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"n must be at least 1, got {self.n}")
        if self.msg_count < 1:
            raise ValueError(f"msg_count must be at least 1, got {self.msg_count}")
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def rate(self) -> float:
        return math.log2(self.msg_count) / self.n

    def check_size(self) -> None:
        size = self.msg_count * self.n
        if size > self.max_symbols:
            raise SizeCapError(
                f"codebook of {self.msg_count} x {self.n} = {size} symbols exceeds "
                f"the cap of {self.max_symbols} symbols"
            )


def threshold_for(msg_count: int, n: int, k_coeff: float) -> float:
    """Decoding threshold ``log2 M + K log2 n`` in bits."""
    return math.log2(msg_count) + k_coeff * math.log2(n)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(trial,))))


def _sample(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)


def generate_codebook(params: CodeParams, rng: np.random.Generator) -> np.ndarray:
    """``msg_count x n`` array of i.i.d. input symbols."""
    params.check_size()
    cdf = np.cumsum(params.input_dist.probs)
    return _sample(cdf, rng.random((params.msg_count, params.n)))


def transmit(
    dmc: StateDMC, x_seq: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Send ``x_seq`` through the channel; returns ``(y_seq, z_seq, s_seq)``."""
    x_seq = np.asarray(x_seq)
    s_seq = _sample(np.cumsum(dmc.state_prior), rng.random(x_seq.shape))
    # joint (y, z) drawn from the flattened kernel row of each (x, s)
    cdf = np.cumsum(dmc.kernel.reshape(dmc.x_size, dmc.s_size, -1), axis=2)
    rows = cdf[x_seq, s_seq]
    u = rng.random(x_seq.shape)
    yz = np.minimum((rows <= u[..., None]).sum(axis=-1), rows.shape[-1] - 1)
    return yz // dmc.z_size, yz % dmc.z_size, s_seq


def codeword_scores(codebook: np.ndarray, y_seq: np.ndarray, table: np.ndarray) -> np.ndarray:
    """Information density of every codeword against ``y_seq`` (bits)."""
    return table[codebook, y_seq[None, :]].sum(axis=1)


def decode_maxinfo(
    codebook: np.ndarray, y_seq: np.ndarray, input_dist: InputDist, marginal: np.ndarray
) -> int:
    """Index of the codeword with the largest information density; ties go to the smallest index."""
    scores = codeword_scores(codebook, y_seq, density_table(input_dist, marginal))
    return int(np.argmax(scores))


def decode_threshold(
    codebook: np.ndarray, y_seq: np.ndarray, input_dist: InputDist, marginal: np.ndarray, gamma: float
) -> int:
    """Smallest index whose information density exceeds ``gamma``, or `ERASURE`."""
    scores = codeword_scores(codebook, y_seq, density_table(input_dist, marginal))
    hits = np.flatnonzero(scores > gamma)
    return int(hits[0]) if hits.size else ERASURE


def estimate_states(
    dmc: StateDMC, x_seq: np.ndarray, z_seq: np.ndarray, table: EstimatorTable | None = None
) -> np.ndarray:
    if table is None:
        table = estimator_table(dmc)
    return table.estimate(np.asarray(x_seq), np.asarray(z_seq))


def wilson_interval(k: int, n: int, z: float = Z95) -> tuple[float, float]:
    p = k / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass
class SimReport:
    trials: int
    errors: int
    erasures: int
    eps_hat: float
    eps_ci: tuple[float, float]
    distortion_hat: float
    distortion_se: float
    distortion_ci: tuple[float, float]
    decoder: str
    engine: str
    seed: int
    n: int
    msg_count: int
    rate: float
    config: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["eps_ci"] = list(self.eps_ci)
        d["distortion_ci"] = list(self.distortion_ci)
        return d


def _class_counts(x_seq: np.ndarray, y_seq: np.ndarray, x_size: int, y_size: int) -> np.ndarray:
    """``(y_size, x_size)`` counts of input symbols inside each output class."""
    out = np.zeros((y_size, x_size), dtype=np.int64)
    np.add.at(out, (y_seq, x_seq), 1)
    return out


def _type_scores(counts: np.ndarray, dens: np.ndarray) -> np.ndarray:
    """Information density from class counts ``(..., y_size, x_size)``; -inf
    when any symbol falls on an impossible ``(x, y)`` pair."""
    bad = ~np.isfinite(dens.T)
    finite = np.where(bad, 0.0, dens.T)
    score = np.einsum("...ba,ba->...", counts, finite)
    hit = np.einsum("...ba,ba->...", counts, bad.astype(np.int64)) > 0
    return np.where(hit, -np.inf, score)


def _wrong_class_counts(
    rng: np.random.Generator, y_seq: np.ndarray, px: np.ndarray, y_size: int, count: int
) -> np.ndarray:
    n_b = np.bincount(y_seq, minlength=y_size)
    out = np.zeros((count, y_size, px.size), dtype=np.int64)
    for b in range(y_size):
        if n_b[b]:
            out[:, b, :] = rng.multinomial(n_b[b], px, size=count)
    return out


def _run_trials(
    dmc: StateDMC,
    params: CodeParams,
    decoder: Decoder,
    trial_ids: range,
    fixed_codebook: np.ndarray | None,
    engine: Engine = "explicit",
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    pyx = marginal_channel(dmc)
    dens = density_table(params.input_dist, pyx)
    est = estimator_table(dmc)
    gamma = params.threshold_gamma
    px = params.input_dist.probs
    cdf = np.cumsum(px)
    errors = np.zeros(len(trial_ids), dtype=bool)
    erased = np.zeros(len(trial_ids), dtype=bool)
    dist = np.zeros(len(trial_ids))
    for j, t in enumerate(trial_ids):
        rng = trial_rng(params.seed, t)
        if engine == "types":
            m = int(rng.integers(params.msg_count))
            x = _sample(cdf, rng.random(params.n))
            y, z, s = transmit(dmc, x, rng)
            own = _type_scores(_class_counts(x, y, dmc.x_size, dmc.y_size), dens)
            wrong = _type_scores(_wrong_class_counts(rng, y, px, dmc.y_size, params.msg_count - 1), dens)
            # wrong[:m] hold indices below m, wrong[m:] indices above it
            if decoder == "maxinfo":
                bad = np.any(wrong[:m] >= own) or np.any(wrong[m:] > own)
                none = False
            else:
                bad = np.any(wrong[:m] > gamma) or not own > gamma
                none = not own > gamma and not np.any(wrong > gamma)
            errors[j], erased[j] = bad, none
        else:
            book = fixed_codebook if fixed_codebook is not None else generate_codebook(params, rng)
            m = int(rng.integers(params.msg_count))
            x = book[m]
            y, z, s = transmit(dmc, x, rng)
            scores = codeword_scores(book, y, dens)
            if decoder == "maxinfo":
                m_hat = int(np.argmax(scores))
            else:
                hits = np.flatnonzero(scores > gamma)
                m_hat = int(hits[0]) if hits.size else ERASURE
            errors[j] = m_hat != m
            erased[j] = m_hat == ERASURE
        s_hat = est.best[x, z]
        dist[j] = dmc.distortion[s, s_hat].mean()
    return errors, erased, dist


def run_experiment(
    dmc: StateDMC,
    params: CodeParams,
    trials: int,
    decoder: Decoder = "maxinfo",
    workers: int = 1,
    fixed_codebook: bool = False,
    engine: Engine = "explicit",
) -> SimReport:
    """Estimate error probability and distortion of the scheme over ``trials`` blocks.

    The default draws a fresh codebook per trial, which matches the
    random-coding ensemble. With ``fixed_codebook`` one codebook, drawn from
    the stream of trial index ``2**63``, is reused for every trial.
    ``engine="types"`` samples the same ensemble without storing codebooks
    (see the module notes); it cannot be combined with ``fixed_codebook``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if decoder not in ("maxinfo", "threshold"):
        raise ValueError(f"unknown decoder {decoder!r}")
    if decoder == "threshold" and params.threshold_gamma is None:
        raise ValueError("threshold decoding needs params.threshold_gamma")
    if params.input_dist.size != dmc.x_size:
        raise ValueError("input distribution does not match the channel input alphabet")
    if engine not in ("explicit", "types"):
        raise ValueError(f"unknown engine {engine!r}")
    if engine == "types" and fixed_codebook:
        raise ValueError("the types engine has no stored codebook to fix")
    if engine == "explicit":
        params.check_size()

    book = generate_codebook(params, trial_rng(params.seed, 2**63)) if fixed_codebook else None
    chunks = _chunks(trials, max(1, workers))
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, [(dmc, params, decoder, c, book, engine) for c in chunks]))
    else:
        parts = [_run_trials(dmc, params, decoder, c, book, engine) for c in chunks]
    errors = np.concatenate([p[0] for p in parts])
    erased = np.concatenate([p[1] for p in parts])
    dist = np.concatenate([p[2] for p in parts])

    k = int(errors.sum())
    d_hat = float(np.mean(dist))
    se = float(np.std(dist, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return SimReport(
        trials=trials,
        errors=k,
        erasures=int(erased.sum()),
        eps_hat=k / trials,
        eps_ci=wilson_interval(k, trials),
        distortion_hat=d_hat,
        distortion_se=se,
        distortion_ci=(d_hat - Z95 * se, d_hat + Z95 * se),
        decoder=decoder,
        engine=engine,
        seed=params.seed,
        n=params.n,
        msg_count=params.msg_count,
        rate=params.rate,
    )


def _chunks(trials: int, workers: int) -> list[range]:
    step = math.ceil(trials / workers)
    return [range(a, min(a + step, trials)) for a in range(0, trials, step)]


def _run_chunk(args):
    return _run_trials(*args)
