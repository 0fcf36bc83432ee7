"""Deterministic synthetic-meeting generator with ground truth.

Speakers are random unit vectors kept pairwise-separated; each token embeds
its speaker's base vector plus spherical Gaussian noise, renormalized. Turn
lengths are geometric, pauses exponential, and everything is a pure function
of the seed.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .core import DEFAULT_EMB_DIM, TokenRecord, renormalize

__all__ = ["MeetingConfig", "MeetingTruth", "generate_meeting", "iter_meeting_tokens",
           "corrupt_scd"]

_BASE_ATTEMPTS = 10_000


@dataclass(frozen=True)
class MeetingConfig:
    """Knobs of one synthetic meeting; fully determines the stream via ``seed``."""

    n_speakers: int = 2
    duration_s: float = 60.0
    emb_dim: int = DEFAULT_EMB_DIM
    noise_sigma: float = 0.1
    token_rate: float = 3.0
    utterance_mean_tokens: float = 12.0
    pause_mean_s: float = 0.4
    self_transition_prob: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_speakers < 1:
            raise ValueError("n_speakers must be >= 1")
        if self.emb_dim < 1:
            raise ValueError("emb_dim must be >= 1")
        if self.n_speakers > self.emb_dim:
            raise ValueError(
                f"n_speakers ({self.n_speakers}) must not exceed emb_dim ({self.emb_dim}): "
                "base-vector rejection sampling needs that headroom")
        if self.duration_s <= 0:
            raise ValueError("duration_s must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.token_rate <= 0:
            raise ValueError("token_rate must be positive")
        if self.utterance_mean_tokens < 1:
            raise ValueError("utterance_mean_tokens must be >= 1")
        if self.pause_mean_s < 0:
            raise ValueError("pause_mean_s must be >= 0")
        if not (0.0 <= self.self_transition_prob < 1.0):
            raise ValueError("self_transition_prob must lie in [0, 1)")

    @classmethod
    def from_dict(cls, data: dict) -> "MeetingConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown meeting config keys: {', '.join(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True, eq=False)
class MeetingTruth:
    """Ground truth for scoring: per-token speakers, change set, bases."""

    ref_speakers: tuple[str, ...]
    change_points: tuple[int, ...]
    n_speakers: int
    bases: np.ndarray


def _draw_bases(rng: np.random.Generator, n: int, dim: int, max_cos: float = 0.5) -> np.ndarray:
    """Unit vectors drawn from normalized Gaussians, redrawn until every pair
    has cosine at most ``max_cos``."""
    bases: list[np.ndarray] = []
    for _ in range(n):
        for _ in range(_BASE_ATTEMPTS):
            cand = renormalize(rng.standard_normal(dim))
            if all(float(cand @ b) <= max_cos for b in bases):
                bases.append(cand)
                break
        else:
            raise RuntimeError(
                f"could not place {n} separated speakers in dimension {dim}")
    return np.stack(bases)


def iter_meeting_tokens(cfg: MeetingConfig) -> Iterator[TokenRecord]:
    """Lazily generate the meeting's tokens (ref speakers and oracle change
    scores baked into each record). Bounded memory regardless of duration."""
    rng = np.random.default_rng(cfg.seed)
    bases = _draw_bases(rng, cfg.n_speakers, cfg.emb_dim)
    token_len = 1.0 / cfg.token_rate
    speaker_names = [f"ref{k:02d}" for k in range(cfg.n_speakers)]

    t = 0.0
    index = 0
    current = int(rng.integers(cfg.n_speakers))
    previous_token_speaker: int | None = None
    while t < cfg.duration_s:
        length = int(rng.geometric(1.0 / cfg.utterance_mean_tokens))
        noise = rng.standard_normal((length, cfg.emb_dim))
        for row in range(length):
            if t >= cfg.duration_s:
                return
            emb = renormalize(bases[current] + cfg.noise_sigma * noise[row])
            is_change = (previous_token_speaker is not None
                         and previous_token_speaker != current)
            yield TokenRecord(
                index=index,
                start_s=t,
                end_s=t + token_len,
                emb=emb,
                text=f"w{index:06d}",
                scd_score=1.0 if is_change else 0.0,
                ref_speaker=speaker_names[current],
            )
            previous_token_speaker = current
            index += 1
            t += token_len
        t += float(rng.exponential(cfg.pause_mean_s)) if cfg.pause_mean_s > 0 else 0.0
        if cfg.n_speakers == 1:
            continue
        if cfg.self_transition_prob > 0 and float(rng.random()) < cfg.self_transition_prob:
            continue
        step = int(rng.integers(1, cfg.n_speakers))
        current = (current + step) % cfg.n_speakers


def generate_meeting(cfg: MeetingConfig) -> tuple[list[TokenRecord], MeetingTruth]:
    """Materialize a meeting and its ground truth."""
    rng = np.random.default_rng(cfg.seed)
    bases = _draw_bases(rng, cfg.n_speakers, cfg.emb_dim)
    tokens = list(iter_meeting_tokens(cfg))
    ref = tuple(t.ref_speaker for t in tokens)
    changes = tuple(i for i in range(1, len(ref)) if ref[i] != ref[i - 1])
    return tokens, MeetingTruth(ref, changes, cfg.n_speakers, bases)


def corrupt_scd(truth: MeetingTruth, miss_rate: float, fa_rate: float,
                seed: int = 0) -> np.ndarray:
    """Noisy change scores: true changes draw high Uniform(0.6, 1.0) except a
    ``miss_rate`` fraction drawn low, non-changes draw low Uniform(0, 0.15)
    except a ``fa_rate`` fraction drawn high. Deterministic per seed."""
    if not (0.0 <= miss_rate < 1.0) or not (0.0 <= fa_rate < 1.0):
        raise ValueError("miss_rate and fa_rate must lie in [0, 1)")
    n = len(truth.ref_speakers)
    rng = np.random.default_rng(seed)
    high = rng.uniform(0.6, 1.0, n)
    low = rng.uniform(0.0, 0.15, n)
    flip = rng.random(n)
    is_change = np.zeros(n, dtype=bool)
    is_change[list(truth.change_points)] = True
    scores = np.where(is_change,
                      np.where(flip < miss_rate, low, high),
                      np.where(flip < fa_rate, high, low))
    return scores
