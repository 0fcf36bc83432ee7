from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "ci",
    derandomize=True,
    max_examples=50,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


def unit(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    return arr / np.linalg.norm(arr)


def basis(dim: int, axis: int) -> np.ndarray:
    v = np.zeros(dim)
    v[axis] = 1.0
    return v


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_tokens(embs, start=0.0, token_len=0.3, gap=0.0, first_index=0, chunk_id=None,
                scores=None, speakers=None, texts=None):
    """Build a contiguous token run from embedding rows."""
    from scdiar import TokenRecord

    tokens = []
    t = start
    for k, emb in enumerate(embs):
        tokens.append(TokenRecord(
            index=first_index + k,
            start_s=t,
            end_s=t + token_len,
            emb=unit(emb),
            chunk_id=chunk_id,
            scd_score=None if scores is None else scores[k],
            ref_speaker=None if speakers is None else speakers[k],
            text=None if texts is None else texts[k],
        ))
        t += token_len + gap
    return tokens
