"""Scaling measurements behind the `bench` subcommand.

Two tables: median visual-scoring wall time over a token-count ladder
(the scoring pass is linear in n*f*d, so doubling either axis should at
most double the median, plus timer noise), and KV-cache payload bytes
over a retained-length ladder (exactly linear by layout arithmetic,
measured on real prefill caches rather than asserted).
"""

from __future__ import annotations

import numpy as np

from .cache import SegmentedSequence
from .decoder import Decoder, DecoderConfig
from .errors import ConfigError
from .pruner import scoring_cost_scaling

DEFAULT_SCALES = (1, 2, 4)


def scoring_table(
    n: int, f: int, d: int, scales=DEFAULT_SCALES, repeats: int = 20, seed: int = 0
) -> list:
    """Median prune-scoring time per size; tokens-per-frame carries the scale."""
    if len(scales) < 3:
        raise ConfigError(f"need a ladder of >= 3 sizes, got {len(scales)}")
    if any(int(s) < 1 for s in scales):
        raise ConfigError(f"scales must be positive integers, got {scales!r}")
    sizes = [(n, f * int(s), d) for s in scales]
    rows = scoring_cost_scaling(sizes, repeats=repeats, seed=seed)
    base = rows[0]["median_seconds"]
    for row, scale in zip(rows, scales):
        row["scale"] = int(scale)
        row["ratio_to_base"] = row["median_seconds"] / base if base > 0 else float("nan")
    return rows


def cache_bytes_table(lengths, layers: int = 8, model_dim: int = 64, heads: int = 4) -> list:
    """KV payload bytes after prefilling random sequences of each length."""
    lengths = [int(x) for x in lengths]
    if len(lengths) < 2 or any(x < 1 for x in lengths):
        raise ConfigError(f"need >= 2 positive lengths, got {lengths!r}")
    config = DecoderConfig(
        layers=layers, model_dim=model_dim, heads=heads,
        mlp_dim=4 * model_dim, vocab=64, seed=0,
        max_positions=max(lengths) + 1,
    )
    decoder = Decoder(config)
    rng = np.random.default_rng(0)
    rows = []
    for length in lengths:
        embedded = rng.standard_normal((length, model_dim))
        spans = SegmentedSequence(system_len=0, visual_len=length, instruction_len=0)
        cache = decoder.prefill(embedded, spans).cache
        rows.append({
            "length": length,
            "bytes": cache.total_bytes(),
            "bytes_per_entry": cache.total_bytes() // (length * layers),
        })
    return rows


def cache_bytes_linear(rows) -> bool:
    """True iff bytes/length is the same integer for every ladder point."""
    per_unit = {row["bytes"] * 1.0 / row["length"] for row in rows}
    return len(per_unit) == 1


def run_bench(
    n: int, f: int, d: int, scales=DEFAULT_SCALES, repeats: int = 20, seed: int = 0
) -> dict:
    scoring = scoring_table(n, f, d, scales=scales, repeats=repeats, seed=seed)
    base_len = n * f
    cache_rows = cache_bytes_table([base_len * int(s) for s in scales])
    return {
        "scoring": scoring,
        "cache": cache_rows,
        "cache_bytes_linear": cache_bytes_linear(cache_rows),
    }
