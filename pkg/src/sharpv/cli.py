"""Command-line harness: run the pipeline, generate inputs, benchmark.

    sharpv run   [--pattern P] [--n N] [--f F] [--d D] [--seed S]
                 [--mode adaptive|manual] [--w W] [--k K] [--m M]
                 [--decode-steps T] [--in video.svt] [--out report.json]
                 [--config cfg.json]
    sharpv gen   --out video.svt [--pattern P] [--n N] [--f F] [--d D]
                 [--seed S] [--config cfg.json]
    sharpv bench [--n N] [--f F] [--d D] [--scales 1,2,4] [--repeats R]
                 [--out table.json] [--config cfg.json]

Settings resolve as defaults < JSON config file < command-line flags.
The config file is a flat JSON object; unknown keys are rejected. Keys
without a flag (system_len, instruction_len, layers, heads, mlp_dim,
vocab, max_positions, decoder_seed) are settable only via the file.

Exit codes: 0 success, 2 configuration error, 3 I/O or file-format
error, 4 report invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, fields

from . import bench as bench_mod
from .decoder import Decoder, DecoderConfig
from .errors import (
    EXIT_CONFIG,
    EXIT_INVARIANT,
    EXIT_IO,
    EXIT_OK,
    ConfigError,
    InvariantViolation,
    PositionOverflowError,
    ShapeMismatchError,
    TensorFormatError,
)
from .pipeline import PipelineConfig, PromptEmbeddings, run_pipeline
from .synth import (
    SyntheticVideoSpec,
    gen_prompt_embeddings,
    gen_synthetic_video,
    parse_pattern,
)
from .tensorio import read_video, write_video


@dataclass(frozen=True)
class HarnessConfig:
    pattern: str = "uniform:0.5"
    n: int = 8
    f: int = 16
    d: int = 64
    seed: int = 42
    mode: str = "adaptive"
    w: float = 1.0
    k: float = 1.6
    m: float = 0.2
    decode_steps: int = 16
    system_len: int = 4
    instruction_len: int = 8
    layers: int = 8
    heads: int = 4
    mlp_dim: int = 256
    vocab: int = 256
    max_positions: int = 8192
    decoder_seed: int = 0

    def __post_init__(self):
        if self.seed < 0 or self.decoder_seed < 0:
            raise ConfigError("seeds must be >= 0")
        if self.system_len < 1 or self.instruction_len < 1:
            raise ConfigError("prompt segment lengths must be >= 1")


_INT_FIELDS = {f.name for f in fields(HarnessConfig) if f.type == "int"}
_FLOAT_FIELDS = {f.name for f in fields(HarnessConfig) if f.type == "float"}


def load_config_file(path: str) -> dict:
    with open(path, "rb") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    known = {f.name for f in fields(HarnessConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return raw


def resolve_config(args: argparse.Namespace) -> HarnessConfig:
    merged = asdict(HarnessConfig())
    if args.config is not None:
        merged.update(load_config_file(args.config))
    for name in merged:
        flag_value = getattr(args, name, None)
        if flag_value is not None:
            merged[name] = flag_value
    for name, value in merged.items():
        want = int if name in _INT_FIELDS else float if name in _FLOAT_FIELDS else str
        if want is int and (isinstance(value, bool) or not isinstance(value, int)):
            raise ConfigError(f"config key {name} must be an integer, got {value!r}")
        if want is float and (isinstance(value, bool) or not isinstance(value, (int, float))):
            raise ConfigError(f"config key {name} must be a number, got {value!r}")
        if want is str and not isinstance(value, str):
            raise ConfigError(f"config key {name} must be a string, got {value!r}")
        merged[name] = want(value)
    return HarnessConfig(**merged)


def _emit(text: str, out_path) -> None:
    if out_path is None:
        sys.stdout.write(text + "\n")
    else:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")


def cmd_run(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    if args.in_path is not None:
        video = read_video(args.in_path)
        cfg = HarnessConfig(**{**asdict(cfg), "n": video.n, "f": video.f, "d": video.d})
    else:
        spec = SyntheticVideoSpec(
            n=cfg.n, f=cfg.f, d=cfg.d, seed=cfg.seed, pattern=parse_pattern(cfg.pattern)
        )
        video = gen_synthetic_video(spec)
    system, instruction = gen_prompt_embeddings(
        cfg.seed, cfg.system_len, cfg.instruction_len, cfg.d
    )
    decoder = Decoder(DecoderConfig(
        layers=cfg.layers, model_dim=cfg.d, heads=cfg.heads, mlp_dim=cfg.mlp_dim,
        vocab=cfg.vocab, seed=cfg.decoder_seed, max_positions=cfg.max_positions,
    ))
    pipe_cfg = PipelineConfig(
        spatial_weight=cfg.w, mode=cfg.mode, manual_threshold=cfg.k,
        degradation_threshold=cfg.m, decode_steps=cfg.decode_steps,
    )
    _, report = run_pipeline(
        decoder, video, PromptEmbeddings(system, instruction), pipe_cfg,
        config_echo=asdict(cfg),
    )
    _emit(report.to_json(), args.out_path)
    return EXIT_OK


def cmd_gen(args: argparse.Namespace) -> int:
    if args.out_path is None:
        raise ConfigError("gen requires --out")
    cfg = resolve_config(args)
    spec = SyntheticVideoSpec(
        n=cfg.n, f=cfg.f, d=cfg.d, seed=cfg.seed, pattern=parse_pattern(cfg.pattern)
    )
    video = gen_synthetic_video(spec)
    write_video(args.out_path, video)
    _emit(json.dumps({
        "written": args.out_path, "n": video.n, "f": video.f, "d": video.d,
        "pattern": cfg.pattern, "seed": cfg.seed,
    }, sort_keys=True), None)
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = resolve_config(args)
    try:
        scales = tuple(int(s) for s in args.scales.split(","))
    except ValueError as exc:
        raise ConfigError(f"--scales must be comma-separated integers: {exc}") from exc
    if args.repeats < 1:
        raise ConfigError(f"--repeats must be >= 1, got {args.repeats}")
    table = bench_mod.run_bench(
        cfg.n, cfg.f, cfg.d, scales=scales, repeats=args.repeats, seed=cfg.seed
    )
    _emit(json.dumps(table, indent=2, sort_keys=True), args.out_path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sharpv",
        description="Two-stage visual token pruning and KV-cache eviction harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, video_flags=True, prune_flags=True):
        if video_flags:
            p.add_argument("--pattern", help="static | uniform:RATE | burst:I,J | mixed:SEG+SEG")
            p.add_argument("--n", type=int, help="frame count")
            p.add_argument("--f", type=int, help="tokens per frame")
            p.add_argument("--d", type=int, help="embedding dimension")
            p.add_argument("--seed", type=int, help="generation seed")
        if prune_flags:
            p.add_argument("--mode", choices=("adaptive", "manual"))
            p.add_argument("--w", type=float, help="spatial weight in combined importance")
            p.add_argument("--k", type=float, help="manual-mode keep threshold")
            p.add_argument("--m", type=float, help="cache-eviction similarity threshold")
            p.add_argument("--decode-steps", type=int, dest="decode_steps")
        p.add_argument("--out", dest="out_path", help="output path (default stdout)")
        p.add_argument("--config", help="JSON config file")

    run_p = sub.add_parser("run", help="run the full pipeline, print a JSON report")
    common(run_p)
    run_p.add_argument("--in", dest="in_path", help="read video tokens from a tensor file")
    run_p.set_defaults(handler=cmd_run)

    gen_p = sub.add_parser("gen", help="write a synthetic video tensor file")
    common(gen_p, prune_flags=False)
    gen_p.set_defaults(handler=cmd_gen)

    bench_p = sub.add_parser("bench", help="scaling tables for scoring time and cache bytes")
    common(bench_p, prune_flags=False)
    bench_p.add_argument("--scales", default="1,2,4", help="comma-separated size multipliers")
    bench_p.add_argument("--repeats", type=int, default=20, help="timing repetitions per size")
    bench_p.set_defaults(handler=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (ConfigError, PositionOverflowError, ShapeMismatchError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TensorFormatError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


def entrypoint() -> None:
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    entrypoint()
