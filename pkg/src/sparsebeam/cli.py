"""Command-line entry points.

Subcommands: masks, graph, attn-check, histogram, channel, beamform,
sweep.  Exit codes: 0 success, 1 validation failure, 2 usage error,
3 io or resource-limit error.  A flat key=value config file can seed
any flag's default; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import _buildinfo
from .attention import EmbeddingBlock, attended_keys_histogram, dense_masked_oracle, gradient_check, sparse_attention_forward
from .beamforming import (
    mmse_combiner,
    optimize_sum_rate,
    power_project,
    sinr,
    sum_rate,
    sweep_optimizer_config,
    zf_combiner,
)
from .bench import SweepConfig, export_report, run_sweep
from .channel import DopplerConfig, OfdmConfig, add_estimation_error, generate_channel_batch, write_channel_file
from .errors import ResourceLimitError, SingularChannelError
from .graph import connectivity_report, verify_partition
from .masks import DEFAULT_TOKEN_CAP, GridSpec, build_doppler_masks, build_fixed_strided_masks


def _coerce(text: str):
    low = text.strip()
    if low.lower() in ("true", "false"):
        return low.lower() == "true"
    for cast in (int, float):
        try:
            return cast(low)
        except ValueError:
            continue
    return low


_CONFIG_KEY_ALIASES = {"lambda": "time_bias"}


def load_config_file(path) -> dict:
    """Flat key = value lines; '#' starts a comment.  Keys use the long
    flag names with dashes replaced by underscores ('lambda' is accepted
    for the time-bias factor)."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, raw = body.split("=", 1)
            key = key.strip().replace("-", "_")
            key = _CONFIG_KEY_ALIASES.get(key, key)
            if key == "handler":
                continue
            values[key] = _coerce(raw)
    return values


def _add_common(parser):
    parser.add_argument("--config", help="flat key=value config file seeding flag defaults")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--quiet", action="store_true")


def _add_grid_args(parser):
    parser.add_argument("--L", type=int, default=14, help="OFDM symbols (time axis)")
    parser.add_argument("--K", type=int, default=48, help="subcarriers (frequency axis)")
    parser.add_argument("--heads", type=int, default=2)
    parser.add_argument("--lambda", dest="time_bias", type=float, default=2.0, help="time bias factor")


def _grid_from(args) -> GridSpec:
    return GridSpec(symbols=args.L, subcarriers=args.K, heads=args.heads, time_bias=args.time_bias)


def _say(args, message):
    if not args.quiet:
        print(message)


def _cmd_masks(args) -> int:
    grid = _grid_from(args)
    if args.pattern == "doppler":
        masks = build_doppler_masks(grid, max_tokens=args.max_tokens)
    else:
        masks = build_fixed_strided_masks(grid, causal=args.causal, max_tokens=args.max_tokens)
    payload = json.dumps(masks.to_json_dict())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
            fh.write("\n")
        report = masks.validation_report()
        _say(args, f"wrote {args.out}: {masks.head_count} heads x {masks.tokens} tokens, "
                   f"empty rows per head {report['empty_rows_per_head']}")
    else:
        print(payload)
    return 0


def _cmd_graph(args) -> int:
    grid = _grid_from(args)
    masks = build_doppler_masks(grid)
    partition = verify_partition(masks)
    report = connectivity_report(grid, maskset=masks, sample=args.sample, seed=args.seed)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    if args.mode in ("directed", "both"):
        _say(args, f"directed diameter: {report.directed.diameter}")
    if args.mode in ("undirected", "both"):
        _say(args, f"undirected diameter: {report.undirected.diameter}")
    _say(args, f"stride {report.global_stride}, bridging heads {report.bridging_heads}, "
               f"fully connected: {report.fully_connected}, hop bound <= heads: {report.hop_bound_satisfied}")
    if not partition.passed:
        _say(args, f"partition check FAILED with witness {partition.witness}")
        return 1
    if not report.theorem_consistent:
        _say(args, "connectivity check FAILED: bridging holds but the union graph is disconnected")
        return 1
    return 0


def _cmd_attn_check(args) -> int:
    grid = _grid_from(args)
    masks = build_doppler_masks(grid)
    worst_forward = 0.0
    for trial in range(args.trials):
        block = EmbeddingBlock.random(grid.tokens, args.model_dim, grid.heads, seed=(args.seed, trial))
        sparse = sparse_attention_forward(block, masks)
        dense = dense_masked_oracle(block, masks)
        worst_forward = max(worst_forward, float(np.abs(sparse.output - dense.output).max()))
    worst_grad = 0.0
    for trial in range(args.grad_trials):
        block = EmbeddingBlock.random(grid.tokens, args.model_dim, grid.heads, seed=(args.seed, 1000 + trial))
        worst_grad = max(worst_grad, gradient_check(block, masks))
    _say(args, f"max forward deviation vs dense oracle: {worst_forward:.3e}")
    _say(args, f"max gradient relative error: {worst_grad:.3e}")
    if worst_forward > args.tol_forward or worst_grad > args.tol_grad:
        _say(args, "attention check FAILED")
        return 1
    return 0


def _cmd_histogram(args) -> int:
    grid = _grid_from(args)
    masks = build_doppler_masks(grid)
    report = attended_keys_histogram(masks, samples=args.samples)
    lines = ["head,row_length,query_count"]
    for head, length, count in report.to_rows():
        lines.append(f"{head},{length},{count}")
    payload = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(payload)
        _say(args, f"wrote {args.out} ({report.total_queries} queries per head)")
    else:
        print(payload, end="")
    return 0


def _cmd_channel(args) -> int:
    ofdm = OfdmConfig(
        symbols=args.symbols,
        subcarriers=12 * args.rb,
        subcarrier_spacing_hz=args.subcarrier_spacing,
        tti_s=args.tti,
        num_taps=args.taps,
        delay_spread_s=args.delay_spread,
    )
    doppler = DopplerConfig(carrier_hz=args.fc, velocity_mps=(args.v_min, args.v_max))
    batch = generate_channel_batch(ofdm, doppler, args.m, args.n, args.realizations, args.seed)
    write_channel_file(args.out, batch, args.seed)
    power = float((np.abs(batch) ** 2).mean())
    _say(args, f"wrote {args.out}: {batch.shape} complex128, mean |H|^2 = {power:.4f}")
    return 0


def _cmd_beamform(args) -> int:
    rng = np.random.default_rng(args.seed)
    sigma2 = 10.0 ** (-args.snr_db / 10.0)
    header = ["realization", "method", "snr_db", "sum_rate_bpshz"]
    header += [f"per_ue_sinr_db_{k}" for k in range(args.n)]
    lines = [",".join(header)]
    opt_cfg = sweep_optimizer_config(iterations=args.opt_iterations)
    for r in range(args.realizations):
        h = (rng.standard_normal((args.m, args.n)) + 1j * rng.standard_normal((args.m, args.n))) / np.sqrt(2.0)
        estimate = add_estimation_error(h, args.est_snr_db, (args.seed, r))
        for method in args.method:
            if method == "zf":
                w = power_project(zf_combiner(estimate))
            elif method == "mmse":
                w = power_project(mmse_combiner(estimate, sigma2))
            else:
                w = optimize_sum_rate(estimate, h, sigma2, opt_cfg).combiner
            rate = sum_rate(w, h, sigma2)
            gammas = sinr(w, h, sigma2)
            sinr_db = ",".join(format(10.0 * np.log10(g), ".12g") for g in gammas)
            lines.append(f"{r},{method},{format(args.snr_db, '.12g')},{format(rate, '.12g')},{sinr_db}")
    payload = "\n".join(lines) + "\n"
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(payload)
        _say(args, f"wrote {args.csv} ({args.realizations} realizations)")
    else:
        print(payload, end="")
    return 0


def _cmd_sweep(args) -> int:
    overrides = {}
    if args.snr_db:
        overrides["snr_db_list"] = tuple(float(x) for x in args.snr_db.split(","))
    if args.realizations is not None:
        overrides["realizations"] = args.realizations
    if args.methods:
        overrides["methods"] = tuple(args.methods.split(","))
    if args.est_snr_db is not None:
        overrides["est_snr_db"] = args.est_snr_db
    config = SweepConfig(
        seed=args.seed,
        optimizer=sweep_optimizer_config(iterations=args.opt_iterations),
        **overrides,
    )
    progress = None if args.quiet else (lambda vr, snr: print(f"  velocity {vr} snr {snr} dB done"))
    result = run_sweep(config, progress=progress)
    export_report(result, "csv", args.out)
    _say(args, f"wrote {args.out} ({len(result.points)} points)")
    if args.json:
        export_report(result, "json", args.json)
        _say(args, f"wrote {args.json}")
    return 0


def build_parser(config: dict | None = None) -> argparse.ArgumentParser:
    """The CLI parser; `config` keys become flag defaults on every
    subcommand (subparsers keep their own default tables, so the config
    has to be pushed onto each one)."""
    parser = argparse.ArgumentParser(
        prog="sparsebeam",
        description="Doppler-aware sparse attention masks and beamformer benchmarks",
    )
    parser.add_argument("--version", action="version", version=f"sparsebeam {_buildinfo.VERSION} build {_buildinfo.build_hash()}")
    sub = parser.add_subparsers(dest="command", required=True)

    def _finish(p):
        # config values land after the argument defaults, so they win
        # over defaults while explicit flags still win over them
        if config:
            p.set_defaults(**config)

    p = sub.add_parser("masks", help="build sparse masks and export them as JSON")
    _add_common(p)
    _add_grid_args(p)
    p.add_argument("--pattern", choices=("doppler", "fixed"), default="doppler")
    p.add_argument("--causal", action="store_true", help="causal variant of the fixed pattern")
    p.add_argument("--max-tokens", type=int, default=DEFAULT_TOKEN_CAP)
    p.add_argument("--out")
    p.set_defaults(handler=_cmd_masks)
    _finish(p)

    p = sub.add_parser("graph", help="connectivity report for the Doppler-aware masks")
    _add_common(p)
    _add_grid_args(p)
    p.add_argument("--mode", choices=("directed", "undirected", "both"), default="both")
    p.add_argument("--sample", action="store_true", help="sampled sources above the BFS cap")
    p.add_argument("--report", help="write the full report JSON here")
    p.set_defaults(handler=_cmd_graph)
    _finish(p)

    p = sub.add_parser("attn-check", help="sparse forward vs dense oracle plus gradient check")
    _add_common(p)
    _add_grid_args(p)
    p.set_defaults(L=4, K=6)  # desk-scale default grid for kernel checks
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--grad-trials", type=int, default=3)
    p.add_argument("--model-dim", type=int, default=8)
    p.add_argument("--tol-forward", type=float, default=1e-6)
    p.add_argument("--tol-grad", type=float, default=1e-5)
    p.set_defaults(handler=_cmd_attn_check)
    _finish(p)

    p = sub.add_parser("histogram", help="attended-keys-per-query histogram as CSV")
    _add_common(p)
    _add_grid_args(p)
    p.add_argument("--samples", type=int, default=16)
    p.add_argument("--out")
    p.set_defaults(handler=_cmd_histogram)
    _finish(p)

    p = sub.add_parser("channel", help="generate Doppler channel realizations to a binary file")
    _add_common(p)
    p.add_argument("--v-min", type=float, default=0.0)
    p.add_argument("--v-max", type=float, default=10.0)
    p.add_argument("--fc", type=float, default=2.6e9)
    p.add_argument("--rb", type=int, default=4, help="resource blocks (12 subcarriers each)")
    p.add_argument("--symbols", type=int, default=14)
    p.add_argument("--taps", type=int, default=4)
    p.add_argument("--subcarrier-spacing", type=float, default=30e3)
    p.add_argument("--tti", type=float, default=500e-6)
    p.add_argument("--delay-spread", type=float, default=100e-9)
    p.add_argument("--m", type=int, default=8, help="receive antennas")
    p.add_argument("--n", type=int, default=2, help="single-antenna users")
    p.add_argument("--realizations", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_channel)
    _finish(p)

    p = sub.add_parser("beamform", help="per-realization beamformer rates on Rayleigh draws")
    _add_common(p)
    p.add_argument("--method", action="append", choices=("zf", "mmse", "opt"), required=True)
    p.add_argument("--snr-db", type=float, default=10.0)
    p.add_argument("--est-snr-db", type=float, default=float("inf"))
    p.add_argument("--m", type=int, default=8)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--realizations", type=int, default=10)
    p.add_argument("--opt-iterations", type=int, default=100)
    p.add_argument("--csv")
    p.set_defaults(handler=_cmd_beamform)
    _finish(p)

    p = sub.add_parser("sweep", help="full beamformer comparison sweep to CSV/JSON")
    _add_common(p)
    p.add_argument("--snr-db", help="comma-separated SNR grid in dB")
    p.add_argument("--realizations", type=int)
    p.add_argument("--methods", help="comma-separated subset of zf,mmse,opt")
    p.add_argument("--est-snr-db", type=float)
    p.add_argument("--opt-iterations", type=int, default=100)
    p.add_argument("--out", default="sweep.csv")
    p.add_argument("--json", help="also write the JSON mirror here")
    p.set_defaults(handler=_cmd_sweep)
    _finish(p)

    return parser


def cli_dispatch(argv) -> int:
    """Parse and run; returns the process exit code instead of exiting."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    try:
        known, _ = pre.parse_known_args(argv)
        config = load_config_file(known.config) if known.config else None
        args = build_parser(config).parse_args(argv)
    except SystemExit as exc:  # argparse exits on usage errors (2) and on --help/--version (0)
        return int(exc.code or 0)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    try:
        return int(args.handler(args) or 0)
    except (ResourceLimitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, SingularChannelError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
