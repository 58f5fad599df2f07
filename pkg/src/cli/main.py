"""nctf-dereverb command line.

Subcommands: dereverb, train-basis, make-scene, evaluate. Every command
returns 0 on success and 2 on a reported failure.
"""
from pathlib import Path
from typing import Any, Dict, List, Optional
import argparse
import logging
import sys

from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from .. import __version__
from ..audio.signal_io import read_wav
from ..config.engine_config import DEFAULT_TEMPORAL_WINDOW, EngineConfig, Method
from ..config.manifest import VARIANT_BASIS_MODE, RunManifest, Variant
from ..config.settings import settings
from ..core.exceptions import NctfError
from ..core.nmf import load_basis
from ..services.basis_trainer import train_basis
from ..services.dereverberator import Dereverberator
from ..services.evaluator import evaluate_files, write_metrics_csv
from ..services.scene_builder import build_scene, write_scene
from ..services.sweep import parse_sweep, plot_sweep, run_sweep

logger = logging.getLogger(__name__)
console = Console()

EXIT_OK = 0
EXIT_FAILURE = 2


def setup_logging() -> None:
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if settings.LOG_FILE is not None:
        Path(settings.LOG_FILE).parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(settings.LOG_FILE, encoding="utf-8"))
    logging.basicConfig(
        level=settings.LOG_LEVEL,
        format="%(asctime)s - %(levelname)s - %(message)s",
        handlers=handlers,
    )


def _add_engine_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("engine settings (override --config)")
    g.add_argument("--config", type=Path, help="Flat JSON file of engine settings")
    g.add_argument("--iterations", type=int, help="Sweeps (default 20, weighted 70)")
    g.add_argument("--rank", type=int, help="NMF rank (default 100, overcomplete 3000)")
    g.add_argument("--lh", type=int, help="RIR length in frames (default 10)")
    g.add_argument("--frame-ms", type=float, help="STFT frame length in ms (default 64)")
    g.add_argument("--power", type=int, choices=[1, 2], help="Spectrogram power p (default 1)")
    g.add_argument("--lambda", dest="lambda_value", type=float, help="Sparsity weight (default: auto)")
    g.add_argument("--phi-x", type=float, help="Activation sharpening exponent (default 1.02)")
    g.add_argument("--rho", type=float, help="Weight of the NMF term for the weighted method")
    g.add_argument("--t-st", type=int, help="Stacking window in frames (implies --temporal when > 1)")
    g.add_argument("--seed", type=int, help="Random seed")
    g.add_argument("--pure-mode", action="store_true", default=None,
                   help="Disable normalization, clamping and sharpening")
    g.add_argument("--direct-synthesis", action="store_true", default=None,
                   help="Resynthesize the NMF estimate instead of applying the gain")


def _engine_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides = {
        "iterations": args.iterations,
        "rank": args.rank,
        "lh": args.lh,
        "frame_ms": args.frame_ms,
        "power_p": args.power,
        "lambda_value": args.lambda_value,
        "phi_x": args.phi_x,
        "rho": args.rho,
        "t_st": args.t_st,
        "seed": args.seed,
        "pure_mode": args.pure_mode,
        "direct_synthesis": args.direct_synthesis,
    }
    return {k: v for k, v in overrides.items() if v is not None}


def _base_config(args: argparse.Namespace) -> EngineConfig:
    overrides = _engine_overrides(args)
    if args.config is not None:
        return EngineConfig.from_json_file(args.config, **overrides)
    return EngineConfig().with_overrides(**overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nctf-dereverb",
        description="Blind single-channel speech dereverberation with N-CTF and NMF",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dereverb", help="Dereverberate WAV files")
    p.add_argument("inputs", nargs="*", type=Path, help="Reverberant mono WAV files")
    p.add_argument("--method", choices=[m.value for m in Method], default=Method.INTEGRATED.value)
    p.add_argument("--variant", choices=[v.value for v in Variant], default=Variant.ONLINE.value)
    p.add_argument("--temporal", action="store_true", help="Frame stacking (integrated method only)")
    p.add_argument("--basis", type=Path, help="Basis file for the lowrank and overcomplete variants")
    p.add_argument("--output-dir", type=Path, default=None, help="Directory for outputs")
    p.add_argument("--output", type=Path, help="Output WAV path (single input only)")
    p.add_argument("--from-metadata", type=Path, help="Repeat the run described by a metadata file")
    p.add_argument("--sweep", help="Parameter sweep, e.g. rho=0.1:0.9:0.1; writes a CSV table")
    p.add_argument("--plot", action="store_true", help="Also save a PNG plot of the sweep")
    p.add_argument("--reference", type=Path, help="Clean reference for sweep metrics")
    _add_engine_flags(p)
    p.set_defaults(handler=cmd_dereverb)

    p = sub.add_parser("train-basis", help="Build a speech basis from a clean corpus")
    p.add_argument("corpus_dir", type=Path)
    p.add_argument("--mode", choices=[Variant.LOWRANK.value, Variant.OVERCOMPLETE.value],
                   default=Variant.LOWRANK.value)
    p.add_argument("--out", type=Path, required=True, help="Basis file to write")
    p.add_argument("--temporal", action="store_true", help="Train a stacked basis")
    _add_engine_flags(p)
    p.set_defaults(handler=cmd_train_basis)

    p = sub.add_parser("make-scene", help="Create a synthetic reverberant (and noisy) scene")
    p.add_argument("clean", type=Path)
    p.add_argument("--t60", type=float, required=True, help="Reverberation time in seconds")
    p.add_argument("--drr", type=float, required=True, help="Direct-to-reverberant ratio in dB")
    p.add_argument("--snr", type=float, help="Reverberant-signal-to-noise ratio in dB")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", type=Path, default=None)
    p.add_argument("--stem", help="Output file prefix (default: clean file stem)")
    p.set_defaults(handler=cmd_make_scene)

    p = sub.add_parser("evaluate", help="Score processed files against the clean signal")
    p.add_argument("clean", type=Path)
    p.add_argument("processed", nargs="+", type=Path)
    p.add_argument("--reference", type=Path, help="Unprocessed reverberant file for the delta columns")
    p.add_argument("--label", action="append", help="Row label per processed file (default: file stem)")
    p.add_argument("--out", type=Path, required=True, help="CSV file to write")
    p.add_argument("--append", action="store_true", help="Append rows to an existing CSV")
    p.add_argument("--frame-ms", type=float, help="STFT frame length in ms for the spectral metrics")
    p.set_defaults(handler=cmd_evaluate)
    return parser


def cmd_dereverb(args: argparse.Namespace) -> int:
    if args.from_metadata is not None:
        manifest = RunManifest.from_metadata(
            args.from_metadata,
            output_dir=args.output_dir,
            output_wav=args.output,
        )
    else:
        if not args.inputs:
            raise ValueError("dereverb needs at least one input file or --from-metadata")
        manifest = RunManifest(
            inputs=args.inputs,
            method=args.method,
            variant=args.variant,
            temporal=args.temporal or (args.t_st or 1) > 1,
            basis_path=args.basis,
            output_dir=args.output_dir or settings.OUTPUT_DIR,
            output_wav=args.output,
            config_path=args.config,
            overrides=_engine_overrides(args),
        )

    if args.sweep:
        return _run_sweep(args, manifest)

    outputs = Dereverberator().run(manifest)
    table = Table(title=f"nctf-dereverb: {manifest.method.value}")
    table.add_column("Input", style="cyan")
    table.add_column("Output", style="green")
    table.add_column("Fit report")
    for source, paths in zip(manifest.inputs, outputs):
        table.add_row(str(source), str(paths.wav), str(paths.report_csv))
    console.print(table)
    return EXIT_OK


def _run_sweep(args: argparse.Namespace, manifest: RunManifest) -> int:
    if len(manifest.inputs) != 1:
        raise ValueError("--sweep takes exactly one input file")
    parameter, values = parse_sweep(args.sweep)
    config = manifest.engine_config()
    signal = read_wav(manifest.inputs[0], expected_rate=config.sample_rate)
    reference = read_wav(args.reference, expected_rate=config.sample_rate) if args.reference else None
    basis = load_basis(manifest.basis_path) if manifest.basis_path is not None else None

    frame = run_sweep(signal, manifest.method, config, parameter, values, reference, basis)
    stem = f"{manifest.inputs[0].stem}_{manifest.method.value}_sweep_{parameter}"
    csv_path = manifest.output_dir / f"{stem}.csv"
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(csv_path, index=False, encoding="utf-8", float_format="%.17g")
    logger.info(f"Wrote sweep over {parameter} ({len(values)} points) to {csv_path}")
    if args.plot:
        plot_sweep(frame, parameter, csv_path.with_suffix(".png"))
    return EXIT_OK


def cmd_train_basis(args: argparse.Namespace) -> int:
    config = _base_config(args)
    if args.temporal and config.t_st == 1:
        config = config.with_overrides(t_st=DEFAULT_TEMPORAL_WINDOW)
    if args.rank is None:
        config = config.with_overrides(basis_mode=VARIANT_BASIS_MODE[Variant(args.mode)])
    rank = config.resolved_rank()
    basis = train_basis(args.corpus_dir, rank, args.mode, args.out, config)
    console.print(f"Wrote {basis.shape[0]}x{basis.shape[1]} {args.mode} basis to {args.out}")
    return EXIT_OK


def cmd_make_scene(args: argparse.Namespace) -> int:
    clean = read_wav(args.clean, expected_rate=settings.EXPECTED_SAMPLE_RATE)
    seed = settings.DEFAULT_SEED if args.seed is None else args.seed
    scene = build_scene(clean, args.t60, args.drr, args.snr, seed)
    paths = write_scene(scene, args.out_dir or settings.OUTPUT_DIR, args.stem or args.clean.stem)
    for name, path in paths.items():
        console.print(f"{name}: {path}")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = EngineConfig().with_overrides(frame_ms=args.frame_ms)
    frame = evaluate_files(args.clean, args.processed, args.reference, args.label, config)
    write_metrics_csv(frame, args.out, append=args.append)

    table = Table(title="Evaluation")
    for column in ("method", "kl_fit", "lsd_db", "cd", "delta_lsd_db", "delta_cd"):
        table.add_column(column, justify="right" if column != "method" else "left")
    for row in frame.itertuples(index=False):
        table.add_row(row.method, f"{row.kl_fit:.4f}", f"{row.lsd_db:.2f}", f"{row.cd:.2f}",
                      f"{row.delta_lsd_db:+.2f}", f"{row.delta_cd:+.2f}")
    console.print(table)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (NctfError, ValidationError, OSError, ValueError) as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
