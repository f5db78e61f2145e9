"""Command-line front end.

Machine-readable results go to stdout as ``key=value`` lines; diagnostics
go to stderr. Exit status: 0 success, 1 usage error, 2 data/format error.
Every subcommand computes its outputs fully before writing any file.
"""

import argparse
import io as _stdio
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, datasets, directions, ordering, quantizer
from . import io as vio
from .errors import SFVQError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
DEFAULT_SEED = 0


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise _UsageError(message)


class _HelpFormatter(argparse.ArgumentDefaultsHelpFormatter):
    """Show a default (or "required") for every option, help text or not."""

    def _get_help_string(self, action):
        text = action.help or ""
        if not action.option_strings or action.default is argparse.SUPPRESS or "default" in text:
            return text
        if action.required:
            return f"{text} (required)".strip()
        if action.default is None:
            return f"{text} (default: unset)".strip()
        return f"{text} (default: %(default)s)".strip()


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("SFVQ_SEED")
    if env is None:
        return DEFAULT_SEED
    try:
        return int(env)
    except ValueError:
        raise _UsageError(f"SFVQ_SEED must be an integer, got {env!r}") from None


def _check_out(path) -> Path:
    p = Path(path)
    parent = p.parent if str(p.parent) else Path(".")
    if not parent.is_dir():
        raise OSError(f"output directory does not exist: {parent}")
    return p


def _emit(**kv):
    for k, v in kv.items():
        if isinstance(v, float):
            v = f"{v:.6g}"
        print(f"{k}={v}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args):
    out = _check_out(args.out)
    data = datasets.generate(args.kind, args.n, _seed(args), noise=args.noise, dim=args.dim)
    vio.write_vectors(out, data)
    _emit(count=data.shape[0], dim=data.shape[1], out=out)


def cmd_train(args):
    out = _check_out(args.out)
    log_path = _check_out(args.log) if args.log else None
    data = vio.read_vectors(args.data)
    config = quantizer.TrainConfig(
        target_bits=args.bits, batch_size=args.batch_size,
        batches_per_stage=args.batches_per_stage, base_lr=args.lr, seed=_seed(args),
        init_mode=args.init, mode=args.mode, init_sample_count=args.init_samples,
        lambda_mode=args.lambda_mode, log_every=args.log_every)
    log = _stdio.StringIO() if log_path else None
    result = quantizer.train(config, data, log=log)
    vio.write_vectors(out, result.codebook)
    if log_path:
        log_path.write_text(log.getvalue())
    for rec in result.history:
        print(f"stage_{rec.n_codewords}_mean_loss={rec.mean_loss:.6g}", file=sys.stderr)
    _emit(codewords=len(result.codebook), final_loss=result.history[-1].final_loss,
          final_stage_mean_loss=result.history[-1].mean_loss, out=out)


def cmd_quantize(args):
    out = _check_out(args.out) if args.out else None
    data = vio.read_vectors(args.data)
    cb = vio.read_vectors(args.codebook)
    if args.method == "segment":
        res = quantizer.quantize_segment_batch(data, cb)
    else:
        res = quantizer.quantize_nearest_batch(data, cb)
    if out:
        vio.write_vectors(out, res.xhat)
    _emit(method=args.method, count=len(data), distortion=float(np.mean(res.sq_error)))


def cmd_metrics(args):
    data = vio.read_vectors(args.data)
    cb = vio.read_vectors(args.codebook)
    report = analysis.arrangement_report(
        cb, data, tau=args.tau, factor=args.factor, percentile=args.percentile,
        samples_per_segment=args.samples_per_segment)
    sys.stdout.write(report.to_text())
    _emit(codeword_distortion=quantizer.codeword_distortion(data, cb),
          segment_distortion=quantizer.segment_distortion(data, cb))


def cmd_reorder(args):
    out = _check_out(args.out)
    cb = vio.read_vectors(args.codebook)
    perm = ordering.order_path(cb, args.heuristic)
    vio.write_vectors(out, cb[perm])
    _emit(heuristic=ordering.ALIASES.get(args.heuristic, args.heuristic),
          path_length=ordering.path_length(cb, perm),
          original_path_length=ordering.path_length(cb), out=out)


def cmd_directions(args):
    out = _check_out(args.out)
    cb = vio.read_vectors(args.codebook)
    d = directions.extract_direction(cb, args.pair, label=args.label, layer_mask=args.layer_mask)
    sidecar = vio.write_direction(out, d)
    _emit(pair=f"{d.source_pair[0]},{d.source_pair[1]}", raw_norm=d.raw_norm, out=out,
          sidecar=sidecar)


def cmd_sample_line(args):
    out = _check_out(args.out)
    cb = vio.read_vectors(args.codebook)
    pts = directions.sample_line(cb, args.pair, args.k, args.noise, _seed(args))
    vio.write_vectors(out, pts)
    _emit(count=len(pts), pair=f"{args.pair},{args.pair + 1}", out=out)


def cmd_pullback(args):
    out = _check_out(args.out)
    src = vio.read_vectors(args.pairs_src)
    img = vio.read_vectors(args.pairs_img)
    cb = vio.read_vectors(args.codebook)
    res = directions.pullback_codebook(src, img, cb)
    vio.write_vectors(out, res.codebook)
    filled = ",".join(str(i) for i in np.flatnonzero(res.filled))
    _emit(codewords=len(res.codebook), empty_cells=int(res.filled.sum()), filled=filled, out=out)


def cmd_plot(args):
    out = _check_out(args.out)
    if args.heatmap:
        if args.data or args.codebook:
            raise _UsageError("--heatmap cannot be combined with --data/--codebook")
        cb = vio.read_vectors(args.heatmap)
        matrix = analysis.heatmap_matrix(cb)
        vio.render_heatmap_pgm(matrix, out)
        _emit(kind="heatmap", size=len(matrix), out=out)
        return
    if not (args.data and args.codebook):
        raise _UsageError("plot needs either --heatmap or both --data and --codebook")
    data = vio.read_vectors(args.data)
    cb = vio.read_vectors(args.codebook)
    svg = vio.curve_svg(data, cb)
    out.write_text(svg, encoding="utf-8")
    _emit(kind="curve", codewords=len(cb), out=out)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    fmt = _HelpFormatter
    p = _Parser(prog="sfvq", description="Space-filling vector quantization toolkit.",
                formatter_class=fmt)
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_, description=help_, formatter_class=fmt)
        sp.set_defaults(func=func)
        return sp

    seed_help = f"RNG seed (default: $SFVQ_SEED, else {DEFAULT_SEED})"

    sp = add("gen", cmd_gen, "generate a synthetic distribution")
    sp.add_argument("--kind", required=True, choices=datasets.KINDS, help="distribution to sample")
    sp.add_argument("--n", type=int, required=True, help="number of samples")
    sp.add_argument("--seed", type=int, default=None, help=seed_help)
    sp.add_argument("--noise", type=float, default=datasets.DEFAULT_NOISE,
                    help="noise std for the 3-D shapes")
    sp.add_argument("--dim", type=int, default=2, help="dimension for --kind gaussian")
    sp.add_argument("--out", required=True, help="output file")

    d = quantizer.TrainConfig()
    sp = add("train", cmd_train, "train an SFVQ (or plain VQ) codebook")
    sp.add_argument("--data", required=True, help="training/evaluation vectors")
    sp.add_argument("--bits", type=int, default=d.target_bits, help="target bitrate, N = 2**bits")
    sp.add_argument("--mode", choices=quantizer.MODES, default=d.mode,
                    help="curve-constrained or plain VQ")
    sp.add_argument("--seed", type=int, default=None, help=seed_help)
    sp.add_argument("--batches-per-stage", type=int, default=d.batches_per_stage,
                    help="batches at each codebook size")
    sp.add_argument("--batch-size", type=int, default=d.batch_size, help="samples per batch")
    sp.add_argument("--lr", type=float, default=d.base_lr,
                    help="initial learning rate, halved at 60%% and 80%% of each stage")
    sp.add_argument("--init", choices=quantizer.INIT_MODES, default=d.init_mode,
                    help="initial 4-codeword codebook")
    sp.add_argument("--init-samples", type=int, default=d.init_sample_count,
                    help="rows drawn for norm-sorted init")
    sp.add_argument("--lambda-mode", choices=quantizer.LAMBDA_MODES, default=d.lambda_mode,
                    help="dither draw granularity")
    sp.add_argument("--log", default=None, help="write batch<TAB>loss<TAB>lr progress lines here")
    sp.add_argument("--log-every", type=int, default=d.log_every,
                    help="batches between log lines (0 = never)")
    sp.add_argument("--out", required=True, help="output file")

    sp = add("quantize", cmd_quantize, "quantize data with a codebook and report distortion")
    sp.add_argument("--data", required=True, help="training/evaluation vectors")
    sp.add_argument("--codebook", required=True, help="codebook vector file")
    sp.add_argument("--method", choices=("segment", "nearest"), default="segment",
                    help="project onto the curve or snap to codewords")
    sp.add_argument("--out", default=None, help="optional file for the reconstructions")

    sp = add("metrics", cmd_metrics, "arrangement report and distortions")
    sp.add_argument("--data", required=True, help="training/evaluation vectors")
    sp.add_argument("--codebook", required=True, help="codebook vector file")
    sp.add_argument("--tau", type=float, default=analysis.DEFAULT_TAU,
                    help="jump threshold in medians")
    sp.add_argument("--factor", type=float, default=analysis.DEFAULT_FACTOR,
                    help="outlier threshold multiplier")
    sp.add_argument("--percentile", type=float, default=analysis.DEFAULT_PERCENTILE,
                    help="nearest-neighbour distance percentile")
    sp.add_argument("--samples-per-segment", type=int, default=100,
                    help="curve samples per segment")

    sp = add("reorder", cmd_reorder, "reorder a codebook with a TSP heuristic")
    sp.add_argument("--codebook", required=True, help="codebook vector file")
    sp.add_argument("--heuristic", default="nn",
                    choices=tuple(ordering.ALIASES) + ordering.HEURISTICS, help="TSP heuristic")
    sp.add_argument("--out", default="reordered.vec", help="output codebook")

    sp = add("directions", cmd_directions, "unit direction between codewords PAIR and PAIR+1")
    sp.add_argument("--codebook", required=True, help="codebook vector file")
    sp.add_argument("--pair", type=int, required=True, help="0-based index of the first codeword")
    sp.add_argument("--label", default="", help="free-form direction label")
    sp.add_argument("--layer-mask", default="", help="opaque annotation, e.g. W3-W8")
    sp.add_argument("--out", default="direction.vec", help="output direction file")

    sp = add("sample-line", cmd_sample_line, "noisy equally spaced points on one segment")
    sp.add_argument("--codebook", required=True, help="codebook vector file")
    sp.add_argument("--pair", type=int, required=True, help="0-based index of the first codeword")
    sp.add_argument("--k", type=int, default=20, help="points on the segment")
    sp.add_argument("--noise", type=float, default=0.3, help="Gaussian noise std per coordinate")
    sp.add_argument("--seed", type=int, default=None, help=seed_help)
    sp.add_argument("--out", required=True, help="output file")

    sp = add("pullback", cmd_pullback, "map a codebook back to the source space of paired samples")
    sp.add_argument("--pairs-src", required=True, help="source-space samples")
    sp.add_argument("--pairs-img", required=True,
                    help="image-space samples, row-aligned with --pairs-src")
    sp.add_argument("--codebook", required=True, help="codebook vector file")
    sp.add_argument("--out", required=True, help="output file")

    sp = add("plot", cmd_plot, "SVG curve plot or PGM distance heatmap")
    sp.add_argument("--data", default=None, help="data vectors for a curve plot")
    sp.add_argument("--codebook", default=None, help="codebook for a curve plot")
    sp.add_argument("--heatmap", default=None, help="codebook whose distance heatmap to draw")
    sp.add_argument("--out", required=True, help="output file")
    return p


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except _UsageError:
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        args.func(args)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"sfvq: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SFVQError, OSError) as exc:
        print(f"sfvq: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
