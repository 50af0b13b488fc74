"""Command-line interface.

Every subcommand is a thin shell over the library: it loads inputs,
calls the same functions a caller would, and serializes the results.
Outputs are computed fully before anything is written, and each file is
written to a temporary sibling and renamed into place, so a failing run
never leaves partial output behind.

Exit codes: 0 success, 1 usage error, 2 I/O or file-format error,
3 domain error (invalid values, zero-variance bands, and so on).
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import tempfile

import numpy as np

from . import analysis, synth
from .convolve import BoundaryMode, convolve, convolve_image
from .errors import DomainError, FileFormatError, GstkError
from .kernels import (
    Kernel,
    derive_quadrant_template,
    format_kernel,
    laplacian_template,
    parse_kernel,
    smoothing_template,
)
from .raster import (
    MultibandImage,
    ResponseField,
    StretchMode,
    bsq_paths,
    read_bsq,
    read_pgm,
    stretch,
    write_bsq,
    write_pgm,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_DOMAIN = 3


# ---------------------------------------------------------------------------
# Argument plumbing


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; this tool documents 1."""

    def error(self, message: str) -> None:  # pragma: no cover - thin shim
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value}")
    return value


def _nonnegative_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _percentile(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 <= value <= 100:
        raise argparse.ArgumentTypeError(f"percentile must be in [0, 100], got {value}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 bits, got {value}")
    return value


def _kernel_from_choice(choice: str) -> Kernel:
    """Resolve {smooth5 | laplacian3 | quadrant | file:<path>}."""
    if choice == "smooth5":
        return smoothing_template()
    if choice == "laplacian3":
        return laplacian_template()
    if choice == "quadrant":
        return derive_quadrant_template()
    if choice.startswith("file:"):
        path = choice[len("file:") :]
        with open(path, "r", encoding="ascii") as f:
            return parse_kernel(f.read())
    raise DomainError(
        f"unknown kernel {choice!r}: expected smooth5, laplacian3, quadrant, "
        "or file:<path>"
    )


# ---------------------------------------------------------------------------
# Staged (all-or-nothing) output


class _Stage:
    """Collects output files, then commits them all via temp + rename."""

    def __init__(self) -> None:
        self._items: list[tuple[str, bytes]] = []

    def add_bytes(self, path: str, data: bytes) -> None:
        self._items.append((path, data))

    def add_text(self, path: str, text: str) -> None:
        self._items.append((path, text.encode("utf-8")))

    def commit(self) -> None:
        temps: list[tuple[str, str]] = []
        try:
            for path, data in self._items:
                directory = os.path.dirname(os.path.abspath(path))
                fd, tmp = tempfile.mkstemp(
                    dir=directory, prefix=os.path.basename(path) + ".", suffix=".tmp"
                )
                with os.fdopen(fd, "wb") as f:
                    f.write(data)
                temps.append((tmp, path))
            for tmp, path in temps:
                os.replace(tmp, path)
        except BaseException:
            for tmp, _ in temps:
                try:
                    os.unlink(tmp)
                except OSError:
                    pass
            raise


# ---------------------------------------------------------------------------
# Image and field I/O helpers


def _load_image(path: str) -> MultibandImage:
    """PGM for single-band input, BSQ header/payload pair otherwise."""
    if path.endswith(".pgm"):
        with open(path, "rb") as f:
            return MultibandImage((read_pgm(f.read()),))
    header_path, payload_path = bsq_paths(path)
    with open(header_path, "r", encoding="ascii") as f:
        header = f.read()
    with open(payload_path, "rb") as f:
        payload = f.read()
    return read_bsq(header, payload)


def _stage_image(stage: _Stage, path: str, image: MultibandImage) -> None:
    if path.endswith(".pgm"):
        if image.n_bands != 1:
            raise DomainError(
                f"cannot write {image.n_bands} bands to a PGM file; "
                "use a BSQ path instead"
            )
        stage.add_bytes(path, write_pgm(image.bands[0]))
        return
    header_path, payload_path = bsq_paths(path)
    header, payload = write_bsq(image)
    stage.add_text(header_path, header)
    stage.add_bytes(payload_path, payload)


def _npy_bytes(array: np.ndarray) -> bytes:
    buf = io.BytesIO()
    np.save(buf, array)
    return buf.getvalue()


def _load_field(path: str) -> ResponseField:
    with open(path, "rb") as f:
        try:
            array = np.load(f, allow_pickle=False)
        except ValueError as exc:
            raise FileFormatError(f"{path}: not a valid array file: {exc}") from None
    if array.ndim == 3:
        # a single-band stack from convolve --raw-out is one field
        if array.shape[0] == 1:
            array = array[0]
        else:
            raise FileFormatError(
                f"{path}: stack has {array.shape[0]} bands; "
                "compare takes single response fields"
            )
    if array.ndim != 2 or array.dtype != np.int32:
        raise FileFormatError(
            f"{path}: expected a 2-D int32 response field, got "
            f"{array.dtype} with {array.ndim} axes"
        )
    return ResponseField(array)


def _load_rois(path: str) -> list[analysis.Roi]:
    """ROI JSON by extension, otherwise a PGM label raster."""
    if path.endswith(".json"):
        with open(path, "r", encoding="utf-8") as f:
            return analysis.rois_from_json(f.read())
    with open(path, "rb") as f:
        band = read_pgm(f.read())
    return analysis.rois_from_labels(band.samples)


def _load_truth(path: str) -> analysis.ClassificationMap:
    with open(path, "rb") as f:
        band = read_pgm(f.read())
    return analysis.ClassificationMap(band.samples.astype(np.int32))


def _json_text(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _score_text(score: float | None) -> str:
    return "infinite" if score is None or score == float("inf") else f"{score:.6f}"


# ---------------------------------------------------------------------------
# Subcommands


def cmd_derive(args: argparse.Namespace) -> int:
    kernel = _kernel_from_choice(args.kernel)
    stage = _Stage()
    stage.add_text(args.out, format_kernel(kernel))
    stage.commit()
    print(f"wrote {args.kernel} kernel to {args.out}")
    return EXIT_OK


def cmd_convolve(args: argparse.Namespace) -> int:
    image = _load_image(getattr(args, "in"))
    kernel = _kernel_from_choice(args.kernel)
    boundary = BoundaryMode(args.boundary)
    fields = convolve_image(
        image, kernel, boundary, workers=args.workers, tile_rows=args.tile_rows
    )
    mode = StretchMode(args.stretch)
    stretched = [stretch(f, mode, args.lo_pct, args.hi_pct) for f in fields]
    names = tuple(image.name_of(i) for i in range(image.n_bands))
    out_image = MultibandImage(tuple(stretched), names)
    stage = _Stage()
    _stage_image(stage, args.out, out_image)
    if args.raw_out:
        stack = np.stack([f.samples for f in fields])
        stage.add_bytes(args.raw_out, _npy_bytes(stack))
    stage.commit()
    print(f"convolved {image.n_bands} band(s) with {args.kernel} ({args.boundary})")
    return EXIT_OK


def cmd_oif(args: argparse.Namespace) -> int:
    image = _load_image(getattr(args, "in"))
    report = analysis.oif_report_dict(image)
    stage = _Stage()
    stage.add_text(args.out, _json_text(report))
    stage.commit()
    best = report["ranking"][0]
    triple = tuple(best["triple"])
    print(f"top triple: {triple} score {_score_text(best['score'])}")
    return EXIT_OK


def cmd_classify(args: argparse.Namespace) -> int:
    image = _load_image(getattr(args, "in"))
    rois = _load_rois(args.rois)
    features = analysis.features_for_classification(
        image,
        analysis.FeatureKind(args.features),
        _kernel_from_choice(args.kernel),
        BoundaryMode(args.boundary),
    )
    specs = analysis.fit_classes(features, rois, analysis.FitMode(args.mode), args.k)
    cmap = analysis.classify(features, specs)
    stage = _Stage()
    stage.add_bytes(args.out_map, write_pgm(analysis.classification_to_band(cmap)))
    lines = [f"classified {cmap.width * cmap.height} pixels into {len(specs)} classes"]
    if args.truth:
        truth = _load_truth(args.truth)
        confusion = analysis.accuracy(cmap, truth, [r.name for r in rois])
        if args.out_confusion:
            stage.add_text(args.out_confusion, _json_text(confusion.to_dict()))
        lines.append(f"overall accuracy: {confusion.overall_accuracy:.6f}")
    elif args.out_confusion:
        raise DomainError("--out-confusion requires --truth")
    stage.commit()
    for line in lines:
        print(line)
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    field_a = _load_field(args.a)
    field_b = _load_field(args.b)
    report = analysis.compare_responses(field_a, field_b, args.threshold)
    stage = _Stage()
    stage.add_text(args.out, _json_text(report.to_dict()))
    stage.commit()
    corr = report.magnitude_correlation
    corr_text = "undefined" if corr is None else f"{corr:.6f}"
    print(f"magnitude correlation: {corr_text}")
    print(f"sign agreement: {report.sign_agreement:.6f}")
    print(
        f"edge density: a {report.a.edge_density:.6f}, b {report.b.edge_density:.6f}"
    )
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    with open(args.spec, "r", encoding="utf-8") as f:
        spec = synth.scene_spec_from_json(f.read())
    image, truth = synth.synth_scene(spec)
    stage = _Stage()
    _stage_image(stage, args.out_image, image)
    stage.add_bytes(
        args.out_truth, write_pgm(analysis.classification_to_band(truth))
    )
    stage.commit()
    print(
        f"scene {spec.width}x{spec.height} {spec.dtype}: "
        f"{spec.n_bands} band(s), {spec.n_classes} class(es)"
    )
    return EXIT_OK


def cmd_pipeline(args: argparse.Namespace) -> int:
    with open(args.spec, "r", encoding="utf-8") as f:
        spec = synth.scene_spec_from_json(f.read())
    kernel = _kernel_from_choice(args.kernel)
    boundary = BoundaryMode(args.boundary)

    image, truth = synth.synth_scene(spec)
    features = analysis.features_for_classification(
        image, analysis.FeatureKind(args.features), kernel, boundary
    )

    # Training set: the even-coordinate subgrid of the truth map. Held-out
    # pixels are everything else; accuracy below is over all labeled pixels.
    training = np.zeros_like(truth.labels)
    training[::2, ::2] = truth.labels[::2, ::2]
    names = [sig.name for sig in spec.signatures]
    rois = analysis.rois_from_labels(training, names)
    specs = analysis.fit_classes(features, rois, analysis.FitMode(args.mode), args.k)
    cmap = analysis.classify(features, specs)
    confusion = analysis.accuracy(cmap, truth, names)

    first = image.bands[0]
    resp_chosen = convolve(first, kernel, boundary)
    resp_baseline = convolve(first, laplacian_template(), boundary)
    compare = analysis.compare_responses(resp_chosen, resp_baseline, args.threshold)

    oif_report = None
    if image.n_bands >= 3:
        oif_report = analysis.oif_report_dict(image)

    out = args.out_dir
    os.makedirs(out, exist_ok=True)
    stage = _Stage()
    _stage_image(stage, os.path.join(out, "scene.bsq"), image)
    stage.add_bytes(
        os.path.join(out, "truth.pgm"),
        write_pgm(analysis.classification_to_band(truth)),
    )
    _stage_image(stage, os.path.join(out, "features.bsq"), features)
    stage.add_bytes(
        os.path.join(out, "map.pgm"),
        write_pgm(analysis.classification_to_band(cmap)),
    )
    stage.add_text(os.path.join(out, "confusion.json"), _json_text(confusion.to_dict()))
    stage.add_text(os.path.join(out, "compare.json"), _json_text(compare.to_dict()))
    if oif_report is not None:
        stage.add_text(os.path.join(out, "oif.json"), _json_text(oif_report))
    stage.commit()

    if oif_report is not None:
        best = oif_report["ranking"][0]
        print(
            f"top triple: {tuple(best['triple'])} score {_score_text(best['score'])}"
        )
    print(f"overall accuracy: {confusion.overall_accuracy:.6f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="gstk",
        description="Gradient-minimizing smoothing templates for multiband rasters.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="COMMAND")

    def add_kernel(p: argparse.ArgumentParser, default: str = "smooth5") -> None:
        p.add_argument(
            "--kernel",
            default=default,
            help=f"smooth5, laplacian3, quadrant, or file:<path> (default: {default})",
        )

    def add_boundary(p: argparse.ArgumentParser) -> None:
        p.add_argument(
            "--boundary",
            choices=[m.value for m in BoundaryMode],
            default=BoundaryMode.REPLICATE.value,
            help="out-of-range pixel policy (default: replicate)",
        )

    p = sub.add_parser("derive", help="write a built-in kernel as text")
    add_kernel(p)
    p.add_argument("--out", required=True, help="output kernel text file")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("convolve", help="convolve every band, write stretched u8")
    p.add_argument("--in", required=True, help="input image (.pgm or BSQ)")
    p.add_argument("--out", required=True, help="output image (.pgm or BSQ)")
    add_kernel(p)
    add_boundary(p)
    p.add_argument(
        "--stretch",
        choices=[m.value for m in StretchMode],
        default=StretchMode.ABS_LINEAR.value,
        help="display mapping for signed responses (default: abs_linear)",
    )
    p.add_argument(
        "--lo-pct", type=_percentile, default=2.0, help="lower clip percentile (default: 2)"
    )
    p.add_argument(
        "--hi-pct", type=_percentile, default=98.0, help="upper clip percentile (default: 98)"
    )
    p.add_argument(
        "--raw-out", default=None, help="also save raw int32 responses (.npy stack)"
    )
    p.add_argument(
        "--workers", type=_positive_int, default=1, help="worker threads (default: 1)"
    )
    p.add_argument(
        "--tile-rows",
        type=_positive_int,
        default=256,
        help="rows per parallel tile (default: 256)",
    )
    p.set_defaults(func=cmd_convolve)

    p = sub.add_parser("oif", help="rank band triples by the Optimum Index Factor")
    p.add_argument("--in", required=True, help="input image (.pgm or BSQ)")
    p.add_argument("--out", required=True, help="output JSON report")
    p.set_defaults(func=cmd_oif)

    p = sub.add_parser("classify", help="parallelepiped classification")
    p.add_argument("--in", required=True, help="input image (.pgm or BSQ)")
    p.add_argument(
        "--rois", required=True, help="training regions (.json runs or .pgm labels)"
    )
    p.add_argument("--out-map", required=True, help="output label map (.pgm)")
    p.add_argument("--truth", default=None, help="ground-truth label map (.pgm)")
    p.add_argument(
        "--out-confusion", default=None, help="confusion matrix JSON (needs --truth)"
    )
    p.add_argument(
        "--mode",
        choices=[m.value for m in analysis.FitMode],
        default=analysis.FitMode.MINMAX.value,
        help="box training rule (default: minmax)",
    )
    p.add_argument(
        "--k",
        type=_nonnegative_float,
        default=2.0,
        help="sigma multiplier for mean_sigma (default: 2)",
    )
    p.add_argument(
        "--features",
        choices=[m.value for m in analysis.FeatureKind],
        default=analysis.FeatureKind.SMOOTHED.value,
        help="classify raw bands, smoothed magnitudes, or both (default: smoothed)",
    )
    add_kernel(p)
    add_boundary(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("compare", help="compare two raw response fields")
    p.add_argument("--a", required=True, help="first response field (.npy)")
    p.add_argument("--b", required=True, help="second response field (.npy)")
    p.add_argument(
        "--threshold",
        type=_positive_float,
        required=True,
        help="edge-density magnitude threshold",
    )
    p.add_argument("--out", required=True, help="output JSON report")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("synth", help="render a synthetic scene from a JSON spec")
    p.add_argument("--spec", required=True, help="scene spec (.json)")
    p.add_argument("--out-image", required=True, help="output image (.pgm or BSQ)")
    p.add_argument("--out-truth", required=True, help="output truth labels (.pgm)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser(
        "pipeline", help="synth, convolve, classify, and score in one run"
    )
    p.add_argument("--spec", required=True, help="scene spec (.json)")
    p.add_argument("--out-dir", required=True, help="directory for all artifacts")
    add_kernel(p)
    add_boundary(p)
    p.add_argument(
        "--mode",
        choices=[m.value for m in analysis.FitMode],
        default=analysis.FitMode.MINMAX.value,
        help="box training rule (default: minmax)",
    )
    p.add_argument(
        "--k",
        type=_nonnegative_float,
        default=2.0,
        help="sigma multiplier for mean_sigma (default: 2)",
    )
    p.add_argument(
        "--features",
        choices=[m.value for m in analysis.FeatureKind],
        default=analysis.FeatureKind.SMOOTHED.value,
        help="classifier input (default: smoothed)",
    )
    p.add_argument(
        "--threshold",
        type=_positive_float,
        default=8.0,
        help="edge threshold for the comparison report (default: 8)",
    )
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileFormatError as exc:
        print(f"gstk: file format error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"gstk: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DomainError as exc:
        print(f"gstk: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except GstkError as exc:  # pragma: no cover - safety net
        print(f"gstk: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
