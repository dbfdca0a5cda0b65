"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error (unreadable input,
malformed file, impossible placement, ...).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import load_settings, parse_overrides
from .corpus import CorpusSpec, load_corpus, synth_corpus, generate_corpus
from .detector import PayloadLibrary, detect_blind, detect_paired
from .embedder import InjectionSpec, augment_prompt, embed_payload, residual_of
from .entropy import entropy_map, shannon_entropy
from .errors import StealthmarkError
from .harness import (
    DEFAULT_STRENGTHS,
    DEFAULT_WIDTHS,
    place_payload,
    run_entropy_sweep,
    run_mitigation_eval,
    run_size_sweep,
    run_strength_sweep,
)
from .imaging import load_mask, load_png, save_png, scale_mask, to_luma
from .logos import LOGO_IDS, render_logo
from .mitigation import scrub
from .perception import jnd_ratio
from .plots import emit_plots

log = logging.getLogger("stealthmark")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _origin(text: str) -> tuple[int, int]:
    vals = _int_list(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"origin must be X,Y, got {text!r}")
    return vals[0], vals[1]


def _emit(obj: dict, path: Path | None = None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path is not None:
        path.write_text(text + "\n")
    print(text)


def _out_dir(args) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ------------------------------------------------------------------ commands


def cmd_embed(args, settings) -> int:
    image = load_png(args.input)
    if args.mask:
        mask = load_mask(args.mask)
    else:
        mask = render_logo(args.logo)
    if args.width:
        mask = scale_mask(mask, args.width)
    if args.origin is not None:
        placement = args.origin
        decision = None
    else:
        placement, decision = place_payload(to_luma(image), mask, settings)
    spec = InjectionSpec(mask, placement, strength=args.strength, sign=args.sign,
                         require_feasible=args.require_feasible and decision is not None)
    if spec.require_feasible:
        spec = dataclasses.replace(spec, placement=dataclasses.replace(decision, origin=placement))
    injected, record = embed_payload(image, spec)
    out = Path(args.out) if args.out else _out_dir(args) / f"{Path(args.input).stem}_{mask.payload_id}.png"
    save_png(injected, out)
    sidecar = record.write_sidecar(out)
    info = record.to_dict()
    if decision is not None:
        info["placement_window"] = decision.to_dict()
    info["output"] = str(out)
    info["sidecar"] = str(sidecar)
    _emit(info)
    return EXIT_OK


def cmd_analyze(args, settings) -> int:
    image = load_png(args.input)
    gray = to_luma(image)
    emap = entropy_map(gray, args.tile)
    result = {"width": image.width, "height": image.height, "entropy": shannon_entropy(gray)}
    if args.entropy_map:
        Path(args.entropy_map).write_text(emap.to_json() + "\n")
        result["entropy_map"] = args.entropy_map
    else:
        result["entropy_map"] = emap.to_dict()
    if args.against:
        clean = load_png(args.against)
        mask = residual_of(clean, image)
        if mask.is_empty:
            result["visibility"] = None
        else:
            result["visibility"] = jnd_ratio(clean, image, mask, settings.jnd).to_dict()
    _emit(result)
    return EXIT_OK


def cmd_detect(args, settings) -> int:
    suspect = load_png(args.input)
    library = PayloadLibrary.default()
    if args.clean:
        report = detect_paired(load_png(args.clean), suspect, library, settings.detector)
    else:
        report = detect_blind(suspect, library, settings.detector)
    _emit(report.to_dict(), Path(args.json) if args.json else None)
    return EXIT_OK


def cmd_scrub(args, settings) -> int:
    image = load_png(args.input)
    cfg = settings.scrub
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    report = scrub(image, PayloadLibrary.default(), cfg, settings.detector)
    out = Path(args.out) if args.out else Path(args.input).with_name(Path(args.input).stem + "_cleaned.png")
    save_png(report.cleaned, out)
    info = report.to_dict()
    info["output"] = str(out)
    _emit(info, out.with_suffix(".json"))
    return EXIT_OK


def _corpus_spec(args) -> CorpusSpec:
    return CorpusSpec(count=args.count, size=args.size, background=args.background,
                      seed=args.seed if args.seed is not None else 0)


def cmd_synth(args, settings) -> int:
    out = synth_corpus(_corpus_spec(args), args.out or _out_dir(args))
    _emit({"corpus": str(out), "count": args.count})
    return EXIT_OK


def cmd_sweep(args, settings) -> int:
    corpus = load_corpus(args.corpus) if args.corpus else generate_corpus(_corpus_spec(args))
    library = PayloadLibrary.default()
    if args.logos:
        library = PayloadLibrary((pid, library[pid]) for pid in args.logos.split(","))
    if args.kind == "strength":
        result = run_strength_sweep(corpus, library, args.strengths or DEFAULT_STRENGTHS, cfg=settings)
    elif args.kind == "entropy":
        result = run_entropy_sweep(corpus, library, args.strength, cfg=settings)
    elif args.kind == "size":
        result = run_size_sweep(corpus, library, args.widths or DEFAULT_WIDTHS, args.strength, cfg=settings)
    else:
        result = run_mitigation_eval(corpus, library, args.strengths or (args.strength,), cfg=settings)
    out = _out_dir(args)
    csv_path = out / f"{args.kind}_sweep.csv"
    result.write(csv_path, out / f"{args.kind}_records.csv")
    sys.stdout.write(result.csv)
    if args.plot:
        for p in emit_plots(csv_path, out):
            log.info("wrote %s", p)
    return EXIT_OK


def cmd_plot(args, settings) -> int:
    for p in emit_plots(args.csv, args.output_dir):
        print(p)
    return EXIT_OK


def cmd_augment(args, settings) -> int:
    print(augment_prompt(args.prompt))
    return EXIT_OK


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stealthmark", description=__doc__.splitlines()[0] if __doc__ else None)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--config", help="TOML settings file")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override a config value (repeatable)")
    p.add_argument("--seed", type=int, default=None, help="corpus / scrub-noise seed")
    p.add_argument("-o", "--output-dir", default=".", help="directory for generated files")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("embed", help="inject a logo payload into a PNG")
    e.add_argument("input")
    src = e.add_mutually_exclusive_group()
    src.add_argument("--logo", choices=LOGO_IDS, default="benz")
    src.add_argument("--mask", help="grayscale PNG payload mask")
    e.add_argument("--strength", type=int, default=2)
    e.add_argument("--sign", type=int, choices=(1, -1), default=1)
    e.add_argument("--width", type=int, help="rescale payload to this bbox width")
    e.add_argument("--origin", type=_origin, help="explicit X,Y of the payload bbox")
    e.add_argument("--require-feasible", action="store_true",
                   help="fail unless the chosen window is below the entropy threshold")
    e.add_argument("--out", help="output PNG (a .json sidecar is written next to it)")
    e.set_defaults(func=cmd_embed)

    a = sub.add_parser("analyze", help="entropy map, and JND visibility against a clean reference")
    a.add_argument("input")
    a.add_argument("--tile", type=int, default=32)
    a.add_argument("--against", help="clean reference PNG; adds a visibility report")
    a.add_argument("--entropy-map", help="write the entropy map JSON here instead of inline")
    a.set_defaults(func=cmd_analyze)

    d = sub.add_parser("detect", help="look for a payload (paired if --clean is given, else blind)")
    d.add_argument("input")
    d.add_argument("--clean")
    d.add_argument("--json", help="also write the report to this file")
    d.set_defaults(func=cmd_detect)

    s = sub.add_parser("scrub", help="regenerate smooth background to destroy payloads")
    s.add_argument("input")
    s.add_argument("--out")
    s.set_defaults(func=cmd_scrub)

    def corpus_args(q, required_out=False):
        q.add_argument("--count", type=int, default=20)
        q.add_argument("--size", type=int, default=768)
        q.add_argument("--background", choices=("flat", "gradient", "noise", "mixed"), default="flat")

    y = sub.add_parser("synth", help="write a seeded synthetic corpus")
    corpus_args(y)
    y.add_argument("--out", help="corpus directory (default: --output-dir)")
    y.set_defaults(func=cmd_synth)

    w = sub.add_parser("sweep", help="run a strength / entropy / size / mitigation experiment")
    w.add_argument("kind", choices=("strength", "entropy", "size", "mitigation"))
    w.add_argument("--corpus", help="corpus directory from `synth`; otherwise one is generated")
    corpus_args(w)
    w.add_argument("--strengths", type=_int_list)
    w.add_argument("--strength", type=int, default=2, help="fixed strength for entropy/size sweeps")
    w.add_argument("--widths", type=_int_list)
    w.add_argument("--logos", help="comma-separated subset of logo ids")
    w.add_argument("--plot", action="store_true", help="also write SVG charts")
    w.set_defaults(func=cmd_sweep)

    t = sub.add_parser("plot", help="render SVG charts from a sweep CSV")
    t.add_argument("csv")
    t.set_defaults(func=cmd_plot)

    g = sub.add_parser("augment", help="append the flat-background composition suffix to a prompt")
    g.add_argument("prompt")
    g.set_defaults(func=cmd_augment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        settings = load_settings(args.config, parse_overrides(args.set))
        return args.func(args, settings)
    except (StealthmarkError, FileNotFoundError, KeyError, ValueError, OSError) as exc:
        print(f"stealthmark: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
