"""SVG charts for sweep CSVs.

Output is byte-stable: the SVG id salt is pinned, the Date metadata is
dropped, and text is emitted as <text> rather than per-run glyph paths.
"""

from __future__ import annotations

import csv
from collections import OrderedDict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .errors import ImageFormatError  # noqa: E402
from .harness import ENTROPY_COLUMNS, MITIGATION_COLUMNS, SIZE_COLUMNS, STRENGTH_COLUMNS  # noqa: E402

_RC = {
    "svg.hashsalt": "stealthmark",
    "svg.fonttype": "none",
    "font.family": "DejaVu Sans",
    "path.simplify": False,
}


class MalformedCsv(ImageFormatError):
    pass


def read_sweep(path) -> tuple[str, list[dict]]:
    """Identify which sweep produced ``path`` and return its rows."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedCsv(f"{path}: empty file") from None
        rows = [dict(zip(header, r)) for r in reader if r]
    kinds = {
        tuple(STRENGTH_COLUMNS): "strength",
        tuple(ENTROPY_COLUMNS): "entropy",
        tuple(SIZE_COLUMNS): "size",
        tuple(MITIGATION_COLUMNS): "mitigation",
    }
    kind = kinds.get(tuple(header))
    if kind is None:
        raise MalformedCsv(f"{path}: header {header} matches no known sweep")
    if not rows:
        raise MalformedCsv(f"{path}: no data rows")
    for r in rows:
        if len(r) != len(header):
            raise MalformedCsv(f"{path}: ragged row {r}")
    return kind, rows


def _save(fig, out: Path) -> Path:
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out


def _by_payload(rows, x_key):
    groups: OrderedDict[str, list] = OrderedDict()
    for r in rows:
        groups.setdefault(r["payload_id"], []).append(r)
    for g in groups.values():
        g.sort(key=lambda r: float(r[x_key]))
    return groups


def _strength(rows, out_dir: Path, stem: str) -> list[Path]:
    outs = []
    for pid, g in _by_payload(rows, "strength").items():
        xs = [int(r["strength"]) for r in g]
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.plot(xs, [float(r["invisible_fraction"]) for r in g], "o-", label="JND invisible")
        ax.plot(xs, [float(r["blind_detection_rate"]) for r in g], "s--", label="blind detection")
        ax.set_xlabel("injection strength")
        ax.set_ylabel("fraction")
        ax.set_ylim(-0.05, 1.05)
        ax.set_title(pid)
        ax.legend(loc="center right")
        outs.append(_save(fig, out_dir / f"{stem}_{pid}.svg"))
    return outs


def _entropy(rows, out_dir: Path, stem: str) -> list[Path]:
    labels = [f"[{r['bucket_low']},{r['bucket_high']})" for r in rows]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(range(len(rows)), [float(r["blind_detection_rate"]) for r in rows])
    ax.set_xticks(range(len(rows)), labels)
    ax.set_xlabel("global entropy bucket (bits)")
    ax.set_ylabel("blind detection rate")
    ax.set_ylim(0, 1.05)
    return [_save(fig, out_dir / f"{stem}.svg")]


def _size(rows, out_dir: Path, stem: str) -> list[Path]:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for pid, g in _by_payload(rows, "width").items():
        ax.plot([int(r["width"]) for r in g], [float(r["blind_detection_rate"]) for r in g], "o-", label=pid)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("logo width (px)")
    ax.set_ylabel("blind detection rate")
    ax.set_ylim(-0.05, 1.05)
    ax.legend(fontsize="small")
    return [_save(fig, out_dir / f"{stem}.svg")]


def _mitigation(rows, out_dir: Path, stem: str) -> list[Path]:
    strengths = sorted({int(r["strength"]) for r in rows})
    pids = list(OrderedDict.fromkeys(r["payload_id"] for r in rows))
    width = 0.8 / len(strengths)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for k, s in enumerate(strengths):
        rate = {r["payload_id"]: float(r["mitigation_rate"]) for r in rows if int(r["strength"]) == s}
        ax.bar([i + k * width for i in range(len(pids))], [rate.get(p, 0.0) for p in pids], width,
               label=f"strength {s}")
    ax.set_xticks([i + width * (len(strengths) - 1) / 2 for i in range(len(pids))], pids)
    ax.set_ylabel("mitigation rate")
    ax.set_ylim(0, 1.05)
    ax.legend(fontsize="small")
    return [_save(fig, out_dir / f"{stem}.svg")]


def emit_plots(csv_path, out_dir=None) -> list[Path]:
    """Render the sweep in ``csv_path``; returns the SVG paths written.

    Strength sweeps give one chart per payload, the others a single chart.
    """
    csv_path = Path(csv_path)
    kind, rows = read_sweep(csv_path)
    out = Path(out_dir) if out_dir is not None else csv_path.parent
    out.mkdir(parents=True, exist_ok=True)
    draw = {"strength": _strength, "entropy": _entropy, "size": _size, "mitigation": _mitigation}[kind]
    with plt.rc_context(_RC):
        return draw(rows, out, csv_path.stem)
