"""CSV tables, hand-written SVG line charts, and matplotlib PNG figures."""

import csv
import io
from pathlib import Path

from .experiment import RunRecord, SweepRow

RUN_HEADER = ("t", "z_exact", "z_raw", "z_readout", "z_full", "success_prob", "train_cost")
SWEEP_HEADER = ("p", "n", "dev_raw", "dev_readout", "dev_full")
ORACLE_HEADER = ("t", "z_exact")

COLORS = {
    "z_exact": "#2ca02c",
    "z_raw": "#1f77b4",
    "z_readout": "#ffbf00",
    "z_full": "#d62728",
    "dev_raw": "#1f77b4",
    "dev_readout": "#ffbf00",
    "dev_full": "#d62728",
}


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, int):
        return str(x)
    return f"{x:.9g}"


def _rows_for(items):
    if not items:
        return RUN_HEADER, []
    first = items[0]
    if isinstance(first, SweepRow):
        header = SWEEP_HEADER
        rows = [(r.p, r.n, r.dev_raw, r.dev_readout, r.dev_full) for r in items]
    elif isinstance(first, RunRecord):
        header = RUN_HEADER
        rows = [
            (r.t, r.z_exact, r.z_raw, r.z_readout, r.z_full, r.success_prob, r.train_cost)
            for r in items
        ]
    else:
        header = ORACLE_HEADER
        rows = [tuple(r) for r in items]
    return header, rows


def csv_text(items, header=None):
    """CSV with a fixed header, 9 significant digits and LF line endings."""
    default_header, rows = _rows_for(items)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header or default_header)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def emit_csv(items, path, header=None):
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(csv_text(items, header))
    return path


def read_csv(path):
    """Header and rows (floats, None for blanks) from an emitted CSV."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        rows = [tuple(float(x) if x else None for x in row) for row in reader]
    return header, rows


# -- plotting -----------------------------------------------------------------

def series_from(header, rows):
    """(x label, {name: [(x, y), ...]}) for a run, sweep or oracle table."""
    col = {h: i for i, h in enumerate(header)}
    series = {}
    if header[:2] == ("p", "n"):
        for name in ("dev_raw", "dev_readout", "dev_full"):
            for row in rows:
                y = row[col[name]]
                if y is not None:
                    label = f"{name} n={int(row[col['n']])}"
                    series.setdefault(label, []).append((row[col["p"]], y))
        return "p", series
    for name in header[1:]:
        if not name.startswith("z_"):
            continue
        pts = [(row[0], row[col[name]]) for row in rows if row[col[name]] is not None]
        if pts:
            series[name] = pts
    return "t", series


def _color(label):
    return COLORS.get(label.split(" ")[0], "#444444")


def svg_text(header, rows, title=""):
    """Line chart as standalone SVG, one polyline per series."""
    xlabel, series = series_from(header, rows)
    ylabel = "deviation" if xlabel == "p" else "<Z>"
    w, h = 640, 420
    left, right, top, bottom = 70, 170, 40, 50
    pts = [pt for s in series.values() for pt in s]
    if pts:
        xs, ys = [p[0] for p in pts], [p[1] for p in pts]
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
    else:
        x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def sx(x):
        return left + (x - x0) / (x1 - x0) * (w - left - right)

    def sy(y):
        return h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">',
        f'<rect width="{w}" height="{h}" fill="white"/>',
        f'<text x="{w / 2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<line x1="{left}" y1="{h - bottom}" x2="{w - right}" y2="{h - bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{h - bottom}" stroke="black"/>',
    ]
    for i in range(5):
        xv = x0 + i * (x1 - x0) / 4
        yv = y0 + i * (y1 - y0) / 4
        out.append(
            f'<text x="{sx(xv):.1f}" y="{h - bottom + 16}" text-anchor="middle">{xv:.4g}</text>'
        )
        out.append(f'<text x="{left - 6}" y="{sy(yv) + 4:.1f}" text-anchor="end">{yv:.3g}</text>')
    out.append(
        f'<text x="{(left + w - right) / 2:.1f}" y="{h - 12}" text-anchor="middle">{xlabel}</text>'
    )
    out.append(
        f'<text x="18" y="{(top + h - bottom) / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {(top + h - bottom) / 2:.1f})">{ylabel}</text>'
    )
    for k, (label, pts) in enumerate(series.items()):
        color = _color(label)
        dash = ' stroke-dasharray="5,3"' if "n=" in label and int(label.split("n=")[1]) % 2 else ""
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        out.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"{dash}/>'
        )
        ly = top + 14 * k
        out.append(
            f'<line x1="{w - right + 10}" y1="{ly}" x2="{w - right + 30}" y2="{ly}" '
            f'stroke="{color}" stroke-width="2"{dash}/>'
        )
        out.append(f'<text x="{w - right + 34}" y="{ly + 4}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(items, path, title=""):
    header, rows = _rows_for(items)
    if items and not isinstance(items[0], (RunRecord, SweepRow)):
        header = ORACLE_HEADER
    Path(path).write_text(svg_text(header, rows, title))
    return Path(path)


def csv_to_svg(csv_path, svg_path=None, title=None):
    header, rows = read_csv(csv_path)
    svg_path = Path(svg_path) if svg_path else Path(csv_path).with_suffix(".svg")
    svg_path.write_text(svg_text(header, rows, title if title is not None else Path(csv_path).stem))
    return svg_path


def render_png(header, rows, path, title=""):
    """Same chart as :func:`svg_text`, drawn with matplotlib."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xlabel, series = series_from(header, rows)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label, pts in series.items():
        style = "--" if "n=" in label and int(label.split("n=")[1]) % 2 else "-"
        ax.plot([p[0] for p in pts], [p[1] for p in pts], style, color=_color(label),
                marker="o", markersize=3, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("deviation" if xlabel == "p" else r"$\langle Z \rangle$")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=7, frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def emit_png(items, path, title=""):
    header, rows = _rows_for(items)
    if items and not isinstance(items[0], (RunRecord, SweepRow)):
        header = ORACLE_HEADER
    return render_png(header, rows, path, title)
