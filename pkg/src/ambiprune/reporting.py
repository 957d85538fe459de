"""Static report output: tag-proportion CSV and stacked-bar SVG."""

from __future__ import annotations

import csv
from pathlib import Path

from .ambiguity import AmbiguityHistogram
from .model import TagLevel

_COLORS = {
    TagLevel.NONE: "#c6dbef",
    TagLevel.GT10: "#6baed6",
    TagLevel.GT40: "#2171b5",
    TagLevel.GT80: "#08306b",
}


def write_histogram_csv(histogram: AmbiguityHistogram, path: str | Path) -> None:
    """One row per bin: edges, count, and tag-level proportions."""
    header = ["bin_low", "bin_high", "count"]
    header += [f"occlusion_{level.to_string()}" for level in TagLevel]
    header += [f"truncation_{level.to_string()}" for level in TagLevel]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for i in range(histogram.bins):
            row = [histogram.bin_edges[i], histogram.bin_edges[i + 1],
                   histogram.counts[i]]
            row += [histogram.occlusion_proportions[level][i]
                    for level in TagLevel]
            row += [histogram.truncation_proportions[level][i]
                    for level in TagLevel]
            writer.writerow(row)


def _stacked_panel(histogram: AmbiguityHistogram, family: str,
                   origin_x: float, origin_y: float,
                   width: float, height: float) -> list[str]:
    proportions = (histogram.occlusion_proportions if family == "occlusion"
                   else histogram.truncation_proportions)
    parts = [
        f'<text x="{origin_x}" y="{origin_y - 8}" font-size="13" '
        f'font-family="sans-serif">{family} tags vs ambiguity</text>'
    ]
    bar_width = width / histogram.bins
    for i in range(histogram.bins):
        if histogram.counts[i] == 0:
            continue
        y = origin_y
        for level in TagLevel:
            fraction = proportions[level][i]
            if fraction <= 0:
                continue
            segment = fraction * height
            parts.append(
                f'<rect x="{origin_x + i * bar_width:.2f}" '
                f'y="{y:.2f}" width="{bar_width * 0.92:.2f}" '
                f'height="{segment:.2f}" fill="{_COLORS[level]}">'
                f'<title>bin [{histogram.bin_edges[i]:.2f}, '
                f'{histogram.bin_edges[i + 1]:.2f}): '
                f'{level.to_string()} {fraction:.2%} '
                f'of {histogram.counts[i]}</title></rect>'
            )
            y += segment
    parts.append(
        f'<line x1="{origin_x}" y1="{origin_y + height}" '
        f'x2="{origin_x + width}" y2="{origin_y + height}" stroke="#333"/>'
    )
    for label, position in (("0", 0.0), ("0.5", 0.5), ("1", 1.0)):
        parts.append(
            f'<text x="{origin_x + position * width:.2f}" '
            f'y="{origin_y + height + 16}" font-size="11" '
            f'font-family="sans-serif" text-anchor="middle">{label}</text>'
        )
    return parts


def write_histogram_svg(histogram: AmbiguityHistogram, path: str | Path) -> None:
    """Two stacked-bar panels (occlusion, truncation) over ambiguity bins."""
    width, panel_height, margin = 640, 180, 40
    total_height = 2 * (panel_height + 2 * margin)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{total_height}" viewBox="0 0 {width} {total_height}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    parts += _stacked_panel(histogram, "occlusion", margin, margin,
                            width - 2 * margin, panel_height)
    parts += _stacked_panel(histogram, "truncation", margin,
                            panel_height + 3 * margin,
                            width - 2 * margin, panel_height)
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
