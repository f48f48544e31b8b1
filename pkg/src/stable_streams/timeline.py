"""Node-by-time timeline export (CSV rows and a static SVG)."""
from __future__ import annotations

import colorsys
import csv
import io
from typing import Iterable, Sequence

import numpy as np

from .graphcore import sorted_members
from .linkstream import sorted_nodes
from .multiscale import StableCommunity

CSV_HEADER = ("node", "window_start", "window_end", "community_id", "gamma")


def filter_by_length(
    communities: Sequence[StableCommunity], min_length=None, max_length=None
) -> list[tuple[int, StableCommunity]]:
    """Keep ``(id, community)`` pairs with ``min_length <= length < max_length``; ids are input positions."""
    out = []
    for i, c in enumerate(communities):
        if min_length is not None and c.length < min_length:
            continue
        if max_length is not None and c.length >= max_length:
            continue
        out.append((i, c))
    return out


def timeline_rows(communities: Iterable[tuple[int, StableCommunity]]) -> list[tuple]:
    rows = []
    for cid, c in communities:
        members = sorted_members(c.nodes)
        for w0, w1 in c.windows():
            for node in members:
                rows.append((node, w0, w1, cid, c.gamma))
    return rows


def timeline_csv(communities: Iterable[tuple[int, StableCommunity]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    writer.writerows(timeline_rows(communities))
    return buf.getvalue()


def community_colors(ids: Iterable[int], seed: int = 0) -> dict[int, str]:
    rng = np.random.default_rng(seed)
    colors = {}
    for cid in sorted(set(ids)):
        h, s, v = rng.uniform(0, 1), rng.uniform(0.5, 0.9), rng.uniform(0.6, 0.95)
        r, g, b = colorsys.hsv_to_rgb(h, s, v)
        colors[cid] = f"#{int(r * 255):02x}{int(g * 255):02x}{int(b * 255):02x}"
    return colors


def timeline_svg(
    communities: Sequence[tuple[int, StableCommunity]],
    seed: int = 0,
    width: int = 1000,
    row_height: float = 4.0,
) -> str:
    """Nodes on the vertical axis, time on the horizontal one, one colour per community."""
    margin = 40
    if not communities:
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{2 * margin}" '
            f'viewBox="0 0 {width} {2 * margin}"></svg>\n'
        )
    nodes = sorted_nodes({n for _, c in communities for n in c.nodes})
    row = {n: i for i, n in enumerate(nodes)}
    t_lo = min(c.period[0] for _, c in communities)
    t_hi = max(c.period[1] for _, c in communities)
    span = (t_hi - t_lo) or 1
    plot_w = width - 2 * margin
    height = int(2 * margin + row_height * len(nodes))
    colors = community_colors((cid for cid, _ in communities), seed)

    def x(t):
        return margin + plot_w * (t - t_lo) / span

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="{margin}" y="{margin}" width="{plot_w}" height="{height - 2 * margin}" '
        'fill="none" stroke="#999"/>',
        f'<text x="{margin}" y="{margin - 8}" font-size="10">{t_lo}</text>',
        f'<text x="{width - margin}" y="{margin - 8}" font-size="10" text-anchor="end">{t_hi}</text>',
    ]
    for cid, c in communities:
        x0, x1 = x(c.period[0]), x(c.period[1])
        for n in sorted_members(c.nodes):
            y = margin + row_height * row[n]
            parts.append(
                f'<rect x="{x0:.2f}" y="{y:.2f}" width="{max(x1 - x0, 0.5):.2f}" '
                f'height="{row_height:.2f}" fill="{colors[cid]}" fill-opacity="0.8">'
                f"<title>community {cid}, node {n}</title></rect>"
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
