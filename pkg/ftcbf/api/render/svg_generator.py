"""Self-contained SVG plots of runs.

Templates are filled with preformatted strings only, so the same run always
yields the same bytes.
"""
import logging
from typing import Dict, List, Optional, Sequence, Tuple
from xml.sax.saxutils import escape

import numpy as np

from ftcbf.api.barriers.geometry import QuadraticRegion
from ftcbf.api.sim.builder import Scenario
from ftcbf.api.sim.engine import ProgressSeries, SimResult

logger = logging.getLogger(__name__)

VIEWPORT = 800
MARGIN = 40
AGENT_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
SERIES_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#17becf")
FLAT_REGION_PX = 6.0


def attr(text: str) -> str:
    return escape(text, {'"': "&quot;"})


def fmt(value: float) -> str:
    text = f"{value:.3f}"
    return "0.000" if text == "-0.000" else text


def region_ellipse(region: QuadraticRegion) -> Tuple[np.ndarray, float, float, float]:
    """Center, semi-axes and rotation (radians) of the region's shadow on the first two coordinates.

    The projection of {(x-c)^T P (x-c) <= 1} onto a coordinate plane is the
    ellipse whose inverse shape is the matching block of P^-1.
    """
    center = np.asarray(region.center, dtype=float)
    if region.dim == 1:
        return np.array([center[0], 0.0]), 1.0 / np.sqrt(region.shape[0, 0]), 0.0, 0.0
    block = np.linalg.inv(region.shape)[:2, :2]
    eigvals, eigvecs = np.linalg.eigh(block)
    angle = float(np.arctan2(eigvecs[1, 0], eigvecs[0, 0]))
    return center[:2], float(np.sqrt(eigvals[0])), float(np.sqrt(eigvals[1])), angle


class WorkspaceMap:
    """Affine map from a workspace box onto the square viewport, y pointing up."""

    def __init__(self, bounds: Sequence[Tuple[float, float]]):
        (self.xmin, self.xmax), (self.ymin, self.ymax) = bounds[0], bounds[1]
        span = max(self.xmax - self.xmin, self.ymax - self.ymin, 1e-9)
        self.scale = (VIEWPORT - 2 * MARGIN) / span

    @classmethod
    def fit(cls, points: np.ndarray, regions: Sequence[QuadraticRegion], pad: float = 0.1) -> "WorkspaceMap":
        lows, highs = [points.min(axis=0)], [points.max(axis=0)]
        for region in regions:
            center, rx, ry, _ = region_ellipse(region)
            reach = max(rx, ry)
            lows.append(center - reach)
            highs.append(center + reach)
        low, high = np.min(lows, axis=0), np.max(highs, axis=0)
        margin = pad * max(float(np.max(high - low)), 1.0)
        return cls(((low[0] - margin, high[0] + margin), (low[1] - margin, high[1] + margin)))

    def point(self, p: Sequence[float]) -> Tuple[float, float]:
        return MARGIN + (p[0] - self.xmin) * self.scale, VIEWPORT - MARGIN - (p[1] - self.ymin) * self.scale

    def length(self, d: float) -> float:
        return d * self.scale


def _planar(flat_states: np.ndarray, n_agents: int, dim: int, agent: int) -> np.ndarray:
    coords = flat_states[:, agent * dim:(agent + 1) * dim]
    if dim == 1:
        return np.column_stack([coords[:, 0], np.zeros(len(coords))])
    return coords[:, :2]


class SvgPlotGenerator:
    """Fills fixed SVG templates for trajectory and progress plots."""

    def __init__(self):
        self.trajectory_template = """<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">
<title>{title}</title>
<rect x="0" y="0" width="{size}" height="{size}" fill="#ffffff"/>
<rect x="{ws_x}" y="{ws_y}" width="{ws_w}" height="{ws_h}" fill="none" stroke="#999999" stroke-width="1"/>
<g id="regions" fill="#e8e8e8" fill-opacity="0.6" stroke="#555555" stroke-width="1.5">
{regions}
</g>
<g id="labels" font-family="sans-serif" font-size="14" fill="#333333" text-anchor="middle">
{labels}
</g>
<g id="paths" fill="none" stroke-width="2">
{paths}
</g>
<g id="switches" stroke="#000000" stroke-width="1">
{switches}
</g>
<g id="starts">
{starts}
</g>
</svg>
"""
        self.progress_template = """<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">
<title>{title}</title>
<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>
{panels}
</svg>
"""
        self.panel_template = """<g id="{panel_id}" transform="translate(0,{offset})">
<rect x="{left}" y="{top}" width="{inner_w}" height="{inner_h}" fill="none" stroke="#999999" stroke-width="1"/>
<text x="{left}" y="{title_y}" font-family="sans-serif" font-size="14" fill="#333333">{heading}</text>
<g fill="none" stroke-width="1.5">
{series}
</g>
</g>"""

    def trajectory_svg(self, scenario: Scenario, result: SimResult) -> str:
        states = result.trajectory()
        n_agents, dim = scenario.workspace.n_agents, scenario.workspace.dim
        regions = scenario.regions
        if scenario.workspace_bounds and dim >= 2:
            frame = WorkspaceMap(scenario.workspace_bounds[:2])
        else:
            planar = np.vstack([_planar(states, n_agents, dim, i) for i in range(n_agents)])
            frame = WorkspaceMap.fit(planar, list(regions.values()))

        region_parts, label_parts = [], []
        for region_id in sorted(regions):
            center, rx, ry, angle = region_ellipse(regions[region_id])
            cx, cy = frame.point(center)
            ry_px = frame.length(ry) if dim > 1 else FLAT_REGION_PX
            # Flipping y turns a counter-clockwise angle into a clockwise one.
            region_parts.append(
                f'<ellipse id="region-{attr(region_id)}" cx="{fmt(cx)}" cy="{fmt(cy)}" rx="{fmt(frame.length(rx))}" '
                f'ry="{fmt(ry_px)}" transform="rotate({fmt(-np.degrees(angle))} {fmt(cx)} {fmt(cy)})"/>'
            )
            label_parts.append(f'<text x="{fmt(cx)}" y="{fmt(cy + 5)}">{escape(region_id)}</text>')

        path_parts, start_parts = [], []
        for agent in range(n_agents):
            color = AGENT_COLORS[agent % len(AGENT_COLORS)]
            points = [frame.point(p) for p in _planar(states, n_agents, dim, agent)]
            d = " ".join(f"{'M' if k == 0 else 'L'}{fmt(px)} {fmt(py)}" for k, (px, py) in enumerate(points))
            path_parts.append(f'<path id="agent-{agent}" stroke="{color}" d="{d}"/>')
            sx, sy = points[0]
            start_parts.append(f'<circle cx="{fmt(sx)}" cy="{fmt(sy)}" r="5" fill="{color}"/>')

        switch_parts = []
        for event in result.switch_log:
            for agent in range(n_agents):
                position = _planar(states[event.step:event.step + 1], n_agents, dim, agent)[0]
                px, py = frame.point(position)
                switch_parts.append(
                    f'<circle class="switch" cx="{fmt(px)}" cy="{fmt(py)}" r="4" fill="#ffffff">'
                    f"<title>{escape(event.label)} t={fmt(event.time)}</title></circle>"
                )

        ws_x, ws_top = frame.point((frame.xmin, frame.ymax))
        return self.trajectory_template.format(
            size=VIEWPORT,
            title=escape(scenario.name),
            ws_x=fmt(ws_x),
            ws_y=fmt(ws_top),
            ws_w=fmt(frame.length(frame.xmax - frame.xmin)),
            ws_h=fmt(frame.length(frame.ymax - frame.ymin)),
            regions="\n".join(region_parts),
            labels="\n".join(label_parts),
            paths="\n".join(path_parts),
            switches="\n".join(switch_parts),
            starts="\n".join(start_parts),
        )

    def _panel(
        self,
        panel_id: str,
        heading: str,
        offset: float,
        lines: List[Tuple[str, np.ndarray, np.ndarray]],
        t_range: Tuple[float, float],
        reference: Optional[float] = None,
    ) -> str:
        left, top, inner_w, inner_h = 60.0, 30.0, VIEWPORT - 80.0, 200.0
        values = [v for _, _, v in lines if v.size]
        if reference is not None:
            values.append(np.array([reference]))
        low = min((float(v.min()) for v in values), default=0.0)
        high = max((float(v.max()) for v in values), default=1.0)
        if high - low < 1e-12:
            low, high = low - 0.5, high + 0.5
        t0, t1 = t_range
        t_span = max(t1 - t0, 1e-12)

        def to_px(t: float, v: float) -> Tuple[float, float]:
            return left + (t - t0) / t_span * inner_w, top + inner_h - (v - low) / (high - low) * inner_h

        parts = []
        colors: Dict[str, str] = {}
        for name, times, series in lines:
            if not series.size:
                continue
            color = colors.setdefault(name, SERIES_COLORS[len(colors) % len(SERIES_COLORS)])
            points = " ".join(f"{fmt(px)},{fmt(py)}" for px, py in (to_px(t, v) for t, v in zip(times, series)))
            parts.append(f'<polyline class="{attr(name)}" stroke="{color}" points="{points}"/>')
        if reference is not None:
            (x0, y0), (x1, _) = to_px(t0, reference), to_px(t1, reference)
            parts.append(
                f'<line x1="{fmt(x0)}" y1="{fmt(y0)}" x2="{fmt(x1)}" y2="{fmt(y0)}" stroke="#777777" stroke-dasharray="4 3"/>'
            )
        legend = escape(", ".join(colors))
        return self.panel_template.format(
            panel_id=panel_id,
            offset=fmt(offset),
            left=fmt(left),
            top=fmt(top),
            inner_w=fmt(inner_w),
            inner_h=fmt(inner_h),
            title_y=fmt(top - 10),
            heading=f"{heading} [{legend}] range {low:.3g} to {high:.3g}" if legend else heading,
            series="\n".join(parts),
        )

    def progress_svg(self, title: str, segments: Sequence[Tuple[str, ProgressSeries]], gamma: float) -> str:
        """Three stacked panels: goal levels, their weighted sum, and its rate against gamma."""
        if not segments:
            raise ValueError("progress plot needs at least one segment")
        t_range = (float(segments[0][1].times[0]), float(segments[-1][1].times[-1]))
        levels, sums, rates = [], [], []
        for label, series in segments:
            for barrier_id, values in series.levels.items():
                levels.append((barrier_id, series.times, values))
            sums.append((label, series.times, series.weighted_sum))
            rates.append((label, series.times[:-1], series.rates))
        panel_height = 260
        panels = [
            self._panel("levels", "goal barrier levels", 0, levels, t_range, reference=0.0),
            self._panel("weighted-sum", "weighted sum of goal barriers", panel_height, sums, t_range),
            self._panel("rate", "rate of weighted sum (dashed: gamma)", 2 * panel_height, rates, t_range, reference=gamma),
        ]
        return self.progress_template.format(
            width=VIEWPORT, height=3 * panel_height, title=escape(title), panels="\n".join(panels)
        )
