"""Line and band charts for series, decompositions and forecasts (SVG text or Pillow PNG)."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple
from xml.sax.saxutils import escape

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from . import config
from .models import Decomposition, Forecast, Series, format_timestamp

logger = logging.getLogger(__name__)

Color = Tuple[int, int, int]

TITLE_HEIGHT = 40
PANEL_GAP = 24
TEXT_COLOR = (40, 40, 48)
FRAME_COLOR = (180, 180, 188)


@dataclass(frozen=True, eq=False)
class Line:
    """Polyline over x positions 0..n-1; NaN values break the line."""
    values: np.ndarray
    color: Color = config.CHART_LINE_COLOR
    label: str = ""


@dataclass(frozen=True, eq=False)
class Band:
    """Filled region between two curves."""
    lower: np.ndarray
    upper: np.ndarray
    color: Color = config.CHART_BAND_COLOR
    opacity: float = 0.15


@dataclass
class Panel:
    title: str
    lines: List[Line] = field(default_factory=list)
    bands: List[Band] = field(default_factory=list)


@dataclass
class Chart:
    """One or more vertically stacked panels sharing an x axis."""
    title: str
    panels: List[Panel]
    x_labels: Tuple[str, str] = ("", "")

    @property
    def n_points(self) -> int:
        sizes = [line.values.size for panel in self.panels for line in panel.lines]
        sizes += [band.lower.size for panel in self.panels for band in panel.bands]
        return max(sizes) if sizes else 0


def _segments(values: np.ndarray) -> List[np.ndarray]:
    """Index runs where the values are finite."""
    finite = np.isfinite(values)
    runs, current = [], []
    for i, ok in enumerate(finite):
        if ok:
            current.append(i)
        elif current:
            runs.append(np.array(current))
            current = []
    if current:
        runs.append(np.array(current))
    return runs


def _y_range(panel: Panel) -> Tuple[float, float]:
    arrays = [line.values for line in panel.lines]
    arrays += [band.lower for band in panel.bands] + [band.upper for band in panel.bands]
    finite = np.concatenate([a[np.isfinite(a)] for a in arrays]) if arrays else np.zeros(0)
    if finite.size == 0:
        return -1.0, 1.0
    low, high = float(finite.min()), float(finite.max())
    if high - low < 1e-12:
        return low - 1.0, high + 1.0
    pad = 0.05 * (high - low)
    return low - pad, high + pad


class ChartRenderer:
    """Draws a Chart as SVG markup or as a PNG image."""

    def __init__(
        self,
        size: Optional[Tuple[int, int]] = None,
        background_color: Optional[Color] = None,
    ):
        self.size = size or config.CHART_SIZE
        self.background_color = background_color or config.CHART_BACKGROUND
        self.margin = config.CHART_MARGIN
        self.line_width = config.CHART_LINE_WIDTH

    def _panel_boxes(self, count: int) -> List[Tuple[int, int, int, int]]:
        width, height = self.size
        top = self.margin // 2 + TITLE_HEIGHT
        bottom = height - self.margin
        panel_height = (bottom - top - PANEL_GAP * (count - 1)) // count
        return [
            (self.margin, top + i * (panel_height + PANEL_GAP), width - self.margin,
             top + i * (panel_height + PANEL_GAP) + panel_height)
            for i in range(count)
        ]

    @staticmethod
    def _projection(box, n_points: int, y_range) -> Callable[[np.ndarray, np.ndarray], List[Tuple[float, float]]]:
        x1, y1, x2, y2 = box
        low, high = y_range
        span = max(n_points - 1, 1)

        def project(indices, values):
            xs = x1 + (x2 - x1) * np.asarray(indices, dtype=float) / span
            ys = y2 - (y2 - y1) * (np.asarray(values, dtype=float) - low) / (high - low)
            return list(zip(xs.tolist(), ys.tolist()))

        return project

    # -----------------------------------------------------------------
    # SVG
    # -----------------------------------------------------------------

    @staticmethod
    def _points_attr(points) -> str:
        return " ".join(f"{x:.2f},{y:.2f}" for x, y in points)

    @staticmethod
    def _rgb(color: Color) -> str:
        return f"rgb({color[0]},{color[1]},{color[2]})"

    def to_svg(self, chart: Chart) -> str:
        """Render the chart as a standalone SVG document."""
        width, height = self.size
        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">',
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="{self._rgb(self.background_color)}"/>',
            f'<text x="{width // 2}" y="{self.margin // 2 + 16}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="18" fill="{self._rgb(TEXT_COLOR)}">{escape(chart.title)}</text>',
        ]
        n_points = chart.n_points

        for panel, box in zip(chart.panels, self._panel_boxes(len(chart.panels))):
            x1, y1, x2, y2 = box
            low, high = _y_range(panel)
            project = self._projection(box, n_points, (low, high))
            parts.append(
                f'<rect x="{x1}" y="{y1}" width="{x2 - x1}" height="{y2 - y1}" fill="none" '
                f'stroke="{self._rgb(FRAME_COLOR)}"/>'
            )
            parts.append(
                f'<text x="{x1}" y="{y1 - 6}" font-family="sans-serif" font-size="13" '
                f'fill="{self._rgb(TEXT_COLOR)}">{escape(panel.title)}</text>'
            )
            for value, y in ((high, y1 + 12), (low, y2 - 2)):
                parts.append(
                    f'<text x="{x1 - 6}" y="{y}" text-anchor="end" font-family="sans-serif" font-size="11" '
                    f'fill="{self._rgb(TEXT_COLOR)}">{value:.2f}</text>'
                )

            for band in panel.bands:
                for run in _segments(band.lower + band.upper):
                    outline = project(run, band.upper[run]) + project(run[::-1], band.lower[run[::-1]])
                    parts.append(
                        f'<polygon points="{self._points_attr(outline)}" fill="{self._rgb(band.color)}" '
                        f'fill-opacity="{band.opacity:.2f}" stroke="none"/>'
                    )
            for line in panel.lines:
                for run in _segments(line.values):
                    parts.append(
                        f'<polyline points="{self._points_attr(project(run, line.values[run]))}" fill="none" '
                        f'stroke="{self._rgb(line.color)}" stroke-width="{self.line_width}"/>'
                    )

        left, right = chart.x_labels
        parts.append(
            f'<text x="{self.margin}" y="{height - self.margin // 2}" font-family="sans-serif" font-size="11" '
            f'fill="{self._rgb(TEXT_COLOR)}">{escape(left)}</text>'
        )
        parts.append(
            f'<text x="{width - self.margin}" y="{height - self.margin // 2}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11" fill="{self._rgb(TEXT_COLOR)}">{escape(right)}</text>'
        )
        parts.append("</svg>")
        return "\n".join(parts) + "\n"

    # -----------------------------------------------------------------
    # PNG
    # -----------------------------------------------------------------

    def to_image(self, chart: Chart) -> Image.Image:
        """Render the chart as an RGB Pillow image."""
        width, height = self.size
        image = Image.new("RGBA", self.size, self.background_color + (255,))
        font = ImageFont.load_default()
        draw = ImageDraw.Draw(image)
        title_width = draw.textlength(chart.title, font=font)
        draw.text((width // 2 - title_width / 2, self.margin // 2 + 8), chart.title, fill=TEXT_COLOR, font=font)
        n_points = chart.n_points

        for panel, box in zip(chart.panels, self._panel_boxes(len(chart.panels))):
            x1, y1, x2, y2 = box
            low, high = _y_range(panel)
            project = self._projection(box, n_points, (low, high))

            for band in panel.bands:
                overlay = Image.new("RGBA", self.size, (0, 0, 0, 0))
                overlay_draw = ImageDraw.Draw(overlay)
                fill = band.color + (int(round(255 * band.opacity)),)
                for run in _segments(band.lower + band.upper):
                    outline = project(run, band.upper[run]) + project(run[::-1], band.lower[run[::-1]])
                    if len(outline) >= 3:
                        overlay_draw.polygon(outline, fill=fill)
                image = Image.alpha_composite(image, overlay)
            draw = ImageDraw.Draw(image)

            draw.rectangle([x1, y1, x2, y2], outline=FRAME_COLOR, width=1)
            draw.text((x1, y1 - 14), panel.title, fill=TEXT_COLOR, font=font)
            for text, y in ((f"{high:.2f}", y1), (f"{low:.2f}", y2 - 12)):
                draw.text((x1 - 6 - draw.textlength(text, font=font), y), text, fill=TEXT_COLOR, font=font)
            for line in panel.lines:
                for run in _segments(line.values):
                    points = project(run, line.values[run])
                    if len(points) == 1:
                        x, y = points[0]
                        draw.ellipse([x - 1, y - 1, x + 1, y + 1], fill=line.color)
                    else:
                        draw.line(points, fill=line.color, width=self.line_width)

        left, right = chart.x_labels
        draw.text((self.margin, height - self.margin // 2), left, fill=TEXT_COLOR, font=font)
        right_x = width - self.margin - draw.textlength(right, font=font)
        draw.text((right_x, height - self.margin // 2), right, fill=TEXT_COLOR, font=font)
        return image.convert("RGB")

    def render(self, chart: Chart, output_path: Path) -> Path:
        """Write the chart; the format follows the file suffix (.svg or .png).

        Raises:
            ValueError: On an unsupported suffix
        """
        output_path = Path(output_path)
        suffix = output_path.suffix.lower()
        if suffix not in (".svg", ".png"):
            raise ValueError(f"Unsupported chart format '{suffix}' for {output_path} (use .svg or .png)")
        output_path.parent.mkdir(parents=True, exist_ok=True)
        if suffix == ".svg":
            output_path.write_text(self.to_svg(chart), encoding="utf-8")
        else:
            self.to_image(chart).save(output_path, "PNG")
        logger.info(f"Rendered chart: {output_path}")
        return output_path


# ---------------------------------------------------------------------
# Chart builders
# ---------------------------------------------------------------------

def forecast_chart(
    forecast: Forecast,
    history: Optional[Series] = None,
    history_points: int = config.CHART_HISTORY_POINTS,
) -> Chart:
    """Recent history followed by the point forecast and its interval bands (widest band first)."""
    tail = np.zeros(0)
    if history is not None and history_points > 0:
        tail = np.asarray(history.values[-history_points:], dtype=float)
    n_tail, h = tail.size, forecast.horizon
    padding = np.full(n_tail, np.nan)

    bands = [
        Band(
            lower=np.concatenate([padding, forecast.lower[level]]),
            upper=np.concatenate([padding, forecast.upper[level]]),
            opacity=0.12,
        )
        for level in sorted(forecast.levels, reverse=True)
    ]
    lines = [Line(np.concatenate([padding, forecast.points]), config.CHART_LINE_COLOR, "forecast")]
    if n_tail:
        lines.insert(0, Line(np.concatenate([tail, np.full(h, np.nan)]), config.CHART_ACTUAL_COLOR, "history"))

    timestamps = forecast.timestamps()
    first = history.timestamp_at(len(history) - n_tail) if n_tail else timestamps[0]
    levels = ", ".join(f"{level * 100:g}%" for level in forecast.levels)
    return Chart(
        title=f"{forecast.model_name} forecast, h={h} ({levels} intervals)",
        panels=[Panel(title="arrivals", lines=lines, bands=bands)],
        x_labels=(format_timestamp(first), format_timestamp(timestamps[-1])),
    )


def decomposition_chart(decomposition: Decomposition, label: str = "") -> Chart:
    """Observed, trend, seasonal and remainder panels."""
    n = decomposition.observed.size
    end = decomposition.start + (n - 1) * decomposition.step
    components = [
        ("observed", decomposition.observed, config.CHART_ACTUAL_COLOR),
        ("trend", decomposition.trend, config.CHART_LINE_COLOR),
        ("seasonal", decomposition.seasonal, config.CHART_LINE_COLOR),
        ("remainder", decomposition.remainder, config.CHART_LINE_COLOR),
    ]
    return Chart(
        title=f"Decomposition of {label or 'series'} (period {decomposition.period})",
        panels=[Panel(title=name, lines=[Line(np.asarray(values), color)]) for name, values, color in components],
        x_labels=(format_timestamp(decomposition.start), format_timestamp(end)),
    )


def profile_chart(profile: Sequence[float], title: str) -> Chart:
    values = np.asarray(profile, dtype=float)
    return Chart(
        title=title,
        panels=[Panel(title="mean", lines=[Line(values)])],
        x_labels=("phase 0", f"phase {values.size - 1}"),
    )
