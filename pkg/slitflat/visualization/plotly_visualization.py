from typing import Dict, List, Optional
import logging

import plotly.graph_objects as go

from .visualization_base import DepthReport, LevelStyle, RoseTick, Spectrum, rose_ticks

logger = logging.getLogger(__name__)


def create_rose_visualization(spectrum: Spectrum, report: Optional[DepthReport] = None) -> go.Figure:
    """Create an interactive Plotly rose of the direction spectrum, one trace per survival level."""
    ticks = rose_ticks(spectrum, report)
    fig = go.Figure()
    if not ticks:
        logger.warning(f"No directions to plot for {spectrum.surface_id}")
        return fig

    groups: Dict[LevelStyle, List[RoseTick]] = {}
    for t in ticks:
        groups.setdefault(t.style, []).append(t)

    for style in LevelStyle:
        members = groups.get(style)
        if not members:
            continue
        xs, ys, labels = [], [], []
        for t in members:
            tip_x, tip_y = t.tip
            # rays share one trace, separated by gaps
            xs += [0, tip_x, None]
            ys += [0, tip_y, None]
            label = f"({t.dx},{t.dy})<br>length: {t.min_length:.4f}<br>level: {t.level}"
            labels += [label, label, None]
        fig.add_trace(go.Scatter(
            x=xs,
            y=ys,
            mode='lines',
            name=style.label,
            line=dict(color=style.color, width=1.5),
            text=labels,
            hovertemplate="%{text}<extra></extra>",
        ))

    title = f"{spectrum.surface_id}: {len(spectrum.entries)} directions up to L = {spectrum.max_length}"
    if report is not None:
        title += f"<br><sup>eps = {report.epsilon}, depth estimate {report.depth}. Ray length is inverse to saddle connection length.</sup>"
    fig.update_layout(
        title={
            'text': title,
            'x': 0.5,
            'xanchor': 'center',
        },
        showlegend=True,
        legend_title="Survival level",
        hovermode="closest",
        xaxis=dict(range=[-1.05, 1.05], zeroline=False, showgrid=False),
        yaxis=dict(range=[-0.05, 1.05], zeroline=False, showgrid=False, scaleanchor='x', scaleratio=1),
        plot_bgcolor='rgba(240, 245, 250, 0.95)',
        margin=dict(l=20, r=20, t=70, b=30, pad=4),
    )
    return fig


def save_rose_visualization(spectrum: Spectrum, report: Optional[DepthReport], output_path: str = "rose.html"):
    """Save the rose visualization to an HTML file."""
    fig = create_rose_visualization(spectrum, report)
    fig.write_html(output_path)
    print(f"Rose visualization saved to {output_path}")
