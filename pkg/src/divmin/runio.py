"""Run artifacts: iteration traces, versioned reports, and a small chart.

The CSV trace holds one row per accepted iteration with full-precision
floats. The JSON report is written with sorted keys and default float
repr, so two runs of the same configuration produce byte-identical
files apart from the timestamp field. The SVG chart draws one polyline
per named term over the accepted iterations, assembled by hand because
a plotting dependency would dwarf the few curves it draws.
"""

from __future__ import annotations

import csv
import json
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .config import RunConfig
from .optim import OptimTrace
from .systems import softmax

__all__ = [
    "report_payload",
    "write_report_json",
    "write_terms_svg",
    "write_trace_csv",
]

REPORT_VERSION = 1


def write_trace_csv(path: str | Path, trace: OptimTrace) -> Path:
    """One CSV row per accepted iteration, term columns sorted by name."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    term_names = sorted(trace.records[0].terms) if trace.records else []
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["iteration", "total", "grad_norm", "step", *term_names])
        for record in trace.records:
            writer.writerow(
                [
                    record.iteration,
                    repr(record.total),
                    repr(record.grad_norm),
                    repr(record.step),
                    *[repr(record.terms[name]) for name in term_names],
                ]
            )
    return path


def report_payload(config: RunConfig, trace: OptimTrace) -> dict:
    """Everything a finished run claims, as plain JSON-ready values.

    Wall-clock quantities are deliberately excluded; the timestamp is
    added only at write time so payloads themselves are reproducible.
    """
    objective = config.objective
    report = objective.report(trace.phi)
    gradient = objective.value_and_gradient(trace.phi)
    records = trace.records
    system, target = objective.engine.space.set(np.asarray(trace.phi, dtype=np.float64))
    optimized = {}
    for block in objective.engine.space.blocks:
        if block.side == "p":
            table = system.factors[block.key].conditional()
            optimized[f"p:{block.key}"] = table.tolist()
        else:
            index = int(block.key.split(":", 1)[0])
            factor = target.factors[index]
            optimized[f"q:{factor.child}"] = softmax(factor.logits, axis=-1).tolist()
    return {
        "version": REPORT_VERSION,
        "name": config.name,
        "seed": config.seed,
        "family": objective.family,
        "equation": objective.equation,
        "converged": trace.converged,
        "reason": trace.reason,
        "iterations": len(records),
        "total": float(trace.total),
        "grad_norm": float(records[-1].grad_norm) if records else None,
        "score_residual": float(gradient.score_residual),
        "parameters": [float(v) for v in np.asarray(trace.phi).ravel()],
        "optimized_factors": optimized,
        "engine_terms": {k: float(v) for k, v in gradient.evaluation.terms.items()},
        "log_partition": float(gradient.evaluation.log_partition),
        "report": {
            "equation": report.equation,
            "terms": {k: float(v) for k, v in report.terms.items()},
            "combo": {k: float(v) for k, v in report.combo.items()},
            "log_partition": float(report.log_partition),
            "lnz_coeff": float(report.lnz_coeff),
            "joint_kl": float(report.joint_kl),
            "relation": report.relation,
            "slack": float(report.slack),
            "total": float(report.total),
            "divergent": bool(report.divergent),
            "extras": {k: float(v) for k, v in report.extras.items()},
        },
    }


def write_report_json(
    path: str | Path, payload: dict, timestamp: str | None = None
) -> Path:
    """Write the payload with sorted keys plus a UTC timestamp field."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    stamped = dict(payload)
    stamped["timestamp"] = timestamp or datetime.now(timezone.utc).isoformat()
    path.write_text(json.dumps(stamped, indent=2, sort_keys=True) + "\n")
    return path


_PALETTE = (
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#e377c2",
    "#17becf",
)


def write_terms_svg(
    path: str | Path, trace: OptimTrace, width: int = 640, height: int = 360
) -> Path:
    """One polyline per named term over the accepted iterations.

    All series share one y axis so the relative magnitudes stay visible;
    a small legend maps colors to term names. Output bytes depend only
    on the trace, never on the clock.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    term_names = sorted(trace.records[0].terms) if trace.records else []
    series = {
        name: [record.terms[name] for record in trace.records] for name in term_names
    }
    values = [v for curve in series.values() for v in curve] or [0.0]
    low, high = min(values), max(values)
    span = high - low if high > low else 1.0
    margin = 48.0
    inner_w = width - 2 * margin
    inner_h = height - 2 * margin
    denom = max(len(trace.records) - 1, 1)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="24" text-anchor="middle" '
        'font-family="sans-serif" font-size="14">term values per iteration</text>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<text x="{margin - 6}" y="{margin + 4:.0f}" text-anchor="end" '
        f'font-family="sans-serif" font-size="11">{high:.6g}</text>',
        f'<text x="{margin - 6}" y="{height - margin + 4:.0f}" text-anchor="end" '
        f'font-family="sans-serif" font-size="11">{low:.6g}</text>',
        f'<text x="{width - margin}" y="{height - margin + 16:.0f}" '
        'text-anchor="end" font-family="sans-serif" font-size="11">'
        f"iteration {max(len(trace.records) - 1, 0)}</text>",
    ]
    for rank, name in enumerate(term_names):
        color = _PALETTE[rank % len(_PALETTE)]
        points = " ".join(
            f"{margin + inner_w * (i / denom):.2f},"
            f"{margin + inner_h * (1.0 - (v - low) / span):.2f}"
            for i, v in enumerate(series[name])
        )
        lines.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" '
            'stroke-width="1.5"/>'
        )
        y = margin + 14.0 * rank
        lines.append(
            f'<text x="{width - margin - 4}" y="{y:.0f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11" fill="{color}">{name}</text>'
        )
    lines.append("</svg>")
    path.write_text("\n".join(lines) + "\n")
    return path
