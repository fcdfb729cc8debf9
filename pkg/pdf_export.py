# pdf_export.py — bench report (summary, per-seed table, optional minute-level table)
from __future__ import annotations
from typing import Dict, Any, List, Optional
from reportlab.lib.pagesizes import A4
from reportlab.pdfgen import canvas
from reportlab.lib.units import cm
from io import BytesIO
import math
import textwrap
import pandas as pd

def _wrap(c, text, x, y, width_chars=95, leading=12, max_lines=None):
    if not text: return y
    lines = textwrap.wrap(text, width=width_chars)
    if max_lines: lines = lines[:max_lines]
    for ln in lines:
        c.drawString(x, y, ln); y -= leading
    return y

def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)): return "–"
    if isinstance(v, float): return f"{v:.4f}"
    return str(v)

def _table(c, df: pd.DataFrame, cols: List[str], x, y, H, M, col_w=2.6*cm, leading=12):
    c.setFont("Helvetica-Bold", 8)
    for i, col in enumerate(cols): c.drawString(x + i*col_w, y, col[:18])
    y -= leading; c.setFont("Helvetica", 8)
    for _, row in df.iterrows():
        if y < M + 20:
            c.showPage(); y = H-M; c.setFont("Helvetica", 8)
        for i, col in enumerate(cols): c.drawString(x + i*col_w, y, _fmt(row.get(col))[:18])
        y -= leading
    return y

def build_bench_pdf(
    *, title: str,
    summary: pd.DataFrame,
    rows: pd.DataFrame,
    config: Dict[str, Any],
    minutes: Optional[pd.DataFrame] = None,
    footer_note: str = "",
) -> bytes:
    buf = BytesIO(); c = canvas.Canvas(buf, pagesize=A4)
    W,H = A4; M=2*cm

    # cover: scenario + sampling at a glance
    sc, sp = config.get("scenario", {}), config.get("sampling", {})
    c.setFont("Helvetica-Bold", 18); c.drawString(M, H-M, title)
    c.setFont("Helvetica", 11)
    c.drawString(M, H-M-22, f"Duration: {sc.get('duration','')} s  |  Seeds: {rows['seed'].nunique() if len(rows) else 0}")
    c.drawString(M, H-M-37, f"Arrivals: {sc.get('arrival_rate_r','')} right / {sc.get('arrival_rate_w','')} wrong per min")
    c.drawString(M, H-M-52, f"Sampling: t_gaps {sp.get('t_gaps','')} s, pair dt {sp.get('intra_pair_dt','')} s, dense {sp.get('frame_dt','')} s")
    over = config.get("overrides") or []
    y = H-M-74
    if over:
        c.setFont("Helvetica-Bold", 11); c.drawString(M, y, "Overrides:"); y -= 14; c.setFont("Helvetica", 9)
        y = _wrap(c, "  ".join(f"{o['key']} = {o['value']}" for o in over), M+10, y, width_chars=110)

    y -= 10
    c.setFont("Helvetica-Bold", 14); c.drawString(M, y, "Summary"); y -= 18
    y = _table(c, summary, ["method", "t_gap", "seeds", "frames_processed", "mean_abs_error", "ensemble_win_fraction"],
               M, y, H, M, col_w=2.9*cm)
    c.showPage()

    c.setFont("Helvetica-Bold", 14); c.drawString(M, H-M, "Per-seed results")
    _table(c, rows, ["seed", "method", "t_gap", "frames_processed", "seconds_per_video_minute", "estimated_ratio", "abs_error"],
           M, H-M-20, H, M, col_w=2.5*cm)
    c.showPage()

    if minutes is not None and len(minutes):
        c.setFont("Helvetica-Bold", 14); c.drawString(M, H-M, "Minute-level ratios (first seed)")
        _table(c, minutes, ["minute", "n_right", "n_wrong", "true_ratio", "estimated_ratio", "abs_error"],
               M, H-M-20, H, M, col_w=2.7*cm)
        c.showPage()

    if footer_note:
        c.setFont("Helvetica-Oblique", 9); c.drawString(M, M, footer_note); c.showPage()
    c.save(); buf.seek(0); return buf.read()
