from io import BytesIO

from reportlab.lib import colors
from reportlab.lib.enums import TA_RIGHT
from reportlab.lib.pagesizes import A4
from reportlab.lib.styles import ParagraphStyle, getSampleStyleSheet
from reportlab.lib.units import cm
from reportlab.platypus import HRFlowable, Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle
from reportlab.platypus.flowables import Flowable

from lesion.damage import compress_repeats


# ── Colour palette ────────────────────────────────────────────────────────────
C_NAVY      = colors.HexColor("#1e293b")
C_INDIGO    = colors.HexColor("#4f46e5")
C_GREEN     = colors.HexColor("#16a34a")
C_AMBER     = colors.HexColor("#d97706")
C_RED       = colors.HexColor("#dc2626")
C_SLATE     = colors.HexColor("#64748b")
C_LIGHT     = colors.HexColor("#f8fafc")
C_BORDER    = colors.HexColor("#e2e8f0")
PAGE_W      = A4[0] - 4 * cm

_METRIC_ROWS = [
    ("Prec.", "mean_precision"),
    ("Rec.", "mean_recall"),
    ("Acc.", "mean_accuracy"),
    ("Exact", "mean_exact"),
    ("BLEU", "corpus_bleu"),
]


def _safe(text, max_len=1200):
    """Latin-1 markup-safe text; CJK output tokens cannot be drawn by the base fonts."""
    if text is None:
        return ""
    t = str(text).replace("…", "...").replace("→", "->").replace("σ", "sigma")
    t = t.encode("latin-1", errors="replace").decode("latin-1")
    t = t.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    return t[:max_len]


def _bar_color(pct):
    if pct >= 85:
        return C_GREEN
    if pct >= 50:
        return C_AMBER
    return C_RED


# ── Percentage bar flowable ───────────────────────────────────────────────────
class PercentBar(Flowable):
    def __init__(self, pct, width=PAGE_W * 0.55, height=12):
        super().__init__()
        self.pct = min(100.0, max(0.0, float(pct)))
        self.width = width
        self.height = height

    def draw(self):
        w, h, p = self.width, self.height, self.pct
        self.canv.setFillColor(C_BORDER)
        self.canv.roundRect(0, 0, w, h, 4, fill=1, stroke=0)
        if p > 0:
            self.canv.setFillColor(_bar_color(p))
            self.canv.roundRect(0, 0, w * p / 100, h, 4, fill=1, stroke=0)


# ── Styles ────────────────────────────────────────────────────────────────────
def _make_styles():
    base = getSampleStyleSheet()
    def s(name, parent="Normal", **kw):
        return ParagraphStyle(name, parent=base[parent], **kw)
    return {
        "title":  s("T", fontSize=20, fontName="Helvetica-Bold", textColor=C_NAVY, spaceAfter=4, leading=24),
        "sub":    s("S", fontSize=10, textColor=C_SLATE, spaceAfter=2),
        "h2":     s("H2", "Heading2", fontSize=13, spaceBefore=14, spaceAfter=5,
                    textColor=C_NAVY, fontName="Helvetica-Bold"),
        "body":   s("B", fontSize=9, textColor=C_NAVY, leading=12),
        "mono":   s("M", fontSize=8, fontName="Courier", textColor=C_NAVY, leading=10),
        "num":    s("N", fontSize=9, fontName="Helvetica-Bold", textColor=C_NAVY, alignment=TA_RIGHT),
    }


# ── Helpers ───────────────────────────────────────────────────────────────────
def _section(title, styles, description=""):
    elems = [Spacer(1, 0.3 * cm), Paragraph(_safe(title), styles["h2"]),
             HRFlowable(width="100%", thickness=1.5, color=C_INDIGO, spaceAfter=4)]
    if description:
        elems.append(Paragraph(_safe(description), styles["body"]))
        elems.append(Spacer(1, 0.2 * cm))
    return elems


def _grid(rows, col_widths):
    t = Table(rows, colWidths=col_widths, repeatRows=1)
    t.setStyle(TableStyle([
        ("BACKGROUND",    (0, 0), (-1, 0), C_NAVY),
        ("TEXTCOLOR",     (0, 0), (-1, 0), colors.white),
        ("FONTNAME",      (0, 0), (-1, 0), "Helvetica-Bold"),
        ("FONTSIZE",      (0, 0), (-1, 0), 9),
        ("ROWBACKGROUNDS",(0, 1), (-1, -1), [C_LIGHT, colors.white]),
        ("GRID",          (0, 0), (-1, -1), 0.4, C_BORDER),
        ("VALIGN",        (0, 0), (-1, -1), "MIDDLE"),
        ("LEFTPADDING",   (0, 0), (-1, -1), 6),
        ("RIGHTPADDING",  (0, 0), (-1, -1), 6),
        ("TOPPADDING",    (0, 0), (-1, -1), 4),
        ("BOTTOMPADDING", (0, 0), (-1, -1), 4),
    ]))
    return t


def _add_page_number(canvas, doc):
    canvas.saveState()
    canvas.setFont("Helvetica", 8)
    canvas.setFillColor(C_SLATE)
    canvas.drawRightString(A4[0] - 2 * cm, 0.7 * cm, f"Page {canvas.getPageNumber()}")
    canvas.drawString(2 * cm, 0.7 * cm, "LLA-LSTM experiment report")
    canvas.restoreState()


def _header(story, title, meta, st):
    story.append(Paragraph(_safe(title), st["title"]))
    details = [f"{k}: {v}" for k, v in meta.items() if v not in (None, "")]
    if details:
        story.append(Paragraph(_safe("  |  ".join(details)), st["sub"]))
    story.append(HRFlowable(width="100%", thickness=0.5, color=C_BORDER, spaceAfter=6))


def _build(story, title):
    # invariant: no timestamp is rendered, so equal inputs give equal pages
    buf = BytesIO()
    doc = SimpleDocTemplate(
        buf, pagesize=A4,
        rightMargin=2 * cm, leftMargin=2 * cm,
        topMargin=1.5 * cm, bottomMargin=2 * cm,
        title=title,
    )
    doc.build(story, onFirstPage=_add_page_number, onLaterPages=_add_page_number)
    buf.seek(0)
    return buf.getvalue()


# ── Reports ───────────────────────────────────────────────────────────────────
def generate_eval_pdf(report, meta=None, title="Evaluation"):
    """One metrics table (with bars) for a `MetricsReport`."""
    st = _make_styles()
    story = []
    _header(story, title, {**(meta or {}), "pairs": report.pairs}, st)
    story.extend(_section("Scores", st, "Means over the test pairs, in percent."))

    rows = [["Metric", "Value", ""]]
    for label, attr in _METRIC_ROWS:
        value = getattr(report, attr)
        if value is None:
            continue
        rows.append([Paragraph(label, st["body"]), Paragraph(f"{value:.2f}", st["num"]), PercentBar(value)])
    story.append(_grid(rows, [3 * cm, 2.5 * cm, PAGE_W - 5.5 * cm]))
    return _build(story, title)


def generate_lesion_pdf(reports, verdict=None, meta=None, title="Lesion study"):
    """Translations per lesion and probe, then test precision per lesion."""
    st = _make_styles()
    story = []
    _header(story, title, meta or {}, st)

    story.extend(_section("Probe translations", st, "Greedy output of each damaged model for every probe."))
    rows = [["Lesion", "Seed", "Input", "Output"]]
    for r in reports:
        for probe, output in r.translations:
            rows.append([
                Paragraph(_safe(r.label), st["body"]),
                Paragraph(str(r.seed), st["body"]),
                Paragraph(_safe(" ".join(probe), 300), st["mono"]),
                Paragraph(_safe(compress_repeats(output), 300), st["mono"]),
            ])
    story.append(_grid(rows, [2.4 * cm, 1.2 * cm, (PAGE_W - 3.6 * cm) / 2, (PAGE_W - 3.6 * cm) / 2]))

    story.extend(_section("Test precision", st))
    rows = [["Lesion", "Seed", "Prec.", ""]]
    for r in reports:
        rows.append([Paragraph(_safe(r.label), st["body"]), Paragraph(str(r.seed), st["body"]),
                     Paragraph(f"{r.precision:.2f}", st["num"]), PercentBar(r.precision, width=PAGE_W * 0.45)])
    story.append(_grid(rows, [2.4 * cm, 1.2 * cm, 2 * cm, PAGE_W - 5.6 * cm]))

    if verdict:
        held = "held" if verdict["majority"] else "did not hold"
        story.append(Spacer(1, 0.3 * cm))
        story.append(Paragraph(
            _safe(f"LSTM damage kept at least the lexicon-damage precision on {verdict['held']} of "
                  f"{verdict['seeds']} seeds; the majority ordering {held}."), st["body"]))
    return _build(story, title)
