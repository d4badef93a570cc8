"""Static SVG scatter plots: projection, parity and caseweight plots.

Output is a plain string and depends only on the inputs.  Every case is
one marker element carrying its data coordinates and labels as
attributes (``data-case``, ``data-set``, ``data-class``, ``data-x``,
``data-y``), so plots can be checked programmatically.  Training cases
are blue and test cases red; caseweight classes use distinct symbols:
circle (regular), square (moderate) and triangle (harsh).
"""

from xml.sax.saxutils import escape

import numpy as np

from .errors import DataError

WIDTH, HEIGHT = 640, 480
MARGIN = {"left": 72, "right": 150, "top": 40, "bottom": 56}
COLORS = {"train": "#1f77b4", "test": "#d62728"}
CLASSES = ("regular", "moderate", "harsh")


def _fmt(v):
    return f"{v:.3f}".rstrip("0").rstrip(".") if v == v else "0"


class _Frame:
    """Linear map from data ranges to the plotting area."""

    def __init__(self, xs, ys):
        self.x0, self.x1 = self._range(xs)
        self.y0, self.y1 = self._range(ys)
        self.left = MARGIN["left"]
        self.right = WIDTH - MARGIN["right"]
        self.top = MARGIN["top"]
        self.bottom = HEIGHT - MARGIN["bottom"]

    @staticmethod
    def _range(v):
        v = np.asarray(v, dtype=float)
        lo, hi = float(np.min(v)), float(np.max(v))
        pad = 0.05 * (hi - lo) if hi > lo else max(abs(lo), 1.0) * 0.5
        return lo - pad, hi + pad

    def px(self, x):
        return self.left + (x - self.x0) / (self.x1 - self.x0) * (self.right - self.left)

    def py(self, y):
        return self.bottom - (y - self.y0) / (self.y1 - self.y0) * (self.bottom - self.top)


def _marker(cls, x, y, color, attrs):
    common = f'fill="{color}" fill-opacity="0.75" stroke="{color}" {attrs}'
    if cls == "moderate":
        return f'<rect x="{_fmt(x - 3.5)}" y="{_fmt(y - 3.5)}" width="7" height="7" {common}/>'
    if cls == "harsh":
        pts = f"{_fmt(x)},{_fmt(y - 4.5)} {_fmt(x - 4.5)},{_fmt(y + 3.5)} {_fmt(x + 4.5)},{_fmt(y + 3.5)}"
        return f'<polygon points="{pts}" {common}/>'
    return f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="3.5" {common}/>'


def _axes(frame, title, xlabel, ylabel):
    out = [
        f'<rect x="{frame.left}" y="{frame.top}" width="{frame.right - frame.left}" '
        f'height="{frame.bottom - frame.top}" fill="none" stroke="#333"/>',
        f'<text x="{(frame.left + frame.right) / 2:g}" y="{MARGIN["top"] - 14}" '
        f'text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<text class="xlabel" x="{(frame.left + frame.right) / 2:g}" y="{HEIGHT - 14}" '
        f'text-anchor="middle" font-size="13">{escape(xlabel)}</text>',
        f'<text class="ylabel" x="18" y="{(frame.top + frame.bottom) / 2:g}" text-anchor="middle" '
        f'font-size="13" transform="rotate(-90 18 {(frame.top + frame.bottom) / 2:g})">{escape(ylabel)}</text>',
    ]
    for v in np.linspace(frame.x0, frame.x1, 5):
        x = frame.px(v)
        out.append(f'<line x1="{_fmt(x)}" y1="{frame.bottom}" x2="{_fmt(x)}" y2="{frame.bottom + 5}" stroke="#333"/>')
        out.append(f'<text x="{_fmt(x)}" y="{frame.bottom + 18}" text-anchor="middle" font-size="11">{v:.3g}</text>')
    for v in np.linspace(frame.y0, frame.y1, 5):
        y = frame.py(v)
        out.append(f'<line x1="{frame.left - 5}" y1="{_fmt(y)}" x2="{frame.left}" y2="{_fmt(y)}" stroke="#333"/>')
        out.append(f'<text x="{frame.left - 8}" y="{_fmt(y + 4)}" text-anchor="end" font-size="11">{v:.3g}</text>')
    return out


def _legend(sets, classes_used):
    x = WIDTH - MARGIN["right"] + 16
    y = MARGIN["top"] + 10
    out = []
    for name in sets:
        out.append(_marker("regular", x, y, COLORS[name], 'class="legend"'))
        out.append(f'<text x="{x + 10}" y="{y + 4}" font-size="12">{name}</text>')
        y += 20
    for cls in CLASSES:
        if cls in classes_used:
            out.append(_marker(cls, x, y, "#555", 'class="legend"'))
            out.append(f'<text x="{x + 10}" y="{y + 4}" font-size="12">{cls}</text>')
            y += 20
    return out


def scatter(groups, title, xlabel, ylabel, hlines=(), identity=False):
    """Render a scatter plot.

    ``groups`` maps a set name (``train``/``test``) to a dict with arrays
    ``x``, ``y`` and optional ``classes`` and ``cases`` (case numbers).
    ``hlines`` draws dashed horizontal reference lines; ``identity`` draws
    the line ``y = x``.
    """
    groups = {k: v for k, v in groups.items() if v is not None}
    if not groups:
        raise DataError("nothing to plot")
    xs = np.concatenate([np.asarray(g["x"], dtype=float) for g in groups.values()])
    ys = np.concatenate([np.asarray(g["y"], dtype=float) for g in groups.values()])
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise DataError("plot coordinates must be finite")
    if identity:
        both = np.concatenate([xs, ys])
        xs = ys = both
    extra_y = np.asarray([v for v, _ in hlines], dtype=float)
    frame = _Frame(xs, np.concatenate([ys, extra_y]) if extra_y.size else ys)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    out += _axes(frame, title, xlabel, ylabel)
    if identity:
        lo, hi = max(frame.x0, frame.y0), min(frame.x1, frame.y1)
        out.append(f'<line class="identity" x1="{_fmt(frame.px(lo))}" y1="{_fmt(frame.py(lo))}" '
                   f'x2="{_fmt(frame.px(hi))}" y2="{_fmt(frame.py(hi))}" stroke="#888" stroke-dasharray="4 3"/>')
    for value, label in hlines:
        y = frame.py(value)
        out.append(f'<line class="cutoff" data-value="{value!r}" x1="{frame.left}" y1="{_fmt(y)}" '
                   f'x2="{frame.right}" y2="{_fmt(y)}" stroke="#888" stroke-dasharray="4 3"/>')
        out.append(f'<text x="{frame.right - 4}" y="{_fmt(y - 4)}" text-anchor="end" font-size="11" '
                   f'fill="#555">{escape(label)}</text>')
    used = set()
    for name, g in groups.items():
        x = np.asarray(g["x"], dtype=float)
        y = np.asarray(g["y"], dtype=float)
        classes = g.get("classes")
        classes = ["regular"] * x.size if classes is None else list(classes)
        cases = g.get("cases")
        cases = range(1, x.size + 1) if cases is None else cases
        used.update(classes)
        out.append(f'<g class="cases" data-set="{name}">')
        for xi, yi, cls, case in zip(x, y, classes, cases):
            attrs = (f'class="case {name} {cls}" data-case="{int(case)}" data-set="{name}" '
                     f'data-class="{cls}" data-x="{float(xi)!r}" data-y="{float(yi)!r}"')
            out.append(_marker(cls, frame.px(xi), frame.py(yi), COLORS.get(name, "#333"), attrs))
        out.append("</g>")
    out += _legend(list(groups), used)
    out.append("</svg>")
    return "\n".join(out) + "\n"


def projection_plot(train_scores, test_scores=None, train_classes=None, test_classes=None,
                    train_cases=None, test_cases=None):
    """Scores of the first two components, or component 1 against case number when h = 1."""
    groups = {}
    for name, T, cls, cases in (("train", train_scores, train_classes, train_cases),
                                ("test", test_scores, test_classes, test_cases)):
        if T is None:
            continue
        T = np.asarray(T, dtype=float)
        if T.ndim == 1:
            T = T[:, None]
        if cases is None:
            cases = np.arange(1, T.shape[0] + 1)
        if T.shape[1] >= 2:
            groups[name] = {"x": T[:, 0], "y": T[:, 1], "classes": cls, "cases": cases}
        else:
            groups[name] = {"x": np.asarray(cases, dtype=float), "y": T[:, 0], "classes": cls, "cases": cases}
    train = np.asarray(train_scores, dtype=float)
    if train.ndim == 2 and train.shape[1] >= 2:
        return scatter(groups, "Projection plot", "t1", "t2")
    return scatter(groups, "Projection plot", "case", "t1")


def parity_plot(y_train, fitted, y_test=None, predicted=None, train_classes=None, test_classes=None,
                train_cases=None, test_cases=None):
    """Predicted against observed response with the identity line."""
    groups = {"train": {"x": y_train, "y": fitted, "classes": train_classes, "cases": train_cases}}
    if y_test is not None:
        groups["test"] = {"x": y_test, "y": predicted, "classes": test_classes, "cases": test_cases}
    return scatter(groups, "Parity plot", "observed y", "predicted y", identity=True)


def caseweight_plot(train_weights, test_weights=None, cut_moderate=0.7, cut_harsh=0.3,
                    train_classes=None, test_classes=None, train_cases=None, test_cases=None):
    """Caseweights against case number with the class cutoffs drawn."""
    groups = {}
    for name, w, cls, cases in (("train", train_weights, train_classes, train_cases),
                                ("test", test_weights, test_classes, test_cases)):
        if w is None:
            continue
        w = np.asarray(w, dtype=float)
        if cases is None:
            cases = np.arange(1, w.size + 1)
        groups[name] = {"x": np.asarray(cases, dtype=float), "y": w, "classes": cls, "cases": cases}
    return scatter(groups, "Caseweights", "case", "caseweight",
                   hlines=((cut_moderate, "moderate cutoff"), (cut_harsh, "harsh cutoff")))
