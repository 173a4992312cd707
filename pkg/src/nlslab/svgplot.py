"""Minimal static SVG log-log charts (no plotting dependency)."""

import math


def _decades(lo, hi):
    start = math.floor(math.log10(lo))
    stop = math.ceil(math.log10(hi))
    return [10.0**e for e in range(start, stop + 1)]


class LogLogChart:
    W, H = 640, 440
    ML, MR, MT, MB = 70, 20, 30, 50

    def __init__(self, title, xlabel, ylabel):
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel
        self.series = []  # (xs, ys, color, label, dashed)

    def add(self, xs, ys, color="#1f6fb2", label="", dashed=False):
        pts = [(x, y) for x, y in zip(xs, ys) if x > 0 and y > 0]
        if pts:
            self.series.append((pts, color, label, dashed))

    def add_fit(self, fit, xs, color="#c23b22"):
        lo, hi = fit.window
        xs = [x for x in xs if lo <= x <= hi and x > 0]
        if len(xs) < 2:
            return
        ys = [math.exp(fit.log_constant) * x**-fit.exponent for x in xs]
        self.add(xs, ys, color=color, label=f"slope -{fit.exponent:.3f}", dashed=True)

    def render(self) -> str:
        allx = [x for pts, *_ in self.series for x, _ in pts]
        ally = [y for pts, *_ in self.series for _, y in pts]
        if not allx:
            allx, ally = [1.0, 10.0], [1.0, 10.0]
        x0, x1 = min(allx), max(allx)
        y0, y1 = min(ally), max(ally)
        if x0 == x1:
            x0, x1 = x0 / 2, x1 * 2
        if y0 == y1:
            y0, y1 = y0 / 2, y1 * 2
        lx0, lx1 = math.log10(x0), math.log10(x1)
        ly0, ly1 = math.log10(y0), math.log10(y1)
        iw = self.W - self.ML - self.MR
        ih = self.H - self.MT - self.MB

        def px(x):
            return self.ML + (math.log10(x) - lx0) / (lx1 - lx0) * iw

        def py(y):
            return self.MT + (ly1 - math.log10(y)) / (ly1 - ly0) * ih

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.W}" '
            f'height="{self.H}" viewBox="0 0 {self.W} {self.H}">',
            f'<rect width="{self.W}" height="{self.H}" fill="white"/>',
            f'<text x="{self.W/2:.0f}" y="20" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{self.title}</text>',
        ]
        for tick in _decades(x0, x1):
            if x0 <= tick <= x1:
                x = px(tick)
                out.append(
                    f'<line x1="{x:.1f}" y1="{self.MT}" x2="{x:.1f}" '
                    f'y2="{self.H - self.MB}" stroke="#ddd"/>'
                )
                out.append(
                    f'<text x="{x:.1f}" y="{self.H - self.MB + 16}" '
                    f'text-anchor="middle" font-family="sans-serif" '
                    f'font-size="11">{tick:g}</text>'
                )
        for tick in _decades(y0, y1):
            if y0 <= tick <= y1:
                y = py(tick)
                out.append(
                    f'<line x1="{self.ML}" y1="{y:.1f}" x2="{self.W - self.MR}" '
                    f'y2="{y:.1f}" stroke="#ddd"/>'
                )
                out.append(
                    f'<text x="{self.ML - 6}" y="{y + 4:.1f}" text-anchor="end" '
                    f'font-family="sans-serif" font-size="11">{tick:g}</text>'
                )
        out.append(
            f'<rect x="{self.ML}" y="{self.MT}" width="{iw}" height="{ih}" '
            f'fill="none" stroke="#444"/>'
        )
        legend_y = self.MT + 14
        for pts, color, label, dashed in self.series:
            path = " ".join(
                f"{'M' if i == 0 else 'L'}{px(x):.1f},{py(y):.1f}"
                for i, (x, y) in enumerate(pts)
            )
            dash = ' stroke-dasharray="6,4"' if dashed else ""
            out.append(
                f'<path d="{path}" fill="none" stroke="{color}" '
                f'stroke-width="1.5"{dash}/>'
            )
            if label:
                out.append(
                    f'<text x="{self.W - self.MR - 6}" y="{legend_y}" '
                    f'text-anchor="end" font-family="sans-serif" font-size="12" '
                    f'fill="{color}">{label}</text>'
                )
                legend_y += 16
        out.append(
            f'<text x="{self.W/2:.0f}" y="{self.H - 14}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{self.xlabel}</text>'
        )
        out.append(
            f'<text x="16" y="{self.H/2:.0f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12" '
            f'transform="rotate(-90 16 {self.H/2:.0f})">{self.ylabel}</text>'
        )
        out.append("</svg>")
        return "\n".join(out)


def write_loglog(path, title, xlabel, ylabel, series, fits=()):
    """series: iterable of (xs, ys, label); fits: iterable of DecayFit."""
    chart = LogLogChart(title, xlabel, ylabel)
    palette = ["#1f6fb2", "#2e8b57", "#8a2be2", "#b8860b"]
    for i, (xs, ys, label) in enumerate(series):
        chart.add(xs, ys, color=palette[i % len(palette)], label=label)
    for fit in fits:
        if fit is not None:
            xs = [x for xs_, ys_, _ in series for x in xs_]
            chart.add_fit(fit, sorted(xs))
    with open(path, "w", encoding="utf-8") as f:
        f.write(chart.render())
