"""Accuracy-versus-cost trend panels for the ten selected lightweight models.

Fits a least-squares line to each (cost, spatial accuracy) panel, prints the
fit and writes one SVG per panel.

    python3 scripts/efficiency_trends.py --out figures/
"""

import argparse
from pathlib import Path

from laid.trends import emit_scatter_svg, linear_fit

ACCURACY = [92.40, 95.64, 95.19, 97.17, 97.01, 92.47, 97.86, 98.87, 97.98]

# x coordinates as plotted for each panel, in model order
PANELS = {
    "params": ("# parameters (M)", [1.4, 1.3, 2.5, 1.3, 1.4, 1.2, 1.4, 3.6, 4.3]),
    "flops": ("FLOPs (G)", [0.04, 0.26, 0.06, 0.40, 0.50, 0.35, 0.30, 0.70, 0.40]),
    "efficiency": ("efficiency score", [0.806, 0.671, 0.669, 0.645, 0.631, 0.607, 0.526, 0.524, 0.523]),
}


def panel_points(name: str) -> list[tuple[float, float]]:
    return list(zip(PANELS[name][1], ACCURACY))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="figures")
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, (x_label, _) in PANELS.items():
        pts = panel_points(name)
        fit = linear_fit(pts)
        print(f"{name:<11} slope={fit.slope:9.4f} intercept={fit.intercept:9.4f} "
              f"R2={fit.r_squared:.3f} n={fit.n}")
        svg = emit_scatter_svg(pts, fit, x_label, "accuracy (%)", f"accuracy vs {x_label}")
        (out / f"trend_{name}.svg").write_text(svg)


if __name__ == "__main__":
    main()
