"""Render multi-panel heatmaps from lightcone-scan CSV grids.

Consumes only the documented CSV schema (header ``x,t,value``, rows ordered by
time then site, ``nan`` for missing cells) plus a JSON panel spec; it does not
import the simulation package.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed metadata keeps re-renders byte-stable (no timestamps embedded)
PNG_METADATA = {"Software": "nhcorr-plots"}


@dataclass(frozen=True)
class PanelSpec:
    """One heatmap panel per CSV (typically one per gamma)."""

    csv_paths: tuple[str, ...]
    titles: tuple[str, ...]
    output: str
    shared_scale: bool = True
    log_scale: bool = False
    value_label: str = "value"

    def __post_init__(self):
        if not self.csv_paths:
            raise ValueError("spec needs at least one CSV")
        if len(self.titles) != len(self.csv_paths):
            raise ValueError("titles must match csv_paths one to one")

    @classmethod
    def from_json(cls, path: str) -> "PanelSpec":
        with open(path) as fh:
            data = json.load(fh)
        known = {"csv_paths", "titles", "output", "shared_scale", "log_scale",
                 "value_label"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown spec keys: {sorted(unknown)}")
        return cls(csv_paths=tuple(data["csv_paths"]),
                   titles=tuple(data.get("titles") or data["csv_paths"]),
                   output=data["output"],
                   shared_scale=bool(data.get("shared_scale", True)),
                   log_scale=bool(data.get("log_scale", False)),
                   value_label=str(data.get("value_label", "value")))


@dataclass
class Grid:
    sites: np.ndarray
    times: np.ndarray
    values: np.ndarray  # (n_times, n_sites), NaN for missing cells
    path: str = field(default="")


def load_grid(path: str) -> Grid:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "x,t,value":
            raise ValueError(f"{path}: unexpected CSV header {header!r}")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    xs = sorted({int(r[0]) for r in rows})
    ts = sorted({float(r[1]) for r in rows})
    values = np.full((len(ts), len(xs)), np.nan)
    xi = {x: i for i, x in enumerate(xs)}
    ti = {t: i for i, t in enumerate(ts)}
    for x, t, v in rows:
        values[ti[float(t)], xi[int(x)]] = float(v)
    return Grid(sites=np.array(xs), times=np.array(ts), values=values, path=path)


def build_figure(spec: PanelSpec) -> plt.Figure:
    """One row of panels (x horizontal, t vertical) with a shared colorbar."""
    grids = [load_grid(p) for p in spec.csv_paths]
    ref = grids[0]
    for g in grids[1:]:
        if not (np.array_equal(g.sites, ref.sites) and np.array_equal(g.times, ref.times)):
            raise ValueError(f"axis mismatch across CSVs: {g.path} vs {ref.path}")

    finite = np.concatenate([g.values[np.isfinite(g.values)].ravel() for g in grids])
    if finite.size == 0:
        vmin, vmax = 0.0, 1.0
    else:
        vmin, vmax = float(np.min(finite)), float(np.max(finite))
        if vmin == vmax:
            vmax = vmin + 1.0
    norm = None
    if spec.log_scale:
        positive = finite[finite > 0]
        floor = float(np.min(positive)) if positive.size else 1e-12
        norm = matplotlib.colors.LogNorm(vmin=floor, vmax=max(vmax, floor * 10))

    n_panels = len(grids)
    fig, axes = plt.subplots(1, n_panels, figsize=(3.2 * n_panels + 1.2, 3.4),
                             sharey=True, squeeze=False)
    mesh = None
    for ax, grid, title in zip(axes[0], grids, spec.titles):
        masked = np.ma.masked_invalid(grid.values)
        kwargs = {"cmap": "viridis", "shading": "nearest"}
        if norm is not None:
            kwargs["norm"] = norm
        elif spec.shared_scale:
            kwargs["vmin"], kwargs["vmax"] = vmin, vmax
        mesh = ax.pcolormesh(grid.sites, grid.times, masked, **kwargs)
        ax.set_title(title)
        ax.set_xlabel("site x")
    axes[0, 0].set_ylabel("time t")
    fig.colorbar(mesh, ax=axes[0].tolist(), label=spec.value_label, pad=0.02)
    return fig


def render_heatmap(spec: PanelSpec) -> str:
    fig = build_figure(spec)
    fig.savefig(spec.output, dpi=150, metadata=PNG_METADATA)
    plt.close(fig)
    return spec.output


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nhcorr-render",
        description="Render heatmap panels from lightcone-scan CSV grids")
    sub = parser.add_subparsers(dest="command", required=True)
    p_render = sub.add_parser("render", help="render the panels described by a JSON spec")
    p_render.add_argument("--spec", required=True)
    args = parser.parse_args(argv)
    try:
        spec = PanelSpec.from_json(args.spec)
        out = render_heatmap(spec)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"render error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
