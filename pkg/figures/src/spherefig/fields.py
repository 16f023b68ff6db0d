"""Lat/lon heatmaps of simulated fields (plate carree, shared color scale)."""

from __future__ import annotations

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .io import read_field_csv


def _panel(ax, lon, lat, val, vmin, vmax):
    lons = np.unique(lon)
    lats = np.unique(lat)
    if len(lons) * len(lats) == len(val):
        # regular grid: exact raster
        order = np.lexsort((lon, lat))
        grid = val[order].reshape(len(lats), len(lons))
        mesh = ax.pcolormesh(
            np.degrees(lons), np.degrees(lats), grid, vmin=vmin, vmax=vmax, shading="nearest"
        )
    else:
        mesh = ax.scatter(np.degrees(lon), np.degrees(lat), c=val, s=6, vmin=vmin, vmax=vmax)
    ax.set_xlabel("longitude (deg)")
    ax.set_aspect("equal")
    return mesh


def render_fields(paths, out_path, titles=None):
    """Render one heatmap per field CSV into a single row of panels.

    Panels share one color scale and one colorbar so values are
    comparable across inputs.
    """
    data = [read_field_csv(p) for p in paths]
    vmin = min(v.min() for _, _, v in data)
    vmax = max(v.max() for _, _, v in data)
    n = len(data)
    fig, axes = plt.subplots(1, n, figsize=(4.2 * n + 1.0, 3.4), squeeze=False, constrained_layout=True)
    mesh = None
    for k, (ax, (lon, lat, val)) in enumerate(zip(axes[0], data)):
        mesh = _panel(ax, lon, lat, val, vmin, vmax)
        title = titles[k] if titles and k < len(titles) else str(paths[k])
        ax.set_title(title, fontsize=10)
        if k == 0:
            ax.set_ylabel("latitude (deg)")
    fig.colorbar(mesh, ax=axes[0].tolist(), shrink=0.9, label="field value")
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path
