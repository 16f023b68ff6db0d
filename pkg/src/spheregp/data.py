"""CSV ingestion, preprocessing, and train/test splitting."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateScaleError, InvalidInputError, ParseError, RegionPlacementError, TransformError
from .geometry import normalize_lon

MAX_REGION_ATTEMPTS = 10_000


@dataclass
class Dataset:
    """Locations (lon, lat in radians), values, and a preprocessing record."""

    locs: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.locs = np.atleast_2d(np.asarray(self.locs, dtype=float))
        self.values = np.asarray(self.values, dtype=float)
        if self.locs.shape[0] != len(self.values):
            raise InvalidInputError("locations and values have different lengths")

    @property
    def n(self) -> int:
        return len(self.values)

    def subset(self, idx) -> "Dataset":
        return Dataset(self.locs[idx], self.values[idx], dict(self.meta))


def load_csv(path, degrees: bool = False) -> Dataset:
    """Read a lon,lat,value CSV; ``degrees=True`` converts angles to radians.

    Malformed rows raise :class:`ParseError` naming the offending line.
    """
    locs, values = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file")
        cols = [h.strip().lower() for h in header]
        if cols[:3] != ["lon", "lat", "value"]:
            raise ParseError(f"{path}: expected header lon,lat,value, got {','.join(header)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not f.strip() for f in row):
                continue
            if len(row) < 3:
                raise ParseError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                lon, lat, val = (float(row[0]), float(row[1]), float(row[2]))
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: non-numeric field ({exc})")
            if degrees:
                lon, lat = np.radians(lon), np.radians(lat)
            if abs(lat) > np.pi / 2 + 1e-12:
                raise ParseError(f"{path}:{lineno}: latitude {lat:g} outside [-pi/2, pi/2]")
            locs.append((float(normalize_lon(lon)), lat))
            values.append(val)
    return Dataset(np.array(locs).reshape(-1, 2), np.array(values), {"source": str(path)})


def save_csv(dataset: Dataset, path, split_labels=None) -> None:
    """Write lon,lat,value rows; optional split column with train/test labels."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if split_labels is None:
            writer.writerow(["lon", "lat", "value"])
            for (lon, lat), v in zip(dataset.locs, dataset.values):
                writer.writerow([f"{lon:.17g}", f"{lat:.17g}", f"{v:.17g}"])
        else:
            writer.writerow(["lon", "lat", "value", "split"])
            for (lon, lat), v, lab in zip(dataset.locs, dataset.values, split_labels):
                writer.writerow([f"{lon:.17g}", f"{lat:.17g}", f"{v:.17g}", lab])


def standardize(dataset: Dataset, log_first: bool = False) -> Dataset:
    """Center and scale to sample SD one, optionally log-transforming first.

    The meta record keeps (shift, scale, log flag) so
    :func:`unstandardize` can invert the transform exactly.
    """
    vals = dataset.values
    if log_first:
        bad = np.where(vals <= 0)[0]
        if len(bad):
            raise TransformError(f"log transform needs positive values; row {bad[0]} is {vals[bad[0]]:g}")
        vals = np.log(vals)
    shift = float(np.mean(vals))
    scale = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
    if scale == 0.0 or not np.isfinite(scale):
        raise DegenerateScaleError("cannot standardize a constant (or single-value) series")
    meta = dict(dataset.meta)
    meta["preprocess"] = {"shift": shift, "scale": scale, "log": bool(log_first)}
    return Dataset(dataset.locs.copy(), (vals - shift) / scale, meta)


def unstandardize(dataset: Dataset) -> Dataset:
    rec = dataset.meta.get("preprocess")
    if rec is None:
        raise TransformError("dataset has no preprocessing record to invert")
    vals = dataset.values * rec["scale"] + rec["shift"]
    if rec["log"]:
        vals = np.exp(vals)
    meta = dict(dataset.meta)
    meta.pop("preprocess")
    return Dataset(dataset.locs.copy(), vals, meta)


def random_split(dataset: Dataset, frac: float, seed):
    """Random test split with |test| = round(frac * n); deterministic per seed."""
    if not 0 < frac < 1:
        raise InvalidInputError(f"test fraction must be in (0, 1), got {frac}")
    rng = np.random.default_rng(seed)
    n = dataset.n
    n_test = int(round(frac * n))
    perm = rng.permutation(n)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    return dataset.subset(train_idx), dataset.subset(test_idx), train_idx, test_idx


def region_split(dataset: Dataset, n_regions=10, lon_width=0.4, lat_width=0.2, target_frac=0.2, seed=0):
    """Test split from randomly placed non-overlapping rectangles.

    Each region spans ``lon_width`` to either side of its center in
    longitude (wrapping across the date line) and ``lat_width`` to either
    side in latitude, both in radians. Centers are drawn uniformly and
    accepted sequentially when they do not overlap previously accepted
    regions, stopping once ``n_regions`` are placed or the accumulated
    test fraction reaches ``target_frac``.
    """
    if not 0 < target_frac < 1:
        raise InvalidInputError(f"target fraction must be in (0, 1), got {target_frac}")
    rng = np.random.default_rng(seed)
    lons, lats = dataset.locs[:, 0], dataset.locs[:, 1]
    n = dataset.n
    centers = []
    in_test = np.zeros(n, dtype=bool)
    attempts = 0
    while len(centers) < n_regions and in_test.mean() < target_frac:
        c_lon = rng.uniform(-np.pi, np.pi)
        c_lat = rng.uniform(-np.pi / 2, np.pi / 2)
        attempts += 1
        if attempts > MAX_REGION_ATTEMPTS:
            raise RegionPlacementError(
                f"could not place region {len(centers) + 1} after {MAX_REGION_ATTEMPTS} attempts"
            )
        overlaps = any(
            np.abs(normalize_lon(c_lon - p_lon)) < 2 * lon_width and abs(c_lat - p_lat) < 2 * lat_width
            for p_lon, p_lat in centers
        )
        if overlaps:
            continue
        centers.append((c_lon, c_lat))
        attempts = 0
        inside = (np.abs(normalize_lon(lons - c_lon)) <= lon_width) & (np.abs(lats - c_lat) <= lat_width)
        in_test |= inside
    test_idx = np.where(in_test)[0]
    train_idx = np.where(~in_test)[0]
    return dataset.subset(train_idx), dataset.subset(test_idx), train_idx, test_idx
