"""Panel CSV ingestion and export, draw-store serialization.

Panel CSV: header row ``date,<series>...``, then one row per month with an
ISO ``YYYY-MM`` date.  Floats are written with ``repr`` so that export
followed by ingest reproduces every value exactly.

Draw-store file layout (all integers little-endian)::

    b"FSVDRAWS"                 8-byte magic
    uint32 version
    uint64 header length
    header                      UTF-8 JSON, sorted keys
    arrays                      '<f8' C-order, in header["arrays"] order

Run-dependent facts that are not a function of config and seed (wall time)
are kept out of the file so that repeated runs are byte-identical.
"""

from __future__ import annotations

import csv
import json
import re
import struct
from pathlib import Path

import numpy as np

from .errors import DataError, StoreError
from .gibbs import BLOCKS, STATE_FIELDS, DrawStore
from .model import Panel

MAGIC = b"FSVDRAWS"
STORE_VERSION = 1
MISSING = {"", "na", "nan", "null", "."}
_DATE = re.compile(r"^(\d{4})-(\d{2})$")
# meta entries excluded from the binary file
VOLATILE_META = ("wall_time",)

FIELD_BLOCK = {"coef": "var", "tau": "tau", "delta": "lambda", "loadings": "loadings",
               "factors": "factors", "factor_logvol": "factor_sv", "factor_sv": "factor_sv",
               "idio_logvol": "idio_sv", "idio_sv": "idio_sv"}
assert set(FIELD_BLOCK.values()) <= set(BLOCKS)


# --------------------------------------------------------------------------- panels

def _parse_date(text, line):
    match = _DATE.match(text.strip())
    if not match or not 1 <= int(match.group(2)) <= 12:
        raise DataError(f"line {line}: date {text!r} is not ISO year-month (YYYY-MM)")
    return int(match.group(1)) * 12 + int(match.group(2)) - 1


def read_csv_table(path):
    """Header, date strings and a float matrix from a panel CSV.

    Raises :class:`DataError` listing every missing ``(line, column)`` cell.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh, strict=True))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc
    except csv.Error as exc:
        raise DataError(f"{path}: malformed CSV ({exc})") from exc
    rows = [r for r in rows if r]
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2 or header[0].lower() != "date":
        raise DataError(f"{path}: header must start with a 'date' column followed by series")
    columns = header[1:]
    dates, values, missing = [], [], []
    previous = None
    for i, row in enumerate(rows[1:]):
        line = i + 2
        if len(row) != len(header):
            raise DataError(f"line {line}: expected {len(header)} cells, found {len(row)}")
        stamp = _parse_date(row[0], line)
        if previous is not None and stamp <= previous:
            raise DataError(f"line {line}: dates must be strictly increasing ({row[0]!r})")
        previous = stamp
        dates.append(row[0].strip())
        parsed = []
        for name, cell in zip(columns, row[1:]):
            if cell.strip().lower() in MISSING:
                missing.append((line, name))
                parsed.append(np.nan)
                continue
            try:
                parsed.append(float(cell))
            except ValueError:
                raise DataError(f"line {line}, column {name!r}: cannot parse {cell!r} as a number") from None
        values.append(parsed)
    if missing:
        listing = ", ".join(f"({line}, {name!r})" for line, name in missing[:20])
        more = f" and {len(missing) - 20} more" if len(missing) > 20 else ""
        raise DataError(f"{len(missing)} missing value(s) at (line, column): {listing}{more}")
    if not values:
        raise DataError(f"{path}: no data rows")
    return columns, dates, np.array(values, dtype=float)


def apply_transform(x, kind, name="", lines=None, log_scale=100.0):
    """Transform one column.  Differenced outputs are one element shorter."""
    base = kind[3:] if kind.startswith("sa_") else kind
    if base not in ("none", "sa", "log", "diff", "logdiff") or kind == "sa_sa":
        raise DataError(f"unknown transform {kind!r} for {name!r}")
    if base in ("log", "logdiff"):
        bad = np.flatnonzero(~(x > 0))
        if bad.size:
            where = lines[bad[0]] if lines is not None else bad[0]
            raise DataError(f"log transform of nonpositive value {x[bad[0]]!r} "
                            f"at line {where}, column {name!r}")
        x = log_scale * np.log(x)
    if base in ("diff", "logdiff"):
        x = np.diff(x)
    return x


def ingest(path, transforms=None, default="none", exogenous=(), countries=None, kinds=None,
           log_scale=100.0, demean=False, standardize=False) -> Panel:
    """Read a panel CSV and apply per-series transforms.

    ``transforms`` maps series names to one of ``none``, ``log``, ``diff``,
    ``logdiff``, optionally prefixed ``sa_`` (a marker that the series is
    already seasonally adjusted; no filtering is done).  Logs are scaled by
    ``log_scale``.  If any series is differenced, the first period is dropped
    for the whole panel.  ``demean``/``standardize`` act on the endogenous
    series after transforming.
    """
    columns, dates, raw = read_csv_table(path)
    transforms = dict(transforms or {})
    unknown = sorted(set(transforms) - set(columns))
    if unknown:
        raise DataError(f"transforms given for unknown series {unknown}")
    exogenous = list(exogenous)
    absent = sorted(set(exogenous) - set(columns))
    if absent:
        raise DataError(f"exogenous series {absent} not in {path}")
    kinds_of = {c: transforms.get(c, default) for c in columns}
    lines = np.arange(2, raw.shape[0] + 2)
    differenced = any(k.removeprefix("sa_") in ("diff", "logdiff") for k in kinds_of.values())
    out = []
    for j, name in enumerate(columns):
        x = apply_transform(raw[:, j], kinds_of[name], name, lines, log_scale)
        if differenced and x.size == raw.shape[0]:
            x = x[1:]
        out.append(x)
    data = np.column_stack(out)
    if differenced:
        dates = dates[1:]
    endo = [c for c in columns if c not in exogenous]
    if not endo:
        raise DataError("no endogenous series left after removing exogenous columns")
    idx = [columns.index(c) for c in endo]
    values = data[:, idx]
    if demean or standardize:
        values = values - values.mean(axis=0)
    if standardize:
        sd = values.std(axis=0, ddof=1)
        if np.any(sd == 0):
            raise DataError(f"cannot standardize constant series {[endo[i] for i in np.flatnonzero(sd == 0)]}")
        values = values / sd
    exo = data[:, [columns.index(c) for c in exogenous]] if exogenous else None
    countries = countries or {}
    kinds = kinds or {}
    return Panel(values, tuple(endo),
                 countries=tuple(countries.get(c, "") for c in endo),
                 kinds=tuple(kinds.get(c, "") for c in endo),
                 exogenous=exo, exog_names=tuple(exogenous),
                 transform_log=tuple(kinds_of[c].removeprefix("sa_") in ("log", "logdiff") for c in endo),
                 dates=tuple(dates))


def panel_from_config(cfg) -> Panel:
    data = cfg.data
    return ingest(cfg.data_path, cfg.raw["transforms"]["series"], cfg.raw["transforms"]["default"],
                  data["exogenous"], cfg.raw["groups"]["countries"], cfg.raw["groups"]["kinds"],
                  data["log_scale"], data["demean"], data["standardize"])


def monthly_dates(T, start="2000-01"):
    year, month = (int(v) for v in start.split("-"))
    base = year * 12 + month - 1
    return tuple(f"{(base + i) // 12:04d}-{(base + i) % 12 + 1:02d}" for i in range(T))


def write_panel_csv(panel: Panel, path):
    """Write ``panel`` (and its exogenous block) as a panel CSV."""
    dates = panel.dates or monthly_dates(panel.T)
    header = ["date", *panel.names, *panel.exog_names]
    block = panel.values if panel.exogenous is None else np.hstack([panel.values, panel.exogenous])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for date, row in zip(dates, block):
            writer.writerow([date, *(repr(float(v)) for v in row)])


# --------------------------------------------------------------------------- stores

def _json_safe(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    return value


def store_bytes(store: DrawStore) -> bytes:
    arrays = [(k, np.ascontiguousarray(store.arrays[k], dtype="<f8")) for k in STATE_FIELDS]
    meta = {}
    for key, value in sorted(store.meta.items()):
        if key in VOLATILE_META:
            continue
        if isinstance(value, np.ndarray):
            arrays.append((f"meta.{key}", np.ascontiguousarray(value, dtype="<f8")))
        else:
            meta[key] = _json_safe(value)
    header = {
        "lags": store.lags, "n_exog": store.n_exog, "intercept": bool(store.intercept),
        "names": list(store.names), "kinds": list(store.kinds), "countries": list(store.countries),
        "meta": meta, "arrays": [[k, list(a.shape)] for k, a in arrays],
    }
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    parts = [MAGIC, struct.pack("<IQ", STORE_VERSION, len(head)), head]
    parts.extend(a.tobytes() for _, a in arrays)
    return b"".join(parts)


def save_store(store: DrawStore, path):
    Path(path).write_bytes(store_bytes(store))


def load_store(path) -> DrawStore:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise StoreError(f"cannot read draw store {path}: {exc.strerror}") from exc
    if blob[:8] != MAGIC:
        raise StoreError(f"{path} is not a draw store (bad magic)")
    if len(blob) < 20:
        raise StoreError(f"{path}: truncated header")
    version, size = struct.unpack("<IQ", blob[8:20])
    if version != STORE_VERSION:
        raise StoreError(f"{path}: unsupported store version {version}")
    try:
        header = json.loads(blob[20:20 + size])
    except ValueError as exc:
        raise StoreError(f"{path}: corrupt header") from exc
    offset = 20 + size
    arrays, meta = {}, dict(header["meta"])
    for key, shape in header["arrays"]:
        count = int(np.prod(shape, dtype=np.int64))
        end = offset + 8 * count
        if end > len(blob):
            raise StoreError(f"{path}: truncated array {key!r}")
        a = np.frombuffer(blob, dtype="<f8", count=count, offset=offset).reshape(shape).copy()
        offset = end
        if key.startswith("meta."):
            meta[key[5:]] = a
        else:
            arrays[key] = a
    if offset != len(blob):
        raise StoreError(f"{path}: {len(blob) - offset} trailing bytes")
    missing = [k for k in STATE_FIELDS if k not in arrays]
    if missing:
        raise StoreError(f"{path}: missing arrays {missing}")
    return DrawStore(arrays, header["lags"], header["n_exog"], header["intercept"],
                     tuple(header["names"]), tuple(header["kinds"]), tuple(header["countries"]), meta)


# --------------------------------------------------------------------------- long CSV

SV_PARAMS = ("mu", "phi", "xi")


def _labels(store: DrawStore):
    """Per field: (element names, has time axis) for the non-draw axes."""
    m, q, P = store.m, store.q, store.lags
    names = list(store.names) or [f"y{j}" for j in range(m)]
    rows = [f"L{p + 1}.{names[i]}" for p in range(P) for i in range(m)]
    rows += [f"x{i}" for i in range(store.n_exog)]
    rows += ["const"] if store.intercept else []
    fac = [f"f{i + 1}" for i in range(q)]
    return {
        "coef": [f"coef[{r},{e}]" for r in rows for e in names],
        "tau": [f"tau[{r},{e}]" for r in rows for e in names],
        "delta": [f"delta[{p + 1}]" for p in range(P)],
        "loadings": [f"loading[{e},{f}]" for e in names for f in fac],
        "factors": [f"factor[{f}]" for f in fac],
        "factor_logvol": [f"logvol[{f}]" for f in fac],
        "idio_logvol": [f"logvol[{e}]" for e in names],
        "factor_sv": [f"{s}[{f}]" for f in fac for s in SV_PARAMS],
        "idio_sv": [f"{s}[{e}]" for e in names for s in SV_PARAMS],
    }


PATH_FIELDS = ("factors", "factor_logvol", "idio_logvol")


def export_long_csv(store: DrawStore, path):
    """Every stored number as one row ``draw_index,block,name,time_index,value``.

    ``time_index`` is the 0-based position on the effective sample for latent
    paths and empty otherwise.  Values are written with ``repr`` (lossless).
    """
    labels = _labels(store)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["draw_index", "block", "name", "time_index", "value"])
        for d in range(len(store)):
            for key in STATE_FIELDS:
                block = FIELD_BLOCK[key]
                a = store.arrays[key][d]
                if key in PATH_FIELDS:
                    for t in range(a.shape[0]):
                        for name, v in zip(labels[key], a[t]):
                            writer.writerow([d, block, name, t, repr(float(v))])
                else:
                    for name, v in zip(labels[key], a.ravel()):
                        writer.writerow([d, block, name, "", repr(float(v))])


def read_long_csv(path, template: DrawStore) -> dict:
    """Rebuild the arrays of a long CSV written from a store shaped like ``template``."""
    labels = _labels(template)
    index = {k: {name: i for i, name in enumerate(v)} for k, v in labels.items()}
    by_block = {}
    for key, block in FIELD_BLOCK.items():
        by_block.setdefault(block, []).append(key)
    arrays = {k: np.full_like(template.arrays[k], np.nan) for k in STATE_FIELDS}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh, strict=True)
        for row in reader:
            d = int(row["draw_index"])
            for key in by_block[row["block"]]:
                pos = index[key].get(row["name"])
                if pos is None:
                    continue
                if key in PATH_FIELDS:
                    if row["time_index"] == "":
                        continue
                    arrays[key][d, int(row["time_index"]), pos] = float(row["value"])
                elif row["time_index"] == "":
                    arrays[key][d].reshape(-1)[pos] = float(row["value"])
                break
    return arrays
