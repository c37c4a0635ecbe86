"""Tabular dataset loading, schema handling, encoding and splitting."""

from __future__ import annotations

import configparser
import csv
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

CATEGORICAL = "categorical"
NUMERIC = "numeric"
MISSING_TOKENS = frozenset({"", "?", "na", "n/a", "nan", "null", "none"})
PRESETS = ("adult", "compas", "german", "bank")


class DataError(ValueError):
    """Raised for unreadable data files or data that violates its schema."""


class SchemaError(DataError):
    """Raised for malformed or inconsistent schema declarations."""


@dataclass(frozen=True)
class Column:
    name: str
    kind: str


@dataclass(frozen=True)
class SensitiveSpec:
    """A sensitive column and the raw value(s) that mark the privileged group.

    ``privileged`` accepts a single raw value (``Male``), an alternation of
    raw values (``A91|A93|A94``) or a numeric threshold (``>=25``; also
    ``>``, ``<=``, ``<``).
    """

    column: str
    privileged: str

    def _threshold(self) -> tuple[str, float] | None:
        for op in (">=", "<=", ">", "<"):
            if self.privileged.startswith(op):
                try:
                    return op, float(self.privileged[len(op):])
                except ValueError:
                    return None
        return None

    @property
    def is_threshold(self) -> bool:
        return self._threshold() is not None

    def is_privileged(self, value: object) -> bool:
        thr = self._threshold()
        if thr is not None:
            op, bound = thr
            x = float(value)  # type: ignore[arg-type]
            return {">=": x >= bound, "<=": x <= bound, ">": x > bound, "<": x < bound}[op]
        return str(value) in self.privileged.split("|")


@dataclass(frozen=True)
class Schema:
    columns: tuple[Column, ...]
    label_column: str
    favorable_value: str
    sensitive_specs: tuple[SensitiveSpec, ...]
    strata_columns: tuple[str, ...] = ()
    name: str = "custom"
    delimiter: str = ","

    def __post_init__(self) -> None:
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate column names in schema")
        for c in self.columns:
            if c.kind not in (CATEGORICAL, NUMERIC):
                raise SchemaError(f"column {c.name!r}: unknown kind {c.kind!r}")
        if self.label_column not in names:
            raise SchemaError(f"label column {self.label_column!r} not among columns")
        if not self.sensitive_specs:
            raise SchemaError("schema declares no sensitive feature")
        sens = [s.column for s in self.sensitive_specs]
        for s in self.sensitive_specs:
            if s.column not in names:
                raise SchemaError(f"sensitive column {s.column!r} not among columns")
            if s.column == self.label_column:
                raise SchemaError("label column cannot be sensitive")
            # numeric sensitive columns are allowed only with a threshold rule
            if self.kind(s.column) != CATEGORICAL and not s.is_threshold:
                raise SchemaError(f"sensitive column {s.column!r} must be categorical")
        for z in self.strata_columns:
            if z not in names:
                raise SchemaError(f"strata column {z!r} not among columns")
            if z == self.label_column or z in sens:
                raise SchemaError(f"strata column {z!r} may not be the label or a sensitive column")

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    @property
    def sensitive_names(self) -> tuple[str, ...]:
        return tuple(s.column for s in self.sensitive_specs)

    def kind(self, name: str) -> str:
        for c in self.columns:
            if c.name == name:
                return c.kind
        raise KeyError(name)

    def sensitive(self, name: str) -> SensitiveSpec:
        for s in self.sensitive_specs:
            if s.column == name:
                return s
        raise SchemaError(f"{name!r} is not a declared sensitive feature")

    def with_strata(self, strata: Sequence[str]) -> Schema:
        return replace(self, strata_columns=tuple(strata))


def parse_schema(text: str) -> Schema:
    """Parse the INI-style schema format (see README, "Schema files")."""
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    cp.optionxform = str  # type: ignore[assignment,method-assign]
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise SchemaError(f"unparseable schema: {exc}") from exc
    if not cp.has_section("schema") or not cp.has_section("columns"):
        raise SchemaError("schema needs [schema] and [columns] sections")
    head = cp["schema"]
    for key in ("label", "favorable", "sensitive"):
        if key not in head:
            raise SchemaError(f"[schema] is missing {key!r}")
    columns = tuple(Column(k.strip(), v.strip().lower()) for k, v in cp["columns"].items())
    specs = []
    for item in head["sensitive"].split(";"):
        if not item.strip():
            continue
        col, sep, priv = item.partition(":")
        if not sep or not priv.strip():
            raise SchemaError(f"sensitive entry {item!r} must look like column:privileged")
        specs.append(SensitiveSpec(col.strip(), priv.strip()))
    strata = tuple(s.strip() for s in head.get("strata", "").split(",") if s.strip())
    delimiter = head.get("delimiter", ",").strip() or ","
    if delimiter == "\\t":
        delimiter = "\t"
    return Schema(
        columns=columns,
        label_column=head["label"].strip(),
        favorable_value=head["favorable"].strip(),
        sensitive_specs=tuple(specs),
        strata_columns=strata,
        name=head.get("name", "custom").strip(),
        delimiter=delimiter,
    )


def load_schema(name_or_path: str | Path) -> Schema:
    """Load a preset by name (adult, compas, german, bank) or a schema file."""
    if str(name_or_path) in PRESETS:
        text = resources.files("fitness.presets").joinpath(f"{name_or_path}.ini").read_text()
        return parse_schema(text)
    path = Path(name_or_path)
    if not path.is_file():
        raise SchemaError(f"no schema preset or file named {str(name_or_path)!r}")
    return parse_schema(path.read_text(encoding="utf-8"))


@dataclass(frozen=True)
class Dataset:
    schema: Schema
    rows: tuple[tuple, ...]
    source_name: str
    dropped: int = 0

    @property
    def n(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> list:
        j = self.schema.column_names.index(name)
        return [r[j] for r in self.rows]


def _parse_cell(raw: str, kind: str) -> object | None:
    cell = raw.strip()
    if cell.lower() in MISSING_TOKENS:
        return None
    if kind == NUMERIC:
        try:
            x = float(cell)
        except ValueError:
            return None
        return x if math.isfinite(x) else None
    return cell


def _check_label(schema: Schema, rows: Sequence[tuple]) -> None:
    j = schema.column_names.index(schema.label_column)
    values = {str(r[j]) for r in rows}
    if len(values) > 2:
        raise DataError(
            f"label column {schema.label_column!r} has {len(values)} distinct values; expected 2"
        )
    if len(values) == 2 and schema.favorable_value not in values:
        raise DataError(f"favorable value {schema.favorable_value!r} absent from label column")


def load_dataset(path: str | Path, schema: Schema, delimiter: str | None = None) -> Dataset:
    """Read a delimited text file with a header row.

    Header order does not matter and extra columns are ignored. Rows with a
    missing or unparseable cell in any schema column are dropped and counted.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"data file not found: {path}")
    delim = delimiter or schema.delimiter
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delim)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path} is empty (no header row)") from None
        missing = [c for c in schema.column_names if c not in header]
        if missing:
            raise DataError(f"{path}: header lacks schema column(s) {missing}")
        idx = [header.index(c) for c in schema.column_names]
        kinds = [c.kind for c in schema.columns]
        rows: list[tuple] = []
        dropped = 0
        for record in reader:
            if not record:
                continue
            if len(record) < len(header):
                dropped += 1
                continue
            cells = tuple(_parse_cell(record[i], k) for i, k in zip(idx, kinds))
            if any(c is None for c in cells):
                dropped += 1
                continue
            rows.append(cells)
    _check_label(schema, rows)
    return Dataset(schema=schema, rows=tuple(rows), source_name=str(path), dropped=dropped)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class EncodedDataset:
    """Numeric view of a dataset.

    ``sensitive`` holds the binary group vector of each protected feature
    (privileged=1). ``sensitive_columns`` maps each protected feature to its
    column in ``features`` when the feature is included, else None.
    """

    features: np.ndarray
    feature_names: tuple[str, ...]
    label: np.ndarray
    sensitive: Mapping[str, np.ndarray]
    sensitive_columns: Mapping[str, int | None]
    strata_key: np.ndarray
    strata_levels: tuple[str, ...] = ("",)
    warnings: tuple[str, ...] = ()
    source_name: str = ""

    def __post_init__(self) -> None:
        n = len(self.label)
        if self.features.shape[0] != n or len(self.strata_key) != n:
            raise DataError("features, label and strata_key lengths disagree")
        if self.features.shape[1] != len(self.feature_names):
            raise DataError("feature_names does not match feature matrix width")
        for name, s in self.sensitive.items():
            if len(s) != n:
                raise DataError(f"sensitive vector {name!r} has wrong length")
        for a in (self.features, self.label, self.strata_key, *self.sensitive.values()):
            _readonly(a)

    @property
    def n(self) -> int:
        return len(self.label)

    @property
    def protected(self) -> tuple[str, ...]:
        return tuple(self.sensitive)

    def subset(self, index: np.ndarray) -> EncodedDataset:
        index = np.asarray(index, dtype=np.intp)
        return replace(
            self,
            features=self.features[index],
            label=self.label[index],
            sensitive={k: v[index] for k, v in self.sensitive.items()},
            strata_key=self.strata_key[index],
        )

    def with_values(
        self,
        label: np.ndarray | None = None,
        sensitive: Mapping[str, np.ndarray] | None = None,
    ) -> EncodedDataset:
        """Copy with new label and/or sensitive vectors, keeping included feature columns in sync."""
        new_sens = dict(self.sensitive)
        features = self.features
        if sensitive:
            features = self.features.copy()
            for name, vec in sensitive.items():
                if name not in new_sens:
                    raise DataError(f"unknown protected feature {name!r}")
                vec = np.asarray(vec, dtype=np.int64)
                new_sens[name] = vec
                col = self.sensitive_columns[name]
                if col is not None:
                    features[:, col] = vec
        return replace(
            self,
            features=features,
            label=self.label if label is None else np.asarray(label, dtype=np.int64),
            sensitive=new_sens,
        )

    def same_as(self, other: EncodedDataset) -> bool:
        return (
            self.feature_names == other.feature_names
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.label, other.label)
            and self.sensitive.keys() == other.sensitive.keys()
            and all(np.array_equal(v, other.sensitive[k]) for k, v in self.sensitive.items())
            and np.array_equal(self.strata_key, other.strata_key)
        )


def _quartile_labels(values: np.ndarray) -> list[str]:
    cuts = np.quantile(values, [0.25, 0.5, 0.75])
    bins = np.searchsorted(cuts, values, side="right")
    return [f"q{b + 1}" for b in bins]


def encode(
    ds: Dataset,
    protected: Sequence[str] | None = None,
    include_sensitive: bool = False,
) -> EncodedDataset:
    """Encode a dataset for learning.

    Categoricals are one-hot encoded over their sorted levels, numerics are
    min-max scaled with the dataset's own range. Protected sensitive columns
    become binary group vectors (privileged=1); with ``include_sensitive``
    each also appears as one binary feature column, otherwise it is left out
    of the feature matrix. Sensitive columns that are not protected are
    encoded as ordinary features.
    """
    schema = ds.schema
    protected = tuple(protected) if protected is not None else schema.sensitive_names
    for p in protected:
        schema.sensitive(p)
    names = schema.column_names
    n = ds.n
    cols = {name: [r[j] for r in ds.rows] for j, name in enumerate(names)}

    blocks: list[np.ndarray] = []
    feature_names: list[str] = []
    notes: list[str] = []
    sensitive: dict[str, np.ndarray] = {}
    sensitive_columns: dict[str, int | None] = {}

    for p in protected:
        spec = schema.sensitive(p)
        vec = np.array([1 if spec.is_privileged(v) else 0 for v in cols[p]], dtype=np.int64)
        if n > 0 and vec.sum() == 0:
            raise DataError(f"sensitive column {p!r} never takes privileged value {spec.privileged!r}")
        sensitive[p] = vec

    width = 0
    for c in schema.columns:
        if c.name == schema.label_column:
            continue
        if c.name in sensitive:
            if include_sensitive:
                blocks.append(sensitive[c.name].astype(float)[:, None])
                feature_names.append(c.name)
                sensitive_columns[c.name] = width
                width += 1
            else:
                sensitive_columns[c.name] = None
            continue
        if c.kind == NUMERIC:
            x = np.asarray(cols[c.name], dtype=float)
            lo, hi = (x.min(), x.max()) if n else (0.0, 0.0)
            if n and hi == lo:
                notes.append(f"numeric column {c.name!r} is constant; encoded as 0")
            scaled = (x - lo) / (hi - lo) if hi > lo else np.zeros(n)
            blocks.append(scaled[:, None])
            feature_names.append(c.name)
            width += 1
        else:
            raw = [str(v) for v in cols[c.name]]
            levels = sorted(set(raw))
            pos = {lv: i for i, lv in enumerate(levels)}
            onehot = np.zeros((n, len(levels)))
            if n:
                onehot[np.arange(n), [pos[v] for v in raw]] = 1.0
            blocks.append(onehot)
            feature_names.extend(f"{c.name}={lv}" for lv in levels)
            width += len(levels)

    features = np.hstack(blocks) if blocks else np.zeros((n, 0))
    label = np.array(
        [1 if str(v) == schema.favorable_value else 0 for v in cols[schema.label_column]],
        dtype=np.int64,
    )

    if schema.strata_columns:
        parts = []
        for z in schema.strata_columns:
            if schema.kind(z) == NUMERIC and n:
                labels = _quartile_labels(np.asarray(cols[z], dtype=float))
            else:
                labels = [str(v) for v in cols[z]]
            parts.append([f"{z}={v}" for v in labels])
        keys = ["|".join(t) for t in zip(*parts)] if n else []
        levels_z = tuple(sorted(set(keys))) or ("",)
        zpos = {k: i for i, k in enumerate(levels_z)}
        strata_key = np.array([zpos[k] for k in keys], dtype=np.int64)
    else:
        levels_z = ("",)
        strata_key = np.zeros(n, dtype=np.int64)

    return EncodedDataset(
        features=features,
        feature_names=tuple(feature_names),
        label=label,
        sensitive=sensitive,
        sensitive_columns=sensitive_columns,
        strata_key=strata_key,
        strata_levels=levels_z,
        warnings=tuple(notes),
        source_name=ds.source_name,
    )


@dataclass(frozen=True, eq=False)
class SplitPair:
    train: EncodedDataset
    test: EncodedDataset
    seed: int
    train_index: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0, dtype=np.intp))
    test_index: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0, dtype=np.intp))


def split(eds: EncodedDataset, test_fraction: float, seed: int) -> SplitPair:
    """Shuffle under ``seed`` and put the first ceil((1 - test_fraction) * n) rows in train.

    Both sides are kept non-empty.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    if eds.n < 2:
        raise DataError("need at least 2 rows to split")
    perm = np.random.default_rng(seed).permutation(eds.n)
    # guard against float noise such as 0.7 * 10 = 7.000000000000001
    n_train = math.ceil((1.0 - test_fraction) * eds.n - 1e-9)
    n_train = min(max(n_train, 1), eds.n - 1)
    tr, te = np.sort(perm[:n_train]), np.sort(perm[n_train:])
    return SplitPair(eds.subset(tr), eds.subset(te), seed, _readonly(tr), _readonly(te))


@dataclass(frozen=True)
class SynthSpec:
    n: int
    p_priv: float
    p_fav_given_priv: float
    p_fav_given_unpriv: float
    n_noise_features: int = 3

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.n_noise_features < 0:
            raise ValueError("n_noise_features must be >= 0")
        for p in (self.p_priv, self.p_fav_given_priv, self.p_fav_given_unpriv):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability {p} outside [0, 1]")


_SYNTH_KEYS = {
    "n": "n",
    "p_priv": "p_priv",
    "pf1": "p_fav_given_priv",
    "p_fav_given_priv": "p_fav_given_priv",
    "pf0": "p_fav_given_unpriv",
    "p_fav_given_unpriv": "p_fav_given_unpriv",
    "noise": "n_noise_features",
    "n_noise_features": "n_noise_features",
}


def parse_synth_spec(text: str) -> SynthSpec:
    """Parse ``"n=2000,p_priv=0.5,pf1=0.8,pf0=0.2[,noise=3]"``."""
    kwargs: dict[str, float | int] = {}
    for part in text.split(","):
        if not part.strip():
            continue
        key, sep, value = part.partition("=")
        key = key.strip()
        if not sep or key not in _SYNTH_KEYS:
            raise ValueError(f"bad synthetic spec entry {part!r}")
        field_name = _SYNTH_KEYS[key]
        try:
            kwargs[field_name] = int(value) if field_name in ("n", "n_noise_features") else float(value)
        except ValueError:
            raise ValueError(f"bad value in synthetic spec entry {part!r}") from None
    missing = {"n", "p_priv", "p_fav_given_priv", "p_fav_given_unpriv"} - kwargs.keys()
    if missing:
        raise ValueError(f"synthetic spec missing {sorted(missing)}")
    return SynthSpec(**kwargs)  # type: ignore[arg-type]


def synth_schema(n_noise_features: int) -> Schema:
    cols = [Column("group", CATEGORICAL)]
    cols += [Column(f"x{i}", NUMERIC) for i in range(n_noise_features)]
    cols.append(Column("label", CATEGORICAL))
    return Schema(
        columns=tuple(cols),
        label_column="label",
        favorable_value="fav",
        sensitive_specs=(SensitiveSpec("group", "priv"),),
        name="synthetic",
    )


def synth_biased(spec: SynthSpec, seed: int) -> Dataset:
    """Draw a biased fixture: group ~ Bernoulli(p_priv), label ~ Bernoulli(p_fav | group),
    plus independent uniform noise columns."""
    rng = np.random.default_rng(seed)
    a = rng.random(spec.n) < spec.p_priv
    p_fav = np.where(a, spec.p_fav_given_priv, spec.p_fav_given_unpriv)
    y = rng.random(spec.n) < p_fav
    noise = rng.random((spec.n, spec.n_noise_features))
    rows = tuple(
        ("priv" if a[i] else "unpriv", *map(float, noise[i]), "fav" if y[i] else "unfav")
        for i in range(spec.n)
    )
    return Dataset(schema=synth_schema(spec.n_noise_features), rows=rows, source_name="synthetic")


def write_csv(ds: Dataset, path: str | Path, delimiter: str = ",") -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(ds.schema.column_names)
        for r in ds.rows:
            w.writerow([repr(c) if isinstance(c, float) else c for c in r])


def format_schema(schema: Schema) -> str:
    """Render a schema in the same INI format ``parse_schema`` reads."""
    sens = "; ".join(f"{s.column}:{s.privileged}" for s in schema.sensitive_specs)
    delim = "\\t" if schema.delimiter == "\t" else schema.delimiter
    lines = [
        "[schema]",
        f"name = {schema.name}",
        f"label = {schema.label_column}",
        f"favorable = {schema.favorable_value}",
        f"sensitive = {sens}",
        f"strata = {', '.join(schema.strata_columns)}",
        f"delimiter = {delim}",
        "",
        "[columns]",
    ]
    lines += [f"{c.name} = {c.kind}" for c in schema.columns]
    return "\n".join(lines) + "\n"
