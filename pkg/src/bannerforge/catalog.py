"""Product catalog ingestion, word statistics, and seeded sampling."""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass
from pathlib import Path


class CatalogError(Exception):
    """Raised when a catalog file cannot be ingested or is internally inconsistent."""


REQUIRED_FIELDS = ("product_id", "name", "product_type", "cohort")


@dataclass(frozen=True)
class Product:
    product_id: str
    name: str
    product_type: str
    cohort: str

    def __post_init__(self):
        if not self.product_id:
            raise CatalogError("product_id must be non-empty")
        if not self.name.strip():
            raise CatalogError(f"product {self.product_id!r}: name must be non-empty")
        if not self.product_type:
            raise CatalogError(f"product {self.product_id!r}: product_type must be non-empty")


@dataclass(frozen=True)
class WordCountStats:
    mean: float
    std_dev: float  # population
    min: int
    max: int
    count: int

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std_dev": self.std_dev,
            "min": self.min,
            "max": self.max,
            "count": self.count,
        }


class Catalog:
    """Immutable ordered collection of products, unique by product_id."""

    def __init__(self, products):
        self._products = tuple(products)
        seen = {}
        for i, p in enumerate(self._products):
            if p.product_id in seen:
                raise CatalogError(f"duplicate product_id {p.product_id!r}")
            seen[p.product_id] = i
        self._by_id = seen

    def __len__(self):
        return len(self._products)

    def __iter__(self):
        return iter(self._products)

    def __getitem__(self, i):
        return self._products[i]

    def __eq__(self, other):
        return isinstance(other, Catalog) and self._products == other._products

    def get(self, product_id: str) -> Product:
        try:
            return self._products[self._by_id[product_id]]
        except KeyError:
            raise CatalogError(f"unknown product_id {product_id!r}") from None

    @property
    def products(self) -> tuple[Product, ...]:
        return self._products


def _product_from_row(row: dict, source: str, line_no: int) -> Product:
    for field in ("product_id", "name", "product_type"):
        value = row.get(field)
        if value is None or not str(value).strip():
            raise CatalogError(f"{source}:{line_no}: missing required field {field!r}")
    cohort = str(row.get("cohort") or "").strip()
    if not cohort:
        # Item-to-cohort mapping defaults to the product type when absent.
        cohort = str(row["product_type"]).strip()
    return Product(
        product_id=str(row["product_id"]).strip(),
        name=str(row["name"]).strip(),
        product_type=str(row["product_type"]).strip(),
        cohort=cohort,
    )


def ingest_catalog(path, format: str = None) -> Catalog:
    """Load a product catalog from CSV (with header) or JSONL.

    The format is inferred from the file suffix when not given. Rows are
    validated as they are read; errors name the offending line.
    """
    path = Path(path)
    if not path.exists():
        raise CatalogError(f"catalog file not found: {path}")
    if format is None:
        format = "jsonl" if path.suffix in (".jsonl", ".ndjson", ".json") else "csv"
    if format not in ("csv", "jsonl"):
        raise CatalogError(f"unsupported catalog format {format!r}")

    products = []
    if format == "csv":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise CatalogError(f"{path}: empty file, expected a header row")
            missing = [f for f in ("product_id", "name", "product_type") if f not in reader.fieldnames]
            if missing:
                raise CatalogError(f"{path}: header missing columns {missing}")
            for row in reader:
                products.append(_product_from_row(row, str(path), reader.line_num))
    else:
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CatalogError(f"{path}:{line_no}: invalid json ({exc.msg})") from exc
                if not isinstance(row, dict):
                    raise CatalogError(f"{path}:{line_no}: expected a json object")
                products.append(_product_from_row(row, str(path), line_no))

    return Catalog(products)


def write_catalog(catalog: Catalog, path, format: str = None) -> None:
    """Serialize a catalog back to CSV or JSONL (round-trips with ingest_catalog)."""
    path = Path(path)
    if format is None:
        format = "jsonl" if path.suffix in (".jsonl", ".ndjson", ".json") else "csv"
    if format == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(REQUIRED_FIELDS))
            writer.writeheader()
            for p in catalog:
                writer.writerow(
                    {"product_id": p.product_id, "name": p.name, "product_type": p.product_type, "cohort": p.cohort}
                )
    elif format == "jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            for p in catalog:
                fh.write(
                    json.dumps(
                        {"product_id": p.product_id, "name": p.name, "product_type": p.product_type, "cohort": p.cohort},
                        ensure_ascii=False,
                    )
                    + "\n"
                )
    else:
        raise CatalogError(f"unsupported catalog format {format!r}")


def word_count(name: str) -> int:
    """Number of maximal non-whitespace runs in a product name."""
    return len(name.split())


def word_count_stats(catalog: Catalog) -> WordCountStats:
    """Mean/std/min/max of per-product name word counts (population std)."""
    if len(catalog) == 0:
        raise CatalogError("cannot compute word statistics of an empty catalog")
    counts = [word_count(p.name) for p in catalog]
    n = len(counts)
    mean = sum(counts) / n
    var = sum((c - mean) ** 2 for c in counts) / n
    return WordCountStats(mean=mean, std_dev=math.sqrt(var), min=min(counts), max=max(counts), count=n)


def sample_items(catalog: Catalog, product_type: str, n: int, seed: int) -> list[Product]:
    """Uniform sample (without replacement) of n products of a type, deterministic per seed."""
    if n < 1:
        raise CatalogError("sample size must be positive")
    pool = [p for p in catalog if p.product_type == product_type]
    if len(pool) < n:
        raise CatalogError(
            f"not enough products of type {product_type!r}: have {len(pool)}, requested {n}"
        )
    return random.Random(seed).sample(pool, n)
