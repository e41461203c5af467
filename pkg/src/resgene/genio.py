"""Genotype/phenotype file ingestion and nucleotide encoding.

Genotype files are delimiter-separated text with a header row
``variety,<snp_1>,...,<snp_d>`` and one single-character cell per SNP.
Phenotype files share the ``variety`` key column; remaining columns are
numeric traits with ``NA`` marking missing observations.  Both are UTF-8,
line-feed terminated.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ParseError

# Single-character genotype alphabet: the four nucleotides, the six IUPAC
# heterozygous ambiguity codes, and N for a missing call.
ALPHABET = frozenset("ACGTRYSWKMN")

_CODE_BY_BASE = {
    "A": 0, "T": 0,
    "G": 2, "C": 2,
    "N": -1,
    "R": 1, "Y": 1, "S": 1, "W": 1, "K": 1, "M": 1,
}

# 256-entry translation table used to vectorize row encoding; stores code+2
# so the byte table stays unsigned, with 0 flagging illegal characters.
_TRANSLATE = bytearray(256)
for _base, _code in _CODE_BY_BASE.items():
    _TRANSLATE[ord(_base)] = _code + 2
    _TRANSLATE[ord(_base.lower())] = _code + 2
_TRANSLATE = bytes(_TRANSLATE)

MISSING_CODE = -1


def encode_base(c: str) -> int:
    """Encode one nucleotide character to its integer code.

    A and T map to 0, G and C to 2, the missing marker N to -1, and every
    heterozygous ambiguity code (R, Y, S, W, K, M) to 1.  Lowercase input
    is accepted.

    Raises
    ------
    ParseError
        If ``c`` is not a single character from the genotype alphabet.
    """
    if len(c) != 1:
        raise ParseError(f"expected a single genotype character, got {c!r}")
    code = _CODE_BY_BASE.get(c.upper())
    if code is None:
        raise ParseError(f"illegal genotype character {c!r}")
    return code


def encode_row(row: str) -> np.ndarray:
    """Encode a string of genotype characters to an int8 vector."""
    raw = row.upper().encode("ascii", errors="replace").translate(_TRANSLATE)
    out = np.frombuffer(raw, dtype=np.uint8).astype(np.int8) - 2
    if out.min(initial=0) < MISSING_CODE:
        bad = int(np.argmin(out))
        raise ParseError(f"illegal genotype character {row[bad]!r} at column {bad + 1}")
    return out


@dataclass(frozen=True)
class RawGenotypeTable:
    """Parsed genotype grid: one row string of SNP characters per variety."""

    variety_ids: list[str]
    snp_ids: list[str]
    rows: list[str]

    @property
    def n_varieties(self) -> int:
        return len(self.variety_ids)

    @property
    def n_snps(self) -> int:
        return len(self.snp_ids)


@dataclass(frozen=True)
class PhenotypeTable:
    """Trait columns keyed by variety id; None marks a missing (NA) cell."""

    variety_ids: list[str]
    traits: dict[str, list[float | None]]


@dataclass(frozen=True)
class TraitVector:
    """Per-variety values for one trait with an aligned missing mask."""

    values: np.ndarray
    missing: np.ndarray

    def observed(self) -> np.ndarray:
        """Indices of varieties with a recorded phenotype."""
        return np.flatnonzero(~self.missing)


@dataclass(frozen=True)
class GenotypeDataset:
    """Encoded genotype matrix plus aligned per-trait phenotype vectors."""

    variety_ids: list[str]
    snp_ids: list[str]
    encoded: np.ndarray  # (n, d) int8 with values in {-1, 0, 1, 2}
    traits: dict[str, TraitVector] = field(default_factory=dict)

    @property
    def n_varieties(self) -> int:
        return self.encoded.shape[0]

    @property
    def n_snps(self) -> int:
        return self.encoded.shape[1]

    def trait_rows(self, trait: str) -> tuple[np.ndarray, np.ndarray]:
        """Return (encoded rows, phenotype values) for varieties observed on ``trait``."""
        if trait not in self.traits:
            raise DataError(f"unknown trait {trait!r}; have {sorted(self.traits)}")
        tv = self.traits[trait]
        idx = tv.observed()
        return self.encoded[idx], tv.values[idx]


def _read_rows(path, delimiter: str) -> list[list[str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        return [row for row in csv.reader(fh, delimiter=delimiter) if row]


def load_genotypes(path, delimiter: str = ",") -> RawGenotypeTable:
    """Parse a genotype file into a validated table.

    Parameters
    ----------
    path : str or Path
        Delimiter-separated file with header ``variety,<snp ids...>``.
    delimiter : str
        Field separator; comma by default, tab for TSV exports.

    Raises
    ------
    ParseError
        Ragged rows, duplicate variety ids, or characters outside the
        alphabet; the message names the offending row/column.
    """
    records = _read_rows(path, delimiter)
    if len(records) < 2:
        raise ParseError(f"{path}: need a header row and at least one variety row")
    header = records[0]
    if len(header) < 2:
        raise ParseError(f"{path}: header must name at least one SNP column")
    snp_ids = header[1:]
    d = len(snp_ids)

    variety_ids: list[str] = []
    rows: list[str] = []
    seen: set[str] = set()
    for line_no, rec in enumerate(records[1:], start=2):
        vid = rec[0].strip()
        cells = rec[1:]
        if len(cells) != d:
            raise ParseError(
                f"{path}: row {line_no} ({vid!r}) has {len(cells)} cells, expected {d}"
            )
        if vid in seen:
            raise ParseError(f"{path}: duplicate variety id {vid!r} at row {line_no}")
        seen.add(vid)
        for col, cell in enumerate(cells):
            if len(cell) != 1 or cell.upper() not in ALPHABET:
                raise ParseError(
                    f"{path}: illegal cell {cell!r} at row {line_no}, "
                    f"column {snp_ids[col]!r}"
                )
        variety_ids.append(vid)
        rows.append("".join(cells).upper())
    return RawGenotypeTable(variety_ids=variety_ids, snp_ids=snp_ids, rows=rows)


def load_phenotypes(path, delimiter: str = ",") -> PhenotypeTable:
    """Parse a phenotype file: numeric trait columns with NA for missing.

    Raises
    ------
    ParseError
        Non-numeric, non-NA cells or ragged rows, with the location named.
    """
    records = _read_rows(path, delimiter)
    if len(records) < 2:
        raise ParseError(f"{path}: need a header row and at least one variety row")
    header = records[0]
    trait_names = header[1:]
    if not trait_names:
        raise ParseError(f"{path}: header must name at least one trait column")

    variety_ids: list[str] = []
    columns: dict[str, list[float | None]] = {t: [] for t in trait_names}
    for line_no, rec in enumerate(records[1:], start=2):
        vid = rec[0].strip()
        cells = rec[1:]
        if len(cells) != len(trait_names):
            raise ParseError(
                f"{path}: row {line_no} ({vid!r}) has {len(cells)} cells, "
                f"expected {len(trait_names)}"
            )
        variety_ids.append(vid)
        for trait, cell in zip(trait_names, cells):
            cell = cell.strip()
            if cell == "NA":
                columns[trait].append(None)
                continue
            try:
                columns[trait].append(float(cell))
            except ValueError:
                raise ParseError(
                    f"{path}: non-numeric cell {cell!r} at row {line_no}, "
                    f"trait {trait!r}"
                ) from None
    return PhenotypeTable(variety_ids=variety_ids, traits=columns)


def encode_table(raw: RawGenotypeTable) -> np.ndarray:
    """Apply the nucleotide code element-wise; result is (n, d) int8."""
    if raw.n_varieties == 0:
        return np.zeros((0, raw.n_snps), dtype=np.int8)
    return np.stack([encode_row(r) for r in raw.rows])


def build_dataset(raw: RawGenotypeTable, pheno: PhenotypeTable) -> GenotypeDataset:
    """Join genotypes with phenotypes into a trainable dataset.

    Varieties missing a given trait stay in the genotype matrix but are
    masked out of that trait only.  Traits with no observed value are
    dropped.  A phenotype row whose variety id is absent from the genotype
    table is an alignment error, as is an empty join.
    """
    geno_index = {vid: i for i, vid in enumerate(raw.variety_ids)}
    unknown = [vid for vid in pheno.variety_ids if vid not in geno_index]
    if unknown:
        raise DataError(
            f"phenotype varieties absent from genotype table: {unknown[:5]}"
        )

    n = raw.n_varieties
    traits: dict[str, TraitVector] = {}
    for name, column in pheno.traits.items():
        values = np.zeros(n, dtype=np.float64)
        missing = np.ones(n, dtype=bool)
        for vid, cell in zip(pheno.variety_ids, column):
            if cell is None:
                continue
            i = geno_index[vid]
            values[i] = cell
            missing[i] = False
        if missing.all():
            continue  # nothing observed for this trait
        traits[name] = TraitVector(values=values, missing=missing)
    if not traits:
        raise DataError("empty join: no variety has any observed phenotype")

    return GenotypeDataset(
        variety_ids=list(raw.variety_ids),
        snp_ids=list(raw.snp_ids),
        encoded=encode_table(raw),
        traits=traits,
    )


def write_genotypes(path, table: RawGenotypeTable, delimiter: str = ",") -> None:
    """Write a genotype table in the canonical file format."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(delimiter.join(["variety", *table.snp_ids]) + "\n")
        for vid, row in zip(table.variety_ids, table.rows):
            fh.write(delimiter.join([vid, *row]) + "\n")


def write_phenotypes(path, pheno: PhenotypeTable, delimiter: str = ",") -> None:
    """Write a phenotype table; missing cells are emitted as NA."""
    names = sorted(pheno.traits)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(delimiter.join(["variety", *names]) + "\n")
        for i, vid in enumerate(pheno.variety_ids):
            cells = [
                "NA" if pheno.traits[t][i] is None else repr(pheno.traits[t][i])
                for t in names
            ]
            fh.write(delimiter.join([vid, *cells]) + "\n")
