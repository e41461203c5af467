"""Seeded synthetic genotype/phenotype generator with known signal.

Characters are drawn per SNP from a two-allele scheme (one base encoding
to 0, one to 2) with a random allele frequency, plus optional missing
calls.  The genetic value is a sum of additive effects on causal SNPs and
pairwise products over random SNP pairs, both on the encoded values; the
phenotype adds Gaussian noise scaled so the requested heritability holds
in expectation.  Ground truth is returned for oracle checks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SynthError
from .genio import (
    GenotypeDataset,
    PhenotypeTable,
    RawGenotypeTable,
    TraitVector,
    encode_table,
    write_genotypes,
    write_phenotypes,
)

ZERO_BASES = ("A", "T")
TWO_BASES = ("G", "C")


@dataclass(frozen=True)
class SynthSpec:
    """Shape and signal structure of one synthetic dataset."""

    n: int
    d: int
    causal: int = 10
    effect_scale: float = 1.0
    epistatic_pairs: int = 0
    heritability: float = 0.5
    missing_rate: float = 0.0
    seed: int = 0
    trait_name: str = "PH"

    def __post_init__(self):
        if self.n < 2:
            raise SynthError(f"need at least 2 varieties, got {self.n}")
        if self.d < 1:
            raise SynthError(f"need at least 1 SNP, got {self.d}")
        if not 0 <= self.causal <= self.d:
            raise SynthError(f"causal count {self.causal} outside [0, {self.d}]")
        if self.epistatic_pairs < 0:
            raise SynthError("epistatic pair count must be >= 0")
        if not 0.0 <= self.heritability <= 1.0:
            raise SynthError(f"heritability must be in [0, 1], got {self.heritability}")
        if not 0.0 <= self.missing_rate < 1.0:
            raise SynthError(f"missing rate must be in [0, 1), got {self.missing_rate}")
        if self.epistatic_pairs > 0 and self.d < 2:
            raise SynthError("epistatic pairs need at least 2 SNPs")

    def to_dict(self) -> dict:
        return {
            "n": self.n, "d": self.d, "causal": self.causal,
            "effect_scale": self.effect_scale,
            "epistatic_pairs": self.epistatic_pairs,
            "heritability": self.heritability,
            "missing_rate": self.missing_rate, "seed": self.seed,
            "trait_name": self.trait_name,
        }


@dataclass
class GroundTruth:
    """Generator internals exposed for oracle tests."""

    causal_idx: np.ndarray
    additive_effects: np.ndarray
    pair_idx: np.ndarray
    pair_effects: np.ndarray
    genetic_values: np.ndarray
    noise_sd: float
    realized_h2: float

    def to_dict(self) -> dict:
        return {
            "causal_idx": self.causal_idx.tolist(),
            "additive_effects": self.additive_effects.tolist(),
            "pair_idx": self.pair_idx.tolist(),
            "pair_effects": self.pair_effects.tolist(),
            "genetic_values": self.genetic_values.tolist(),
            "noise_sd": self.noise_sd,
            "realized_h2": self.realized_h2,
        }


def generate_with_chars(
        spec: SynthSpec) -> tuple[RawGenotypeTable, GenotypeDataset, GroundTruth]:
    """Full generator output including the character-level genotype table."""
    rng = np.random.default_rng(spec.seed)
    n, d = spec.n, spec.d

    base0 = rng.choice(ZERO_BASES, size=d)
    base2 = rng.choice(TWO_BASES, size=d)
    freq = rng.uniform(0.15, 0.85, size=d)
    is_two = rng.random((n, d)) < freq
    chars = np.where(is_two, base2, base0)
    if spec.missing_rate > 0:
        chars[rng.random((n, d)) < spec.missing_rate] = "N"

    raw = RawGenotypeTable(
        variety_ids=[f"V{i + 1:04d}" for i in range(n)],
        snp_ids=[f"S{j + 1:05d}" for j in range(d)],
        rows=["".join(row) for row in chars],
    )
    encoded = encode_table(raw)
    xf = encoded.astype(np.float64)

    causal_idx = np.sort(rng.choice(d, size=spec.causal, replace=False))
    beta = rng.normal(0.0, 1.0, size=spec.causal) * spec.effect_scale
    g = xf[:, causal_idx] @ beta if spec.causal else np.zeros(n)

    pairs = np.zeros((spec.epistatic_pairs, 2), dtype=np.int64)
    gamma = np.zeros(spec.epistatic_pairs)
    for ell in range(spec.epistatic_pairs):
        pairs[ell] = rng.choice(d, size=2, replace=False)
        gamma[ell] = rng.normal(0.0, 1.0) * spec.effect_scale
        g = g + gamma[ell] * xf[:, pairs[ell, 0]] * xf[:, pairs[ell, 1]]

    var_g = float(g.var())
    h2 = spec.heritability
    if h2 > 0.0 and var_g == 0.0:
        raise SynthError(
            "degenerate spec: positive heritability with zero genetic variance"
        )
    if h2 == 1.0:
        noise_sd = 0.0
        y = g.copy()
    elif h2 == 0.0:
        noise_sd = float(np.sqrt(var_g)) if var_g > 0 else 1.0
        y = g.mean() + rng.normal(0.0, noise_sd, size=n)
    else:
        noise_sd = float(np.sqrt(var_g * (1.0 - h2) / h2))
        y = g + rng.normal(0.0, noise_sd, size=n)

    var_y = float(y.var())
    realized = var_g / var_y if var_y > 0 else float("nan")

    dataset = GenotypeDataset(
        variety_ids=raw.variety_ids,
        snp_ids=raw.snp_ids,
        encoded=encoded,
        traits={spec.trait_name: TraitVector(
            values=y, missing=np.zeros(n, dtype=bool))},
    )
    truth = GroundTruth(
        causal_idx=causal_idx, additive_effects=beta,
        pair_idx=pairs, pair_effects=gamma,
        genetic_values=g, noise_sd=noise_sd, realized_h2=realized,
    )
    return raw, dataset, truth


def generate(spec: SynthSpec) -> tuple[GenotypeDataset, GroundTruth]:
    """Draw one dataset with a single trait; same seed, same bytes."""
    _, dataset, truth = generate_with_chars(spec)
    return dataset, truth


def write_synth_files(out_dir, spec: SynthSpec) -> dict[str, Path]:
    """Generate and write genotype.csv, phenotype.csv, and truth.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    raw, dataset, truth = generate_with_chars(spec)

    paths = {
        "genotype": out / "genotype.csv",
        "phenotype": out / "phenotype.csv",
        "truth": out / "truth.json",
    }
    write_genotypes(paths["genotype"], raw)
    tv = dataset.traits[spec.trait_name]
    pheno = PhenotypeTable(
        variety_ids=dataset.variety_ids,
        traits={spec.trait_name: [
            None if m else float(v) for v, m in zip(tv.values, tv.missing)
        ]},
    )
    write_phenotypes(paths["phenotype"], pheno)
    sidecar = {"spec": spec.to_dict(), **truth.to_dict()}
    paths["truth"].write_text(
        json.dumps(sidecar, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return paths
