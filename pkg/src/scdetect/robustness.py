"""End-to-end robustness evaluation: obfuscate a test set, re-derive every
modality from the transformed artifacts, and compare detection quality."""

from __future__ import annotations

from dataclasses import dataclass

from .data import ContractSample
from .evm.disasm import assemble, to_hex
from .metrics import hs_degradation
from .obfuscate import (
    BYTECODE_PASSES,
    SOURCE_PASSES,
    Unliftable,
    Unresolvable,
    obf_source,
    obfuscate_bytecode,
)


class NoUsableSamples(Exception):
    pass


@dataclass(frozen=True)
class RobustnessReport:
    hs_base: float
    hs_obf: float
    degradation: float
    bytecode_passes: tuple[str, ...]
    source_passes: tuple[str, ...]
    seed: int
    n_evaluated: int
    n_excluded: int

    def summary(self) -> str:
        return (
            f"n={self.n_evaluated} excluded={self.n_excluded} "
            f"HS_base={self.hs_base:.4f} HS_obf={self.hs_obf:.4f} "
            f"degradation={self.degradation:+.4f}"
        )


def obfuscate_sample(
    sample: ContractSample,
    seed: int,
    bytecode_passes: tuple[str, ...] = BYTECODE_PASSES,
    source_passes: tuple[str, ...] = SOURCE_PASSES,
    trials: int = 10,
) -> ContractSample:
    """Transformed copy of a sample; labels carry over unchanged.  Raises
    Unliftable for computed jumps and ValueError when verification fails."""
    program, report = obfuscate_bytecode(sample.program, bytecode_passes, seed, trials)
    if not report.verified:
        raise ValueError(f"sample {sample.id}: transform failed equivalence check")
    source = None
    if sample.source is not None:
        source = obf_source(sample.source, seed, source_passes)
    return ContractSample(
        id=f"{sample.id}-obf",
        bytecode_hex=to_hex(assemble(program)),
        labels=sample.labels,
        source=source,
    )


def run_robustness(
    detector,
    samples: list[ContractSample],
    seed: int = 0,
    bytecode_passes: tuple[str, ...] = BYTECODE_PASSES,
    source_passes: tuple[str, ...] = SOURCE_PASSES,
    trials: int = 10,
) -> RobustnessReport:
    """Three steps: transform each sample (skipping unliftable ones), score
    the clean set, score the transformed set, and report the HS drop."""
    clean: list[ContractSample] = []
    transformed: list[ContractSample] = []
    excluded = 0
    for i, sample in enumerate(samples):
        try:
            obf = obfuscate_sample(sample, seed + i, bytecode_passes, source_passes, trials)
        except (Unliftable, Unresolvable):
            excluded += 1
            continue
        clean.append(sample)
        transformed.append(obf)
    if not clean:
        raise NoUsableSamples("every sample was excluded as unliftable")

    hs_base = detector.evaluate(clean).hs
    hs_obf = detector.evaluate(transformed).hs
    return RobustnessReport(
        hs_base=hs_base,
        hs_obf=hs_obf,
        degradation=hs_degradation(hs_base, hs_obf),
        bytecode_passes=tuple(bytecode_passes),
        source_passes=tuple(source_passes),
        seed=seed,
        n_evaluated=len(clean),
        n_excluded=excluded,
    )
