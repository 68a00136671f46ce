from .lift import (
    Item,
    LabelDef,
    LabelPush,
    LiftedProgram,
    Unliftable,
    Unresolvable,
    check_liftable,
    lift,
    lower,
)
from .bytecode import (
    BYTECODE_PASSES,
    ObfuscationReport,
    apply_bytecode_passes,
    obf_false_branch,
    obf_incomplete,
    obf_junk,
    obf_reorder,
    obfuscate_bytecode,
    random_calldata,
    verify_equivalence,
)
from .source import SOURCE_PASSES, LexError, expand_constant, hashed_name, obf_source

__all__ = [
    "Item",
    "LabelDef",
    "LabelPush",
    "LiftedProgram",
    "Unliftable",
    "Unresolvable",
    "check_liftable",
    "lift",
    "lower",
    "BYTECODE_PASSES",
    "ObfuscationReport",
    "apply_bytecode_passes",
    "obf_false_branch",
    "obf_incomplete",
    "obf_junk",
    "obf_reorder",
    "obfuscate_bytecode",
    "random_calldata",
    "verify_equivalence",
    "SOURCE_PASSES",
    "LexError",
    "expand_constant",
    "hashed_name",
    "obf_source",
]
