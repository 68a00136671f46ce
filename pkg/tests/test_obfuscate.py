import random

import pytest

from scdetect.evm.disasm import assemble, disassemble
from scdetect.evm.interp import Status, execute
from scdetect.evm.opcodes import opcode_named
from scdetect.obfuscate import (
    BYTECODE_PASSES,
    SOURCE_PASSES,
    LabelDef,
    LabelPush,
    LexError,
    Unliftable,
    apply_bytecode_passes,
    check_liftable,
    expand_constant,
    hashed_name,
    lift,
    lower,
    obf_false_branch,
    obf_incomplete,
    obf_junk,
    obf_reorder,
    obf_source,
    obfuscate_bytecode,
    verify_equivalence,
)


def asm(*entries) -> bytes:
    out = bytearray()
    for entry in entries:
        name, imm = entry if isinstance(entry, tuple) else (entry, 0)
        op = opcode_named(name)
        out.append(op.byte)
        if op.immediate_len:
            out += imm.to_bytes(op.immediate_len, "big")
    return bytes(out)


# 0: PUSH1 4; 2: JUMP; 3: INVALID; 4: JUMPDEST; 5: PUSH1 2; 7: PUSH1 3;
# 9: ADD; 10: PUSH1 0; 12: MSTORE; 13: PUSH1 32; 15: PUSH1 0; 17: RETURN
PROGRAM = disassemble(asm(
    ("PUSH1", 4), "JUMP", "INVALID", "JUMPDEST",
    ("PUSH1", 2), ("PUSH1", 3), "ADD",
    ("PUSH1", 0), "MSTORE", ("PUSH1", 32), ("PUSH1", 0), "RETURN",
))


class TestLiftLower:
    def test_round_trip_without_transforms(self):
        assert assemble(lower(lift(PROGRAM))) == assemble(PROGRAM)

    def test_labels_replace_jump_pushes(self):
        lifted = lift(PROGRAM)
        assert any(isinstance(it, LabelPush) for it in lifted.items)
        assert any(isinstance(it, LabelDef) for it in lifted.items)

    def test_min_width_preserved(self):
        lifted = lift(PROGRAM)
        push = next(it for it in lifted.items if isinstance(it, LabelPush))
        assert push.min_width == 1

    def test_check_liftable_accepts(self):
        check_liftable(PROGRAM)

    def test_check_liftable_rejects_computed_jump(self):
        bad = disassemble(asm("CALLDATASIZE", "JUMP", "STOP"))
        with pytest.raises(Unliftable):
            check_liftable(bad)

    def test_check_liftable_rejects_non_jumpdest_target(self):
        bad = disassemble(asm(("PUSH1", 3), "JUMP", "STOP"))
        with pytest.raises(Unliftable):
            check_liftable(bad)

    def test_lower_widens_pushes_when_code_grows(self):
        # a label landing beyond offset 255 forces the 1-byte label push to
        # widen to PUSH2, which itself moves the label one byte further
        from scdetect.obfuscate import LiftedProgram

        filler_bytes = asm(*([("PUSH1", 0), "POP"] * 130))  # 260 bytes
        filler = list(disassemble(filler_bytes))
        jump = disassemble(asm("JUMP")).instructions[0]
        jumpdest = disassemble(asm("JUMPDEST")).instructions[0]
        stop = disassemble(asm("STOP")).instructions[0]
        lifted = LiftedProgram((LabelPush(0, 1), jump, *filler, LabelDef(0), jumpdest, stop))
        lowered = lower(lifted)
        push = lowered.instructions[0]
        assert push.opcode.mnemonic == "PUSH2"
        assert execute(lowered, b"").status is Status.Stopped


class _EquivalenceMixin:
    def assert_equivalent(self, original, transformed, seed=0):
        assert verify_equivalence(original, transformed, seed, trials=10)


class TestBytecodePasses(_EquivalenceMixin):
    def test_junk_grows_and_preserves_io(self):
        lifted = lift(PROGRAM)
        out = lower(obf_junk(lifted, seed=1, density=1.0))
        assert out.byte_len > PROGRAM.byte_len
        self.assert_equivalent(PROGRAM, out)

    def test_junk_density_validation(self):
        with pytest.raises(ValueError):
            obf_junk(lift(PROGRAM), seed=0, density=0.0)

    def test_junk_deterministic_per_seed(self):
        a = assemble(lower(obf_junk(lift(PROGRAM), seed=5)))
        b = assemble(lower(obf_junk(lift(PROGRAM), seed=5)))
        assert a == b

    def test_false_branch_replaces_jump_with_jumpi(self):
        out = lower(obf_false_branch(lift(PROGRAM), seed=0))
        names = [i.opcode.mnemonic for i in out]
        assert "JUMPI" in names
        assert names.count("JUMPDEST") == 2  # original target + decoy
        self.assert_equivalent(PROGRAM, out)

    def test_reorder_swaps_commutative_operands(self):
        out = lower(obf_reorder(lift(PROGRAM), seed=0))
        imms = [i.immediate_value for i in out if i.opcode.mnemonic.startswith("PUSH")]
        base = [i.immediate_value for i in PROGRAM if i.opcode.mnemonic.startswith("PUSH")]
        assert imms != base  # the 2/3 pair feeding ADD flipped
        self.assert_equivalent(PROGRAM, out)

    def test_reorder_skips_non_commutative(self):
        program = disassemble(asm(("PUSH1", 5), ("PUSH1", 3), "SUB", "STOP"))
        out = lower(obf_reorder(lift(program), seed=0))
        assert assemble(out) == assemble(program)

    def test_incomplete_appends_truncated_push(self):
        out = obf_incomplete(PROGRAM, seed=3)
        assert out.instructions[-1].truncated
        assert out.instructions[-1].opcode.mnemonic.startswith("PUSH")
        self.assert_equivalent(PROGRAM, out)

    def test_composition_of_all_passes(self):
        out = apply_bytecode_passes(PROGRAM, BYTECODE_PASSES, seed=7)
        self.assert_equivalent(PROGRAM, out, seed=7)

    def test_apply_rejects_unknown_pass(self):
        with pytest.raises(ValueError):
            apply_bytecode_passes(PROGRAM, ("junk", "nosuch"), seed=0)

    def test_apply_rejects_unliftable(self):
        bad = disassemble(asm("CALLDATASIZE", "JUMP", "STOP"))
        with pytest.raises(Unliftable):
            apply_bytecode_passes(bad, ("junk",), seed=0)

    def test_obfuscate_bytecode_report(self):
        out, report = obfuscate_bytecode(PROGRAM, ("junk", "incomplete"), seed=2)
        assert report.verified
        assert report.trials == 10
        assert report.size_after == out.byte_len
        assert report.size_before == PROGRAM.byte_len
        assert report.transform == "junk+incomplete"

    def test_verify_catches_divergence(self):
        broken = disassemble(asm(("PUSH1", 9), ("PUSH1", 0), "MSTORE",
                                 ("PUSH1", 32), ("PUSH1", 0), "RETURN"))
        assert not verify_equivalence(PROGRAM, broken, seed=0, trials=3)


SRC = """\
pragma solidity ^0.4.26;
contract Token {
    uint supply;
    function mint(uint amount) public {
        supply = supply + amount * 100;  // inflate
        emit Log("fixed text");
    }
}
"""


class TestSourcePasses:
    def test_rename_is_deterministic_and_prefixed(self):
        a = obf_source(SRC, seed=1, passes=("rename",))
        b = obf_source(SRC, seed=1, passes=("rename",))
        assert a == b
        assert "Ox" in a
        assert "Token" not in a and "mint" not in a and "supply" not in a

    def test_rename_seed_changes_names(self):
        a = obf_source(SRC, seed=1, passes=("rename",))
        b = obf_source(SRC, seed=2, passes=("rename",))
        assert a != b

    def test_rename_preserves_keywords_and_strings(self):
        out = obf_source(SRC, seed=1, passes=("rename",))
        assert "function" in out and "uint" in out
        assert '"fixed text"' in out

    def test_hashed_name_shape(self):
        name = hashed_name(0, "x")
        assert name.startswith("Ox")
        assert len(name) == 36
        assert all(c in "0123456789abcdef" for c in name[2:])

    def test_comment_pass(self):
        out = obf_source(SRC, seed=0, passes=("comments",))
        assert "inflate" not in out

    def test_layout_pass_collapses_whitespace(self):
        out = obf_source(SRC, seed=0, passes=("layout",))
        assert "\n" not in out
        assert "  " not in out

    def test_constants_pass_preserves_value(self):
        out = obf_source(SRC, seed=0, passes=("constants",))
        assert "100" not in out.replace(" ", "") or "(" in out
        # every expansion evaluates back to the original value
        rng = random.Random(0)
        for n in (0, 1, 7, 100, 255, 4096):
            for _ in range(20):
                expr = expand_constant(n, rng)
                assert eval(expr) == n, (n, expr)

    def test_unknown_pass_rejected(self):
        with pytest.raises(ValueError):
            obf_source(SRC, seed=0, passes=("nosuch",))

    def test_unterminated_string_rejected(self):
        with pytest.raises(LexError):
            obf_source('contract C { string s = "oops; }', seed=0, passes=SOURCE_PASSES)

    def test_all_passes_compose(self):
        out = obf_source(SRC, seed=3, passes=SOURCE_PASSES)
        assert "\n" not in out
        assert "inflate" not in out
        assert "Token" not in out
