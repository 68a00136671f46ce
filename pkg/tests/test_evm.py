import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scdetect.evm.disasm import (
    IllegalProgram,
    Instruction,
    Program,
    assemble,
    disassemble,
    format_listing,
    parse_hex,
    program_from_instructions,
    to_hex,
)
from scdetect.evm.interp import Status, execute
from scdetect.evm.opcodes import BY_MNEMONIC, OPCODES, opcode_for, opcode_named


def asm(*names_or_pairs) -> bytes:
    """Build bytecode from (mnemonic) or (mnemonic, immediate_int) entries."""
    out = bytearray()
    for entry in names_or_pairs:
        name, imm = entry if isinstance(entry, tuple) else (entry, 0)
        op = opcode_named(name)
        out.append(op.byte)
        if op.immediate_len:
            out += imm.to_bytes(op.immediate_len, "big")
    return bytes(out)


class TestOpcodeTable:
    def test_total_over_all_bytes(self):
        assert set(OPCODES) == set(range(256))

    def test_push_family(self):
        for k in range(1, 33):
            op = opcode_named(f"PUSH{k}")
            assert op.byte == 0x5F + k
            assert op.immediate_len == k

    def test_known_bytes(self):
        assert opcode_for(0x00).mnemonic == "STOP"
        assert opcode_for(0x52).mnemonic == "MSTORE"
        assert opcode_for(0x5F).mnemonic == "PUSH0"
        assert opcode_for(0xFD).mnemonic == "REVERT"
        assert opcode_for(0xFE).mnemonic == "INVALID"

    def test_unknown_bytes_keep_raw_value(self):
        op = opcode_for(0x0C)  # undefined in the instruction set
        assert op.mnemonic == "INVALID"
        assert op.byte == 0x0C
        assert op.immediate_len == 0

    def test_dup_swap_log_ranges(self):
        assert opcode_for(0x80).mnemonic == "DUP1"
        assert opcode_for(0x8F).mnemonic == "DUP16"
        assert opcode_for(0x90).mnemonic == "SWAP1"
        assert opcode_for(0x9F).mnemonic == "SWAP16"
        assert opcode_for(0xA0).mnemonic == "LOG0"
        assert opcode_for(0xA1).mnemonic == "LOG1"
        assert opcode_for(0xA4).mnemonic == "LOG4"

    def test_opcode_named_unknown(self):
        with pytest.raises(KeyError):
            opcode_named("NOSUCH")

    def test_by_mnemonic_resolves_canonical_invalid(self):
        assert BY_MNEMONIC["INVALID"].byte == 0x0C or BY_MNEMONIC["INVALID"].byte == 0xFE
        # whichever wins, looking an INVALID up must stay stable
        assert BY_MNEMONIC["INVALID"] is BY_MNEMONIC["INVALID"]


class TestDisassembler:
    def test_simple_listing(self):
        program = disassemble(asm(("PUSH1", 0x80), ("PUSH1", 0x40), "MSTORE"))
        assert [str(i) for i in program] == ["PUSH1 0x80", "PUSH1 0x40", "MSTORE"]
        assert [i.offset for i in program] == [0, 2, 4]
        assert program.byte_len == 5

    def test_truncated_push_zero_padded(self):
        program = disassemble(bytes([0x62, 0xAA]))  # PUSH3 with 1 of 3 bytes
        (ins,) = program.instructions
        assert ins.truncated
        assert ins.immediate == b"\xaa\x00\x00"
        assert program.byte_len == 2

    def test_assemble_trims_truncation_padding(self):
        raw = bytes([0x62, 0xAA])
        assert assemble(disassemble(raw)) == raw

    def test_non_final_truncated_rejected(self):
        op = opcode_named("PUSH2")
        bad = [
            Instruction(0, op, b"\x00\x00", truncated=True),
            Instruction(2, opcode_named("STOP")),
        ]
        with pytest.raises(IllegalProgram):
            assemble(Program(tuple(bad), 2))

    def test_program_from_instructions_recomputes_offsets(self):
        base = disassemble(asm(("PUSH1", 1), "POP", "STOP"))
        rebuilt = program_from_instructions([Instruction(99, i.opcode, i.immediate) for i in base])
        assert [i.offset for i in rebuilt] == [0, 2, 3]
        assert assemble(rebuilt) == assemble(base)

    def test_program_from_instructions_rejects_truncated(self):
        trunc = disassemble(bytes([0x62, 0xAA])).instructions[0]
        with pytest.raises(IllegalProgram):
            program_from_instructions([trunc])

    @given(st.binary(max_size=256))
    @settings(max_examples=300)
    def test_round_trip_identity(self, raw):
        assert assemble(disassemble(raw)) == raw

    def test_parse_hex_forms(self):
        assert parse_hex("0x6080") == parse_hex("60 80") == parse_hex("6080") == b"\x60\x80"
        assert to_hex(b"\x60\x80") == "6080"
        with pytest.raises(ValueError):
            parse_hex("60zz")

    def test_format_listing(self):
        text = format_listing(disassemble(asm(("PUSH1", 0x80), "MSTORE")))
        assert text == "0000: PUSH1 0x80\n0002: MSTORE"


class TestInterpreter:
    def run(self, *ops, calldata=b"", step_limit=10_000):
        return execute(disassemble(asm(*ops)), calldata, step_limit)

    def test_stop_and_empty(self):
        assert self.run("STOP").status is Status.Stopped
        assert execute(disassemble(b"")).status is Status.Stopped

    def test_arithmetic_and_return(self):
        # 3 + 4 stored at 0, return the 32-byte word
        r = self.run(
            ("PUSH1", 4), ("PUSH1", 3), "ADD", ("PUSH1", 0), "MSTORE",
            ("PUSH1", 32), ("PUSH1", 0), "RETURN",
        )
        assert r.status is Status.Returned
        assert int.from_bytes(r.return_data, "big") == 7

    def test_div_mod_by_zero_yield_zero(self):
        r = self.run(
            ("PUSH1", 0), ("PUSH1", 9), "DIV",
            ("PUSH1", 0), ("PUSH1", 9), "MOD",
            "ADD", ("PUSH1", 0), "MSTORE",
            ("PUSH1", 32), ("PUSH1", 0), "RETURN",
        )
        assert int.from_bytes(r.return_data, "big") == 0

    def test_overflow_wraps_mod_2_256(self):
        r = self.run(
            ("PUSH1", 1), ("PUSH32", (1 << 256) - 1), "ADD",
            ("PUSH1", 0), "MSTORE", ("PUSH1", 32), ("PUSH1", 0), "RETURN",
        )
        assert int.from_bytes(r.return_data, "big") == 0

    def test_jump_to_jumpdest(self):
        r = self.run(("PUSH1", 4), "JUMP", "INVALID", "JUMPDEST", "STOP")
        assert r.status is Status.Stopped

    def test_jump_to_non_jumpdest_fails(self):
        r = self.run(("PUSH1", 3), "JUMP", "STOP")
        assert r.status is Status.InvalidJump

    def test_jumpi_not_taken_falls_through(self):
        r = self.run(("PUSH1", 0), ("PUSH1", 7), "JUMPI", "STOP", "INVALID", "JUMPDEST", "INVALID")
        assert r.status is Status.Stopped

    def test_stack_underflow(self):
        assert self.run("ADD").status is Status.StackError

    def test_step_limit(self):
        # 0: JUMPDEST; PUSH1 0; JUMP -> tight infinite loop
        r = self.run("JUMPDEST", ("PUSH1", 0), "JUMP", step_limit=50)
        assert r.status is Status.StepLimit
        assert r.steps == 50

    def test_revert_carries_data(self):
        r = self.run(
            ("PUSH1", 0xAB), ("PUSH1", 0), "MSTORE8", ("PUSH1", 1), ("PUSH1", 0), "REVERT"
        )
        assert r.status is Status.Reverted
        assert r.return_data == b"\xab"

    def test_calldata_ops(self):
        r = self.run(
            ("PUSH1", 0), "CALLDATALOAD", ("PUSH1", 0), "MSTORE",
            "CALLDATASIZE", ("PUSH1", 32), "MSTORE",
            ("PUSH1", 64), ("PUSH1", 0), "RETURN",
            calldata=b"\x11\x22",
        )
        word = r.return_data[:32]
        assert word[:2] == b"\x11\x22" and set(word[2:]) == {0}
        assert int.from_bytes(r.return_data[32:], "big") == 2

    def test_env_stubs_are_zero(self):
        for name in ("CALLVALUE", "TIMESTAMP", "NUMBER", "CALLER", "GAS", "CHAINID"):
            r = self.run(
                name, ("PUSH1", 0), "MSTORE", ("PUSH1", 32), ("PUSH1", 0), "RETURN"
            )
            assert int.from_bytes(r.return_data, "big") == 0, name

    def test_call_stub_pops_seven_pushes_one(self):
        r = self.run(
            *[("PUSH1", 0)] * 7, "CALL",
            ("PUSH1", 0), "MSTORE", ("PUSH1", 32), ("PUSH1", 0), "RETURN",
        )
        assert int.from_bytes(r.return_data, "big") == 1

    def test_unsupported_opcode_reverts(self):
        assert self.run(("PUSH1", 0), "SLOAD").status is Status.Reverted
        assert self.run("SELFDESTRUCT").status is Status.Reverted

    def test_sub_pops_top_first(self):
        # stack [1, 2] with 2 on top: SUB computes top - second = 2 - 1
        r = self.run(
            ("PUSH1", 1), ("PUSH1", 2), "SUB",
            ("PUSH1", 0), "MSTORE", ("PUSH1", 32), ("PUSH1", 0), "RETURN",
        )
        assert int.from_bytes(r.return_data, "big") == 1

    def test_swap_dup(self):
        # [1, 2] -> SWAP1 -> [2, 1] -> DUP2 copies the 2 -> ADD -> 3
        r = self.run(
            ("PUSH1", 1), ("PUSH1", 2), "SWAP1", "DUP2", "ADD",
            ("PUSH1", 0), "MSTORE", ("PUSH1", 32), ("PUSH1", 0), "RETURN",
        )
        assert int.from_bytes(r.return_data, "big") == 3

    @given(st.binary(max_size=64), st.binary(max_size=32))
    @settings(max_examples=100, deadline=None)
    def test_never_raises_on_arbitrary_code(self, raw, calldata):
        result = execute(disassemble(raw), calldata, step_limit=2_000)
        assert isinstance(result.status, Status)
