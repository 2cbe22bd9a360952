#!/usr/bin/env python3
"""Regenerates the large corpus programs (corpus/hash_unrolled.s, corpus/mix_blocks.s).

The output is deterministic; rerunning leaves the committed files unchanged.
Each program is also evaluated here, directly from the generated operation
list, and the final a0 is printed; corpus/manifest.json records those values
so the simulator is checked against an evaluator that shares no code with it.
"""

import pathlib
import random

ALU_R = ["add", "sub", "xor", "or", "and", "slt"]
ALU_I = ["addi", "xori", "ori", "andi", "slti"]
WORK = ["t0", "t1", "t2", "t3", "t4", "t5", "t6", "s1", "s2", "s3", "s4", "s5"]
MASK = 0xFFFFFFFF


def signed(v):
    v &= MASK
    return v - (1 << 32) if v & 0x80000000 else v


def apply(regs, op, rd, a, b):
    x = regs[a]
    y = regs[b] if op in ALU_R else b & MASK
    r = {
        "add": x + y, "addi": x + y, "sub": x - y,
        "xor": x ^ y, "xori": x ^ y, "or": x | y, "ori": x | y,
        "and": x & y, "andi": x & y,
        "slt": int(signed(x) < signed(y)), "slti": int(signed(x) < signed(y)),
    }[op]
    regs[rd] = r & MASK


def alu(rng):
    if rng.random() < 0.5:
        return (rng.choice(ALU_R), rng.choice(WORK), rng.choice(WORK), rng.choice(WORK))
    return (rng.choice(ALU_I), rng.choice(WORK), rng.choice(WORK), rng.randint(-2048, 2047))


def render(ins):
    op, rd, a, b = ins
    return f"    {op:<5}{rd}, {a}, {b}"


def hash_unrolled():
    rng = random.Random(1234)
    seeds = [rng.getrandbits(31) for _ in range(16)]
    out = [
        "# Straight-line register mixing over a data block, fully unrolled.",
        "# Generated by tools/gen_unrolled.py; a0 holds the final hash.",
        ".data 0x10000",
        "seed_words:",
        "    .word " + ", ".join(hex(s) for s in seeds),
        "digest:",
        "    .word 0",
        "",
        ".text",
        "    lui  s0, %hi(seed_words)",
        "    addi s0, s0, %lo(seed_words)",
    ]
    regs = {r: 0 for r in WORK}
    for reg in WORK:
        v = rng.getrandbits(20)
        out.append(f"    lui  {reg}, {hex(v)}")
        regs[reg] = v << 12
    for i in range(300):
        if i % 20 == 0:
            w = (i // 20) % 16
            out.append(f"    lw   t6, {4 * w}(s0)")
            regs["t6"] = seeds[w]
        ins = alu(rng)
        out.append(render(ins))
        apply(regs, *ins)
    out += [
        "    xor  a0, t0, t1",
        "    add  a0, a0, s5",
        "    lui  t6, %hi(digest)",
        "    sw   a0, %lo(digest)(t6)",
        "    ecall",
    ]
    return out, ((regs["t0"] ^ regs["t1"]) + regs["s5"]) & MASK


BRANCH = {
    "beq": lambda x, y: x == y,
    "bne": lambda x, y: x != y,
    "blt": lambda x, y: signed(x) < signed(y),
    "bge": lambda x, y: signed(x) >= signed(y),
}


def mix_blocks():
    rng = random.Random(99)
    out = [
        "# Many short blocks: forward conditional skips inside a counted loop.",
        "# Generated by tools/gen_unrolled.py.",
        ".data 0x10000",
        "acc:",
        "    .word 0",
        "",
        ".text",
        "    addi s6, zero, 3         # outer iterations",
    ]
    regs = {r: 0 for r in WORK}
    for reg in WORK:
        v = rng.randint(-2048, 2047)
        out.append(f"    addi {reg}, zero, {v}")
        regs[reg] = v & MASK
    out.append("outer:")
    segments = []
    for k in range(60):
        cond = rng.choice(list(BRANCH))
        a, b = rng.choice(WORK), rng.choice(WORK)
        out.append(f"    {cond:<5}{a}, {b}, skip{k}")
        body = [alu(rng) for _ in range(rng.randint(1, 4))]
        out += [render(i) for i in body]
        out.append(f"skip{k}:")
        tail = alu(rng)
        out.append(render(tail))
        segments.append((cond, a, b, body, tail))
    out += [
        "    addi s6, s6, -1",
        "    bne  s6, zero, outer",
        "    xor  a0, t0, s1",
        "    lui  t6, %hi(acc)",
        "    sw   a0, %lo(acc)(t6)",
        "    ecall",
    ]
    for _ in range(3):
        for cond, a, b, body, tail in segments:
            if not BRANCH[cond](regs[a], regs[b]):
                for ins in body:
                    apply(regs, *ins)
            apply(regs, *tail)
    return out, regs["t0"] ^ regs["s1"]


def main():
    corpus = pathlib.Path(__file__).resolve().parent.parent / "corpus"
    for name, gen in [("hash_unrolled", hash_unrolled), ("mix_blocks", mix_blocks)]:
        lines, a0 = gen()
        (corpus / f"{name}.s").write_text("\n".join(lines) + "\n")
        print(f"{name}: a0 = {a0} ({signed(a0)})")


if __name__ == "__main__":
    main()
