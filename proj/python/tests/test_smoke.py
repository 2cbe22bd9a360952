import os
import pathlib

import pytest

import isrlab as sl

ROOT = pathlib.Path(os.environ.get("ISRLAB_SOURCE_DIR", pathlib.Path(__file__).resolve().parents[2]))
FIB = (ROOT / "corpus" / "fib.s").read_text()


@pytest.fixture(scope="module")
def fib():
    img = sl.assemble(FIB)
    return img, sl.encrypt(img)


def test_encrypted_run_matches_plaintext(fib):
    img, eimg = fib
    plain, enc = sl.run(img), sl.run(eimg)
    assert enc["outcome"] == "halt"
    assert enc["regs"][10] == 55
    assert enc["digest"] == plain["digest"]
    assert enc["counters"]["key_switches"] == 13


def test_seed_changes_ciphertext(fib):
    img, eimg = fib
    seed = "00112233445566778899aabbccddeeff"
    assert sl.encrypt(img, seed) == sl.encrypt(img, seed)
    assert sl.encrypt(img, seed) != eimg
    with pytest.raises(sl.IsrError):
        sl.encrypt(img, "1234")


def test_overhead_costs(fib):
    _, eimg = fib
    assert sl.run(eimg, decrypt_cost=1, switch_cost=4)["counters"]["cycles"] == 62 + 62 + 4 * 13


def test_attacks_are_detected(fib):
    _, eimg = fib
    r = sl.attack(eimg, {"kind": "mid-block-entry", "trigger": 5, "target": "0x10"})
    assert r["detected"]
    r = sl.attack(eimg, {"kind": "rogue-edge", "trigger": 5, "target": 60})
    assert not r["detected"]


def test_survival_and_fit():
    big = sl.assemble((ROOT / "corpus" / "mix_blocks.s").read_text())
    lat = sl.survival(sl.encrypt(big), "rogue-edge", 500, seed=3)
    assert len(lat) == 500 and min(lat) >= 1
    f = sl.fit(lat)
    assert [pt["k"] for pt in f["points"]] == [1, 2, 4, 8]
    with pytest.raises(ValueError):
        sl.survival(sl.encrypt(big), "rop", 10)


def test_isa_helpers():
    assert sl.legal_word_count() == 92471297
    assert sl.exact_valid_decode_fraction() == pytest.approx(92471297 / 2**32)
    assert sl.decode(0x73) == "ecall"
    assert sl.decode(0) is None and not sl.is_legal(0xFFFFFFFF)
    assert abs(sl.valid_decode_fraction(100000, 42) - sl.exact_valid_decode_fraction()) < 0.003


def test_analyze(fib):
    img, eimg = fib
    d = sl.analyze(img, eimg)
    assert d["ciphertext_entropy"] > d["plaintext_entropy"]


def test_bad_source_raises():
    with pytest.raises(sl.IsrError):
        sl.assemble("addi a0, zero\n")
