#!/usr/bin/env python3
"""Writes fixtures/prf_vectors.json using the `cryptography` package's AES.

These vectors are an independent check of the C++ key derivation and
keystream; they do not go through any project code.
"""

import json
import pathlib
import struct

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes


def aes(key: bytes, block: bytes) -> bytes:
    enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
    return enc.update(block) + enc.finalize()


def block_key(master: bytes, block_id: int) -> bytes:
    return aes(master, struct.pack("<Q", block_id) + bytes(7) + b"\x01")


def keystream_word(key: bytes, offset: int) -> int:
    out = aes(key, struct.pack("<I", offset) + bytes(11) + b"\x02")
    return struct.unpack("<I", out[:4])[0]


MASTERS = [
    "00000000000000000000000000000000",
    "000102030405060708090a0b0c0d0e0f",
    "2b7e151628aed2a6abf7158809cf4f3c",
]
BLOCK_IDS = [0, 1, 2, 7, 255, 0xFFFFFFFF]
OFFSETS = [0, 1, 2, 3, 255, 1 << 20, (1 << 20) + 7, 0xFFFFFFFF]


def main():
    vectors = {"aes128_fips197": {}, "block_keys": [], "keystream": [], "patches": []}
    # FIPS-197 appendix C.1 sanity vector for the primitive itself.
    k = bytes.fromhex("000102030405060708090a0b0c0d0e0f")
    p = bytes.fromhex("00112233445566778899aabbccddeeff")
    vectors["aes128_fips197"] = {"key": k.hex(), "plaintext": p.hex(), "ciphertext": aes(k, p).hex()}
    for m in MASTERS:
        master = bytes.fromhex(m)
        keys = {}
        for b in BLOCK_IDS:
            keys[b] = block_key(master, b)
            vectors["block_keys"].append({"master": m, "block": b, "key": keys[b].hex()})
        for b in BLOCK_IDS[:3]:
            for off in OFFSETS:
                vectors["keystream"].append(
                    {"master": m, "block": b, "offset": off, "word": keystream_word(keys[b], off)})
        for s, t in [(0, 1), (1, 2), (2, 0), (7, 255)]:
            patch = bytes(x ^ y for x, y in zip(keys[s], keys[t]))
            vectors["patches"].append({"master": m, "source": s, "target": t, "patch": patch.hex()})
    out = pathlib.Path(__file__).resolve().parent.parent / "fixtures" / "prf_vectors.json"
    out.write_text(json.dumps(vectors, indent=1) + "\n")


if __name__ == "__main__":
    main()
