"""Python front end to the isrlab encrypted-fetch ISA lab.

Images move around as container bytes (the same format the CLI writes);
reports come back as plain dicts.
"""

import json

from . import _isrlab
from ._isrlab import (
    IsrError,
    assemble,
    decode,
    encrypt,
    exact_valid_decode_fraction,
    is_legal,
    legal_word_count,
    survival,
    valid_decode_fraction,
)

__all__ = [
    "IsrError",
    "analyze",
    "assemble",
    "attack",
    "decode",
    "encrypt",
    "exact_valid_decode_fraction",
    "fit",
    "is_legal",
    "legal_word_count",
    "run",
    "survival",
    "valid_decode_fraction",
]


def run(container, step_limit=1_000_000, decrypt_cost=0, switch_cost=0):
    return json.loads(_isrlab.run(container, step_limit, decrypt_cost, switch_cost))


def attack(eimage, scenario, seed=0, step_limit=1_000_000):
    if not isinstance(scenario, str):
        scenario = json.dumps(scenario)
    return json.loads(_isrlab.attack(eimage, scenario, seed, step_limit))


def analyze(image, eimage):
    return json.loads(_isrlab.analyze(image, eimage))


def fit(latencies, p=None):
    return json.loads(_isrlab.fit(list(latencies), exact_valid_decode_fraction() if p is None else p))
