"""Deterministic keyed random streams.

Every random draw in the engine is a pure function of
(master_seed, person id, simulation year, module tag), so results do not
depend on iteration order, worker count or scheduling. Two constructions are
provided:

* ``rng_stream`` - a full counter-based generator (Philox keyed through a
  SeedSequence) for call sites that need many draws for one person.
* ``person_uniforms`` - a vectorised one-uniform-per-person hash (SplitMix64
  finaliser) for the hot per-individual Bernoulli/categorical paths.

Collective operations (sampling sets of people, matching) draw from a
per-(year, module) stream via ``module_stream``.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
# Domain separation so person streams, module streams and the hashed
# uniforms can never collide even with equal numeric keys.
_PERSON_DOMAIN = 0x5EED_0001
_MODULE_DOMAIN = 0x5EED_0002
_HASH_DOMAIN = 0x5EED_0003


def _tag64(tag: str) -> int:
    """Stable 64-bit digest of a module tag (hash() is salted per process)."""
    return int.from_bytes(hashlib.blake2s(tag.encode(), digest_size=8).digest(), "little")


def rng_stream(master_seed: int, person_id: int, year: int, module_tag: str) -> np.random.Generator:
    """Independent stream keyed by (seed, person, year, module)."""
    ss = np.random.SeedSequence(
        entropy=(_PERSON_DOMAIN, int(master_seed) & _MASK64, int(person_id), int(year), _tag64(module_tag))
    )
    return np.random.Generator(np.random.Philox(ss))


def module_stream(master_seed: int, year: int, module_tag: str) -> np.random.Generator:
    """Stream for collective draws within one (year, module)."""
    ss = np.random.SeedSequence(
        entropy=(_MODULE_DOMAIN, int(master_seed) & _MASK64, int(year), _tag64(module_tag))
    )
    return np.random.Generator(np.random.Philox(ss))


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _hash_key(master_seed: int, year: int, module_tag: str) -> np.uint64:
    with np.errstate(over="ignore"):
        h = _mix64(np.uint64((_HASH_DOMAIN ^ int(master_seed)) & _MASK64))
        h = _mix64(h ^ np.uint64(int(year) & _MASK64))
        h = _mix64(h ^ np.uint64(_tag64(module_tag)))
    return h


def _uniform_block(ids: np.ndarray, key: np.uint64) -> np.ndarray:
    golden = np.uint64(0x9E3779B97F4A7C15)
    with np.errstate(over="ignore"):
        v = _mix64((ids * golden) ^ key)
    return (v >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


def person_uniforms(
    master_seed: int,
    year: int,
    module_tag: str,
    ids: np.ndarray,
    workers: int = 1,
) -> np.ndarray:
    """One uniform in [0, 1) per person id, independent of array order.

    ``workers`` > 1 splits the array across threads; the result is identical
    by construction because each element is a pure function of its key.
    """
    ids = np.ascontiguousarray(ids, dtype=np.uint64)
    key = _hash_key(master_seed, year, module_tag)
    if workers <= 1 or len(ids) < 4096:
        return _uniform_block(ids, key)
    chunks = np.array_split(ids, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda c: _uniform_block(c, key), chunks))
    return np.concatenate(parts)


@dataclass(frozen=True)
class YearStreams:
    """Stream factory handed to the event modules for one simulated year."""

    master_seed: int
    year: int
    workers: int = 1

    def module(self, tag: str) -> np.random.Generator:
        return module_stream(self.master_seed, self.year, tag)

    def person(self, person_id: int, tag: str) -> np.random.Generator:
        return rng_stream(self.master_seed, person_id, self.year, tag)

    def uniforms(self, tag: str, ids: np.ndarray) -> np.ndarray:
        return person_uniforms(self.master_seed, self.year, tag, ids, self.workers)
