"""Seeded Bloom sketches keyed by (term, context).

Each key's k positions are independent 64-bit words read off keyed BLAKE2b
digests (eight per digest, a salted block counter for more), so a sketch is
fully determined by (m, k, seed, keys).
"""

from __future__ import annotations

import base64
import hashlib
import math
from dataclasses import dataclass, field
from typing import Iterable

from podsearch.errors import InvalidParams

SEP = "\x1f"
PUBLIC = None  # scope marker for the shared public-tier sketch


def membership_key(term: str, context: str) -> str:
    return f"{term}{SEP}{context}"


def optimal_params(n: int, target_fpr: float = 0.01) -> tuple[int, int]:
    """(m, k) for ``n`` insertions at ``target_fpr``; never below m=8, k=1."""
    if not 0.0 < target_fpr < 1.0:
        raise InvalidParams(f"target_fpr must be in (0, 1), got {target_fpr}")
    if n <= 0:
        return 8, 1
    m = max(8, math.ceil(-n * math.log(target_fpr) / math.log(2) ** 2))
    k = max(1, math.ceil(m / n * math.log(2)))
    return m, k


def theoretical_fpr(n: int, m: int, k: int) -> float:
    return (1.0 - math.exp(-k * n / m)) ** k


@dataclass
class BloomSketch:
    m: int
    k: int
    seed: int = 0
    scope_webid: str | None = PUBLIC
    tier: str = "system"
    inserted_count: int = 0
    bits: bytearray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.m < 8 or self.k < 1:
            raise InvalidParams(f"need m >= 8 and k >= 1, got m={self.m}, k={self.k}")
        if self.tier not in ("server", "system"):
            raise InvalidParams(f"unknown tier {self.tier!r}")
        if self.bits is None:
            self.bits = bytearray((self.m + 7) // 8)
        self._hkey = self.seed.to_bytes(8, "little", signed=False)

    def _positions(self, key: str) -> list[int]:
        # double hashing (h1 + i*h2 mod m) cycles early when gcd(h2, m) > 1,
        # which inflates the FPR of small sketches noticeably
        data = key.encode("utf-8")
        m, out, block = self.m, [], 0
        while len(out) < self.k:
            d = hashlib.blake2b(data, digest_size=64, key=self._hkey,
                                salt=block.to_bytes(16, "little")).digest()
            out.extend(int.from_bytes(d[i:i + 8], "little") % m for i in range(0, 64, 8))
            block += 1
        return out[:self.k]

    def add(self, key: str) -> None:
        for p in self._positions(key):
            self.bits[p >> 3] |= 1 << (p & 7)
        self.inserted_count += 1

    def __contains__(self, key: str) -> bool:
        bits = self.bits
        return all(bits[p >> 3] & (1 << (p & 7)) for p in self._positions(key))

    def contains(self, term: str, context: str) -> bool:
        return membership_key(term, context) in self

    def fill_ratio(self) -> float:
        return sum(bin(b).count("1") for b in self.bits) / self.m

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "k": self.k,
            "seed": self.seed,
            "bits": base64.b64encode(bytes(self.bits)).decode("ascii"),
            "scope": self.scope_webid,
            "tier": self.tier,
            "inserted_count": self.inserted_count,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BloomSketch":
        return cls(int(doc["m"]), int(doc["k"]), int(doc["seed"]), doc.get("scope"),
                   doc.get("tier", "system"), int(doc.get("inserted_count", 0)),
                   bytearray(base64.b64decode(doc["bits"])))


def bloom_build(keys: Iterable[tuple[str, str]], m: int, k: int, seed: int = 0,
                scope: str | None = PUBLIC, tier: str = "system") -> BloomSketch:
    sketch = BloomSketch(m, k, seed, scope, tier)
    for term, ctx in sorted(set(keys)):
        sketch.add(membership_key(term, ctx))
    return sketch


def bloom_build_sized(keys: Iterable[tuple[str, str]], target_fpr: float = 0.01, seed: int = 0,
                      scope: str | None = PUBLIC, tier: str = "system") -> BloomSketch:
    keys = set(keys)
    m, k = optimal_params(len(keys), target_fpr)
    return bloom_build(keys, m, k, seed, scope, tier)
