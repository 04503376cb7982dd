"""Small prime utilities: primality, factorization, reproducible random prime streams."""

from __future__ import annotations

import random
from typing import Dict, Iterator, List

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    # deterministic Miller-Rabin for n < 3.3e24
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def primes_upto(n: int) -> List[int]:
    if n < 2:
        return []
    sieve = bytearray([1]) * (n + 1)
    sieve[0:2] = b"\x00\x00"
    for i in range(2, int(n ** 0.5) + 1):
        if sieve[i]:
            sieve[i * i::i] = bytearray(len(range(i * i, n + 1, i)))
    return [i for i, v in enumerate(sieve) if v]


def factorize(n: int) -> Dict[int, int]:
    if n < 1:
        raise ValueError("factorize expects a positive integer")
    out: Dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def random_prime(bits: int, rng: random.Random) -> int:
    while True:
        c = rng.getrandbits(bits) | (1 << (bits - 1)) | 1
        if is_prime(c):
            return c


def prime_stream(lo: int = 1 << 30, seed: int = 0) -> Iterator[int]:
    """Distinct primes in [lo, 2*lo), drawn reproducibly from `seed`."""
    rng = random.Random(f"primes:{lo}:{seed}")
    seen = set()
    bits = lo.bit_length()
    while True:
        p = random_prime(bits, rng)
        if p not in seen:
            seen.add(p)
            yield p


def legendre(a: int, p: int) -> int:
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def least_nonresidue(p: int) -> int:
    for c in range(2, p):
        if legendre(c, p) == -1:
            return c
    raise ValueError(f"no non-residue mod {p}")
