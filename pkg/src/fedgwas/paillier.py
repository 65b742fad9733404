"""Paillier public-key cryptosystem with additive homomorphism.

Probabilistic encryption of non-negative integer counts, decryption, and
ciphertext addition (multiplication mod n^2 of ciphertexts adds their
plaintexts mod n).  The generator is fixed at g = n + 1, which reduces
encryption to (1 + m*n) * r^n mod n^2 and makes decryption parameters
derivable from the factorization alone.

Only addition is provided: the aggregation protocol never subtracts, so
no negative-number encoding exists here.
"""

from __future__ import annotations

import hashlib
import math
import random
import secrets
import struct
from dataclasses import dataclass

MIN_KEY_BITS = 16
DEFAULT_KEY_BITS = 1024
FINGERPRINT_LEN = 32

_PRIME_RETRY_BUDGET = 100_000
_COPRIME_RETRY_BUDGET = 1_000

_SMALL_PRIMES = (3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47)


class KeyMismatchError(ValueError):
    """Ciphertext does not carry the fingerprint of the supplied key."""


class RandomnessError(RuntimeError):
    """Randomness retry budget exhausted (prime search or unit draw)."""


@dataclass(frozen=True)
class PublicKey:
    """Paillier public key: modulus n and the fixed generator g = n + 1."""

    n: int
    g: int
    bits: int

    def __post_init__(self):
        if self.n < 15:
            raise ValueError("modulus too small: need product of two distinct primes >= 3")
        if self.g != self.n + 1:
            raise ValueError("generator must be n + 1")
        if self.bits != self.n.bit_length():
            raise ValueError("bits field must equal the bit length of n")

    @property
    def n_squared(self) -> int:
        return self.n * self.n

    def fingerprint(self) -> bytes:
        return hashlib.sha256(public_key_to_bytes(self)).digest()


@dataclass(frozen=True)
class PrivateKey:
    """Decryption material: lam = lcm(p-1, q-1), mu = L(g^lam mod n^2)^-1 mod n."""

    lam: int
    mu: int
    n: int

    def public_key(self) -> PublicKey:
        return PublicKey(n=self.n, g=self.n + 1, bits=self.n.bit_length())


@dataclass(frozen=True)
class Ciphertext:
    """Encrypted value in [1, n^2 - 1] tagged with its public key digest."""

    value: int
    key_fingerprint: bytes

    def __post_init__(self):
        if len(self.key_fingerprint) != FINGERPRINT_LEN:
            raise ValueError("key fingerprint must be %d bytes" % FINGERPRINT_LEN)
        if self.value < 1:
            raise ValueError("ciphertext value must be positive")


KeyPair = tuple[PublicKey, PrivateKey]


def _is_probable_prime(n: int, rng, rounds: int = 40) -> bool:
    if n < 2:
        return False
    for p in (2,) + _SMALL_PRIMES:
        if n == p:
            return True
        if n % p == 0:
            return False
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for _ in range(rounds):
        a = rng.randrange(2, n - 1)
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = (x * x) % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _random_prime(bits: int, rng) -> int:
    # Top two bits set so that the product of two such primes has exactly
    # 2*bits bits; low bit set for oddness.
    for _ in range(_PRIME_RETRY_BUDGET):
        candidate = rng.getrandbits(bits) | (1 << (bits - 1)) | (1 << (bits - 2)) | 1
        if _is_probable_prime(candidate, rng):
            return candidate
    raise RandomnessError("prime search exceeded retry budget at %d bits" % bits)


def keygen(bits: int = DEFAULT_KEY_BITS, *, rng: random.Random | None = None,
           allow_insecure: bool = False) -> KeyPair:
    """Generate a keypair with a modulus of exactly `bits` bits.

    `bits` must be even and >= 16.  Passing a seeded `rng` makes generation
    deterministic, which is useful only for tests; that mode must be
    acknowledged with allow_insecure=True.
    """
    if bits < MIN_KEY_BITS:
        raise ValueError("key size below minimum of %d bits" % MIN_KEY_BITS)
    if bits % 2 != 0:
        raise ValueError("key size must be even, got %d" % bits)
    if rng is not None and not allow_insecure:
        raise ValueError("deterministic keygen is insecure; pass allow_insecure=True")
    source = rng if rng is not None else secrets.SystemRandom()
    half = bits // 2
    for _ in range(_PRIME_RETRY_BUDGET):
        p = _random_prime(half, source)
        q = _random_prime(half, source)
        if p == q:
            continue
        n = p * q
        if n.bit_length() != bits:
            continue
        if math.gcd(n, (p - 1) * (q - 1)) != 1:
            continue
        return keypair_from_primes(p, q)
    raise RandomnessError("keypair search exceeded retry budget")


def keypair_from_primes(p: int, q: int) -> KeyPair:
    """Build a keypair from two known primes. Test support; no size floor."""
    if p == q:
        raise ValueError("primes must be distinct")
    n = p * q
    if math.gcd(n, (p - 1) * (q - 1)) != 1:
        raise ValueError("n shares a factor with (p-1)(q-1)")
    g = n + 1
    lam = math.lcm(p - 1, q - 1)
    n_sq = n * n
    # L(x) = (x - 1) // n on the subgroup where x = 1 mod n
    l_of_g = (pow(g, lam, n_sq) - 1) // n
    mu = pow(l_of_g, -1, n)
    pk = PublicKey(n=n, g=g, bits=n.bit_length())
    sk = PrivateKey(lam=lam, mu=mu, n=n)
    return pk, sk


def _random_unit(n: int, rng) -> int:
    for _ in range(_COPRIME_RETRY_BUDGET):
        r = rng.randrange(1, n)
        if math.gcd(r, n) == 1:
            return r
    raise RandomnessError("failed to draw r coprime to n")


def encrypt(pk: PublicKey, m: int, rng: random.Random | None = None) -> Ciphertext:
    """Encrypt m in [0, n) under a fresh random blinding factor."""
    if not 0 <= m < pk.n:
        raise ValueError("plaintext out of range [0, n)")
    source = rng if rng is not None else secrets.SystemRandom()
    n_sq = pk.n_squared
    r = _random_unit(pk.n, source)
    value = ((1 + m * pk.n) * pow(r, pk.n, n_sq)) % n_sq
    return Ciphertext(value=value, key_fingerprint=pk.fingerprint())


def decrypt(sk: PrivateKey, c: Ciphertext) -> int:
    """Recover the plaintext; the ciphertext must match this key."""
    expected = sk.public_key().fingerprint()
    if c.key_fingerprint != expected:
        raise KeyMismatchError("ciphertext was not produced under this key")
    n_sq = sk.n * sk.n
    if not 1 <= c.value < n_sq:
        raise ValueError("ciphertext value outside [1, n^2 - 1]")
    l_of_c = (pow(c.value, sk.lam, n_sq) - 1) // sk.n
    return (l_of_c * sk.mu) % sk.n


def add(pk: PublicKey, c1: Ciphertext, c2: Ciphertext) -> Ciphertext:
    """Homomorphic addition: product of ciphertexts mod n^2."""
    fp = pk.fingerprint()
    if c1.key_fingerprint != fp or c2.key_fingerprint != fp:
        raise KeyMismatchError("ciphertexts carry different key fingerprints")
    return Ciphertext(value=(c1.value * c2.value) % pk.n_squared, key_fingerprint=fp)


def add_many(pk: PublicKey, cs) -> Ciphertext:
    """Left fold of `add` over a non-empty ciphertext sequence."""
    cs = list(cs)
    if not cs:
        raise ValueError("add_many needs at least one ciphertext")
    total = cs[0]
    for c in cs[1:]:
        total = add(pk, total, c)
    return total


def _pack_bigint(x: int) -> bytes:
    raw = x.to_bytes((x.bit_length() + 7) // 8 or 1, "big")
    return struct.pack(">I", len(raw)) + raw


def _unpack_bigint(buf: bytes, offset: int) -> tuple[int, int]:
    if len(buf) < offset + 4:
        raise ValueError("truncated length prefix")
    (length,) = struct.unpack_from(">I", buf, offset)
    offset += 4
    if len(buf) < offset + length:
        raise ValueError("truncated big integer body")
    return int.from_bytes(buf[offset:offset + length], "big"), offset + length


def public_key_to_bytes(pk: PublicKey) -> bytes:
    return struct.pack(">I", pk.bits) + _pack_bigint(pk.n)


def public_key_from_bytes(buf: bytes) -> PublicKey:
    if len(buf) < 4:
        raise ValueError("truncated public key")
    (bits,) = struct.unpack_from(">I", buf, 0)
    n, end = _unpack_bigint(buf, 4)
    if end != len(buf):
        raise ValueError("trailing bytes after public key")
    return PublicKey(n=n, g=n + 1, bits=bits)


def ciphertext_to_bytes(c: Ciphertext) -> bytes:
    return c.key_fingerprint + _pack_bigint(c.value)


def ciphertext_from_bytes(buf: bytes) -> Ciphertext:
    if len(buf) < FINGERPRINT_LEN:
        raise ValueError("truncated ciphertext")
    fp = buf[:FINGERPRINT_LEN]
    value, end = _unpack_bigint(buf, FINGERPRINT_LEN)
    if end != len(buf):
        raise ValueError("trailing bytes after ciphertext")
    return Ciphertext(value=value, key_fingerprint=fp)


def private_key_to_bytes(sk: PrivateKey) -> bytes:
    return _pack_bigint(sk.lam) + _pack_bigint(sk.mu) + _pack_bigint(sk.n)


def private_key_from_bytes(buf: bytes) -> PrivateKey:
    lam, off = _unpack_bigint(buf, 0)
    mu, off = _unpack_bigint(buf, off)
    n, off = _unpack_bigint(buf, off)
    if off != len(buf):
        raise ValueError("trailing bytes after private key")
    return PrivateKey(lam=lam, mu=mu, n=n)
