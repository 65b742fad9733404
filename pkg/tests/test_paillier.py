"""Cryptosystem tests: exhaustive round-trips on tiny moduli, homomorphic
law against a plaintext-sum oracle, and serialization."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedgwas import paillier
from fedgwas.paillier import (
    Ciphertext,
    KeyMismatchError,
    add,
    add_many,
    decrypt,
    encrypt,
    keygen,
    keypair_from_primes,
)


@pytest.fixture(scope="module")
def tiny_keypair():
    # n = 143 = 11 * 13: small enough to sweep every residue
    return keypair_from_primes(11, 13)


@pytest.fixture(scope="module")
def small_keypair():
    return keygen(64, rng=random.Random(7), allow_insecure=True)


def test_keygen_modulus_has_requested_bits():
    pk, sk = keygen(1024)
    assert pk.n.bit_length() == 1024
    assert pk.g == pk.n + 1
    assert decrypt(sk, encrypt(pk, 123456789)) == 123456789


def test_keygen_rejects_odd_bits():
    with pytest.raises(ValueError):
        keygen(15)


def test_keygen_rejects_below_minimum():
    with pytest.raises(ValueError):
        keygen(8)


def test_keygen_seeded_requires_insecure_flag():
    with pytest.raises(ValueError):
        keygen(16, rng=random.Random(1))


def test_keygen_seeded_is_deterministic():
    a = keygen(32, rng=random.Random(99), allow_insecure=True)
    b = keygen(32, rng=random.Random(99), allow_insecure=True)
    assert a == b


def test_exhaustive_roundtrip_16_bit():
    pk, sk = keygen(16, rng=random.Random(3), allow_insecure=True)
    rng = random.Random(4)
    for m in range(pk.n):
        assert decrypt(sk, encrypt(pk, m, rng)) == m


def test_exhaustive_roundtrip_tiny_modulus(tiny_keypair):
    pk, sk = tiny_keypair
    rng = random.Random(5)
    for m in range(143):
        assert decrypt(sk, encrypt(pk, m, rng)) == m


def test_roundtrip_at_maximal_residue(tiny_keypair):
    pk, sk = tiny_keypair
    assert decrypt(sk, encrypt(pk, 142)) == 142


def test_zero_roundtrip(small_keypair):
    pk, sk = small_keypair
    assert decrypt(sk, encrypt(pk, 0)) == 0


def test_plaintext_out_of_range(small_keypair):
    pk, _ = small_keypair
    with pytest.raises(ValueError):
        encrypt(pk, pk.n)
    with pytest.raises(ValueError):
        encrypt(pk, -1)


def test_probabilistic_encryption_distinct_ciphertexts(small_keypair):
    pk, sk = small_keypair
    rng = random.Random(11)
    cs = [encrypt(pk, 1, rng) for _ in range(100)]
    assert len({c.value for c in cs}) == 100
    assert all(decrypt(sk, c) == 1 for c in cs)


def test_decrypt_rejects_foreign_ciphertext(small_keypair):
    pk, _ = small_keypair
    other_pk, other_sk = keygen(64, rng=random.Random(8), allow_insecure=True)
    c = encrypt(pk, 5)
    with pytest.raises(KeyMismatchError):
        decrypt(other_sk, c)
    with pytest.raises(KeyMismatchError):
        add(other_pk, c, encrypt(other_pk, 1))


def test_decrypt_rejects_out_of_range_value(small_keypair):
    pk, sk = small_keypair
    bad = Ciphertext(value=pk.n_squared, key_fingerprint=pk.fingerprint())
    with pytest.raises(ValueError):
        decrypt(sk, bad)


def test_add_matches_plaintext_sum(tiny_keypair):
    pk, sk = tiny_keypair
    assert decrypt(sk, add(pk, encrypt(pk, 2), encrypt(pk, 3))) == 5


def test_add_identity(small_keypair):
    pk, sk = small_keypair
    for m in (0, 1, 17, 2**40):
        assert decrypt(sk, add(pk, encrypt(pk, 0), encrypt(pk, m))) == m


def test_exhaustive_homomorphism_tiny_modulus(tiny_keypair):
    pk, sk = tiny_keypair
    rng = random.Random(6)
    cipher = [encrypt(pk, m, rng) for m in range(143)]
    for a in range(143):
        for b in range(143):
            assert decrypt(sk, add(pk, cipher[a], cipher[b])) == (a + b) % 143


@settings(max_examples=60)
@given(a=st.integers(min_value=0), b=st.integers(min_value=0), c=st.integers(min_value=0))
def test_add_commutative_associative(small_keypair, a, b, c):
    pk, sk = small_keypair
    a, b, c = a % pk.n, b % pk.n, c % pk.n
    ea, eb, ec = encrypt(pk, a), encrypt(pk, b), encrypt(pk, c)
    assert decrypt(sk, add(pk, ea, eb)) == decrypt(sk, add(pk, eb, ea))
    left = add(pk, add(pk, ea, eb), ec)
    right = add(pk, ea, add(pk, eb, ec))
    assert decrypt(sk, left) == decrypt(sk, right) == (a + b + c) % pk.n


@settings(max_examples=30)
@given(values=st.lists(st.integers(min_value=0, max_value=10**9), min_size=1, max_size=8),
       seed=st.integers(min_value=0, max_value=2**16))
def test_add_many_permutation_invariant(small_keypair, values, seed):
    pk, sk = small_keypair
    cs = [encrypt(pk, v) for v in values]
    expected = sum(values) % pk.n
    assert decrypt(sk, add_many(pk, cs)) == expected
    shuffled = list(cs)
    random.Random(seed).shuffle(shuffled)
    assert decrypt(sk, add_many(pk, shuffled)) == expected


def test_add_many_singleton_and_empty(small_keypair):
    pk, sk = small_keypair
    assert decrypt(sk, add_many(pk, [encrypt(pk, 1)])) == 1
    assert decrypt(sk, add_many(pk, [encrypt(pk, 1)] * 5)) == 5
    with pytest.raises(ValueError):
        add_many(pk, [])


def test_owner_count_aggregation(small_keypair):
    # each owner contributes an encrypted local count; the fold decrypts
    # to the pooled total
    pk, sk = small_keypair
    owner_counts = [1, 4, 0, 9, 2]
    cs = [encrypt(pk, v) for v in owner_counts]
    assert decrypt(sk, add_many(pk, cs)) == sum(owner_counts)


def test_public_key_serialization_roundtrip(small_keypair):
    pk, _ = small_keypair
    blob = paillier.public_key_to_bytes(pk)
    assert paillier.public_key_from_bytes(blob) == pk
    with pytest.raises(ValueError):
        paillier.public_key_from_bytes(blob[:-1])
    with pytest.raises(ValueError):
        paillier.public_key_from_bytes(blob + b"\x00")


def test_ciphertext_serialization_roundtrip(small_keypair):
    pk, _ = small_keypair
    c = encrypt(pk, 42)
    blob = paillier.ciphertext_to_bytes(c)
    assert paillier.ciphertext_from_bytes(blob) == c
    with pytest.raises(ValueError):
        paillier.ciphertext_from_bytes(blob[:10])


def test_private_key_serialization_roundtrip(small_keypair):
    _, sk = small_keypair
    blob = paillier.private_key_to_bytes(sk)
    assert paillier.private_key_from_bytes(blob) == sk


def test_fingerprint_is_digest_of_serialized_key(small_keypair):
    import hashlib

    pk, _ = small_keypair
    assert pk.fingerprint() == hashlib.sha256(paillier.public_key_to_bytes(pk)).digest()
    assert len(pk.fingerprint()) == 32
