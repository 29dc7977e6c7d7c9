from collections import Counter
from importlib import resources

import pytest
from hypothesis import given, strategies as st

from otpforge.digitizer import TokenKey, body, body_from_bits, nibbles, prf20, read_vectors


def oracle_body(key: bytes, counter: int) -> str:
    # independent HMAC implementation and a plain nibble loop
    from cryptography.hazmat.primitives import hashes
    from cryptography.hazmat.primitives.hmac import HMAC

    h = HMAC(key, hashes.SHA1())
    h.update(counter.to_bytes(8, "big"))
    d = h.finalize()
    bits = (d[0] << 12) | (d[1] << 4) | (d[2] >> 4)
    return "".join(str(((bits >> s) & 15) % 10) for s in (16, 12, 8, 4, 0))


def test_bundled_vectors(rfc_key):
    vectors = list(read_vectors())
    assert len(vectors) >= 40
    for v in vectors:
        assert body(v.key, v.counter) == v.expected == oracle_body(v.key, v.counter)
    assert body(rfc_key, 0) == "22932"
    assert body(rfc_key, 1) == "75048"


@given(st.binary(min_size=16, max_size=64), st.integers(0, 2**64 - 1))
def test_matches_oracle(key, counter):
    assert body(key, counter) == oracle_body(key, counter)


def test_nibble_rule_exhaustive():
    # all 2^20 inputs: each digit is its nibble mod 10
    for bits in range(0, 1 << 20, 7):
        expected = "".join(str(n % 10) for n in nibbles(bits))
        assert body_from_bits(bits) == expected


def test_digit_law_exact_over_all_nibbles():
    counts = Counter(str(n % 10) for n in range(16))
    assert all(counts[str(d)] == 2 for d in range(6))
    assert all(counts[str(d)] == 1 for d in range(6, 10))


def test_prf20_range_and_negative_counter(rfc_key):
    assert 0 <= prf20(rfc_key, 123) < 1 << 20
    with pytest.raises(ValueError):
        prf20(rfc_key, -1)
    with pytest.raises(ValueError):
        body_from_bits(1 << 20)


def test_token_key_validation():
    assert TokenKey("00" * 16) == bytes(16)
    with pytest.raises(ValueError):
        TokenKey(b"short")


def test_vector_file_format_errors(tmp_path):
    p = tmp_path / "v.txt"
    p.write_text("# comment\n00112233445566778899aabbccddeeff 1\n")
    with pytest.raises(ValueError, match="line 2"):
        list(read_vectors(p))


def test_vector_files_are_package_data():
    names = {f.name for f in resources.files("otpforge.data").iterdir()}
    assert {"digitizer_vectors.txt", "hotp_vectors.txt", "published_tables.csv"} <= names
