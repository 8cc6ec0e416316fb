#!/usr/bin/env python3
"""Independent Edon80 reference used to freeze the C++ test fixtures.

Written from the cipher definition (quasigroup tables in 1-based display
form, explicit initialization table, explicit keystream table) without
sharing any code with the C++ implementation.

Usage:
    edon80_ref.py vectors            # prints fixture lines
    edon80_ref.py keystream KEY IV N # prints N keystream bits as hex
    edon80_ref.py seal KEY IV TEXT   # prints hex(TEXT xor keystream)
"""

import sys

# 1-based tables as printed for the cipher, rows = left operand.
QUASIGROUPS_1BASED = [
    ["1324", "3241", "2413", "4132"],
    ["2413", "1234", "3142", "4321"],
    ["3214", "2341", "4132", "1423"],
    ["4321", "2143", "1432", "3214"],
]

PAD_BITS = "1110010000011011"


def table(idx):
    rows = QUASIGROUPS_1BASED[idx]
    return [[int(c) - 1 for c in row] for row in rows]


Q = [table(i) for i in range(4)]


def hex_to_bits(h):
    return "".join(format(int(c, 16), "04b") for c in h)


def bits_to_pairs(bits):
    # MSB first inside every 2-bit symbol
    return [int(bits[i:i + 2], 2) for i in range(0, len(bits), 2)]


def setup(key_hex, iv_hex):
    key_bits = hex_to_bits(key_hex)
    iv_bits = hex_to_bits(iv_hex) + PAD_BITS
    assert len(key_bits) == 80 and len(iv_bits) == 80
    K = bits_to_pairs(key_bits)   # K[0..39]
    V = bits_to_pairs(iv_bits)    # V[0..39]
    star = [Q[K[i]] if i < 40 else Q[K[i - 40]] for i in range(80)]

    # Initialization table: 80 rows, 80 columns.
    # Column headers: K0..K39 V0..V39. Row leaders: V39..V0 K39..K0.
    header = K + V
    leaders = list(reversed(K + V))
    t = [[0] * 80 for _ in range(80)]
    for i in range(80):
        above = header if i == 0 else t[i - 1]
        prev = leaders[i]
        for j in range(80):
            t[i][j] = star[i][prev][above[j]]
            prev = t[i][j]
    # Last row gives the leaders of the keystream table.
    return star, list(t[79])


def keystream_symbols(key_hex, iv_hex, n_symbols):
    star, a = setup(key_hex, iv_hex)
    out = []
    col = 0
    while len(out) < n_symbols:
        x = col % 4
        for i in range(80):
            a[i] = star[i][a[i]][x]
            x = a[i]
        if col % 2 == 1:
            out.append(x)
        col += 1
    return out


def keystream_bits(key_hex, iv_hex, n_bits):
    syms = keystream_symbols(key_hex, iv_hex, (n_bits + 1) // 2)
    bits = "".join(format(s, "02b") for s in syms)
    return bits[:n_bits]


def bits_to_hex(bits):
    assert len(bits) % 8 == 0
    return "".join(format(int(bits[i:i + 8], 2), "02x") for i in range(0, len(bits), 8))


def seal(key_hex, iv_hex, data):
    ks = keystream_bits(key_hex, iv_hex, 8 * len(data))
    return bytes(b ^ int(ks[8 * i:8 * i + 8], 2) for i, b in enumerate(data))


FIXTURE_INPUTS = [
    ("00000000000000000000", "0000000000000000"),
    ("ffffffffffffffffffff", "ffffffffffffffff"),
    ("80000000000000000000", "0000000000000000"),
    ("00000000000000000000", "8000000000000000"),
    ("0123456789abcdef0123", "0011223344556677"),
    ("1b1b1b1b1b1b1b1b1b1b", "e41be41be41be41b"),
    ("fedcba98765432100f1e", "a5a5a5a55a5a5a5a"),
    ("3c6ef372a54ff53a510e", "9b05688c1f83d9ab"),
]


def main(argv):
    if len(argv) < 2 or argv[1] == "vectors":
        for k, v in FIXTURE_INPUTS:
            print(k, v, bits_to_hex(keystream_bits(k, v, 128)))
    elif argv[1] == "keystream":
        print(bits_to_hex(keystream_bits(argv[2], argv[3], int(argv[4]))))
    elif argv[1] == "seal":
        print(seal(argv[2], argv[3], argv[4].encode()).hex())
    else:
        raise SystemExit(__doc__)


if __name__ == "__main__":
    main(sys.argv)
