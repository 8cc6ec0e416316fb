#!/usr/bin/env python3
"""Brute-force census of order-4 Latin squares (row-permutation search).

Prints the count, then selected 1-based entries of the lexicographic list
in 1-based display form, for freezing into the C++ tests.
"""

import itertools
import sys

perms = list(itertools.permutations(range(4)))
found = []
for rows in itertools.product(perms, repeat=4):
    if all(len({r[c] for r in rows}) == 4 for c in range(4)):
        found.append(tuple(x for r in rows for x in r))
found.sort()


def display(sq):
    return "".join(str(x + 1) for x in sq)


print(len(found))
for n in [int(a) for a in sys.argv[1:]] or [1, 2, 4, 9, 19, 20, 96, 576]:
    print(n, display(found[n - 1]))
