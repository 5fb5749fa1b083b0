"""Slow, obviously-correct reference implementations used only by the tests."""

from itertools import combinations


def dp_lcs(a: str, b: str) -> int:
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table[len(a)][len(b)]


def dice_oracle(a: str, b: str) -> float:
    a, b = " ".join(a.split()), " ".join(b.split())
    if not a and not b:
        return 1.0
    return 2 * dp_lcs(a, b) / (len(a) + len(b))


def exact_u_pvalue(a, b):
    """Two-sided p by listing every way to pick len(a) of the pooled values as group a."""
    pooled = list(a) + list(b)
    n, m = len(a), len(b)

    def u_of(idx):
        chosen = set(idx)
        xs = [pooled[k] for k in idx]
        ys = [pooled[k] for k in range(len(pooled)) if k not in chosen]
        return sum((x > y) + 0.5 * (x == y) for x in xs for y in ys)

    observed = abs(u_of(range(n)) - n * m / 2)
    total = extreme = 0
    for idx in combinations(range(n + m), n):
        total += 1
        if abs(u_of(idx) - n * m / 2) >= observed - 1e-12:
            extreme += 1
    return extreme / total
