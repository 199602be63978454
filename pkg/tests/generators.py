"""Random inputs shared by the tests."""
from fractions import Fraction

from zerobound.family import Series


def random_series_matrix(rng, N=32):
    n, m = rng.randint(1, 4), rng.randint(1, 4)
    if rng.random() < 0.5:
        def entry():
            if rng.random() < 0.2:
                return Series([], N)
            v = rng.randint(0, 6)
            return Series([0] * v + [rng.randint(-3, 3) for _ in range(rng.randint(1, 5))], N)
        return [[entry() for _ in range(m)] for _ in range(n)]
    # P diag(z^k) Q with random P, Q, so higher orders and rank drops show up
    k = min(n, m)
    P = [[Series([rng.randint(-2, 2) for _ in range(3)], N) for _ in range(k)] for _ in range(n)]
    Q = [[Series([rng.randint(-2, 2) for _ in range(3)], N) for _ in range(m)] for _ in range(k)]
    d = [Series([0] * rng.randint(0, 8) + [1], N) if rng.random() < 0.85 else Series([], N)
         for _ in range(k)]
    X = [[Series([], N) for _ in range(m)] for _ in range(n)]
    for i in range(n):
        for j in range(m):
            acc = Series([], N)
            for l in range(k):
                acc = acc + P[i][l] * d[l] * Q[l][j]
            X[i][j] = acc.truncate(N)
    return X


def coeff_lists(X, N):
    return [[list(e.c) + [Fraction(0)] * (N - len(e.c)) for e in row] for row in X]
