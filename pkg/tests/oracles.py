"""Brute-force reference implementations used as independent test oracles.

Everything here is deliberately written with plain Python loops over
coordinates and does not import the package's numerical code.
"""

import math


def intersite(points):
    best = math.inf
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            best = min(best, math.sqrt(sum((a - b) ** 2 for a, b in zip(points[i], points[j]))))
    return best


def projected(points):
    best = math.inf
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            for a, b in zip(points[i], points[j]):
                best = min(best, abs(a - b))
    return best


def phi_p(points, p):
    total = 0.0
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            s = sum((a - b) ** 2 for a, b in zip(points[i], points[j]))
            total += s ** (-p)
    return total ** (1.0 / p)


def crowding(points, candidate):
    return sum(sum((a - c) ** 2 for a, c in zip(pt, candidate)) for pt in points)


def interval_of(x, m):
    """Interval q with q/m <= x < (q+1)/m, the last interval closed at 1."""
    for q in range(m - 1):
        if q / m <= x < (q + 1) / m:
            return q
    return m - 1


def lhs_fraction(points, m=None):
    n = len(points)
    d = len(points[0])
    m = n if m is None else m
    occupied = 0
    for k in range(d):
        occupied += len({interval_of(pt[k], m) for pt in points})
    return occupied / (m * d)


def min_l2_to(points, c):
    return min(math.sqrt(sum((a - b) ** 2 for a, b in zip(pt, c))) for pt in points)


def min_proj_to(points, c):
    return min(min(abs(a - b) for a, b in zip(pt, c)) for pt in points)


def mip_choice(points, candidates):
    n, d = len(points), len(points[0])
    best, best_i = -math.inf, None
    for i, c in enumerate(candidates):
        if min_l2_to(points, c) == 0:
            continue
        score = ((n + 1) ** (1 / d) - 1) / 2 * min_l2_to(points, c) + (n + 1) / 2 * min_proj_to(points, c)
        if score > best:
            best, best_i = score, i
    return best_i


def mipt_choice(points, candidates, alpha):
    """Two-phase filter then argmax; ``alpha='auto'`` uses half the largest feasible tolerance."""
    n = len(points)
    live = [i for i, c in enumerate(candidates) if min_l2_to(points, c) > 0]
    if alpha == "auto":
        pd_max = max(min_proj_to(points, candidates[i]) for i in live)
        alpha = min(max(n * pd_max / 4, 0.0), 1.0)
    d_min = 2 * alpha / n
    survivors = [i for i in live if min_proj_to(points, candidates[i]) >= d_min]
    if not survivors:
        return max(live, key=lambda i: (min_proj_to(points, candidates[i]), -i))
    best_i, best = None, -math.inf
    for i in survivors:
        v = min_l2_to(points, candidates[i])
        if v > best:
            best, best_i = v, i
    return best_i


def mqplhs_choice(points, candidates):
    n = len(points)
    live = [i for i, c in enumerate(candidates) if min_l2_to(points, c) > 0]
    scores = {i: lhs_fraction(points + [list(candidates[i])], m=n + 1) for i in live}
    top = max(scores.values())
    best_i, best = None, -math.inf
    for i in live:
        if scores[i] == top:
            v = min_l2_to(points, candidates[i])
            if v > best:
                best, best_i = v, i
    return best_i
