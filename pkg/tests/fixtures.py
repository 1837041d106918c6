"""Reference values shared by several test modules."""

# (n, m, k, p_SS as printed to two significant figures)
TABLE1 = [
    (9, 40, 13, 1.2e-4), (15, 40, 10, 9.8e-4), (21, 65, 15, 3.1e-5),
    (25, 65, 14, 6.1e-5), (27, 65, 13, 1.2e-4), (33, 96, 19, 1.9e-6),
    (35, 96, 18, 3.8e-6), (39, 96, 18, 3.8e-6), (45, 96, 17, 7.6e-6),
    (49, 96, 17, 7.6e-6), (51, 96, 17, 7.6e-6), (55, 96, 16, 1.5e-5),
    (57, 96, 16, 1.5e-5), (63, 96, 16, 1.5e-5), (65, 133, 22, 2.4e-7),
    (69, 133, 21, 4.8e-7), (75, 133, 21, 4.8e-7), (77, 133, 21, 4.8e-7),
    (81, 133, 21, 4.8e-7), (85, 133, 20, 9.5e-7), (87, 133, 20, 9.5e-7),
    (91, 133, 20, 9.5e-7), (93, 133, 20, 9.5e-7), (95, 133, 20, 9.5e-7),
    (99, 133, 20, 9.5e-7), (561, 280, 30, 9.3e-10),
]

MT19937_5489_FIRST10 = [
    3499211612, 581869302, 3890346734, 3586334585, 545404204,
    4161255391, 3922919429, 949333985, 2715962298, 1323567403,
]


def sig2(x: float) -> float:
    """Round to two significant figures, as the table prints."""
    return float(f"{x:.1e}")


def brute_carmichael(limit: int) -> list[int]:
    """Korselt's criterion by plain trial division, one n at a time."""
    out = []
    for n in range(3, limit + 1, 2):
        m, p, factors, square = n, 3, [], False
        while p * p <= m:
            if m % p == 0:
                m //= p
                if m % p == 0:
                    square = True
                    break
                factors.append(p)
            p += 2
        if square:
            continue
        if m > 1:
            factors.append(m)
        if len(factors) >= 2 and all((n - 1) % (f - 1) == 0 for f in factors):
            out.append(n)
    return out
