#!/usr/bin/env python3
"""Independent reference implementation of the keyed randomness, edge-set
derivation, brute-force encoder, stream peeler, and LT symbol derivation.

Regenerates the golden vectors frozen into the C++ test sources; run it after
any deliberate change to the keyed-stream construction and re-freeze.
"""

from fractions import Fraction

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z):
    z &= MASK
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & MASK
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & MASK
    z ^= z >> 31
    return z


def derive_key(seed, a, b, c):
    k = mix64((seed + GOLDEN) & MASK)
    k = mix64(k ^ a)
    k = mix64(k ^ b)
    return mix64(k ^ c)


class Stream:
    def __init__(self, *key):
        self.state = key[0] if len(key) == 1 else derive_key(*key)

    def next_u64(self):
        self.state = (self.state + GOLDEN) & MASK
        return mix64(self.state)

    def next_unit(self):
        return (self.next_u64() >> 11) * 2.0 ** -53

    def next_below(self, bound):
        return (self.next_u64() * bound) >> 64


DOMAIN_MET = 1
DOMAIN_LT = 3
DOMAIN_FILL = 4


def binomial_pow2(stream, n, m):
    """n Bernoulli(2^-m) trials: m-bit fields taken LSB-first, 64//m per word."""
    per_word = 64 // m
    remaining, successes = n, 0
    while remaining > 0:
        w = stream.next_u64()
        take = min(remaining, per_word)
        for q in range(take):
            if (w >> (q * m)) & ((1 << m) - 1) == 0:
                successes += 1
        remaining -= take
    return successes


def scaled_floor(c, t):
    return int(Fraction(c.numerator + c.denominator, c.denominator) * t)


def derive_edge_set(c, w, l, seed, x):
    n_b = scaled_floor(c, w)
    bins = [scaled_floor(c, x)]
    right = scaled_floor(c, x + w)
    for i in range(2, l + 1):
        for attempt in range(64):
            s = Stream(seed, DOMAIN_MET, x, (i << 32) | attempt)
            eta = binomial_pow2(s, n_b, i - 1)
            cand = right - eta
            if cand not in bins:
                bins.append(cand)
                break
        else:
            s = Stream(seed, DOMAIN_MET, x, (i << 32) | 63)
            eta = binomial_pow2(s, n_b, i - 1)
            low, cand = right - n_b, right - eta
            while cand in bins:
                cand = right if cand == low else cand - 1
            bins.append(cand)
    return bins


def fill_payload(seed, position, size):
    pattern = derive_key(seed, DOMAIN_FILL, position, 0)
    return bytes((pattern >> (8 * (i % 8))) & 0xFF for i in range(size))


def xor_bytes(a, b):
    return bytes(x ^ y for x, y in zip(a, b))


def brute_encode(c, w, l, seed, k, size):
    """Full in-memory bipartite graph; returns the complete wire in order."""
    edge_sets = [derive_edge_set(c, w, l, seed, x) for x in range(k)]
    max_touched = max(b for es in edge_sets for b in es)
    bins = [bytes(size) for _ in range(max_touched + 1)]
    for x in range(k):
        payload = fill_payload(seed, x, size)
        for b in edge_sets[x]:
            bins[b] = xor_bytes(bins[b], payload)
    return bins  # wire order: index 0 .. max_touched


def release_schedule(c, k):
    """Cumulative bins released after each of the k pushes (plain termination
    flush not included)."""
    return [scaled_floor(c, t + 1) for t in range(k)]


def naive_stream_peel(c, w, l, seed, k, size, erased):
    """Push bins in order, re-peel to fixpoint after each arrival; latency is
    anchored at the pushed bin's index. Returns {ball: (latency, payload)}."""
    edge_sets = [derive_edge_set(c, w, l, seed, x) for x in range(k)]
    wire = brute_encode(c, w, l, seed, k, size)
    rate = Fraction(c.numerator + c.denominator, c.denominator)
    residual = {}
    decoded = {}
    for z in range(len(wire)):
        if z in erased:
            continue
        residual[z] = wire[z]
        progress = True
        while progress:
            progress = False
            for b, payload in list(residual.items()):
                pend = [x for x in range(k) if x not in decoded and b in edge_sets[x]]
                if len(pend) == 1:
                    x = pend[0]
                    lat = Fraction(z, 1) / rate - x
                    decoded[x] = (float(max(lat, 0)), payload_minus(edge_sets, decoded, residual, b, x))
                    progress = True
    return decoded


def payload_minus(edge_sets, decoded, residual, b, x):
    # residual already has decoded balls peeled out lazily: recompute directly
    payload = residual[b]
    for y, (_, py) in decoded.items():
        if b in edge_sets[y]:
            payload = xor_bytes(payload, py)
    return payload


def lt_pmf(k, c, delta):
    import math
    if k == 1:
        return [1.0]
    r = c * math.log(k / delta) * math.sqrt(k)
    spike = max(1, min(k, int(k / r)))
    pmf = [0.0] * k
    pmf[0] = 1.0 / k
    for d in range(2, k + 1):
        pmf[d - 1] = 1.0 / (d * (d - 1))
    for d in range(1, spike):
        pmf[d - 1] += r / (d * k)
    pmf[spike - 1] += r * math.log(r / delta) / k
    beta = sum(pmf)
    return [v / beta for v in pmf]


def lt_neighbors(k, c, delta, seed, index):
    pmf = lt_pmf(k, c, delta)
    cdf, acc = [], 0.0
    for v in pmf:
        acc += v
        cdf.append(acc)
    cdf[-1] = 1.0
    s = Stream(seed, DOMAIN_LT, index, 0)
    u = s.next_unit()
    degree = 1
    while degree < k and u >= cdf[degree - 1]:
        degree += 1
    neighbors = []
    while len(neighbors) < degree:
        cand = s.next_below(k)
        if cand not in neighbors:
            neighbors.append(cand)
    return neighbors


def main():
    f12 = Fraction(1, 2)
    print("# derive_edge_set golden: x=5 c=1/2 w=4 l=3 seed=42")
    print(derive_edge_set(f12, 4, 3, 42, 5))
    print("# edge sets for k=10 c=1/2 w=3 l=3 seed=7")
    for x in range(10):
        print(x, derive_edge_set(f12, 3, 3, 7, x))
    print("# release schedule k=10 c=1/2")
    print(release_schedule(f12, 10))
    print("# brute wire k=10 c=1/2 w=3 l=3 seed=7 size=2 (hex)")
    wire = brute_encode(f12, 3, 3, 7, 10, 2)
    print(len(wire), [p.hex() for p in wire])
    print("# naive peel with bin 4 erased: ball -> latency")
    dec = naive_stream_peel(f12, 3, 3, 7, 10, 2, {4})
    for x in sorted(dec):
        print(x, round(dec[x][0], 12), dec[x][1].hex())
    print("# undcoded:", [x for x in range(10) if x not in dec])
    print("# lt neighbors k=8 soliton c=0.03 delta=0.5 seed=3, indices 0..5")
    for idx in range(6):
        print(idx, lt_neighbors(8, 0.03, 0.5, 3, idx))
    print("# lt spike for k=400 c=0.03 delta=0.5")
    import math
    r = 0.03 * math.log(400 / 0.5) * math.sqrt(400)
    print("R =", r, "spike =", int(400 / r))


if __name__ == "__main__":
    main()
