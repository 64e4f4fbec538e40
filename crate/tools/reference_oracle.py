#!/usr/bin/env python3
"""Standalone joint-chain enumeration used to freeze the oracle test values.

Shares no code with the Rust crates: the slot rules are restated here from
the protocol description, the chain is enumerated breadth-first and the
stationary law is solved either exactly (fractions, small chains) or with a
sparse float solve. Prints binned per-node marginals.

    python3 tools/reference_oracle.py two-node --m 0 --exact
"""

import argparse
from collections import deque
from fractions import Fraction

# Reference slot counts.
W, T_RTS, T_CTS, T_DATA, T_OUT, T_NAV_RTS, T_NAV_CTS = 3, 1, 1, 5, 2, 7, 5

SENDING = {"Rs", "Cs", "As"}  # RTS, CTS, DATA transmissions


def fixture(name):
    """(neighbors, routing) with routing[x] a list of (receiver, prob); None marks a sink."""
    if name == "two-node":
        nb = [[1], [0]]
        rt = [[(1, Fraction(1))], [(0, Fraction(1))]]
    elif name == "triangle":
        nb = [[1, 2], [0, 2], [0, 1]]
        rt = [[(y, Fraction(1, 2)) for y in nb[x]] for x in range(3)]
    elif name == "hidden-terminal":
        nb = [[1], [0, 2], [1]]
        rt = [[(1, Fraction(1))], None, [(1, Fraction(1))]]
    else:
        raise SystemExit(f"unknown fixture {name}")
    return nb, rt


# Node state: (stage, counter, action, peer, timer, receiver); receiver None = no packet.


def fresh(rt, x):
    return [((0, k, "B", None, 0, y), p / W) for y, p in rt[x] for k in range(1, W + 1)]


def initial(rt, x):
    return fresh(rt, x) if rt[x] is not None else [((0, 0, "I", None, 0, None), Fraction(1))]


def begins(s):
    _, c, a, _, t, _ = s
    return (a == "B" and c == 0) or (a in ("Rr", "Cr") and t == 0)


def emits(s):
    return (s[2] in SENDING and s[4] > 0) or begins(s)


def resume(s):
    st, c, _, _, _, y = s
    return (st, c, "B", None, 0, y) if y is not None else (0, 0, "I", None, 0, None)


def step(world, x, nb, rt, m):
    """Successors of node x as a list of (state, prob)."""
    s = world[x]
    st, c, a, peer, t, y = s
    act = lambda a2, t2, p2=None: [((st, c, a2, p2, t2, y), Fraction(1))]
    clear = not any(emits(world[z]) for z in nb[x])

    if a == "B" and c == 0:
        return act("Rs", T_RTS, y)
    if a in ("B", "I"):
        em = [z for z in nb[x] if emits(world[z])]
        if not em:
            return [((st, c - 1, a, None, 0, y) if a == "B" else s, Fraction(1))]
        if len(em) == 1:
            z = em[0]
            zs = world[z]
            if zs[2] == "B" and zs[1] == 0:
                return act("Rr" if zs[5] == x else "Ro", T_RTS, z)
            if zs[2] == "Rr" and zs[4] == 0:
                return act("Co", T_CTS, z)
        return act("U", 0)
    if a in ("Rr", "Ro", "Co", "Ar", "Cr") and t > 0:
        hidden = [h for h in nb[x] if h != peer and h not in nb[peer]]
        if any(emits(world[h]) for h in hidden):
            if a == "Cr":
                return act("W", T_OUT - 1 - (T_CTS - t))
            return act("U", 0)
        return act(a, t - 1, peer)
    if a == "Rr":
        return act("Cs", T_CTS, peer)
    if a == "Ro":
        return act("D", T_NAV_RTS, peer)
    if a == "Co":
        return act("D", T_NAV_CTS, peer)
    if a == "Ar":
        return [(resume(s), Fraction(1))]
    if a == "Cr":
        return act("As", T_DATA, peer)
    if a in ("Cs", "Rs", "As", "D", "W") and t > 0:
        return act(a, t - 1, peer)
    if a == "Cs":
        ps = world[peer]
        if ps[2] == "Cr" and ps[3] == x and ps[4] == 0:
            return act("Ar", T_DATA, peer)
        return [(resume(s), Fraction(1))]
    if a == "Rs":
        ps = world[peer]
        if ps[2] == "Rr" and ps[3] == x and ps[4] == 0:
            return act("Cr", T_CTS, peer)
        return act("W", T_OUT)
    if a == "As":
        return fresh(rt, x)
    if a in ("D", "U"):
        return [(resume(s), Fraction(1))] if clear else [(s, Fraction(1))]
    if a == "W":
        if not clear:
            return [(s, Fraction(1))]
        if st < m:
            w = W << (st + 1)
            return [((st + 1, k, "B", None, 0, y), Fraction(1, w)) for k in range(1, w + 1)]
        return fresh(rt, x)
    raise AssertionError(f"unhandled state {s}")


def product(options):
    acc = [((), Fraction(1))]
    for opts in options:
        acc = [(pre + (s,), p * q) for pre, p in acc for s, q in opts]
    return acc


def build(name, m):
    nb, rt = fixture(name)
    n = len(nb)
    index, states, rows = {}, [], []
    queue = deque()
    for w, _ in product([initial(rt, x) for x in range(n)]):
        if w not in index:
            index[w] = len(states)
            states.append(w)
            queue.append(w)
    rows_by = {}
    while queue:
        w = queue.popleft()
        row = {}
        for nxt, p in product([step(w, x, nb, rt, m) for x in range(n)]):
            if nxt not in index:
                index[nxt] = len(states)
                states.append(nxt)
                queue.append(nxt)
            row[index[nxt]] = row.get(index[nxt], 0) + p
        rows_by[index[w]] = row
    rows = [rows_by[i] for i in range(len(states))]
    return n, states, rows


def closed_class(rows):
    """States reachable from every state reachable from state 0's terminal SCC."""
    import scipy.sparse as sp
    from scipy.sparse.csgraph import connected_components

    n = len(rows)
    r, c = zip(*[(i, j) for i, row in enumerate(rows) for j in row])
    g = sp.csr_matrix(([1] * len(r), (r, c)), shape=(n, n))
    _, labels = connected_components(g, directed=True, connection="strong")
    closed = []
    for comp in set(labels):
        members = [i for i in range(n) if labels[i] == comp]
        if all(labels[j] == comp for i in members for j in rows[i]):
            closed.append(members)
    assert len(closed) == 1, f"{len(closed)} closed classes"
    return closed[0]


def solve_exact(rows, cls):
    """Gauss-Jordan over fractions on pi (P - I) = 0 plus normalization."""
    k = len(cls)
    pos = {s: i for i, s in enumerate(cls)}
    a = [[Fraction(0)] * (k + 1) for _ in range(k)]
    for i, s in enumerate(cls):
        for t, p in rows[s].items():
            a[pos[t]][i] += p
        a[i][i] -= 1
    a[k - 1] = [Fraction(1)] * k + [Fraction(1)]
    for col in range(k):
        piv = next(r for r in range(col, k) if a[r][col] != 0)
        a[col], a[piv] = a[piv], a[col]
        inv = 1 / a[col][col]
        a[col] = [v * inv for v in a[col]]
        for r in range(k):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [u - f * v for u, v in zip(a[r], a[col])]
    return {s: a[pos[s]][k] for s in cls}


def solve_float(rows, cls):
    import numpy as np
    import scipy.sparse as sp
    import scipy.sparse.linalg as sla

    k = len(cls)
    pos = {s: i for i, s in enumerate(cls)}
    r, c, v = [], [], []
    for i, s in enumerate(cls):
        for t, p in rows[s].items():
            r.append(pos[t])
            c.append(i)
            v.append(float(p))
    a = sp.lil_matrix(sp.csr_matrix((v, (r, c)), shape=(k, k)) - sp.identity(k))
    a[k - 1, :] = np.ones(k)
    b = np.zeros(k)
    b[k - 1] = 1.0
    x = sla.spsolve(a.tocsc(), b)
    return {s: x[pos[s]] for s in cls}


def report_bin(s):
    st, c, a, _, _, _ = s
    if a == "B":
        return "Snt" if c == 0 else f"({st};{c})"
    return {
        "Rs": "Snt", "Cr": "Snt", "As": "Snt",
        "Rr": "Rcv", "Cs": "Rcv", "Ar": "Rcv",
        "Ro": "Ovh", "Co": "Ovh",
        "W": "Wait", "D": "NAV", "U": "U", "I": "Idle",
    }[a]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("fixture")
    ap.add_argument("--m", type=int, default=0)
    ap.add_argument("--exact", action="store_true", help="fractions instead of floats")
    args = ap.parse_args()
    n, states, rows = build(args.fixture, args.m)
    cls = closed_class(rows)
    pi = solve_exact(rows, cls) if args.exact else solve_float(rows, cls)
    print(f"# joint states {len(states)}, recurrent {len(cls)}")
    for x in range(n):
        bins = {}
        for s, p in pi.items():
            b = report_bin(states[s][x])
            bins[b] = bins.get(b, 0) + p
        for b in sorted(bins):
            p = bins[b]
            exact = f" = {p}" if isinstance(p, Fraction) else ""
            print(f"x{x + 1},{b},{float(p):.15e}{exact}")


if __name__ == "__main__":
    main()
