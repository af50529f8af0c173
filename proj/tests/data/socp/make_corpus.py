"""Regenerates the conic test corpus and reference objectives with cvxpy."""
import json
import pathlib

import cvxpy as cp
import numpy as np

OUT = pathlib.Path(__file__).parent


def write(path, n, rows, cones, c, b):
    with open(path, "w") as f:
        f.write("CONIC-EXCHANGE 1\n")
        f.write(f"vars {n} rows {len(b)} nnz {len(rows)}\n")
        f.write(f"cones {len(cones)}\n")
        for kind, dim in cones:
            f.write(f"{kind} {dim}\n")
        f.write("triplets\n")
        for r, j, v in rows:
            f.write(f"{r} {j} {v:.17g}\n")
        f.write("b\n")
        for v in b:
            f.write(f"{v:.17g}\n")
        f.write("c\n")
        for v in c:
            f.write(f"{v:.17g}\n")
        f.write("end\n")


def make(seed, n, p, l, socs):
    rng = np.random.default_rng(seed)
    x0 = rng.normal(size=n)
    A = rng.normal(size=(p, n))
    b = A @ x0
    G = rng.normal(size=(l, n))
    h = G @ x0 + rng.uniform(0.1, 1.0, size=l)
    blocks = []
    for d in socs:
        Gs = rng.normal(size=(d, n))
        s = rng.normal(size=d)
        s[0] = np.linalg.norm(s[1:]) + rng.uniform(0.1, 1.0)
        blocks.append((Gs, Gs @ x0 + s))
    # bounded objective: c in the range of the dual cone image
    y = rng.normal(size=p)
    z = rng.uniform(0.1, 1.0, size=l)
    c = -(A.T @ y) - (G.T @ z)
    for Gs, _ in blocks:
        zs = rng.normal(size=Gs.shape[0])
        zs[0] = np.linalg.norm(zs[1:]) + rng.uniform(0.1, 1.0)
        c -= Gs.T @ zs
    x = cp.Variable(n)
    cons = []
    if p:
        cons.append(A @ x == b)
    if l:
        cons.append(G @ x <= h)
    for Gs, hs in blocks:
        cons.append(cp.SOC(hs[0] - Gs[0] @ x, hs[1:] - Gs[1:] @ x))
    prob = cp.Problem(cp.Minimize(c @ x), cons)
    prob.solve(solver=cp.CLARABEL)
    rows, bb, cones, r = [], [], [], 0
    for M, rhs, kind in [(A, b, "zero"), (G, h, "nonneg")] + [(Gs, hs, "soc") for Gs, hs in blocks]:
        if M.shape[0] == 0:
            continue
        for i in range(M.shape[0]):
            for j in range(n):
                if M[i, j] != 0.0:
                    rows.append((r, j, M[i, j]))
            bb.append(rhs[i])
            r += 1
        cones.append((kind, M.shape[0]))
    return rows, cones, c, bb, prob.value


def main():
    specs = [
        (1, 3, 1, 4, []),
        (2, 5, 2, 6, [3]),
        (3, 8, 3, 0, [4, 3]),
        (4, 10, 0, 12, [5]),
        (5, 12, 4, 10, [3, 3, 3]),
        (6, 20, 5, 15, [4, 6]),
        (7, 30, 10, 20, [3] * 5),
        (8, 40, 12, 30, [5, 4, 3]),
        (9, 60, 20, 40, [3] * 10),
        (10, 100, 30, 60, [4] * 12),
    ]
    ref = {}
    for seed, n, p, l, socs in specs:
        rows, cones, c, b, val = make(seed, n, p, l, socs)
        name = f"random_{seed:02d}.cex"
        write(OUT / name, n, rows, cones, c, b)
        ref[name] = val
    with open(OUT / "reference.json", "w") as f:
        json.dump(ref, f, indent=1)


if __name__ == "__main__":
    main()
