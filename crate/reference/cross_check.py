#!/usr/bin/env python3
"""Cross-check exported steering problems with cvxpy.

Usage: cross_check.py FILE...

For each `.dat-s` file the SDPA standard form is solved as written
(min <C,X> s.t. <A_i,X> = b_i, X block-PSD, with C = -F0, A_i = F_i, b = c).
For each `.asm` file the weight and robustness programs are rebuilt from the
assemblage with complex Hermitian variables, independently of the exported
real embedding. Results are printed as JSON, one object per line.
"""

import itertools
import json
import sys

import cvxpy as cp
import numpy as np

SOLVER_OPTS = dict(
    solver=cp.CLARABEL,
    tol_gap_abs=1e-9,
    tol_gap_rel=1e-9,
    tol_feas=1e-9,
)


def read_sdpa(path):
    with open(path) as f:
        lines = [ln.split('"')[0].split("*")[0].strip() for ln in f]
    lines = [ln for ln in lines if ln]
    tok = lambda ln: ln.replace(",", " ").replace("{", " ").replace("}", " ").split()
    m = int(tok(lines[0])[0])
    sizes = [abs(int(t)) for t in tok(lines[2])]
    c = np.array([float(t) for t in tok(lines[3])])
    assert len(c) == m
    mats = [[np.zeros((d, d)) for d in sizes] for _ in range(m + 1)]
    for ln in lines[4:]:
        k, b, i, j, v = tok(ln)
        k, b, i, j, v = int(k), int(b) - 1, int(i) - 1, int(j) - 1, float(v)
        mats[k][b][i, j] = v
        mats[k][b][j, i] = v
    return sizes, c, mats


def solve_sdpa(path):
    sizes, b, mats = read_sdpa(path)
    xs = [cp.Variable((d, d), symmetric=True) for d in sizes]
    cons = [x >> 0 for x in xs]
    for k in range(1, len(b) + 1):
        cons.append(sum(cp.trace(mats[k][j] @ xs[j]) for j in range(len(sizes))) == b[k - 1])
    obj = cp.Minimize(sum(cp.trace(-mats[0][j] @ xs[j]) for j in range(len(sizes))))
    prob = cp.Problem(obj, cons)
    prob.solve(**SOLVER_OPTS)
    return prob.status, prob.value


def read_asm(path):
    with open(path) as f:
        lines = [ln.split() for ln in f if ln.strip()]
    m, o, d = (int(v) for v in lines[0][:3])
    members = []
    rows = lines[1:]
    for k in range(m * o):
        block = rows[k * d:(k + 1) * d]
        mat = np.array([[float(r[2 * q]) + 1j * float(r[2 * q + 1]) for q in range(d)] for r in block])
        members.append(mat)
    return m, o, d, [[members[x * o + a] for a in range(o)] for x in range(m)]


def deterministic(m, o):
    return list(itertools.product(range(o), repeat=m))


def steering_values(path):
    m, o, d, sigma = read_asm(path)
    lams = deterministic(m, o)
    out = {}

    rho = [cp.Variable((d, d), hermitian=True) for _ in lams]
    cons = [r >> 0 for r in rho]
    for x in range(m):
        for a in range(o):
            model = sum(rho[l] for l, s in enumerate(lams) if s[x] == a)
            cons.append(sigma[x][a] - model >> 0)
    prob = cp.Problem(cp.Maximize(cp.real(sum(cp.trace(r) for r in rho))), cons)
    prob.solve(**SOLVER_OPTS)
    out["weight"] = (prob.status, 1.0 - prob.value)

    rho = [cp.Variable((d, d), hermitian=True) for _ in lams]
    cons = [r >> 0 for r in rho]
    for x in range(m):
        for a in range(o):
            model = sum(rho[l] for l, s in enumerate(lams) if s[x] == a)
            cons.append(model - sigma[x][a] >> 0)
    prob = cp.Problem(cp.Minimize(cp.real(sum(cp.trace(r) for r in rho))), cons)
    prob.solve(**SOLVER_OPTS)
    out["robustness"] = (prob.status, prob.value - 1.0)
    return out


def main(paths):
    for path in paths:
        if path.endswith(".dat-s"):
            status, value = solve_sdpa(path)
            print(json.dumps({"file": path, "kind": "sdpa", "status": status, "optimum": value}))
        elif path.endswith(".asm"):
            for measure, (status, value) in steering_values(path).items():
                print(json.dumps({"file": path, "kind": "assemblage", "measure": measure,
                                  "status": status, "value": value}))
        else:
            sys.exit(f"unknown file type: {path}")


if __name__ == "__main__":
    main(sys.argv[1:])
