#!/usr/bin/env python3
"""Regenerate data/pendubot.json: six Pendubots in real Jordan coordinates."""
import json
import pathlib

import numpy as np

G = np.array([[0.9992, 0.005, 0.0003, 0.0],
              [-0.3369, 0.9992, 0.1242, 0.0003],
              [0.0008, 0.0, 1.0007, 0.005],
              [0.3263, 0.0008, 0.2786, 1.0007]])
H = np.array([[0.0006], [0.2243], [-0.0001], [-0.0232]])
# Second column negated so that T1^-1 G T1 ~ [[a, b], [-b, a]].
T1 = np.array([[0.0, 0.2324], [-2.0702, 0.0], [0.0, -0.1122], [1.0, 0.0]])
T2 = np.array([[0.0223], [0.1839], [0.1215], [1.0]])
T3 = np.array([[-0.0224], [0.1839], [-0.1215], [1.0]])
C = np.array([[1.0, 0, 0, 0], [0, 0, 1.0, 0]])
N = 6
I6 = np.eye(N)

T = np.hstack([np.kron(I6, T1), np.kron(I6, T2), np.kron(I6, T3)])
B = np.linalg.solve(T, np.kron(I6, H))

Z = np.zeros_like(C)


def blockrow(*blocks):
    return np.hstack([b for b in blocks])


def sensor(rows):
    return np.vstack([blockrow(*[{0: Z, 1: C, -1: -C}[c] for c in r]) for r in rows])


C_orig = [
    sensor([[1, 0, 0, 0, 0, 0], [1, -1, 0, 0, 0, 0], [1, 0, -1, 0, 0, 0], [1, 0, 0, -1, 0, 0]]),
    sensor([[0, 1, 0, 0, 0, 0], [0, 1, 0, 0, -1, 0]]),
    sensor([[0, 0, 1, 0, 0, 0], [0, 0, 1, 0, 0, -1]]),
    sensor([[0, 0, 0, 1, 0, 0], [-1, 0, 0, 1, 0, 0], [0, 0, 0, 1, -1, 0], [0, 0, 0, 1, 0, -1]]),
    sensor([[0, 0, 0, 0, 1, 0]]),
    sensor([[0, 0, 0, 0, 0, 1]]),
]
sensors = [(Ci @ T) for Ci in C_orig]

laplacian = np.array([[1, 0, 0, -1, 0, 0],
                      [-1, 1, 0, 0, 0, 0],
                      [-1, 0, 1, 0, 0, 0],
                      [-1, 0, 0, 1, 0, 0],
                      [0, -1, 0, -1, 2, 0],
                      [0, 0, -1, -1, 0, 2]], dtype=float)
adjacency = -laplacian
np.fill_diagonal(adjacency, 0.0)


def rows(m):
    return [[float(v) + 0.0 for v in r] for r in m]


doc = {
    "eigenvalues": [
        {"re": 0.9991, "im": 0.0445, "miniblock_dims": [1] * N},
        {"re": 1.042, "im": 0.0, "miniblock_dims": [1] * N},
        {"re": 0.9597, "im": 0.0, "miniblock_dims": [1] * N},
    ],
    "B": rows(B),
    "sensors": [rows(s) for s in sensors],
    "adjacency": rows(adjacency),
    "transform": rows(T),
    "simulation": {
        "horizon": 5000,
        "x0": [0.0] * 24,
        "observer_init": "random",
        "input": [{"kind": "zero"}] * N,
        "seed": 7,
    },
}

out = pathlib.Path(__file__).resolve().parent.parent / "data" / "pendubot.json"


def dump(value, indent=0):
    pad = " " * indent
    if isinstance(value, dict):
        items = [f'{pad}  {json.dumps(k)}: {dump(v, indent + 2).lstrip()}' for k, v in value.items()]
        return pad + "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(value, list) and value and isinstance(value[0], (list, dict)):
        items = [dump(v, indent + 2) for v in value]
        return pad + "[\n" + ",\n".join(items) + "\n" + pad + "]"
    return pad + json.dumps(value)


out.write_text(dump(doc) + "\n")
print(out)
