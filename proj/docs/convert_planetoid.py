#!/usr/bin/env python3
"""Convert Cora-style citation data into graphtsne input files.

Writes edges.txt, features.csv and labels.csv into OUT_DIR.

Two source layouts are accepted:
  linqs      DIR holds cora.content and cora.cites (tab separated)
  planetoid  DIR holds ind.<name>.{x,tx,allx,y,ty,ally,graph,test.index}
"""

import argparse
import pathlib
import pickle
import sys

import numpy as np


def load_linqs(src: pathlib.Path, name: str):
    content = [line.split() for line in (src / f"{name}.content").read_text().splitlines() if line.strip()]
    ids = {row[0]: i for i, row in enumerate(content)}
    features = np.array([[float(v) for v in row[1:-1]] for row in content])
    classes = sorted({row[-1] for row in content})
    class_id = {c: i for i, c in enumerate(classes)}
    labels = np.array([class_id[row[-1]] for row in content])
    edges = []
    for line in (src / f"{name}.cites").read_text().splitlines():
        parts = line.split()
        if len(parts) != 2:
            continue
        a, b = parts
        if a in ids and b in ids:
            edges.append((ids[a], ids[b]))
    return edges, features, labels


def load_planetoid(src: pathlib.Path, name: str):
    def read(part):
        with open(src / f"ind.{name}.{part}", "rb") as fh:
            return pickle.load(fh, encoding="latin1")

    x, y, tx, ty, allx, ally, graph = (read(p) for p in ("x", "y", "tx", "ty", "allx", "ally", "graph"))
    test_index = [int(v) for v in (src / f"ind.{name}.test.index").read_text().split()]
    dense = lambda m: m.toarray() if hasattr(m, "toarray") else np.asarray(m)

    features = np.vstack([dense(allx), dense(tx)])
    onehot = np.vstack([np.asarray(ally), np.asarray(ty)])
    order = np.sort(test_index)
    features[test_index, :] = features[order, :]
    onehot[test_index, :] = onehot[order, :]
    labels = onehot.argmax(axis=1)

    n = features.shape[0]
    edges = [(a, b) for a, nbrs in graph.items() for b in nbrs if a < n and b < n]
    return edges, features, labels


def write(out: pathlib.Path, edges, features, labels):
    out.mkdir(parents=True, exist_ok=True)
    seen = set()
    with open(out / "edges.txt", "w") as fh:
        for a, b in edges:
            key = (min(a, b), max(a, b))
            if a == b or key in seen:
                continue
            seen.add(key)
            fh.write(f"{key[0]} {key[1]}\n")
    with open(out / "features.csv", "w") as fh:
        for row in features:
            fh.write(",".join(f"{v:g}" for v in row) + "\n")
    with open(out / "labels.csv", "w") as fh:
        fh.writelines(f"{int(c)}\n" for c in labels)
    return len(seen)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("layout", choices=["linqs", "planetoid"])
    ap.add_argument("src", type=pathlib.Path)
    ap.add_argument("out", type=pathlib.Path)
    ap.add_argument("--name", default="cora")
    args = ap.parse_args(argv)

    loader = load_linqs if args.layout == "linqs" else load_planetoid
    edges, features, labels = loader(args.src, args.name)
    m = write(args.out, edges, features, labels)
    print(f"{features.shape[0]} nodes, {m} edges, {features.shape[1]} features, "
          f"{len(set(labels.tolist()))} classes -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
