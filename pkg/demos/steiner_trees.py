"""A quick tour of the exact Steiner minimal tree solver.

The simulator scores a trial by the length of the Steiner minimal tree
spanning the leader positions at disconnection. This demo shows the
solver on the classic textbook instances and a random one, printing the
Steiner points it introduces and checking the 120-degree rule.

    python demos/steiner_trees.py
"""

import math

import numpy as np

from steinerswarm.metrics import euclidean_mst_length, steiner_minimal_tree


def show(name, terminals):
    terminals = np.asarray(terminals, dtype=float)
    tree = steiner_minimal_tree(terminals)
    mst = euclidean_mst_length(terminals)
    saving = (1.0 - tree.length / mst) * 100 if mst else 0.0
    print(f"\n{name}")
    print(f"  SMT length {tree.length:.9f}   MST {mst:.9f}   "
          f"saving {saving:.2f}%")
    for j in range(tree.n_terminals, len(tree.points)):
        x, y = tree.points[j]
        print(f"  steiner point at ({x:.6f}, {y:.6f})")
    return tree


def main():
    show("equilateral triangle (answer: sqrt 3)",
         [[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]])
    show("unit square (answer: 1 + sqrt 3)",
         [[0, 0], [1, 0], [1, 1], [0, 1]])
    show("obtuse triangle (no Steiner point helps)",
         [[0, 0], [4, 0], [2, 0.3]])

    rng = np.random.Generator(np.random.Philox(1))
    pts = rng.uniform(0, 10, size=(5, 2))
    tree = show("five random terminals", pts)

    # every non-degenerate Steiner point meets its three edges at 120
    # degrees; points that merged onto a terminal are skipped
    for j in range(tree.n_terminals, len(tree.points)):
        nbrs = [v for u, v in tree.edges if u == j] + \
               [u for u, v in tree.edges if v == j]
        dirs = [tree.points[v] - tree.points[j] for v in nbrs]
        dirs = [d / np.linalg.norm(d) for d in dirs if np.linalg.norm(d) > 1e-6]
        if len(dirs) < 3:
            print(f"  steiner point {j} merged with a terminal, skipped")
            continue
        for a in range(len(dirs)):
            for b in range(a + 1, len(dirs)):
                deg = math.degrees(math.acos(float(np.clip(
                    np.dot(dirs[a], dirs[b]), -1, 1))))
                print(f"  angle at steiner point {j}: {deg:.6f} degrees")


if __name__ == "__main__":
    main()
