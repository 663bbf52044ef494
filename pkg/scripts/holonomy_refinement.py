"""Subdivision coherence of edge holonomies under repeated random refinement.

Refines a three-edge graph at random split points and prints, at each
depth, the worst gap between the coarse holonomies and the products of the
refined ones.
"""
import argparse

import numpy as np

from prolim.gauge import (ConnectionU1, Edge, Graph, identity_refinement, project_connection,
                          refine_graph)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--depth", type=int, default=8)
    ap.add_argument("--tol", type=float, default=1e-10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    graph = Graph([Edge.trig("a", [[0.2, -0.5, 0.1], [0.0, 0.0, 0.3]], [[0.4, 0.0], [1.0, -0.2]]),
                   Edge.polyline("b", [[2, 0], [2, 1], [3, 1]]),
                   Edge.segment("c", [3, -1], [4, 2])])
    A = ConnectionU1.from_expressions(["sin(x1*x2) + 0.3*x2", "cos(x1) - x1*x2^2"])
    base = project_connection(A, graph, args.tol)
    chain, current = identity_refinement(graph), graph
    print("depth,edges,max_gap")
    for depth in range(1, args.depth + 1):
        eid = current.ids[int(rng.integers(len(current.ids)))]
        step = refine_graph(current, eid, float(rng.uniform(0.2, 0.8)))
        chain, current = chain.compose(step), step.fine
        back = chain(project_connection(A, current, args.tol))
        gap = max(abs(back[e] - base[e]) for e in graph.ids)
        print(f"{depth},{len(current.edges)},{gap:.3e}")


if __name__ == "__main__":
    main()
