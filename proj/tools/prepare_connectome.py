#!/usr/bin/env python3
"""Convert a weighted, directed synapse-count matrix into the binary,
symmetric, hollow dense CSV read by ``latentdist``.

Steps: w_ij + w_ji > 2 * threshold keeps an undirected edge (mean synapse
count above ``threshold``), the diagonal is cleared, and only the largest
connected component is kept (vertex order preserved).

    python3 tools/prepare_connectome.py data/raw/left_adjacency.csv \
        data/left_mushroom_body.csv
"""

import argparse

import networkx as nx
import numpy as np


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("source", help="whitespace-separated weighted matrix")
    parser.add_argument("output", help="binary dense CSV to write")
    parser.add_argument("--threshold", type=float, default=3.0,
                        help="minimum mean synapse count (exclusive)")
    args = parser.parse_args()

    weights = np.loadtxt(args.source)
    adj = ((weights + weights.T) > 2.0 * args.threshold).astype(int)
    np.fill_diagonal(adj, 0)

    graph = nx.from_numpy_array(adj)
    keep = sorted(max(nx.connected_components(graph), key=len))
    adj = adj[np.ix_(keep, keep)]

    np.savetxt(args.output, adj, fmt="%d", delimiter=",")
    print(f"{args.output}: n={adj.shape[0]} edges={adj.sum() // 2}")


if __name__ == "__main__":
    main()
