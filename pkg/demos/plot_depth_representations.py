"""
Depth-based vertex representations
==================================

Each vertex is described by how the entropy of its neighbourhood grows as
the neighbourhood widens. Here we look at a small ring with a tail.
"""

import numpy as np

from avcn import Graph, db_representations, expansion_subgraph, subgraph_entropy

# a 6-ring with a 3-vertex tail hanging off vertex 0
edges = [(i, (i + 1) % 6) for i in range(6)] + [(0, 6), (6, 7), (7, 8)]
g = Graph.from_edges(9, edges)
print("degrees:", g.degrees)

###############################################################################
# The 1-hop expansion subgraph of vertex 0 is a star with three leaves.

sub = expansion_subgraph(g, 0, 1)
print("vertices:", sub.vertex_count, "edges:", sorted(sub.edges))
print("entropy: %.6f" % subgraph_entropy(sub))  # degrees 3,1,1,1

###############################################################################
# Stacking depths 1..K gives an n x K matrix. Once a ball covers the whole
# component the entropy stops changing, so far columns repeat.

R = db_representations(g, 5)
np.set_printoptions(precision=4, suppress=True)
print(R)

###############################################################################
# Relabelling the vertices only permutes the rows.

perm = np.random.default_rng(0).permutation(9)
Rp = db_representations(g.permute(perm), 5)
print("equivariant:", np.array_equal(Rp[perm], R))
