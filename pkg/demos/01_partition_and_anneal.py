"""
Core-halo partitioning of a sparse system
=========================================

A core-halo partition splits the vertices into disjoint cores. Each core is
extended by its halo, the neighbors it needs to evaluate its rows. The cost
of one partitioned multiplication grows with the cube of each part's size,
so we score a partition by the sum of cubes of (core + halo).
"""

from halosp2 import (
    SAConfig,
    bfs_block_partition,
    build_ch_partition,
    communication_volume,
    partition_metrics,
    sa_refine,
    sparsity_graph,
)
from halosp2.generators import random_geometric

# a random geometric system: neighbors are points within a fixed radius
H = random_geometric(600, seed=0)
G = sparsity_graph(H)
print(f"{G.n} vertices, {G.n_edges} edges")

# breadth-first blocks give connected cores of almost equal size
P = build_ch_partition(G, bfs_block_partition(G, 8, seed=0))
print("core sizes:", P.core_sizes.tolist())
print("halo sizes:", P.halo_sizes.tolist())

m = partition_metrics(P)
print(f"sum of cubes {m.sum_cubes}, normalized {m.nno:.4f}, spread {m.mmpn:.4f}")

# halo sizes add up to the communication volume of the core assignment
print("communication volume:", communication_volume(G, P.owner), "=", int(P.halo_sizes.sum()))

# simulated annealing moves halo vertices into neighboring cores;
# the best partition seen is returned
res = sa_refine(G, P, SAConfig(iterations=500, seed=1))
accepted = sum(step.accepted for step in res.trace)
print(f"annealing: {res.initial_objective} -> {res.best_objective} ({accepted} moves accepted)")
print("refined part sizes:", res.partition.part_sizes.tolist())
