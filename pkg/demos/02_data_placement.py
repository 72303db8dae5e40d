"""Non-IID data placement: hub-focused, edge-focused and community schemes.

Run: python3 demos/02_data_placement.py
"""
import numpy as np

from decavg import (gen_barabasi_albert, gen_sbm, gen_synthetic, label_distribution,
                    partition_community, partition_focus, select_by_degree)

ds = gen_synthetic(classes=10, dims=16, per_class=300, spread=0.1, seed=0)
print(f"synthetic dataset: {len(ds)} samples, {ds.class_count} classes, dim {ds.dim}")

g = gen_barabasi_albert(20, 2, seed=3)
hubs = select_by_degree(g, 0.1, "highest", seed=0)
print(f"\nBA graph with 20 nodes; hubs (top 10% degree): {sorted(hubs)}")

plan = partition_focus(ds, g, hubs, g1_classes=[0, 1, 2, 3, 4],
                       g2_classes=[5, 6, 7, 8, 9], per_node_per_class=10, seed=0,
                       scheme="hub_focused")
table = label_distribution(plan).per_node
print("hub-focused placement: every node holds classes 0-4, only hubs hold 5-9")
for node in range(6):
    marker = "*" if node in hubs else " "
    print(f"  node {node}{marker}: {table[node].tolist()}")

pm = [[0.6 if i == j else 0.02 for j in range(4)] for i in range(4)]
sbm = gen_sbm([5, 5, 5, 5], pm, seed=5)
cplan = partition_community(ds, sbm, {0: [0, 1], 1: [2, 3], 2: [4, 5], 3: [6, 7]},
                            per_node_per_class=10, seed=1)
ctable = label_distribution(cplan)
print("\ncommunity placement (classes 8 and 9 assigned to nobody):")
for b in range(4):
    node = int(np.flatnonzero(sbm.blocks == b)[0])
    print(f"  community {b}, node {node}: {ctable.per_node[node].tolist()}")
print(f"  global label totals: {ctable.total.tolist()}")
