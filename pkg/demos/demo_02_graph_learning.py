"""
Learning a sensor graph from embeddings
=======================================

Every sensor owns an embedding vector. Cosine similarity between embeddings
ranks candidate neighbours and each node keeps its k best.
"""

import numpy as np

from kans import cosine_similarity_matrix, init_embeddings, neighbors, topk_adjacency

table = init_embeddings(6, 4, seed=0)
E = cosine_similarity_matrix(table.Z)
print(np.round(E, 2))

adj = topk_adjacency(E, k=2)
for i in range(6):
    print(f"node {i} listens to {neighbors(adj, i)}")

# rescaling an embedding leaves the graph alone
scaled = table.Z * np.array([[3.0], [0.1], [1.0], [7.0], [1.0], [2.0]])
print("same graph after rescaling:", np.array_equal(topk_adjacency(cosine_similarity_matrix(scaled), 2), adj))
