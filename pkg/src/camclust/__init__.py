"""Camera-aware clustering and contrastive embedding learning.

Library layout:

  metrics         distance/similarity primitives (Euclidean, exp-based,
                  Euler-cosine, k-reciprocal Jaccard)
  hdc             harmonic-discrepancy clustering
  baselines       k-means / DBSCAN and pseudo-label housekeeping
  camera_entropy  camera diversity of clusters and loss weights
  memory          cluster-proxy memory, weighted contrastive loss, updates
  embedder        normalized linear embedder trained by Adam
  training        the full epoch loop
  data            synthetic datasets and the dataset file format
  evaluation      mAP / CMC retrieval metrics and adjusted Rand index
  cli             command-line entry point
"""

__version__ = "0.1.0"
