import numpy as np
from sklearn.cluster import KMeans

from busybot.board.spec import action_at
from busybot.exceptions import ContractError

KMEANS_ITERATIONS = 20


def cluster_hot_cells(affordance, tau, k):
    """Highest-affordance cell of every non-empty K-means cluster over cells above ``tau``.

    Initial centers are the ``k`` hottest cells (ties by row-major index), so
    the clustering is deterministic.
    """
    if not 0.0 < tau < 1.0:
        raise ContractError(f"tau must lie in (0, 1), got {tau}")
    if k < 1:
        raise ContractError(f"k must be >= 1, got {k}")
    affordance = np.asarray(affordance)
    flat = affordance.reshape(-1)
    hot = np.flatnonzero(flat > tau)
    if hot.size == 0:
        return []
    order = hot[np.argsort(-flat[hot], kind="stable")]
    coords = np.column_stack(np.unravel_index(hot, affordance.shape)).astype(np.float64)
    clusters = min(k, hot.size)
    if clusters == 1:
        return [tuple(int(v) for v in np.unravel_index(order[0], affordance.shape))]
    init = np.column_stack(np.unravel_index(order[:clusters], affordance.shape)).astype(np.float64)
    kmeans = KMeans(n_clusters=clusters, init=init, n_init=1, max_iter=KMEANS_ITERATIONS,
                    algorithm="lloyd", tol=0.0)
    labels = kmeans.fit_predict(coords)
    cells = []
    for label in range(clusters):
        members = hot[labels == label]
        if members.size == 0:
            continue
        best = members[np.argsort(-flat[members], kind="stable")[0]]
        cells.append(tuple(int(v) for v in np.unravel_index(best, affordance.shape)))
    return sorted(cells)


def extract_action_candidates(policy, obs, spec, tau=0.7, k=8):
    """One candidate action per affordance cluster, with its best-scored direction."""
    cells = cluster_hot_cells(policy.affordance(obs), tau, k)
    return [
        action_at(spec, cell, int(np.argmax(policy.direction_scores(obs, cell))), obs.depth)
        for cell in cells
    ]
