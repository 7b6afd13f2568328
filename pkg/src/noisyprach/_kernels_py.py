"""Pure numpy implementations of the neighbour-search kernels.

These mirror the compiled routines in ``_kernels_c.pyx`` one for one and are
used whenever the extension is not built (or ``NOISYPRACH_PURE_PYTHON=1``).
Ordering of neighbours is by (distance, reference index) in both backends.
"""

import numpy as np

_CHUNK_ELEMS = 4_000_000


def _sq_dists(queries, refs):
    diff = queries[:, None, :] - refs[None, :, :]
    return np.sum(diff * diff, axis=-1)


def knn_search(queries, refs, k, exclude_self=False):
    """Brute-force k nearest neighbours.

    Returns ``(dist, idx)`` of shape ``(n_queries, k)``, sorted by distance
    with ties broken by the lower reference index. With ``exclude_self`` the
    reference with the same row index as the query is skipped (queries and
    refs are then the same matrix).
    """
    queries = np.ascontiguousarray(queries, dtype=np.float64)
    refs = np.ascontiguousarray(refs, dtype=np.float64)
    nq, nr = queries.shape[0], refs.shape[0]
    avail = nr - 1 if exclude_self else nr
    if k > avail:
        raise ValueError(f"k={k} exceeds the {avail} available references")
    out_d = np.empty((nq, k))
    out_i = np.empty((nq, k), dtype=np.int64)
    if k == 0:
        return out_d, out_i
    step = max(1, _CHUNK_ELEMS // max(1, nr * queries.shape[1]))
    ref_idx = np.arange(nr)
    for start in range(0, nq, step):
        stop = min(nq, start + step)
        d2 = _sq_dists(queries[start:stop], refs)
        if exclude_self:
            rows = np.arange(stop - start)
            d2[rows, rows + start] = np.inf
        # stable sort keeps equal distances in reference-index order
        order = np.argsort(d2, axis=1, kind="stable")[:, :k]
        out_i[start:stop] = ref_idx[order]
        out_d[start:stop] = np.sqrt(np.take_along_axis(d2, order, axis=1))
    return out_d, out_i


def knn_merge(best_d, best_i, queries, new_refs, index_offset):
    """Merge ``new_refs`` into existing sorted k-best lists, in place.

    New references get indices ``index_offset + j``; they must all be larger
    than every index already present so that ties keep the older entry.
    """
    k = best_d.shape[1]
    if new_refs.shape[0] == 0 or k == 0:
        return
    d_new = np.sqrt(_sq_dists(np.ascontiguousarray(queries, dtype=np.float64),
                              np.ascontiguousarray(new_refs, dtype=np.float64)))
    i_new = np.broadcast_to(index_offset + np.arange(new_refs.shape[0]), d_new.shape)
    all_d = np.concatenate([best_d, d_new], axis=1)
    all_i = np.concatenate([best_i, i_new], axis=1)
    order = np.argsort(all_d, axis=1, kind="stable")[:, :k]
    best_d[:] = np.take_along_axis(all_d, order, axis=1)
    best_i[:] = np.take_along_axis(all_i, order, axis=1)


def active_knn_mean(cand_d, cand_i, active, k):
    """Mean distance to the first ``k`` candidates that are still active.

    ``cand_d``/``cand_i`` hold each row's sorted candidate neighbours (``-1``
    padding allowed). Rows with fewer than ``k`` active candidates get NaN so
    the caller can recompute them from scratch.
    """
    n = cand_d.shape[0]
    if n == 0:
        return np.empty(0)
    valid = cand_i >= 0
    alive = np.zeros(cand_i.shape, dtype=bool)
    alive[valid] = active[cand_i[valid]]
    rank = np.cumsum(alive, axis=1)
    take = alive & (rank <= k)
    sums = np.where(take, cand_d, 0.0).sum(axis=1)
    out = sums / k
    out[rank[:, -1] < k] = np.nan
    return out
