"""Sequence identity, greedy clustering, and identity-threshold OOD splits.

Identity is global Needleman-Wunsch (match=+1, mismatch=0, linear gap=-1)
with identical-column count divided by gap-inclusive alignment length; the
gap-inclusive denominator keeps identities conservative, which makes the
split guarantees stricter.  The alignment kernel has a compiled backend
(enzood._alignment_cy) and a pure-Python fallback selected at import; set
ENZOOD_ALIGNMENT_BACKEND to "cython", "python", or "auto" to override.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from . import _alignment_py
from .errors import DuplicateIdError, InfeasibleSplitError

try:
    from . import _alignment_cy
except ImportError:
    _alignment_cy = None

ALIGNMENT_BACKEND_ENV = "ENZOOD_ALIGNMENT_BACKEND"


def _select_backend():
    choice = os.environ.get(ALIGNMENT_BACKEND_ENV, "auto")
    if choice == "python":
        return _alignment_py
    if choice == "cython":
        if _alignment_cy is None:
            raise ImportError(
                "compiled alignment backend requested via "
                f"{ALIGNMENT_BACKEND_ENV} but it is not built"
            )
        return _alignment_cy
    if choice == "auto":
        return _alignment_cy if _alignment_cy is not None else _alignment_py
    raise ValueError(
        f"{ALIGNMENT_BACKEND_ENV} must be 'auto', 'python', or 'cython', got {choice!r}"
    )


_backend = _select_backend()


def alignment_backend() -> str:
    """Name of the alignment kernel in use: 'cython' or 'python'."""
    return _backend.BACKEND_NAME


def alignment_stats(a: str, b: str) -> tuple[int, int, int]:
    """(score, matches, alignment_length) of the canonical global alignment.

    Tie-break during traceback: diagonal, then up (gap in ``b``), then
    left (gap in ``a``).
    """
    if not a or not b:
        raise ValueError("sequences must be non-empty")
    return _backend.align_stats(a.encode("ascii"), b.encode("ascii"))


def global_identity(a: str, b: str) -> float:
    """Fraction of identical aligned columns over the alignment length.

    Gap columns count toward the length, so identity is in [0, 1] and
    equals 1.0 only for exactly identical sequences.
    """
    _, matches, length = alignment_stats(a, b)
    return matches / length


def pairwise_identity_matrix(seqs) -> np.ndarray:
    """Symmetric all-pairs identity matrix with unit diagonal."""
    encoded = [s.encode("ascii") for s in seqs]
    if any(len(e) == 0 for e in encoded):
        raise ValueError("sequences must be non-empty")
    n = len(encoded)
    matrix = np.ones((n, n), dtype=float)
    for i in range(n):
        for j in range(i + 1, n):
            _, matches, length = _backend.align_stats(encoded[i], encoded[j])
            matrix[i, j] = matrix[j, i] = matches / length
    return matrix


def max_identity_to_train(q: str, train) -> float:
    """Highest identity between ``q`` and any training sequence."""
    train = list(train)
    if not train:
        raise ValueError("train set must be non-empty")
    return max(global_identity(q, t) for t in train)


# ---------------------------------------------------------------------------
# Clustering


def greedy_cluster(seqs, threshold: float, identity_fn=None) -> list[list[int]]:
    """Incremental representative clustering.

    Sequences are processed in descending length order (ties by input
    position); each joins the first cluster whose representative (its
    founding member) has identity strictly above ``threshold``, else it
    founds a new cluster.  Returns clusters in founding order as lists of
    input indices, founding member first.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    seqs = list(seqs)
    if identity_fn is None:
        cache: dict[tuple[int, int], float] = {}

        def identity_fn(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                cache[key] = global_identity(seqs[i], seqs[j])
            return cache[key]

    order = sorted(range(len(seqs)), key=lambda i: (-len(seqs[i]), i))
    clusters: list[list[int]] = []
    for idx in order:
        for members in clusters:
            if identity_fn(idx, members[0]) > threshold:
                members.append(idx)
                break
        else:
            clusters.append([idx])
    return clusters


def _merge_violating_clusters(clusters, matrix, threshold):
    """Union clusters until no cross-cluster pair exceeds the threshold.

    Representative clustering bounds member-to-representative identity
    only; member-to-member identity across clusters can still exceed the
    threshold, so clusters are transitively merged along every violating
    pair.  After the closure the split invariant holds by construction.
    """
    n_clusters = len(clusters)
    parent = list(range(n_clusters))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    cluster_of = {}
    for ci, members in enumerate(clusters):
        for u in members:
            cluster_of[u] = ci
    iu, ju = np.triu_indices(matrix.shape[0], k=1)
    for i, j in zip(iu[matrix[iu, ju] > threshold], ju[matrix[iu, ju] > threshold]):
        ra, rb = find(cluster_of[int(i)]), find(cluster_of[int(j)])
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    merged: dict[int, list[int]] = {}
    for ci, members in enumerate(clusters):
        merged.setdefault(find(ci), []).extend(members)
    return [sorted(members) for _, members in sorted(merged.items())]


# ---------------------------------------------------------------------------
# Splits


@dataclass(frozen=True)
class OodSplit:
    """Record ids partitioned so no test enzyme resembles any train enzyme
    beyond the identity threshold."""

    threshold: float
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]

    def __post_init__(self):
        overlap = set(self.train_ids) & set(self.test_ids)
        if overlap:
            raise ValueError(f"ids in both halves: {sorted(overlap)[:3]}")


def build_ood_splits(records, thresholds, test_fraction: float, seed: int) -> list[OodSplit]:
    """One OodSplit per threshold over ``records`` (objects with ``id`` and
    ``sequence`` attributes).

    Per threshold: cluster the unique sequences, merge any clusters with a
    cross pair above the threshold, then move whole clusters into test,
    smallest record count first (ties shuffled by ``seed``), until test
    holds at least ``test_fraction`` of the records.  Test sets are drawn
    independently per threshold.  Raises InfeasibleSplitError when one
    cluster alone exceeds the 1 - test_fraction train capacity.
    """
    records = list(records)
    if not records:
        raise ValueError("no records")
    if not 0.0 < test_fraction <= 0.5:
        raise ValueError(f"test_fraction must be in (0, 0.5], got {test_fraction}")
    for thr in thresholds:
        if not 0.0 < thr <= 1.0:
            raise ValueError(f"thresholds must be in (0, 1], got {thr}")
    ids = [r.id for r in records]
    if len(set(ids)) != len(ids):
        raise DuplicateIdError("record ids must be unique for split construction")
    seqs = [r.sequence for r in records]

    uniq: list[str] = []
    uniq_index: dict[str, int] = {}
    for s in seqs:
        if s not in uniq_index:
            uniq_index[s] = len(uniq)
            uniq.append(s)
    rec_u = [uniq_index[s] for s in seqs]
    matrix = pairwise_identity_matrix(uniq)
    n_records = len(records)

    splits = []
    for thr in thresholds:
        clusters = greedy_cluster(uniq, thr, identity_fn=lambda i, j: matrix[i, j])
        clusters = _merge_violating_clusters(clusters, matrix, thr)
        member_cluster = {}
        for k, members in enumerate(clusters):
            for u in members:
                member_cluster[u] = k
        rec_count = [0] * len(clusters)
        for u in rec_u:
            rec_count[member_cluster[u]] += 1
        capacity = (1.0 - test_fraction) * n_records + 1e-9
        if max(rec_count) > capacity:
            raise InfeasibleSplitError(
                f"threshold {thr}: largest cluster holds {max(rec_count)} of "
                f"{n_records} records, exceeding train capacity {capacity:.1f}"
            )
        required = math.ceil(test_fraction * n_records - 1e-9)
        # fresh generator per threshold: identical clusterings at two
        # thresholds then pick identical test clusters, which keeps
        # realized test difficulty monotone across thresholds
        rng = np.random.default_rng(seed)
        shuffle_rank = rng.permutation(len(clusters))
        order = sorted(range(len(clusters)), key=lambda k: (rec_count[k], shuffle_rank[k]))
        test_clusters = set()
        count = 0
        for k in order:
            if count >= required:
                break
            test_clusters.add(k)
            count += rec_count[k]
        test_uniq = {
            u for k in test_clusters for u in clusters[k]
        }
        test_ids = tuple(ids[r] for r in range(n_records) if rec_u[r] in test_uniq)
        train_ids = tuple(ids[r] for r in range(n_records) if rec_u[r] not in test_uniq)
        train_uniq = [u for u in range(len(uniq)) if u not in test_uniq]
        worst = _max_cross_identity(matrix, sorted(test_uniq), train_uniq)
        if worst > thr:
            raise RuntimeError(
                f"split construction bug: cross identity {worst} above {thr}"
            )
        splits.append(OodSplit(threshold=thr, train_ids=train_ids, test_ids=test_ids))
    return splits


def _max_cross_identity(matrix, test_uniq, train_uniq) -> float:
    if not test_uniq or not train_uniq:
        return 0.0
    sub = matrix[np.ix_(test_uniq, train_uniq)]
    return float(sub.max())


def max_cross_identity(split: OodSplit, id_to_seq) -> float:
    """Exhaustive check value: highest test-to-train identity in ``split``."""
    test_seqs = sorted({id_to_seq[i] for i in split.test_ids})
    train_seqs = sorted({id_to_seq[i] for i in split.train_ids})
    best = 0.0
    for t in test_seqs:
        for r in train_seqs:
            best = max(best, global_identity(t, r))
    return best


# ---------------------------------------------------------------------------
# Split files


def write_split_file(path, splits, header_lines=()) -> None:
    """Plain text, one record per line: id, split half, threshold.

    header_lines are extra comment strings (written with a '# ' prefix)
    so callers can embed provenance such as the seed and config hash.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# columns: record_id\tsplit\tthreshold\n")
        fh.write("# test_sets: independent_per_threshold\n")
        for line in header_lines:
            fh.write(f"# {line}\n")
        for split in splits:
            for rid in split.train_ids:
                fh.write(f"{rid}\ttrain\t{split.threshold!r}\n")
            for rid in split.test_ids:
                fh.write(f"{rid}\ttest\t{split.threshold!r}\n")


def read_split_file(path) -> list[OodSplit]:
    groups: dict[float, tuple[list[str], list[str]]] = {}
    order: list[float] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3 or parts[1] not in ("train", "test"):
                raise ValueError(f"{path}:{lineno}: malformed split line {line!r}")
            thr = float(parts[2])
            if thr not in groups:
                groups[thr] = ([], [])
                order.append(thr)
            groups[thr][0 if parts[1] == "train" else 1].append(parts[0])
    return [
        OodSplit(threshold=thr, train_ids=tuple(groups[thr][0]), test_ids=tuple(groups[thr][1]))
        for thr in order
    ]
