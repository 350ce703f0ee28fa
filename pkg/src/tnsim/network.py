"""Labeled tensor networks: path search, execution, and pre-simplification.

A network is a list of tensors with per-axis string labels plus an ordered
list of output labels.  A label shared by two or more tensors and absent from
the output is summed; the order in which pairs are contracted does not change
the value, only the cost.  Costs are modeled as

* flops: per step, the product of the extents of the distinct labels carried
  by the two operands (one fused multiply-add per output element per summed
  combination), summed over steps;
* memory: the maximum over steps of the bytes of all live tensors (complex128,
  16 bytes per entry), counting the step's result while it is being formed.

Strategies: ``greedy`` (pair score = result size minus freed input sizes),
``optimal`` (subset dynamic programming, <= 24 tensors), ``exhaustive``
(global search, <= 8 tensors).  For the flops objective the cost of a path
depends only on its contraction tree, so exhaustive and optimal share the
partition DP; for memory, step order matters, and small instances run a
shortest-path search over pool states while larger ones fall back to a
sequential-subtree DP (documented upper bound).
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass

import numpy as np

from .errors import InvalidNetwork, InputError, PathInvalid, TooLarge
from .tensor import DenseTensor

_BYTES_PER_ENTRY = 16  # complex128

OPTIMAL_MAX_TENSORS = 24
EXHAUSTIVE_MAX_TENSORS = 8
_FULL_DP_MAX = 14  # all-partition DP above this switches to connected growth
_DIJKSTRA_MAX = 9  # exact memory search above this uses the tree DP


@dataclass(frozen=True)
class TensorNetwork:
    """Tensors with labeled axes and an ordered output-label list."""

    tensors: tuple[DenseTensor, ...]
    labels: tuple[tuple[str, ...], ...]
    output_labels: tuple[str, ...]

    def __post_init__(self):
        tensors = tuple(self.tensors)
        labels = tuple(tuple(str(l) for l in ls) for ls in self.labels)
        output = tuple(str(l) for l in self.output_labels)
        object.__setattr__(self, "tensors", tensors)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "output_labels", output)
        if not tensors:
            raise InvalidNetwork("network needs at least one tensor")
        if len(labels) != len(tensors):
            raise InvalidNetwork(
                f"{len(tensors)} tensors but {len(labels)} label lists"
            )
        extents: dict[str, int] = {}
        for t, ls in zip(tensors, labels):
            if len(ls) != t.ndim:
                raise InvalidNetwork(
                    f"tensor of rank {t.ndim} got {len(ls)} labels {ls}"
                )
            if len(set(ls)) != len(ls):
                raise InvalidNetwork(f"repeated label within one tensor: {ls}")
            for lab, ext in zip(ls, t.shape):
                if extents.setdefault(lab, ext) != ext:
                    raise InvalidNetwork(
                        f"label '{lab}' has extents {extents[lab]} and {ext}"
                    )
        if len(set(output)) != len(output):
            raise InvalidNetwork(f"repeated output label in {output}")
        for lab in output:
            if lab not in extents:
                raise InvalidNetwork(f"output label '{lab}' not found in any tensor")

    @property
    def num_tensors(self) -> int:
        return len(self.tensors)

    def extent(self, label: str) -> int:
        for ls, t in zip(self.labels, self.tensors):
            if label in ls:
                return t.shape[ls.index(label)]
        raise InvalidNetwork(f"unknown label '{label}'")


@dataclass(frozen=True)
class ContractionPath:
    """Pairwise contraction plan.

    ``steps[k]`` names two live tensors (originals are 0..T-1; the result of
    step k becomes index T+k).  ``est_flops`` and ``est_peak_memory`` are the
    modeled costs of executing the steps in order.
    """

    steps: tuple[tuple[int, int], ...]
    est_flops: float
    est_peak_memory: float


# --- internal bookkeeping -----------------------------------------------------


class _Meta:
    """Label ids, extents, and per-tensor label sets for one network."""

    def __init__(self, net: TensorNetwork):
        ids: dict[str, int] = {}
        for ls in net.labels:
            for lab in ls:
                ids.setdefault(lab, len(ids))
        self.ids = ids
        self.extent = np.ones(len(ids), dtype=np.int64)
        for ls, t in zip(net.labels, net.tensors):
            for lab, ext in zip(ls, t.shape):
                self.extent[ids[lab]] = ext
        self.tensor_labels = [frozenset(ids[l] for l in ls) for ls in net.labels]
        self.output = frozenset(ids[l] for l in net.output_labels)
        holders = np.zeros(len(ids), dtype=np.int64)
        for labs in self.tensor_labels:
            for l in labs:
                holders[l] += 1
        # labels held by one tensor and absent from the output are only summed
        # during finalization, so searches must treat them as kept throughout
        self.keep_always = self.output | frozenset(
            int(l) for l in np.nonzero(holders == 1)[0] if int(l) not in self.output
        )
        self._size_cache: dict[frozenset, int] = {}

    def size_of(self, labs: frozenset) -> int:
        cached = self._size_cache.get(labs)
        if cached is None:
            cached = int(np.prod(self.extent[list(labs)])) if labs else 1
            self._size_cache[labs] = cached
        return cached

    def bytes_of(self, labs: frozenset) -> int:
        return self.size_of(labs) * _BYTES_PER_ENTRY


def _step_result_labels(
    la: frozenset, lb: frozenset, others: list[frozenset], output: frozenset
) -> frozenset:
    """Labels surviving a pairwise contraction, given the other live tensors."""
    union = la | lb
    alive_elsewhere = output.union(*others) if others else output
    return union & (alive_elsewhere | (la ^ lb))


def _path_costs(meta: _Meta, steps) -> tuple[float, float]:
    """Modeled (flops, peak bytes) of executing ``steps`` on the network."""
    live: dict[int, frozenset] = dict(enumerate(meta.tensor_labels))
    n_orig = len(meta.tensor_labels)
    flops = 0.0
    pool = sum(meta.bytes_of(l) for l in live.values())
    peak = float(pool)
    for k, (i, j) in enumerate(steps):
        if i == j or i not in live or j not in live:
            raise PathInvalid(f"step {k} references invalid pair ({i}, {j})")
        la, lb = live.pop(i), live.pop(j)
        others = list(live.values())
        result = _step_result_labels(la, lb, others, meta.output)
        flops += float(meta.size_of(la | lb))
        peak = max(peak, pool + meta.bytes_of(result))
        pool += meta.bytes_of(result) - meta.bytes_of(la) - meta.bytes_of(lb)
        live[n_orig + k] = result
    if len(live) != 1:
        raise PathInvalid(f"{len(live)} tensors remain after executing all steps")
    (final,) = live.values()
    # finalize may sum leftover axes and reorder into the output layout
    peak = max(peak, pool + meta.bytes_of(final & meta.output))
    return flops, peak


# --- greedy ------------------------------------------------------------------


def _greedy_steps(meta: _Meta) -> list[tuple[int, int]]:
    live: dict[int, frozenset] = dict(enumerate(meta.tensor_labels))
    origin = {i: i for i in live}  # smallest original index inside each live tensor
    next_id = len(meta.tensor_labels)
    steps: list[tuple[int, int]] = []
    while len(live) > 1:
        best = None
        for i, j in itertools.combinations(sorted(live), 2):
            la, lb = live[i], live[j]
            if not la & lb:
                continue
            others = [live[k] for k in live if k != i and k != j]
            result = _step_result_labels(la, lb, others, meta.output)
            delta = meta.size_of(result) - meta.size_of(la) - meta.size_of(lb)
            key = (delta, meta.size_of(result), (i, j))
            if best is None or key < best[0]:
                best = (key, i, j, result)
        if best is None:
            # only mutually disconnected pieces remain: outer-product the
            # components in input order
            i, j = sorted(live, key=lambda k: origin[k])[:2]
            others = [live[k] for k in live if k != i and k != j]
            result = _step_result_labels(live[i], live[j], others, meta.output)
        else:
            _, i, j, result = best
        origin[next_id] = min(origin[i], origin[j])
        del live[i], live[j]
        live[next_id] = result
        steps.append((i, j))
        next_id += 1
    return steps


# --- flops-optimal: contraction-tree DP ---------------------------------------


def _components(meta: _Meta) -> list[list[int]]:
    """Connected components of the label-sharing graph, by smallest member."""
    n = len(meta.tensor_labels)
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    holders: dict[int, int] = {}
    for i, labs in enumerate(meta.tensor_labels):
        for lab in labs:
            if lab in holders:
                ra, rb = find(holders[lab]), find(i)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
            else:
                holders[lab] = i
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [groups[r] for r in sorted(groups)]


def _subset_union(meta: _Meta, members: list[int], mask: int) -> frozenset:
    out = frozenset()
    for b, t in enumerate(members):
        if mask >> b & 1:
            out = out | meta.tensor_labels[t]
    return out


def _dp_trees(meta: _Meta, members: list[int], objective: str, connected_only: bool):
    """Subset DP over ``members``; returns (cost, tree) for the full set.

    Trees are ``index`` for leaves and ``(left, right)`` for merges (the left
    subtree is evaluated first).  For the flops objective the cost is the
    total step flops; for memory it is the sequential-evaluation peak in
    bytes, where merging A and B holds B's leaves while A is computed (and
    vice versa; both orders are tried).
    """
    n = len(members)
    full = (1 << n) - 1
    unions = {}
    inters = {}
    for mask in range(1, full + 1):
        low = mask & -mask
        rest = mask ^ low
        u = meta.tensor_labels[members[low.bit_length() - 1]]
        unions[mask] = u if not rest else u | unions[rest]
    for mask in range(1, full + 1):
        outside = unions[full ^ mask] if mask != full else frozenset()
        inters[mask] = unions[mask] & (outside | meta.keep_always)

    # dp value per mask; leaves first
    dp: dict[int, tuple[float, object]] = {}
    leaf_bytes: dict[int, float] = {}
    for b, t in enumerate(members):
        mask = 1 << b
        labs = meta.tensor_labels[t]
        leaf_bytes[mask] = float(meta.bytes_of(labs))
        dp[mask] = ((0.0 if objective == "flops" else leaf_bytes[mask]), t)

    def held_leaf_bytes(mask: int) -> float:
        return sum(
            float(meta.bytes_of(meta.tensor_labels[members[b]]))
            for b in range(n)
            if mask >> b & 1
        )

    def combine(ma: int, mb: int):
        a_cost, a_tree = dp[ma]
        b_cost, b_tree = dp[mb]
        if objective == "flops":
            step = float(meta.size_of(inters[ma] | inters[mb]))
            return a_cost + b_cost + step, (a_tree, b_tree)
        res_b = float(meta.bytes_of(inters[ma | mb]))
        ia, ib = float(meta.bytes_of(inters[ma])), float(meta.bytes_of(inters[mb]))
        merge_cost = ia + ib + res_b
        a_first = max(a_cost + held_leaf_bytes(mb), ia + b_cost, merge_cost)
        b_first = max(b_cost + held_leaf_bytes(ma), ib + a_cost, merge_cost)
        if a_first <= b_first:
            return a_first, (a_tree, b_tree)
        return b_first, (b_tree, a_tree)

    if not connected_only:
        for mask in range(1, full + 1):
            if mask & (mask - 1) == 0:
                continue
            low = mask & -mask
            sub = (mask - 1) & mask
            best = None
            while sub:
                if sub & low:  # canonical halves: left part contains lowest bit
                    other = mask ^ sub
                    if other:
                        cand = combine(sub, other)
                        if best is None or cand[0] < best[0]:
                            best = cand
                sub = (sub - 1) & mask
            dp[mask] = best
        return dp[full]

    # connected growth: only combine label-sharing disjoint subsets
    by_size: list[list[int]] = [[] for _ in range(n + 1)]
    for b in range(n):
        by_size[1].append(1 << b)
    for size in range(2, n + 1):
        seen = set()
        for s1 in range(1, size // 2 + 1):
            s2 = size - s1
            for ma in by_size[s1]:
                for mb in by_size[s2]:
                    if ma & mb or (s1 == s2 and ma > mb):
                        continue
                    if not inters[ma] & inters[mb]:
                        continue
                    mask = ma | mb
                    cand = combine(ma, mb)
                    if mask not in dp or cand[0] < dp[mask][0]:
                        dp[mask] = cand
                    if mask not in seen:
                        seen.add(mask)
                        by_size[size].append(mask)
        by_size[size].sort()
    if full not in dp:
        raise InvalidNetwork("component is not connected")  # pragma: no cover
    return dp[full]


def _flatten_tree(tree, start_id: int, steps: list[tuple[int, int]]) -> int:
    """Emit post-order steps; returns the live index holding the result."""
    if isinstance(tree, int):
        return tree
    left, right = tree
    li = _flatten_tree(left, start_id, steps)
    ri = _flatten_tree(right, start_id, steps)
    steps.append((li, ri))
    return start_id + len(steps) - 1


def _dp_steps(meta: _Meta, objective: str) -> list[tuple[int, int]]:
    n = len(meta.tensor_labels)
    steps: list[tuple[int, int]] = []
    if n <= _FULL_DP_MAX:
        _, tree = _dp_trees(meta, list(range(n)), objective, connected_only=False)
        _flatten_tree(tree, n, steps)
        return steps
    # big instance: optimal tree per component, components joined in input order
    roots = []
    for members in _components(meta):
        if len(members) == 1:
            roots.append(members[0])
        else:
            _, tree = _dp_trees(meta, members, objective, connected_only=True)
            roots.append(tree)
    tree = roots[0]
    for r in roots[1:]:
        tree = (tree, r)
    _flatten_tree(tree, n, steps)
    return steps


# --- memory-exact: shortest path over pool states ------------------------------


def _dijkstra_memory_steps(meta: _Meta) -> list[tuple[int, int]]:
    """Exact minimum-peak-memory ordering (small tensor counts only)."""
    n = len(meta.tensor_labels)
    full = (1 << n) - 1

    union_cache: dict[int, frozenset] = {}

    def union_of(mask: int) -> frozenset:
        got = union_cache.get(mask)
        if got is None:
            got = _subset_union(meta, list(range(n)), mask)
            union_cache[mask] = got
        return got

    def inter_of(mask: int) -> frozenset:
        outside = union_of(full ^ mask) if mask != full else frozenset()
        return union_of(mask) & (outside | meta.keep_always)

    start = tuple(1 << i for i in range(n))
    start_pool = sum(meta.bytes_of(inter_of(m)) for m in start)
    best: dict[tuple, float] = {start: float(start_pool)}
    counter = itertools.count()
    heap = [(float(start_pool), next(counter), start, [])]
    while heap:
        peak, _, state, merges = heapq.heappop(heap)
        if peak > best.get(state, float("inf")):
            continue
        if len(state) == 1:
            # realize merges as live-index steps
            live = {1 << i: i for i in range(n)}
            steps = []
            for k, (ma, mb) in enumerate(merges):
                steps.append((live.pop(ma), live.pop(mb)))
                live[ma | mb] = n + k
            return steps
        pool = sum(meta.bytes_of(inter_of(m)) for m in state)
        for a in range(len(state)):
            for b in range(a + 1, len(state)):
                ma, mb = state[a], state[b]
                merged = ma | mb
                new_peak = max(peak, pool + meta.bytes_of(inter_of(merged)))
                new_state = tuple(
                    sorted([m for m in state if m != ma and m != mb] + [merged])
                )
                if new_peak < best.get(new_state, float("inf")):
                    best[new_state] = new_peak
                    heapq.heappush(
                        heap, (new_peak, next(counter), new_state, merges + [(ma, mb)])
                    )
    raise InvalidNetwork("memory search found no complete path")  # pragma: no cover


# --- public API -----------------------------------------------------------------


def optimize_path(
    net: TensorNetwork, strategy: str = "greedy", objective: str = "flops"
) -> ContractionPath:
    """Search for a pairwise contraction order.

    ``greedy`` works at any size; ``optimal`` (subset DP) is guarded at 24
    tensors and ``exhaustive`` at 8.  Whenever both run, exhaustive and
    optimal attain the same cost.  Disconnected networks contract each
    component first, then outer-product the pieces in input order.
    """
    if strategy not in ("greedy", "optimal", "exhaustive"):
        raise InputError(f"unknown strategy '{strategy}'")
    if objective not in ("flops", "memory"):
        raise InputError(f"unknown objective '{objective}'")
    meta = _Meta(net)
    n = net.num_tensors
    if strategy == "optimal" and n > OPTIMAL_MAX_TENSORS:
        raise TooLarge(f"optimal search capped at {OPTIMAL_MAX_TENSORS} tensors, got {n}")
    if strategy == "exhaustive" and n > EXHAUSTIVE_MAX_TENSORS:
        raise TooLarge(
            f"exhaustive search capped at {EXHAUSTIVE_MAX_TENSORS} tensors, got {n}"
        )

    if n == 1:
        steps: list[tuple[int, int]] = []
    elif strategy == "greedy":
        steps = _greedy_steps(meta)
    elif objective == "flops":
        # cost depends only on the tree, so the partition DP is exact
        steps = _dp_steps(meta, "flops")
    elif n <= _DIJKSTRA_MAX:
        steps = _dijkstra_memory_steps(meta)
    else:
        steps = _dp_steps(meta, "memory")

    flops, peak = _path_costs(meta, steps)
    return ContractionPath(tuple(steps), flops, peak)


def estimate_path(net: TensorNetwork, steps) -> ContractionPath:
    """Cost an explicit step list against ``net`` (validates it on the way)."""
    meta = _Meta(net)
    steps = tuple((int(i), int(j)) for i, j in steps)
    if len(steps) != net.num_tensors - 1:
        raise PathInvalid(
            f"need {net.num_tensors - 1} steps for {net.num_tensors} tensors,"
            f" got {len(steps)}"
        )
    flops, peak = _path_costs(meta, steps)
    return ContractionPath(steps, flops, peak)


def execute_path(
    net: TensorNetwork, path: ContractionPath, instrument: bool = False
):
    """Contract the network along ``path``.

    Returns the result tensor with axes ordered per ``output_labels``; with
    ``instrument=True`` returns ``(tensor, stats)`` where stats carry the
    observed peak bytes of live arrays for checking against the estimate.
    """
    meta = _Meta(net)
    ids = meta.ids
    live: dict[int, tuple[np.ndarray, tuple[int, ...]]] = {
        i: (t.array, tuple(ids[l] for l in ls))
        for i, (t, ls) in enumerate(zip(net.tensors, net.labels))
    }
    n = net.num_tensors
    steps = tuple(path.steps)
    if len(steps) != n - 1:
        raise PathInvalid(f"need {n - 1} steps for {n} tensors, got {len(steps)}")
    pool_bytes = sum(arr.nbytes for arr, _ in live.values())
    obs_peak = pool_bytes
    for k, (i, j) in enumerate(steps):
        if i == j:
            raise PathInvalid(f"step {k} contracts tensor {i} with itself")
        if i not in live or j not in live:
            raise PathInvalid(f"step {k} references missing or consumed tensor ({i}, {j})")
        (arr_a, labs_a) = live.pop(i)
        (arr_b, labs_b) = live.pop(j)
        others = [frozenset(l) for _, l in live.values()]
        keep = _step_result_labels(
            frozenset(labs_a), frozenset(labs_b), others, meta.output
        )
        out_labs = tuple(l for l in labs_a if l in keep) + tuple(
            l for l in labs_b if l in keep and l not in labs_a
        )
        # einsum sublist ids must stay below 52, so remap per call
        local: dict[int, int] = {}
        for l in labs_a + labs_b:
            local.setdefault(l, len(local))
        arr = np.einsum(
            arr_a,
            [local[l] for l in labs_a],
            arr_b,
            [local[l] for l in labs_b],
            [local[l] for l in out_labs],
        )
        obs_peak = max(obs_peak, pool_bytes + arr.nbytes)
        pool_bytes += arr.nbytes - arr_a.nbytes - arr_b.nbytes
        live[n + k] = (arr, out_labs)
    (arr, labs) = next(iter(live.values()))
    local = {l: k for k, l in enumerate(labs)}
    arr = np.einsum(
        arr, [local[l] for l in labs], [local[ids[l]] for l in net.output_labels]
    )
    result = DenseTensor(arr)
    if instrument:
        return result, {"observed_peak_bytes": obs_peak}
    return result


def simplify_network(net: TensorNetwork) -> TensorNetwork:
    """Cheap value-preserving reductions before path search.

    Applied to fixpoint: (a) absorb tensors all of whose labels appear on one
    other tensor; (b) fuse rank <= 2 tensors into a neighbor over a summable
    shared label (e.g. chains of single-qubit gate matrices); (c) squeeze
    extent-1 summed labels.  Tensor count never increases and any valid path
    on the result gives the same output.
    """
    arrays = [t.array for t in net.tensors]
    labels = [list(ls) for ls in net.labels]
    output = set(net.output_labels)

    def count(lab: str) -> int:
        return sum(lab in ls for ls in labels)

    def merge(dst: int, src: int) -> None:
        ids: dict[str, int] = {}
        for ls in (labels[dst], labels[src]):
            for lab in ls:
                ids.setdefault(lab, len(ids))
        shared = set(labels[dst]) & set(labels[src])
        summed = {
            lab for lab in shared if lab not in output and count(lab) == 2
        }
        keep = [l for l in labels[dst] if l not in summed] + [
            l for l in labels[src] if l not in summed and l not in labels[dst]
        ]
        arr = np.einsum(
            arrays[dst],
            [ids[l] for l in labels[dst]],
            arrays[src],
            [ids[l] for l in labels[src]],
            [ids[l] for l in keep],
        )
        arrays[dst], labels[dst] = arr, keep
        del arrays[src], labels[src]

    def squeeze_pass() -> bool:
        changed = False
        for i, ls in enumerate(labels):
            drop = [
                l for l in ls if l not in output and arrays[i].shape[ls.index(l)] == 1
            ]
            if drop:
                axes = tuple(ls.index(l) for l in drop)
                arrays[i] = arrays[i].reshape(
                    tuple(e for k, e in enumerate(arrays[i].shape) if k not in axes)
                )
                labels[i] = [l for l in ls if l not in drop]
                changed = True
        return changed

    def absorb_pass() -> bool:
        if len(arrays) < 2:
            return False
        for i in range(len(arrays)):
            for j in range(len(arrays)):
                if i == j or not labels[i]:
                    continue
                if set(labels[i]) <= set(labels[j]):
                    merge(j, i)
                    return True
        return False

    def chain_pass() -> bool:
        if len(arrays) < 2:
            return False
        for i in range(len(arrays)):
            if len(labels[i]) > 2:
                continue
            for j in range(len(arrays)):
                if i == j:
                    continue
                shared = set(labels[i]) & set(labels[j])
                if any(l not in output and count(l) == 2 for l in shared):
                    merge(j, i)
                    return True
        return False

    while True:
        if squeeze_pass():
            continue
        if absorb_pass():
            continue
        if chain_pass():
            continue
        break
    return TensorNetwork(
        tuple(DenseTensor(a) for a in arrays),
        tuple(tuple(ls) for ls in labels),
        net.output_labels,
    )


def network_from_dict(data: dict) -> TensorNetwork:
    """Build a network from the JSON layout used by the command line.

    ``{"tensors": [{"labels": ["i","j"], "shape": [2,3], "data": [...]}, ...],
    "output": ["i","k"]}`` — ``data`` is flat row-major, either numbers or
    ``[re, im]`` pairs; omitted data defaults to all-ones.
    """
    from .errors import ParseError

    try:
        specs = data["tensors"]
        output = tuple(str(l) for l in data.get("output", ()))
        tensors = []
        labels = []
        for s in specs:
            shape = tuple(int(e) for e in s["shape"])
            labels.append(tuple(str(l) for l in s["labels"]))
            if "data" in s:
                raw = s["data"]
                vals = [
                    complex(v[0], v[1]) if isinstance(v, (list, tuple)) else complex(v)
                    for v in raw
                ]
                arr = np.array(vals, dtype=complex).reshape(shape)
            else:
                arr = np.ones(shape, dtype=complex)
            tensors.append(DenseTensor(arr))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed network document: {exc!r}") from exc
    return TensorNetwork(tuple(tensors), tuple(labels), output)
