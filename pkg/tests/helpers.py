"""Shared test builders and an independent brute-force merge oracle.

The oracle re-derives cells, segmentations, trailing prediction, the
conciseness guard, and the four-term score from their definitions using
plain dicts and sets, so it shares no code path with the engine it checks.
"""

from __future__ import annotations

from itertools import combinations

from critiqueplan.model import (
    ActionRef,
    Critique,
    GoalRef,
    OmittedActions,
    Severity,
    SeverityLevel,
    Step,
    Urgency,
)


def goal(gid: str, noun: str | None = None) -> GoalRef:
    noun = noun or gid.replace("_", " ")
    return GoalRef(id=gid, gerund_phrase=f"treating {noun}", short_infinitive=f"treat {noun}")


def omitted(
    cid: str,
    order: int,
    steps: list[tuple[str, list[GoalRef]]],
    level: SeverityLevel = SeverityLevel.CAUTION,
    urgency: Urgency = Urgency.IMMEDIATELY,
) -> Critique:
    return Critique(
        id=cid,
        order_index=order,
        kind=OmittedActions(
            severity=Severity(level, urgency),
            steps=tuple(Step(action=ActionRef.of(a), goals=tuple(gs)) for a, gs in steps),
        ),
    )


# ---------------------------------------------------------------------------
# Oracle


def _critique_data(critique: Critique) -> list[tuple[str, frozenset[str]]]:
    kind = critique.kind
    assert isinstance(kind, OmittedActions)
    return [(s.action.id, frozenset(g.id for g in s.goals)) for s in kind.steps]


def _oracle_cells(subset: list[Critique]) -> tuple[list[list[str]], list[frozenset[str]], set[tuple[int, int]]] | None:
    """Cells, their signatures, and between-cell edges for a subset merge."""
    if len(subset) == 1:
        cells: list[list[str]] = []
        sigs: list[frozenset[str]] = []
        for aid, sig in _critique_data(subset[0]):
            if cells and sigs[-1] == sig:
                cells[-1].append(aid)
            else:
                cells.append([aid])
                sigs.append(sig)
        return cells, sigs, set()

    first: dict[str, int] = {}
    union_sig: dict[str, set[str]] = {}
    action_edges: set[tuple[str, str]] = set()
    pos = 0
    for critique in sorted(subset, key=lambda c: c.order_index):
        seq = []
        for aid, sig in _critique_data(critique):
            first.setdefault(aid, pos)
            union_sig.setdefault(aid, set()).update(sig)
            seq.append(aid)
            pos += 1
        for i in range(len(seq)):
            for j in range(i + 1, len(seq)):
                if seq[i] != seq[j]:
                    action_edges.add((seq[i], seq[j]))

    def sort_key(node):
        members = node if isinstance(node, tuple) else (node,)
        return min(first[x] for x in members)

    def topo(nodes: list, edges: set) -> list | None:
        order = []
        remaining = set(nodes)
        while remaining:
            free = [n for n in remaining if not any(a in remaining and b == n for a, b in edges)]
            if not free:
                return None
            free.sort(key=sort_key)
            order.append(free[0])
            remaining.discard(free[0])
        return order

    actions = sorted(first, key=first.__getitem__)
    action_order = topo(actions, action_edges)
    conflicting = action_order is None
    if action_order is None:
        # Genuinely conflicting orders: fall back to emission order.
        action_order = actions

    def layout(groups: list[list[str]]):
        owner = {aid: i for i, g in enumerate(groups) for aid in g}
        edges = {(owner[a], owner[b]) for a, b in action_edges if owner[a] != owner[b]}
        keyed = [tuple(g) for g in groups]
        order = topo(keyed, {(keyed[a], keyed[b]) for a, b in edges})
        if order is None:
            if not conflicting:
                return None
            order = sorted(keyed, key=sort_key)
        ordered = [list(g) for g in order]
        owner2 = {aid: i for i, g in enumerate(ordered) for aid in g}
        edges2 = {(owner2[a], owner2[b]) for a, b in action_edges if owner2[a] != owner2[b]}
        sigs = [frozenset(union_sig[g[0]]) for g in ordered]
        return ordered, sigs, edges2

    grouped: dict[frozenset[str], list[str]] = {}
    for aid in action_order:
        grouped.setdefault(frozenset(union_sig[aid]), []).append(aid)
    full = layout(list(grouped.values()))
    if full is not None:
        return full

    runs: list[list[str]] = []
    prev = None
    for aid in action_order:
        sig = frozenset(union_sig[aid])
        if runs and sig == prev:
            runs[-1].append(aid)
        else:
            runs.append([aid])
        prev = sig
    result = layout(runs)
    assert result is not None
    return result


def _oracle_splits(n: int):
    if n == 0:
        return
    for k in (1, 2, 3):
        if k > n:
            continue
        for cuts in combinations(range(1, n), k - 1):
            bounds = [0, *cuts, n]
            yield [(bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1)]


def oracle_best_total(group: list[Critique], w1: float, w2: float, w3: float, w4: float) -> float:
    """Maximum candidate total over every subset and feasible segmentation."""
    best: float | None = None
    indices = list(range(len(group)))
    for size in range(1, len(group) + 1):
        for subset_idx in combinations(indices, size):
            subset = [group[i] for i in subset_idx]
            excluded = [group[i] for i in indices if i not in subset_idx]
            built = _oracle_cells(subset)
            if built is None:
                continue
            cells, sigs, edges = built

            body_actions = {aid for cell in cells for aid in cell}
            trailing = []
            for critique in excluded:
                data = _critique_data(critique)
                step_sigs = {sig for _, sig in data}
                if len(step_sigs) != 1:
                    continue
                shared = [aid for aid, _ in data if aid in body_actions]
                outside = [aid for aid, _ in data if aid not in body_actions]
                if len(shared) == 1 and len(shared) + len(outside) == len(data):
                    trailing.append((critique, shared[0], outside, next(iter(step_sigs))))

            covered = subset + [t[0] for t in trailing]
            orig_mentions: dict[str, int] = {}
            base_np = 0
            for critique in covered:
                data = _critique_data(critique)
                for aid, _ in data:
                    orig_mentions[aid] = orig_mentions.get(aid, 0) + 1
                base_cells: list[frozenset[str]] = []
                prev = None
                for _, sig in data:
                    if prev is None or sig != prev:
                        base_cells.append(sig)
                    prev = sig
                base_np += len(data) + sum(len(s) for s in base_cells)

            single = len(subset) == 1
            splits = [[(0, len(cells))]] if single else list(_oracle_splits(len(cells)))
            for segs in splits:
                if any(
                    lo <= a < hi and lo <= b < hi for lo, hi in segs for a, b in edges
                ):
                    continue
                seg_of_cell = {}
                for si, (lo, hi) in enumerate(segs):
                    for ci in range(lo, hi):
                        seg_of_cell[ci] = si

                goal_segs: dict[str, list[int]] = {}
                goal_cells: dict[str, list[int]] = {}
                for ci, sig in enumerate(sigs):
                    for gid in sig:
                        segs_list = goal_segs.setdefault(gid, [])
                        if not segs_list or segs_list[-1] != seg_of_cell[ci]:
                            segs_list.append(seg_of_cell[ci])
                        goal_cells.setdefault(gid, []).append(ci)

                def status(gid: str, si: int) -> str:
                    occ = goal_segs[gid]
                    if len(occ) == 1:
                        lone = len(goal_cells[gid]) == 1 and len(sigs[goal_cells[gid][0]]) == 1
                        return "sole" if (single or lone) else "initiate"
                    if si == occ[0]:
                        return "initiate"
                    if si == occ[-1]:
                        return "complete"
                    return "shared"

                cand_mentions: dict[str, int] = {}
                for cell in cells:
                    for aid in cell:
                        cand_mentions[aid] = cand_mentions.get(aid, 0) + 1
                goal_named: dict[str, int] = {}
                cand_np = 0
                for ci, sig in enumerate(sigs):
                    cand_np += len(cells[ci])
                    statuses = [status(gid, seg_of_cell[ci]) for gid in sig]
                    anaphor = (
                        len(sig) >= 2
                        and all(s in ("shared", "complete") for s in statuses)
                        and any(s == "shared" for s in statuses)
                    )
                    if anaphor:
                        cand_np += 1
                    else:
                        cand_np += len(sig)
                        for gid in sig:
                            goal_named[gid] = goal_named.get(gid, 0) + 1

                goal_units = {gid: len(occ) for gid, occ in goal_segs.items()}
                for _, focused, outside, tsig in trailing:
                    cand_mentions[focused] = cand_mentions.get(focused, 0) + 1
                    for aid in outside:
                        cand_mentions[aid] = cand_mentions.get(aid, 0) + 1
                    for gid in tsig:
                        goal_units[gid] = goal_units.get(gid, 0) + 1
                        goal_named[gid] = goal_named.get(gid, 0) + 1
                    cand_np += 1 + len(outside) + len(tsig)

                if cand_np > base_np:
                    continue

                t1 = sum(goal_units.values())
                t2 = sum(
                    orig_mentions.get(aid, 1) - 1
                    for aid, n in cand_mentions.items()
                    if n == 1
                )
                t3 = sum(max(0, n - 1) for n in goal_named.values())
                t4 = len(subset) + len(trailing)
                total = w2 * t2 + w4 * t4 - w1 * t1 - w3 * t3
                if best is None or total > best:
                    best = total
    assert best is not None
    return best
