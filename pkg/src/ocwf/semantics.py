"""Transfer-mode enablement and firing, firing sequences, and bounded
state-space exploration producing labeled transition systems.

A transition with variable arcs fires in a *transfer mode*: a per-type count
of tokens moved over each variable pair. Modes require at least one token
per type; a variable arc never transfers nothing.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable, Mapping, Sequence

from .errors import DomainError, NotEnabledError, NotFoundError
from .nets import VAR, Label, Marking, OCNet


@dataclass(frozen=True)
class TransferMode:
    """Token counts moved per object type when a variable-arc transition fires.

    The domain must be exactly the types with variable arcs on the fired
    transition; each amount is at least one.
    """

    amounts: tuple[tuple[str, int], ...] = ()

    def __init__(self, amounts: "Mapping[str, int] | Iterable[tuple[str, int]]" = ()):
        items = amounts.items() if isinstance(amounts, Mapping) else amounts
        norm = tuple(sorted((d, int(n)) for d, n in items))
        seen = set()
        for d, n in norm:
            if n < 1:
                raise DomainError(f"transfer amount for type {d!r} must be at least 1, got {n}")
            if d in seen:
                raise DomainError(f"duplicate type {d!r} in transfer mode")
            seen.add(d)
        object.__setattr__(self, "amounts", norm)

    def get(self, d: str) -> int:
        for dd, n in self.amounts:
            if dd == d:
                return n
        raise NotFoundError(f"type {d!r} not in transfer mode")

    def as_dict(self) -> dict[str, int]:
        return dict(self.amounts)

    def __bool__(self) -> bool:
        return bool(self.amounts)

    def __repr__(self) -> str:
        if not self.amounts:
            return "{}"
        return "{" + ", ".join(f"{d}={n}" for d, n in self.amounts) + "}"


EMPTY_MODE = TransferMode()


@dataclass(frozen=True)
class FiringEvent:
    """A transition together with the transfer mode it fires in."""

    transition: str
    mode: TransferMode = EMPTY_MODE

    def __repr__(self) -> str:
        if not self.mode:
            return self.transition
        return f"{self.transition}[{self.mode!r}]"


@dataclass(frozen=True)
class ExplorationBounds:
    """Caps that keep state-space construction finite.

    ``max_states`` bounds the number of distinct markings, ``place_cap`` the
    tokens per place in explored successors, and ``max_mode`` the transfer
    amount enumerated per type.
    """

    max_states: int = 100_000
    place_cap: int = 16
    max_mode: int = 4

    def __post_init__(self):
        for name in ("max_states", "place_cap", "max_mode"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be positive")


DEFAULT_BOUNDS = ExplorationBounds()


@dataclass(frozen=True)
class Lts:
    """A finite labeled transition system, possibly a truncated fragment.

    ``truncated`` is set exactly when some exploration bound was hit, in
    which case the system is a prefix of the real behaviour.
    """

    states: tuple[Hashable, ...]
    initial: Hashable
    edges: tuple[tuple[Hashable, Label, Hashable], ...]
    truncated: bool = False

    @cached_property
    def successors(self) -> dict[Hashable, tuple[tuple[Label, Hashable], ...]]:
        succ: dict[Hashable, list[tuple[Label, Hashable]]] = {s: [] for s in self.states}
        for src, label, dst in self.edges:
            succ[src].append((label, dst))
        return {s: tuple(v) for s, v in succ.items()}

    @cached_property
    def labels(self) -> tuple[Label, ...]:
        return tuple(sorted({lab for _, lab, _ in self.edges}, key=lambda x: (x is None, x or "")))

    def __repr__(self) -> str:
        flag = ", truncated" if self.truncated else ""
        return f"Lts(states={len(self.states)}, edges={len(self.edges)}{flag})"


class CompiledNet:
    """Array-based view of a net for fast successor computation.

    Markings are tuples of counts indexed by the sorted place order.
    """

    def __init__(self, net: OCNet):
        self.net = net
        self.place_ids = net.place_ids
        self.index = {p: i for i, p in enumerate(self.place_ids)}
        self.transitions: list[tuple[str, Label, tuple, tuple, tuple]] = []
        for t in net.transition_ids:
            numeric_in = []
            numeric_out = []
            for (src, dst), w in net.flow.items():
                if w is VAR:
                    continue
                if dst == t:
                    numeric_in.append((self.index[src], w))
                elif src == t:
                    numeric_out.append((self.index[src] if False else self.index[dst], w))
            pairs = tuple(
                (d, self.index[p_in], self.index[p_out]) for d, p_in, p_out in net.var_pairs(t)
            )
            self.transitions.append(
                (t, net.transition_label[t], tuple(sorted(numeric_in)),
                 tuple(sorted(numeric_out)), pairs)
            )

    def to_tuple(self, m: Marking) -> tuple[int, ...]:
        for p, _ in m.items():
            if p not in self.index:
                raise NotFoundError(f"marking references unknown place {p!r}")
        return tuple(m[p] for p in self.place_ids)

    def to_marking(self, mt: Sequence[int]) -> Marking:
        return Marking({p: n for p, n in zip(self.place_ids, mt) if n})

    def modes_for(
        self, mt: Sequence[int], tidx: int, max_mode: int | None
    ) -> tuple[list[tuple[tuple[str, int], ...]], bool]:
        """Enumerate enabled transfer modes of one transition, in ascending order.

        Returns the mode list and whether enumeration was clipped by
        ``max_mode``.
        """
        _, _, numeric_in, _, pairs = self.transitions[tidx]
        for idx, w in numeric_in:
            if mt[idx] < w:
                return [], False
        if not pairs:
            return [()], False
        ranges = []
        clipped = False
        for d, in_idx, _ in pairs:
            available = mt[in_idx]
            hi = available if max_mode is None else min(available, max_mode)
            if max_mode is not None and available > max_mode:
                clipped = True
            if hi < 1:
                return [], False
            ranges.append([(d, k) for k in range(1, hi + 1)])
        return [tuple(combo) for combo in itertools.product(*ranges)], clipped

    def fire_tuple(
        self, mt: Sequence[int], tidx: int, mode: tuple[tuple[str, int], ...]
    ) -> tuple[int, ...]:
        _, _, numeric_in, numeric_out, pairs = self.transitions[tidx]
        out = list(mt)
        for idx, w in numeric_in:
            out[idx] -= w
        for idx, w in numeric_out:
            out[idx] += w
        amounts = dict(mode)
        for d, in_idx, out_idx in pairs:
            out[in_idx] -= amounts[d]
            out[out_idx] += amounts[d]
        return tuple(out)

    def successors(
        self, mt: Sequence[int], max_mode: int | None
    ) -> tuple[list[tuple[str, tuple, Label, tuple[int, ...]]], bool]:
        """All enabled firings from ``mt`` in deterministic order."""
        result = []
        clipped_any = False
        for tidx, (tid, label, _, _, _) in enumerate(self.transitions):
            modes, clipped = self.modes_for(mt, tidx, max_mode)
            clipped_any = clipped_any or clipped
            for mode in modes:
                result.append((tid, mode, label, self.fire_tuple(mt, tidx, mode)))
        return result, clipped_any


def enabled_modes(
    net: OCNet, m: Marking, t: str, bounds: ExplorationBounds = DEFAULT_BOUNDS
) -> list[TransferMode]:
    """All transfer modes under which ``t`` is enabled in ``m``.

    Amounts are enumerated up to ``bounds.max_mode``; an empty list means the
    transition is not enabled under any mode, and a single empty mode means
    an enabled transition without variable arcs.
    """
    if t not in net.transition_label:
        raise NotFoundError(f"unknown transition {t!r}")
    compiled = _compiled(net)
    tidx = next(i for i, entry in enumerate(compiled.transitions) if entry[0] == t)
    modes, _ = compiled.modes_for(compiled.to_tuple(m), tidx, bounds.max_mode)
    return [TransferMode(mode) for mode in modes]


def fire(net: OCNet, m: Marking, event: FiringEvent) -> Marking:
    """Fire one event, yielding the successor marking.

    Accepts any legal transfer amounts (not limited by exploration bounds);
    raises :class:`NotEnabledError` when the event is not enabled or its mode
    domain does not match the transition's variable-arc types.
    """
    t = event.transition
    if t not in net.transition_label:
        raise NotFoundError(f"unknown transition {t!r}")
    pairs = net.var_pairs(t)
    mode_types = tuple(d for d, _ in event.mode.amounts)
    pair_types = tuple(d for d, _, _ in pairs)
    if mode_types != pair_types:
        raise NotEnabledError(
            t, event.mode,
            reason=f"mode domain {mode_types!r} does not match variable-arc types {pair_types!r}",
        )
    for (src, dst), w in net.flow.items():
        if w is VAR or dst != t:
            continue
        if m[src] < w:
            raise NotEnabledError(t, event.mode, reason=f"needs {w} tokens in {src!r}, has {m[src]}")
    amounts = event.mode.as_dict()
    for d, p_in, _ in pairs:
        if m[p_in] < amounts[d]:
            raise NotEnabledError(
                t, event.mode,
                reason=f"needs {amounts[d]} tokens in {p_in!r}, has {m[p_in]}",
            )
    counts = {p: n for p, n in m.items()}
    for (src, dst), w in net.flow.items():
        if w is VAR:
            continue
        if dst == t:
            counts[src] = counts.get(src, 0) - w
        elif src == t:
            counts[dst] = counts.get(dst, 0) + w
    for d, p_in, p_out in pairs:
        counts[p_in] = counts.get(p_in, 0) - amounts[d]
        counts[p_out] = counts.get(p_out, 0) + amounts[d]
    return Marking(counts)


def run(net: OCNet, m0: Marking, script: Sequence[FiringEvent]) -> Marking:
    """Fire a sequence of events, returning the final marking.

    The step index of the first non-enabled event is reported on failure.
    """
    m = m0
    for i, event in enumerate(script):
        try:
            m = fire(net, m, event)
        except NotEnabledError as exc:
            raise NotEnabledError(exc.transition, exc.mode, step=i, reason=str(exc)) from None
    return m


_COMPILED_CACHE: dict[int, tuple[OCNet, CompiledNet]] = {}


def _compiled(net: OCNet) -> CompiledNet:
    entry = _COMPILED_CACHE.get(id(net))
    if entry is not None and entry[0] is net:
        return entry[1]
    compiled = CompiledNet(net)
    _COMPILED_CACHE[id(net)] = (net, compiled)
    if len(_COMPILED_CACHE) > 64:
        _COMPILED_CACHE.pop(next(iter(_COMPILED_CACHE)))
    return compiled


def explore(net: OCNet, m0: Marking, bounds: ExplorationBounds = DEFAULT_BOUNDS) -> Lts:
    """Breadth-first closure of firing from ``m0``, as a labeled system.

    Edges carry activity labels, not transition ids. States are ordered
    lexicographically on marking count vectors, so identical inputs yield
    identical values. ``truncated`` reflects any bound being hit.
    """
    compiled = _compiled(net)
    start = compiled.to_tuple(m0)
    cap = bounds.place_cap
    truncated = max(start) > cap if start else False

    seen: set[tuple[int, ...]] = {start}
    order: list[tuple[int, ...]] = [start]
    frontier = [start]
    edges: set[tuple[tuple[int, ...], Label, tuple[int, ...]]] = set()

    while frontier:
        next_frontier = []
        for mt in frontier:
            succs, clipped = compiled.successors(mt, bounds.max_mode)
            if clipped:
                truncated = True
            for _, _, label, succ in succs:
                if succ not in seen:
                    if any(n > cap for n in succ):
                        truncated = True
                        continue
                    if len(seen) >= bounds.max_states:
                        truncated = True
                        continue
                    seen.add(succ)
                    order.append(succ)
                    next_frontier.append(succ)
                edges.add((mt, label, succ))
        frontier = next_frontier

    kept = set(order)
    edge_list = sorted(
        (src, lab, dst) for src, lab, dst in edges if dst in kept
    , key=lambda e: (e[0], e[1] is None, e[1] or "", e[2]))
    state_list = sorted(order)
    to_marking = compiled.to_marking
    marking_of = {mt: to_marking(mt) for mt in state_list}
    return Lts(
        states=tuple(marking_of[mt] for mt in state_list),
        initial=marking_of[start],
        edges=tuple((marking_of[s], lab, marking_of[d]) for s, lab, d in edge_list),
        truncated=truncated,
    )
