"""Core net structures: typed places, labeled transitions, flow with natural
or variable weights, markings as finite multisets, and the structural checks
for workflow-shaped nets.

Nets and markings are immutable values. Construction normalises everything
into sorted tuples, so equality and hashing are structural and serialisation
is deterministic regardless of declaration order.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Union

from .errors import (
    DomainError,
    NetDefinitionError,
    NotFoundError,
    NotWorkflowError,
    PreconditionError,
)


class _VarWeight:
    """Singleton weight marking a variable (transfer) arc."""

    _instance: "_VarWeight | None" = None

    def __new__(cls) -> "_VarWeight":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "var"

    def __deepcopy__(self, memo) -> "_VarWeight":
        return self

    def __copy__(self) -> "_VarWeight":
        return self


VAR = _VarWeight()

ArcWeight = Union[int, _VarWeight]
#: A visible activity name, or ``None`` for the silent activity.
Label = Union[str, None]

#: Reserved object type for the control places introduced by variable-arc
#: elimination. It may not coexist with variable arcs in a valid net.
EMPTY_TYPE = "ε"


class Marking:
    """A finite multiset of tokens over place ids.

    Counts are non-negative; places with zero tokens are not stored, so
    equality is extensional.
    """

    __slots__ = ("_counts", "_key", "_hash")

    def __init__(self, counts: "Mapping[str, int] | Iterable[tuple[str, int]] | Marking" = ()):
        if isinstance(counts, Marking):
            self._counts = counts._counts
            self._key = counts._key
            self._hash = counts._hash
            return
        items = counts.items() if isinstance(counts, Mapping) else counts
        acc: dict[str, int] = {}
        for place, n in items:
            if not isinstance(n, int) or isinstance(n, bool):
                raise DomainError(f"token count for {place!r} must be an int, got {n!r}")
            if n < 0:
                raise DomainError(f"negative token count for {place!r}: {n}")
            if n:
                acc[place] = acc.get(place, 0) + n
        self._counts = acc
        self._key = tuple(sorted(acc.items()))
        self._hash = hash(self._key)

    def __getitem__(self, place: str) -> int:
        return self._counts.get(place, 0)

    def items(self) -> tuple[tuple[str, int], ...]:
        """Sorted (place, count) pairs with positive counts."""
        return self._key

    def support(self) -> tuple[str, ...]:
        return tuple(p for p, _ in self._key)

    def total(self) -> int:
        """Total number of tokens (the multiset size)."""
        return sum(self._counts.values())

    def is_empty(self) -> bool:
        return not self._counts

    def issubset(self, other: "Marking") -> bool:
        return all(n <= other[p] for p, n in self._key)

    def strictly_below(self, other: "Marking") -> bool:
        """Pointwise strict comparison: every count, including zeros, must grow."""
        places = set(self._counts) | set(other._counts)
        return all(self[p] < other[p] for p in places)

    def __add__(self, other: "Marking") -> "Marking":
        acc = dict(self._counts)
        for p, n in other._key:
            acc[p] = acc.get(p, 0) + n
        return Marking(acc)

    def __sub__(self, other: "Marking") -> "Marking":
        if not other.issubset(self):
            raise DomainError(f"difference undefined: {other} is not a subset of {self}")
        acc = dict(self._counts)
        for p, n in other._key:
            acc[p] -= n
        return Marking(acc)

    def __le__(self, other: "Marking") -> bool:
        return self.issubset(other)

    def restrict(self, places: Iterable[str]) -> "Marking":
        keep = set(places)
        return Marking({p: n for p, n in self._key if p in keep})

    def scale(self, k: int) -> "Marking":
        if k < 0:
            raise DomainError("scale factor must be non-negative")
        return Marking({p: n * k for p, n in self._key})

    def key(self) -> tuple[tuple[str, int], ...]:
        """Canonical sort key."""
        return self._key

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Marking) and self._key == other._key

    def __hash__(self) -> int:
        return self._hash

    def __iter__(self) -> Iterator[tuple[str, int]]:
        return iter(self._key)

    def __repr__(self) -> str:
        if not self._key:
            return "[]"
        return "[" + ", ".join(f"{p}:{n}" for p, n in self._key) + "]"


EMPTY_MARKING = Marking()


@dataclass(frozen=True)
class Violation:
    """One violated structural constraint, with the offending nodes."""

    code: str
    nodes: tuple[str, ...]
    message: str

    def __str__(self) -> str:
        return f"{self.code}({', '.join(self.nodes)}): {self.message}"


def _as_pairs(obj, what: str):
    if isinstance(obj, Mapping):
        return list(obj.items())
    try:
        return [(a, b) for a, b in obj]
    except (TypeError, ValueError):
        raise NetDefinitionError(f"cannot interpret {what} from {obj!r}")


class OCNet:
    """An immutable object-centric net.

    ``places`` maps place id to object type, ``transitions`` maps transition
    id to an activity label (``None`` = silent), and ``arcs`` maps
    ``(source, target)`` pairs to weights (positive ints or :data:`VAR`).
    Absence of an entry means absence of an arc; zero weights are rejected.
    """

    def __init__(
        self,
        types: Iterable[str],
        places: "Mapping[str, str] | Iterable[tuple[str, str]]",
        transitions: "Mapping[str, Label] | Iterable[tuple[str, Label]]",
        arcs: "Mapping[tuple[str, str], ArcWeight] | Iterable[tuple[str, str, ArcWeight]]" = (),
    ):
        type_list = list(types)
        seen_types = set()
        for d in type_list:
            if not isinstance(d, str) or not d:
                raise NetDefinitionError(f"object type names must be non-empty strings, got {d!r}")
            if d in seen_types:
                raise NetDefinitionError(f"duplicate object type {d!r}")
            seen_types.add(d)

        place_pairs = _as_pairs(places, "places")
        trans_pairs = _as_pairs(transitions, "transitions")

        place_type: dict[str, str] = {}
        for pid, d in place_pairs:
            if not isinstance(pid, str) or not pid:
                raise NetDefinitionError(f"place ids must be non-empty strings, got {pid!r}")
            if pid in place_type:
                raise NetDefinitionError(f"duplicate place id {pid!r}")
            if d not in seen_types:
                raise NetDefinitionError(f"place {pid!r} references undeclared type {d!r}")
            place_type[pid] = d

        transition_label: dict[str, Label] = {}
        for tid, label in trans_pairs:
            if not isinstance(tid, str) or not tid:
                raise NetDefinitionError(f"transition ids must be non-empty strings, got {tid!r}")
            if tid in transition_label:
                raise NetDefinitionError(f"duplicate transition id {tid!r}")
            if tid in place_type:
                raise NetDefinitionError(f"id {tid!r} is used for both a place and a transition")
            if label is not None and (not isinstance(label, str) or not label):
                raise NetDefinitionError(f"label of {tid!r} must be a non-empty string or None")
            transition_label[tid] = label

        if isinstance(arcs, Mapping):
            arc_triples = [(s, t, w) for (s, t), w in arcs.items()]
        else:
            arc_triples = [(s, t, w) for s, t, w in arcs]

        flow: dict[tuple[str, str], ArcWeight] = {}
        for src, dst, w in arc_triples:
            if (src, dst) in flow:
                raise NetDefinitionError(f"duplicate arc {src!r} -> {dst!r}")
            src_is_place = src in place_type
            dst_is_place = dst in place_type
            if src_is_place == dst_is_place or (
                src not in place_type and src not in transition_label
            ) or (dst not in place_type and dst not in transition_label):
                raise NetDefinitionError(
                    f"arc {src!r} -> {dst!r} must connect an existing place and transition"
                )
            if w is not VAR:
                if not isinstance(w, int) or isinstance(w, bool) or w < 1:
                    raise NetDefinitionError(
                        f"arc {src!r} -> {dst!r} has weight {w!r}; weights are positive ints or VAR"
                    )
            flow[(src, dst)] = w

        self.types = tuple(sorted(seen_types))
        self.place_type = dict(sorted(place_type.items()))
        self.transition_label = dict(sorted(transition_label.items()))
        self.flow = dict(sorted(flow.items()))
        self.place_ids = tuple(self.place_type)
        self.transition_ids = tuple(self.transition_label)
        self._key = (
            self.types,
            tuple(self.place_type.items()),
            tuple(self.transition_label.items()),
            tuple((s, t, "var" if w is VAR else w) for (s, t), w in self.flow.items()),
        )
        self._hash = hash(self._key)

    # -- basic queries -----------------------------------------------------

    def is_place(self, node: str) -> bool:
        return node in self.place_type

    def is_transition(self, node: str) -> bool:
        return node in self.transition_label

    def has_node(self, node: str) -> bool:
        return node in self.place_type or node in self.transition_label

    def places_of_type(self, d: str) -> tuple[str, ...]:
        return tuple(p for p, dp in self.place_type.items() if dp == d)

    @cached_property
    def _presets(self) -> dict[str, frozenset[str]]:
        pre: dict[str, set[str]] = {n: set() for n in (*self.place_ids, *self.transition_ids)}
        for (src, dst) in self.flow:
            pre[dst].add(src)
        return {n: frozenset(s) for n, s in pre.items()}

    @cached_property
    def _postsets(self) -> dict[str, frozenset[str]]:
        post: dict[str, set[str]] = {n: set() for n in (*self.place_ids, *self.transition_ids)}
        for (src, dst) in self.flow:
            post[src].add(dst)
        return {n: frozenset(s) for n, s in post.items()}

    @cached_property
    def var_transitions(self) -> frozenset[str]:
        """Transitions carrying at least one variable arc."""
        out = set()
        for (src, dst), w in self.flow.items():
            if w is VAR:
                out.add(dst if dst in self.transition_label else src)
        return frozenset(out)

    def var_arcs_of(self, t: str) -> tuple[dict[str, list[str]], dict[str, list[str]]]:
        """Variable inputs and outputs of ``t`` grouped by object type."""
        var_in: dict[str, list[str]] = {}
        var_out: dict[str, list[str]] = {}
        for (src, dst), w in self.flow.items():
            if w is not VAR:
                continue
            if dst == t:
                var_in.setdefault(self.place_type[src], []).append(src)
            elif src == t:
                var_out.setdefault(self.place_type[dst], []).append(dst)
        for d in var_in:
            var_in[d].sort()
        for d in var_out:
            var_out[d].sort()
        return var_in, var_out

    def var_pairs(self, t: str) -> tuple[tuple[str, str, str], ...]:
        """The (type, input place, output place) variable pairs of ``t``.

        Only meaningful on nets where :func:`validate_ocnet` is clean.
        """
        var_in, var_out = self.var_arcs_of(t)
        pairs = []
        for d in sorted(set(var_in) | set(var_out)):
            ins = var_in.get(d, [])
            outs = var_out.get(d, [])
            if len(ins) != 1 or len(outs) != 1:
                raise NetDefinitionError(
                    f"transition {t!r} has malformed variable-arc pairing for type {d!r}"
                )
            pairs.append((d, ins[0], outs[0]))
        return tuple(pairs)

    def visible_label_owners(self) -> dict[str, list[str]]:
        owners: dict[str, list[str]] = {}
        for tid, label in self.transition_label.items():
            if label is not None:
                owners.setdefault(label, []).append(tid)
        return owners

    # -- value semantics ----------------------------------------------------

    def __eq__(self, other: object) -> bool:
        return isinstance(other, OCNet) and self._key == other._key

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return (
            f"OCNet(types={len(self.types)}, places={len(self.place_ids)}, "
            f"transitions={len(self.transition_ids)}, arcs={len(self.flow)})"
        )


@dataclass(frozen=True)
class WfNetView:
    """A net recognised as workflow-shaped, with its source and sink places."""

    net: OCNet
    source: str
    sink: str


def preset(net: OCNet, node: str) -> frozenset[str]:
    """Nodes with an arc (of any weight, including variable) into ``node``."""
    if not net.has_node(node):
        raise NotFoundError(f"unknown node {node!r}")
    return net._presets[node]


def postset(net: OCNet, node: str) -> frozenset[str]:
    """Nodes reached by an arc (of any weight, including variable) from ``node``."""
    if not net.has_node(node):
        raise NotFoundError(f"unknown node {node!r}")
    return net._postsets[node]


def has_var_arcs(net: OCNet) -> bool:
    return bool(net.var_transitions)


def is_pt_net(net: OCNet) -> bool:
    """True when the net is an ordinary place/transition net (no variable arcs)."""
    return not has_var_arcs(net)


def validate_ocnet(net: OCNet) -> list[Violation]:
    """Check the variable-arc pairing constraints; empty list means valid.

    Beyond the one-output-one-input pairing (checked in both directions, see
    the bidirectional-pairing note in the README), a place of the same type
    as a variable pair may not carry any other arc on that transition, and
    the reserved control type may not coexist with variable arcs.
    """
    violations: list[Violation] = []
    for t in net.transition_ids:
        var_in, var_out = net.var_arcs_of(t)
        var_types = sorted(set(var_in) | set(var_out))
        for d in var_types:
            ins = var_in.get(d, [])
            outs = var_out.get(d, [])
            if outs and not ins:
                for p in outs:
                    violations.append(Violation(
                        "unpaired-variable-output", (t, p),
                        f"variable arc {t!r} -> {p!r} has no variable input of type {d!r}",
                    ))
            if ins and not outs:
                for p in ins:
                    violations.append(Violation(
                        "unpaired-variable-input", (t, p),
                        f"variable arc {p!r} -> {t!r} has no variable output of type {d!r}",
                    ))
            if len(ins) > 1 or len(outs) > 1:
                violations.append(Violation(
                    "ambiguous-variable-pairing", (t, *ins, *outs),
                    f"transition {t!r} has more than one variable arc per side for type {d!r}",
                ))
            paired = set(ins) | set(outs)
            for p, dp in net.place_type.items():
                if dp != d or p in paired:
                    continue
                if net.flow.get((p, t)) is not None or net.flow.get((t, p)) is not None:
                    violations.append(Violation(
                        "mixed-type-adjacency", (t, p),
                        f"place {p!r} shares type {d!r} with a variable pair on {t!r} "
                        "but carries an ordinary arc",
                    ))
    if EMPTY_TYPE in net.types and net.var_transitions:
        violations.append(Violation(
            "reserved-empty-type", (EMPTY_TYPE,),
            "the reserved control type may only appear in nets without variable arcs",
        ))
    return violations


def _connected_component(net: OCNet, start: str) -> set[str]:
    seen = {start}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        for nxt in net._presets[node] | net._postsets[node]:
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


def as_wf_net(net: OCNet) -> WfNetView:
    """Identify the unique source and sink place and check connectedness.

    The path condition is checked as weak connectivity to the source: a net
    may legitimately contain transitions that feed the flow midstream without
    being fed from the source (this happens in type projections, where the
    feeding tokens belong to another type), so a directed-path requirement
    would be too strong.
    """
    if not net.place_ids:
        raise NotWorkflowError("net has no places")
    sources = [p for p in net.place_ids if not net._presets[p]]
    sinks = [p for p in net.place_ids if not net._postsets[p]]
    if len(sources) != 1:
        raise NotWorkflowError(
            f"expected exactly one source place, found {sorted(sources)!r}"
        )
    if len(sinks) != 1:
        raise NotWorkflowError(f"expected exactly one sink place, found {sorted(sinks)!r}")
    source, sink = sources[0], sinks[0]
    if source == sink:
        raise NotWorkflowError("source and sink must be distinct places", node=source)
    component = _connected_component(net, source)
    all_nodes = set(net.place_ids) | set(net.transition_ids)
    stray = sorted(all_nodes - component)
    if stray:
        raise NotWorkflowError("node is not connected to the source", node=stray[0])
    return WfNetView(net=net, source=source, sink=sink)


def is_oc_wf_net(net: OCNet) -> list[Violation]:
    """Check the workflow conditions: every type projection is workflow-shaped
    and there are no isolated transitions. Empty list means the net qualifies.
    """
    if validate_ocnet(net):
        raise PreconditionError("is_oc_wf_net requires a structurally valid net")
    from .transforms import project  # local import to keep module layering acyclic

    violations: list[Violation] = []
    for d in net.types:
        try:
            as_wf_net(project(net, d))
        except NotWorkflowError as exc:
            violations.append(Violation(
                "projection-not-workflow", (d,),
                f"projection on type {d!r} is not a workflow net: {exc}",
            ))
    for t in net.transition_ids:
        if not net._presets[t] and not net._postsets[t]:
            violations.append(Violation(
                "isolated-transition", (t,), f"transition {t!r} has no arcs"
            ))
    return violations


def source_place(net: OCNet, d: str) -> str:
    """The unique d-typed place with empty preset (requires a workflow-shaped net)."""
    candidates = [p for p in net.places_of_type(d) if not net._presets[p]]
    if len(candidates) != 1:
        raise NotWorkflowError(f"type {d!r} does not have a unique source place")
    return candidates[0]


def sink_place(net: OCNet, d: str) -> str:
    """The unique d-typed place with empty postset (requires a workflow-shaped net)."""
    candidates = [p for p in net.places_of_type(d) if not net._postsets[p]]
    if len(candidates) != 1:
        raise NotWorkflowError(f"type {d!r} does not have a unique sink place")
    return candidates[0]
