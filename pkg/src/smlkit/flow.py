"""Min-cost flow with exact rational costs, plus the leakage network builder.

The solver handles negative arc costs (the leakage network needs them) via
successive shortest augmenting paths computed with Bellman-Ford on the
residual graph.  The flow value is free: augmentation stops as soon as the
cheapest residual source-sink path no longer has negative cost.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Sequence

from .core import PolicyMatrix, SecretPartition


class NegativeCycleError(ValueError):
    """The network admits a negative-cost cycle; cost is unbounded below."""


@dataclass(frozen=True)
class Arc:
    tail: Hashable
    head: Hashable
    capacity: int
    cost: Fraction


@dataclass
class FlowNetwork:
    nodes: list
    source: Hashable
    sink: Hashable
    arcs: list[Arc]

    def __post_init__(self) -> None:
        node_set = set(self.nodes)
        if len(node_set) != len(self.nodes):
            raise ValueError("duplicate nodes")
        if self.source not in node_set or self.sink not in node_set:
            raise ValueError("source/sink must be nodes")
        for a in self.arcs:
            if a.tail not in node_set or a.head not in node_set:
                raise ValueError(f"arc endpoint not a node: {a}")
            if a.capacity < 0:
                raise ValueError("negative capacity")
            if a.head == self.source or a.tail == self.sink:
                raise ValueError("arcs may not enter the source or leave the sink")


@dataclass
class FlowResult:
    flow: list[int]  # per arc, aligned with FlowNetwork.arcs
    value: int
    total_cost: Fraction


def min_cost_flow(net: FlowNetwork) -> FlowResult:
    """Minimum-cost flow of free value.

    Augments along cheapest residual paths while they have strictly negative
    cost, which yields the flow minimizing total cost over *all* flow values.
    Raises :class:`NegativeCycleError` if a negative cycle is reachable.
    """
    index = {v: i for i, v in enumerate(net.nodes)}
    n = len(net.nodes)
    src, snk = index[net.source], index[net.sink]
    flow = [0] * len(net.arcs)

    # residual arc: (arc index, direction); direction +1 forward, -1 backward
    out: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for i, a in enumerate(net.arcs):
        out[index[a.tail]].append((i, +1))
        out[index[a.head]].append((i, -1))

    def residual_cap(i: int, d: int) -> int:
        return net.arcs[i].capacity - flow[i] if d > 0 else flow[i]

    while True:
        dist: list[Fraction | None] = [None] * n
        pred: list[tuple[int, int] | None] = [None] * n
        dist[src] = Fraction(0)
        updated = True
        for it in range(n):
            updated = False
            for u in range(n):
                du = dist[u]
                if du is None:
                    continue
                for i, d in out[u]:
                    if residual_cap(i, d) <= 0:
                        continue
                    a = net.arcs[i]
                    v = index[a.head] if d > 0 else index[a.tail]
                    c = a.cost if d > 0 else -a.cost
                    if dist[v] is None or du + c < dist[v]:
                        dist[v] = du + c
                        pred[v] = (i, d)
                        updated = True
            if not updated:
                break
        if updated:
            raise NegativeCycleError("negative-cost cycle reachable from source")
        if dist[snk] is None or dist[snk] >= 0:
            break
        # trace the path and find the bottleneck
        path: list[tuple[int, int]] = []
        v = snk
        while v != src:
            i, d = pred[v]
            path.append((i, d))
            a = net.arcs[i]
            v = index[a.tail] if d > 0 else index[a.head]
        bottleneck = min(residual_cap(i, d) for i, d in path)
        for i, d in path:
            flow[i] += d * bottleneck

    value = sum(flow[i] for i, a in enumerate(net.arcs) if a.tail == net.source)
    total = sum((Fraction(f) * a.cost for f, a in zip(flow, net.arcs)), Fraction(0))
    return FlowResult(flow=flow, value=value, total_cost=total)


def build_sml_network(policy: PolicyMatrix, partition: SecretPartition) -> FlowNetwork:
    """Leakage network for a deterministic policy.

    Layers: source -> one node per secret class (cap 1) -> member parameters
    (cap 1) -> outputs via arcs of cost -P(output | input) -> sink (cap 1).
    A max-negative-cost flow then selects one representative per class and a
    matching onto distinct outputs; -total_cost is the leakage sum.
    """
    if not policy.deterministic:
        raise ValueError("flow method requires a deterministic policy")
    nodes: list = ["source", "sink"]
    arcs: list[Arc] = []
    zero = Fraction(0)
    for g in partition.secrets:
        gn = ("g", g)
        nodes.append(gn)
        arcs.append(Arc("source", gn, 1, zero))
    theta_nodes = {}
    for g in partition.secrets:
        for p in partition.class_of(g):
            tn = ("in", p)
            theta_nodes[p] = tn
            nodes.append(tn)
            arcs.append(Arc(("g", g), tn, 1, zero))
    for j, y in enumerate(policy.outputs):
        nodes.append(("out", j))
        arcs.append(Arc(("out", j), "sink", 1, zero))
    for p, tn in theta_nodes.items():
        row = policy.row_of(p)
        for j in range(len(policy.outputs)):
            arcs.append(Arc(tn, ("out", j), 1, -row[j]))
    return FlowNetwork(nodes=nodes, source="source", sink="sink", arcs=arcs)


def to_dot(net: FlowNetwork, result: FlowResult | None = None) -> str:
    """Graphviz rendering of the network, annotated with flow when given."""

    def name(v) -> str:
        return '"' + str(v).replace('"', "'") + '"'

    lines = ["digraph flow {", "  rankdir=LR;"]
    for i, a in enumerate(net.arcs):
        label = f"cap={a.capacity}, cost={a.cost}"
        if result is not None:
            label += f", flow={result.flow[i]}"
        lines.append(f"  {name(a.tail)} -> {name(a.head)} [label=\"{label}\"];")
    lines.append("}")
    return "\n".join(lines)
