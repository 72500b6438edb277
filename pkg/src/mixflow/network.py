"""Transportation network container and TNTP-style file I/O.

A network is a directed multigraph of links with per-class capacities plus
origin-destination demand split between regular (rv) and autonomous (av)
vehicles. Instances are treated as immutable after construction.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

RV = "rv"
AV = "av"
VEHICLE_CLASSES = (RV, AV)


class ParseError(ValueError):
    """A net/trips/config file could not be parsed."""

    def __init__(self, path, line_no, message):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class ValidationError(ValueError):
    """A loaded network violates its invariants."""

    def __init__(self, report):
        self.report = report
        super().__init__("invalid network:\n" + report.to_text())


@dataclass(frozen=True)
class Link:
    id: int
    from_node: int
    to_node: int
    length: float        # miles
    free_time: float     # minutes
    cap_rv: float        # veh/h if every vehicle were an rv
    cap_av: float        # veh/h if every vehicle were an av


@dataclass(frozen=True)
class ODPair:
    origin: int
    destination: int
    demand_rv: float     # veh/h
    demand_av: float     # veh/h

    def demand(self, vehicle_class):
        return self.demand_rv if vehicle_class == RV else self.demand_av


@dataclass(frozen=True)
class ValidationIssue:
    entity: str
    message: str


@dataclass
class ValidationReport:
    issues: list[ValidationIssue] = field(default_factory=list)

    @property
    def ok(self):
        return not self.issues

    def add(self, entity, message):
        self.issues.append(ValidationIssue(entity, message))

    def to_text(self):
        if self.ok:
            return "ok"
        return "\n".join(f"{i.entity}: {i.message}" for i in self.issues)


@dataclass
class Network:
    nodes: tuple
    links: tuple
    od_pairs: tuple

    # derived, filled in __post_init__
    node_set: frozenset = field(init=False, repr=False, compare=False)
    link_index: dict = field(init=False, repr=False, compare=False)
    out_links: dict = field(init=False, repr=False, compare=False)
    lengths: np.ndarray = field(init=False, repr=False, compare=False)
    free_times: np.ndarray = field(init=False, repr=False, compare=False)
    caps_rv: np.ndarray = field(init=False, repr=False, compare=False)
    caps_av: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        self.nodes = tuple(sorted(self.nodes))
        self.links = tuple(self.links)
        self.od_pairs = tuple(self.od_pairs)
        self.node_set = frozenset(self.nodes)
        self.link_index = {}
        for i, link in enumerate(self.links):
            # first occurrence wins so duplicate-id files still load for validate()
            self.link_index.setdefault(link.id, i)
        self.out_links = {n: [] for n in self.nodes}
        for i, link in enumerate(self.links):
            if link.from_node in self.node_set and link.to_node in self.node_set:
                self.out_links[link.from_node].append(i)
        self.lengths = np.array([l.length for l in self.links], dtype=float)
        self.free_times = np.array([l.free_time for l in self.links], dtype=float)
        self.caps_rv = np.array([l.cap_rv for l in self.links], dtype=float)
        self.caps_av = np.array([l.cap_av for l in self.links], dtype=float)

    @property
    def n_links(self):
        return len(self.links)

    def link(self, link_id):
        return self.links[self.link_index[link_id]]

    def reachable_from(self, origin):
        """Set of nodes reachable from origin along directed links."""
        seen = {origin}
        queue = deque([origin])
        while queue:
            node = queue.popleft()
            for i in self.out_links.get(node, ()):
                nxt = self.links[i].to_node
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        return seen


def split_demand(total, penetration):
    """Split a total OD demand into (rv, av) shares; the sum is exact."""
    if not 0.0 <= penetration <= 1.0:
        raise ValueError(f"penetration {penetration} outside [0, 1]")
    if total < 0:
        raise ValueError(f"negative demand {total}")
    q_av = penetration * total
    return total - q_av, q_av


def validate(network):
    """Check every network invariant; violations are reported, not raised."""
    report = ValidationReport()
    seen_ids = set()
    for link in network.links:
        name = f"link {link.id}"
        if link.id in seen_ids:
            report.add(name, "duplicate link id")
        seen_ids.add(link.id)
        if link.from_node == link.to_node:
            report.add(name, "self loop")
        for endpoint in (link.from_node, link.to_node):
            if endpoint not in network.node_set:
                report.add(name, f"endpoint {endpoint} is not a network node")
        if link.length <= 0:
            report.add(name, f"nonpositive length {link.length}")
        if link.free_time <= 0:
            report.add(name, f"nonpositive free-flow time {link.free_time}")
        if link.cap_rv <= 0:
            report.add(name, f"nonpositive rv capacity {link.cap_rv}")
        if link.cap_av <= 0:
            report.add(name, f"nonpositive av capacity {link.cap_av}")
    for node in network.nodes:
        if not isinstance(node, (int, np.integer)) or node <= 0:
            report.add(f"node {node}", "node ids must be positive integers")
    reachable = {}
    for od in network.od_pairs:
        name = f"od {od.origin}->{od.destination}"
        if od.origin == od.destination:
            report.add(name, "origin equals destination")
            continue
        missing = [n for n in (od.origin, od.destination) if n not in network.node_set]
        if missing:
            report.add(name, f"unknown node(s) {missing}")
            continue
        if od.demand_rv < 0 or od.demand_av < 0:
            report.add(name, "negative demand")
        if od.demand_rv + od.demand_av <= 0:
            report.add(name, "zero total demand")
        if od.origin not in reachable:
            reachable[od.origin] = network.reachable_from(od.origin)
        if od.destination not in reachable[od.origin]:
            report.add(name, "destination unreachable from origin")
    return report


def _meta_value(line):
    return line.split(">", 1)[1].strip()


def parse_net_text(text, path="<net>"):
    """Parse TNTP-style net text into (n_nodes, raw link rows).

    Rows are (from, to, cap_rv, length, free_time, cap_av_or_None). The
    optional capacity_av column is located through a `~` comment header
    naming the columns; trailing unnamed fields are ignored.
    """
    n_nodes = None
    n_links = None
    av_col = None
    rows = []
    in_body = False
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("~"):
            tokens = [t for t in line[1:].replace(";", " ").split() if t]
            if "capacity_av" in tokens:
                av_col = tokens.index("capacity_av")
            continue
        if line.startswith("<"):
            upper = line.upper()
            try:
                if upper.startswith("<NUMBER OF NODES>"):
                    n_nodes = int(_meta_value(line))
                elif upper.startswith("<NUMBER OF LINKS>"):
                    n_links = int(_meta_value(line))
                elif upper.startswith("<END OF METADATA>"):
                    in_body = True
            except ValueError:
                raise ParseError(path, line_no, f"bad metadata line: {line!r}") from None
            continue
        if not in_body:
            # tolerate files without an explicit end-of-metadata marker
            in_body = True
        tokens = [t for t in line.replace(";", " ").split() if t]
        if len(tokens) < 5:
            raise ParseError(path, line_no, f"expected at least 5 fields, got {len(tokens)}")
        try:
            from_node = int(float(tokens[0]))
            to_node = int(float(tokens[1]))
            cap = float(tokens[2])
            length = float(tokens[3])
            free_time = float(tokens[4])
            cap_av = None
            if av_col is not None:
                if av_col >= len(tokens):
                    raise ParseError(path, line_no, "missing capacity_av field")
                cap_av = float(tokens[av_col])
        except ParseError:
            raise
        except ValueError:
            raise ParseError(path, line_no, f"non-numeric link record: {line!r}") from None
        rows.append((from_node, to_node, cap, length, free_time, cap_av))
    if n_links is not None and n_links != len(rows):
        raise ParseError(path, 0, f"metadata declares {n_links} links, file has {len(rows)}")
    return n_nodes, rows


def parse_trips_text(text, path="<trips>"):
    """Parse TNTP-style trips text into an ordered {(origin, dest): flow} dict."""
    demand = {}
    origin = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("~") or line.startswith("<"):
            continue
        if line.lower().startswith("origin"):
            try:
                origin = int(float(line.split()[1]))
            except (IndexError, ValueError):
                raise ParseError(path, line_no, f"bad origin line: {line!r}") from None
            continue
        if origin is None:
            raise ParseError(path, line_no, "destination entry before any Origin line")
        for chunk in line.split(";"):
            chunk = chunk.strip()
            if not chunk:
                continue
            if ":" not in chunk:
                raise ParseError(path, line_no, f"bad trips entry: {chunk!r}")
            dest_s, flow_s = chunk.split(":", 1)
            try:
                dest = int(float(dest_s))
                flow = float(flow_s)
            except ValueError:
                raise ParseError(path, line_no, f"non-numeric trips entry: {chunk!r}") from None
            demand[(origin, dest)] = demand.get((origin, dest), 0.0) + flow
    return demand


def network_from_tables(n_nodes, link_rows, demand, params):
    """Assemble a Network from parsed tables, splitting demand by penetration."""
    links = []
    for i, (from_node, to_node, cap, length, free_time, cap_av) in enumerate(link_rows):
        if cap_av is None:
            cap_av = params.av_capacity_ratio * cap
        links.append(Link(id=i + 1, from_node=from_node, to_node=to_node,
                          length=length, free_time=free_time,
                          cap_rv=cap, cap_av=cap_av))
    nodes = {l.from_node for l in links} | {l.to_node for l in links}
    if n_nodes is not None:
        nodes |= set(range(1, n_nodes + 1))
    od_pairs = []
    for (origin, dest), total in demand.items():
        if total <= 0:
            continue
        q_rv, q_av = split_demand(total, params.penetration)
        od_pairs.append(ODPair(origin, dest, q_rv, q_av))
    return Network(nodes=tuple(sorted(nodes)), links=tuple(links), od_pairs=tuple(od_pairs))


def load_network(net_file, trips_file, params):
    """Load and validate a network from a TNTP net file and optional trips file."""
    with open(net_file, encoding="utf-8") as fh:
        n_nodes, rows = parse_net_text(fh.read(), path=net_file)
    demand = {}
    if trips_file is not None:
        with open(trips_file, encoding="utf-8") as fh:
            demand = parse_trips_text(fh.read(), path=trips_file)
    network = network_from_tables(n_nodes, rows, demand, params)
    report = validate(network)
    if not report.ok:
        raise ValidationError(report)
    return network


def write_net_text(network):
    lines = [
        f"<NUMBER OF NODES> {len(network.nodes)}",
        f"<NUMBER OF LINKS> {len(network.links)}",
        "<END OF METADATA>",
        "~ init_node term_node capacity length free_flow_time capacity_av ;",
    ]
    for l in network.links:
        lines.append(f"{l.from_node} {l.to_node} {l.cap_rv!r} {l.length!r} "
                     f"{l.free_time!r} {l.cap_av!r} ;")
    return "\n".join(lines) + "\n"


def write_trips_text(network):
    totals = {}
    for od in network.od_pairs:
        totals.setdefault(od.origin, []).append((od.destination, od.demand_rv + od.demand_av))
    lines = [f"<NUMBER OF ZONES> {len(network.nodes)}", "<END OF METADATA>"]
    for origin in sorted(totals):
        lines.append("")
        lines.append(f"Origin {origin}")
        for dest, total in sorted(totals[origin]):
            lines.append(f"    {dest} : {total!r};")
    return "\n".join(lines) + "\n"


def write_network(network, net_file, trips_file):
    """Write net and trips files; reloading them reproduces the same bytes."""
    with open(net_file, "w", encoding="utf-8") as fh:
        fh.write(write_net_text(network))
    with open(trips_file, "w", encoding="utf-8") as fh:
        fh.write(write_trips_text(network))
