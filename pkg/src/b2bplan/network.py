"""Radial feeder model, forward-backward sweep power flow and voltage sensitivities.

Everything is solved single-phase-equivalent in per-unit on a 1 MVA base.
Loads are constant-power; ``p_kw``/``q_kvar`` are consumption (positive = load).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import networkx as nx
import numpy as np

BASE_KVA = 1000.0


class NetworkError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, bus: int | None = None):
        super().__init__(message)
        self.bus = bus


@dataclass(frozen=True)
class Bus:
    id: int
    kind: str = "load"   # "source" | "load"
    p_kw: float = 0.0
    q_kvar: float = 0.0


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    r_ohm: float
    x_ohm: float
    length_km: float


@dataclass(frozen=True)
class FeederNetwork:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    base_kv: float
    source_voltage_pu: float = 1.0
    # derived topology, filled in __post_init__
    order: tuple[int, ...] = field(init=False, repr=False, compare=False)
    parent: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "lines", tuple(self.lines))
        if not self.base_kv > 0:
            raise NetworkError("base_kv must be positive")
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            raise NetworkError("duplicate bus ids")
        sources = [b.id for b in self.buses if b.kind == "source"]
        if len(sources) != 1:
            raise NetworkError(f"expected exactly one source bus, found {len(sources)}")
        for b in self.buses:
            if b.kind not in ("source", "load"):
                raise NetworkError(f"bus {b.id}: unknown kind {b.kind!r}")

        g = nx.Graph()
        g.add_nodes_from(ids)
        for ln in self.lines:
            if ln.from_bus == ln.to_bus:
                raise NetworkError(f"self-loop at bus {ln.from_bus}")
            for end in (ln.from_bus, ln.to_bus):
                if end not in g:
                    raise NetworkError(f"line {ln.from_bus}-{ln.to_bus} references unknown bus {end}")
            if g.has_edge(ln.from_bus, ln.to_bus):
                raise NetworkError(f"parallel line between {ln.from_bus} and {ln.to_bus}")
            if ln.r_ohm < 0 or ln.x_ohm < 0 or (ln.r_ohm == 0 and ln.x_ohm == 0):
                raise NetworkError(f"line {ln.from_bus}-{ln.to_bus}: impedance must be nonnegative and nonzero")
            if not ln.length_km > 0:
                raise NetworkError(f"line {ln.from_bus}-{ln.to_bus}: length_km must be positive")
            g.add_edge(ln.from_bus, ln.to_bus, length_km=ln.length_km, line=ln)
        if not nx.is_connected(g):
            stray = sorted(set(ids) - nx.node_connected_component(g, sources[0]))
            raise NetworkError(f"network is not connected; buses {stray} unreachable from the source")
        if g.number_of_edges() != len(ids) - 1:
            cycle = nx.find_cycle(g)
            raise NetworkError(f"network is not radial; cycle through {[e[0] for e in cycle]}")

        parent = {}
        order = [sources[0]]
        for u, v in nx.bfs_edges(g, sources[0]):
            parent[v] = (u, g.edges[u, v]["line"])
            order.append(v)
        object.__setattr__(self, "order", tuple(order))
        object.__setattr__(self, "parent", parent)
        object.__setattr__(self, "_graph", g)

    @property
    def n_node(self) -> int:
        return len(self.buses)

    @property
    def source_id(self) -> int:
        return self.order[0]

    @property
    def bus_ids(self) -> list[int]:
        return sorted(b.id for b in self.buses)

    @property
    def graph(self) -> nx.Graph:
        return self._graph

    def bus(self, bus_id: int) -> Bus:
        for b in self.buses:
            if b.id == bus_id:
                return b
        raise NetworkError(f"unknown bus {bus_id}")

    def with_loads(self, p_kw: dict | None = None, q_kvar: dict | None = None) -> "FeederNetwork":
        p_kw = p_kw or {}
        q_kvar = q_kvar or {}
        buses = [replace(b, p_kw=p_kw.get(b.id, b.p_kw), q_kvar=q_kvar.get(b.id, b.q_kvar))
                 for b in self.buses]
        return FeederNetwork(buses, self.lines, self.base_kv, self.source_voltage_pu)

    def scaled_impedance(self, factor: float) -> "FeederNetwork":
        lines = [replace(ln, r_ohm=ln.r_ohm * factor, x_ohm=ln.x_ohm * factor) for ln in self.lines]
        return FeederNetwork(self.buses, lines, self.base_kv, self.source_voltage_pu)

    def total_load_kw(self) -> float:
        return float(sum(b.p_kw for b in self.buses if b.kind == "load"))


@dataclass(frozen=True)
class PowerFlowSolution:
    bus_ids: list[int]
    v_pu: np.ndarray
    converged: bool
    iterations: int
    max_mismatch_kw: float
    v_complex: np.ndarray = field(repr=False, default=None)

    def voltage(self, bus_id: int) -> float:
        return float(self.v_pu[self.bus_ids.index(bus_id)])


@dataclass(frozen=True)
class SensitivityMatrices:
    bus_ids: list[int]
    vlsmp: np.ndarray   # pu per kW, entry (a, b) = dV_a / dP_b
    vlsmq: np.ndarray   # pu per kvar

    def index(self, bus_id: int) -> int:
        try:
            return self.bus_ids.index(bus_id)
        except ValueError:
            raise NetworkError(f"unknown bus {bus_id}") from None


# -- I/O ---------------------------------------------------------------------

def network_from_dict(data: dict) -> FeederNetwork:
    try:
        buses = [Bus(int(b["id"]), b.get("kind", "load"), float(b.get("p_kw", 0.0)),
                     float(b.get("q_kvar", 0.0))) for b in data["buses"]]
        lines = [Line(int(ln["from"]), int(ln["to"]), float(ln["r_ohm"]), float(ln["x_ohm"]),
                      float(ln["length_km"])) for ln in data["lines"]]
        return FeederNetwork(buses, lines, float(data["base_kv"]),
                             float(data.get("source_voltage_pu", 1.0)))
    except (KeyError, TypeError) as exc:
        raise NetworkError(f"malformed network description: missing or bad field {exc}") from None


def network_to_dict(net: FeederNetwork) -> dict:
    return {
        "base_kv": net.base_kv,
        "source_voltage_pu": net.source_voltage_pu,
        "buses": [{"id": b.id, "kind": b.kind, "p_kw": b.p_kw, "q_kvar": b.q_kvar} for b in net.buses],
        "lines": [{"from": ln.from_bus, "to": ln.to_bus, "r_ohm": ln.r_ohm, "x_ohm": ln.x_ohm,
                   "length_km": ln.length_km} for ln in net.lines],
    }


def load_network_json(path) -> FeederNetwork:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise NetworkError(f"{path}: invalid JSON ({exc})") from None
    return network_from_dict(data)


def bundled_feeder(name: str = "feeder10") -> FeederNetwork:
    return load_network_json(Path(__file__).parent / "data" / f"{name}.json")


def write_vlsm_csv(m: SensitivityMatrices, path, which: str = "p") -> None:
    mat = m.vlsmp if which == "p" else m.vlsmq
    rows = ["bus," + ",".join(str(b) for b in m.bus_ids)]
    for b, row in zip(m.bus_ids, mat):
        rows.append(f"{b}," + ",".join(repr(float(x)) for x in row))
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")


# -- power flow --------------------------------------------------------------

def solve_power_flow(net: FeederNetwork, tol_kw: float | None = None, max_iter: int = 100,
                     v_init: np.ndarray | None = None) -> PowerFlowSolution:
    """Forward-backward sweep from a flat start.

    Stops when the largest per-bus power mismatch falls below ``tol_kw``
    (default 1e-6 of the 1 MVA base) or when the voltages stop changing.
    A run that hits ``max_iter`` is returned with ``converged=False``.
    """
    if tol_kw is None:
        tol_kw = 1e-6 * BASE_KVA
    ids = net.bus_ids
    pos = {b: i for i, b in enumerate(ids)}
    n = len(ids)
    s_load = np.zeros(n, dtype=complex)
    for b in net.buses:
        if b.kind == "load":
            s_load[pos[b.id]] = complex(b.p_kw, b.q_kvar) / BASE_KVA
    z_base = net.base_kv ** 2 / (BASE_KVA / 1000.0)

    src = pos[net.source_id]
    order = [pos[b] for b in net.order]
    par = np.full(n, -1)
    z = np.zeros(n, dtype=complex)
    for child, (parent, ln) in net.parent.items():
        par[pos[child]] = pos[parent]
        z[pos[child]] = complex(ln.r_ohm, ln.x_ohm) / z_base

    v = np.full(n, complex(net.source_voltage_pu), dtype=complex) if v_init is None else v_init.astype(complex).copy()
    v[src] = net.source_voltage_pu
    mismatch = np.inf
    it = 0
    converged = not np.any(s_load)
    if converged:
        mismatch = 0.0
    while not converged and it < max_iter:
        it += 1
        i_load = np.conj(s_load / v)
        i_branch = i_load.copy()
        for k in reversed(order[1:]):
            i_branch[par[k]] += i_branch[k]
        v_new = v.copy()
        for k in order[1:]:
            v_new[k] = v_new[par[k]] - z[k] * i_branch[k]
        # power each bus would draw at the new voltage with the current used in this sweep
        mismatch = float(np.max(np.abs(v_new * np.conj(i_load) - s_load))) * BASE_KVA
        stalled = np.array_equal(v_new, v)
        v = v_new
        converged = mismatch < tol_kw or stalled

    return PowerFlowSolution(ids, np.abs(v), bool(converged), it, mismatch, v)


def compute_vlsm(net: FeederNetwork, delta_p_kw: float = 1.0, delta_q_kvar: float = 1.0,
                 tol_kw: float = 1e-9) -> SensitivityMatrices:
    """Sensitivity matrices by one-sided perturbation of each load bus.

    Entries are signed with positive delta meaning more load, so they are
    normally <= 0. Source row and column are zero.
    """
    base = solve_power_flow(net, tol_kw=tol_kw)
    if not base.converged:
        raise ConvergenceError("base power flow did not converge")
    ids = base.bus_ids
    n = len(ids)
    vp = np.zeros((n, n))
    vq = np.zeros((n, n))
    src = ids.index(net.source_id)
    for j, b in enumerate(ids):
        if j == src:
            continue
        bus = net.bus(b)
        for delta, mat, kw in ((delta_p_kw, vp, True), (delta_q_kvar, vq, False)):
            if delta == 0:
                continue
            pert = net.with_loads(p_kw={b: bus.p_kw + delta}) if kw else \
                net.with_loads(q_kvar={b: bus.q_kvar + delta})
            sol = solve_power_flow(pert, tol_kw=tol_kw, v_init=base.v_complex)
            if not sol.converged:
                raise ConvergenceError(f"perturbed power flow at bus {b} did not converge", bus=b)
            mat[:, j] = (sol.v_pu - base.v_pu) / delta
    vp[src, :] = 0.0
    vq[src, :] = 0.0
    return SensitivityMatrices(ids, vp, vq)


# -- distances ---------------------------------------------------------------

def electrical_distance(net: FeederNetwork, b: int, l: int) -> float:
    """Conductor length (km) along the unique tree path between two buses."""
    for x in (b, l):
        if x not in net.graph:
            raise NetworkError(f"unknown bus {x}")
    return float(nx.shortest_path_length(net.graph, b, l, weight="length_km"))


def distances_from(net: FeederNetwork, b: int) -> dict[int, float]:
    if b not in net.graph:
        raise NetworkError(f"unknown bus {b}")
    return {k: float(v) for k, v in nx.single_source_dijkstra_path_length(net.graph, b, weight="length_km").items()}


def column_sensitivity_sum(m: SensitivityMatrices, l: int) -> float:
    """Sum of |dV_a/dP_l| over all buses a."""
    return float(np.sum(np.abs(m.vlsmp[:, m.index(l)])))


# -- synthetic feeders -------------------------------------------------------

def random_radial_feeder(n_bus: int, seed: int = 0, base_kv: float = 12.47,
                         total_load_kw: float | None = None) -> FeederNetwork:
    """Random tree rooted at bus 1 with line data in a typical MV range."""
    if n_bus < 2:
        raise NetworkError("need at least two buses")
    rng = np.random.default_rng(seed)
    buses = [Bus(1, "source")]
    lines = []
    loads = rng.uniform(10.0, 60.0, size=n_bus - 1)
    if total_load_kw is not None:
        loads *= total_load_kw / loads.sum()
    for k in range(2, n_bus + 1):
        # bias parents toward recent buses so feeders grow long trunks
        lo = max(1, k - 1 - int(rng.integers(1, 6)))
        parent = int(rng.integers(lo, k))
        length = float(rng.uniform(0.05, 0.6))
        buses.append(Bus(k, "load", float(loads[k - 2]), float(0.3 * loads[k - 2])))
        lines.append(Line(parent, k, 0.3 * length, 0.4 * length, length))
    return FeederNetwork(buses, lines, base_kv)
