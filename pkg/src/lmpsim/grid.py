"""Static transmission-network data model.

A Grid bundles buses, lines, zone interfaces, thermal units, renewable
units, storage, and external ties.  It is immutable after construction and
safe to share across concurrent simulations; all validation is collected by
``validate_grid`` into a report rather than raised piecemeal.

Conventions: line flow is positive from ``from_bus`` to ``to_bus``; an
interface member carries a direction sign so oppositely oriented lines can
be aggregated; storage charge power is non-positive and discharge power
non-negative; non-dispatchable renewables (distributed PV, small hydro)
never enter the optimization and are supplied to scenarios as negative
load.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

HYDRO = "hydro"
SOLAR = "solar"
WIND = "wind"
RENEWABLE_KINDS = (HYDRO, SOLAR, WIND)


class GridDataError(ValueError):
    """Raised for lookups/operations on inconsistent grid data."""


@dataclass(frozen=True)
class Bus:
    id: str
    zone: str
    is_reference: bool = False


@dataclass(frozen=True)
class Line:
    id: str
    from_bus: str
    to_bus: str
    susceptance: float
    flow_min: float
    flow_max: float


@dataclass(frozen=True)
class Interface:
    """Aggregate flow limit over a set of directed member lines."""
    id: str
    members: tuple[tuple[str, int], ...]  # (line_id, +1/-1)
    flow_min: float
    flow_max: float


@dataclass(frozen=True)
class ThermalGenerator:
    id: str
    bus_id: str
    p_min: float
    p_max: float
    ramp_down: float  # signed lower bound on hourly output change, <= 0
    ramp_up: float
    cost_const: float = 0.0
    cost_linear: float = 0.0


@dataclass(frozen=True)
class RenewableUnit:
    id: str
    bus_id: str
    kind: str
    capacity: float
    dispatch_cost: float = 0.0
    dispatchable: bool = True


@dataclass(frozen=True)
class StorageUnit:
    id: str
    bus_id: str
    energy_min: float
    energy_max: float
    power_limit: float
    round_trip_efficiency: float
    cycle_cost: float = 1.0
    initial_soc: float | None = None

    @property
    def start_soc(self) -> float:
        return self.energy_min if self.initial_soc is None else self.initial_soc


@dataclass(frozen=True)
class ExternalTie:
    """Price-taking import/export capability at a boundary bus."""
    id: str
    bus_id: str
    import_max: float
    export_max: float
    import_price: float = 0.0
    export_price: float = 0.0


@dataclass(frozen=True)
class Grid:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...] = ()
    interfaces: tuple[Interface, ...] = ()
    thermal_generators: tuple[ThermalGenerator, ...] = ()
    renewable_units: tuple[RenewableUnit, ...] = ()
    storage_units: tuple[StorageUnit, ...] = ()
    external_ties: tuple[ExternalTie, ...] = ()
    unserved_energy_penalty: float = 10_000.0

    @cached_property
    def bus_by_id(self) -> dict[str, Bus]:
        return {b.id: b for b in self.buses}

    @cached_property
    def line_by_id(self) -> dict[str, Line]:
        return {l.id: l for l in self.lines}

    @cached_property
    def reference_bus(self) -> Bus:
        refs = [b for b in self.buses if b.is_reference]
        if len(refs) != 1:
            raise GridDataError(f"expected one reference bus, found {len(refs)}")
        return refs[0]

    @cached_property
    def zones(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for b in self.buses:
            seen.setdefault(b.zone, None)
        return tuple(seen)

    @cached_property
    def dispatchable_renewables(self) -> tuple[RenewableUnit, ...]:
        return tuple(u for u in self.renewable_units if u.dispatchable)

    def buses_in_zone(self, zone: str) -> tuple[Bus, ...]:
        return tuple(b for b in self.buses if b.zone == zone)

    def zone_of_bus(self, bus_id: str) -> str:
        try:
            return self.bus_by_id[bus_id].zone
        except KeyError:
            raise GridDataError(f"unknown bus {bus_id!r}") from None


@dataclass
class ValidationReport:
    problems: list[tuple[str, str]] = field(default_factory=list)  # (element, message)

    def add(self, element: str, message: str) -> None:
        self.problems.append((element, message))

    @property
    def ok(self) -> bool:
        return not self.problems

    def __str__(self) -> str:
        if self.ok:
            return "grid is well-formed"
        return "\n".join(f"{el}: {msg}" for el, msg in self.problems)


def validate_grid(grid: Grid) -> ValidationReport:
    """Collect every violated invariant; empty report iff well-formed."""
    rep = ValidationReport()
    bus_ids = [b.id for b in grid.buses]
    bus_set = set(bus_ids)
    if len(bus_set) != len(bus_ids):
        dupes = {b for b in bus_ids if bus_ids.count(b) > 1}
        for b in sorted(dupes):
            rep.add(b, "duplicate bus id")
    refs = [b.id for b in grid.buses if b.is_reference]
    if len(refs) == 0:
        rep.add("<grid>", "no reference bus flagged")
    elif len(refs) > 1:
        rep.add(",".join(refs), "more than one reference bus flagged")

    def check_unique(items, label):
        ids = [it.id for it in items]
        for dup in sorted({i for i in ids if ids.count(i) > 1}):
            rep.add(dup, f"duplicate {label} id")

    check_unique(grid.lines, "line")
    check_unique(grid.interfaces, "interface")
    check_unique(grid.thermal_generators, "generator")
    check_unique(grid.renewable_units, "renewable unit")
    check_unique(grid.storage_units, "storage unit")
    check_unique(grid.external_ties, "external tie")

    line_ids = {l.id for l in grid.lines}
    for line in grid.lines:
        if line.from_bus == line.to_bus:
            rep.add(line.id, "line connects a bus to itself")
        for end in (line.from_bus, line.to_bus):
            if end not in bus_set:
                rep.add(line.id, f"references unknown bus {end!r}")
        if not line.susceptance > 0:
            rep.add(line.id, f"susceptance must be positive, got {line.susceptance}")
        if not (line.flow_min <= 0.0 <= line.flow_max):
            rep.add(line.id, f"flow limits [{line.flow_min}, {line.flow_max}] "
                             "must bracket zero")

    for iface in grid.interfaces:
        if not iface.members:
            rep.add(iface.id, "interface has no member lines")
        for line_id, direction in iface.members:
            if line_id not in line_ids:
                rep.add(iface.id, f"references unknown line {line_id!r}")
            if direction not in (1, -1):
                rep.add(iface.id, f"member direction must be +1/-1, got {direction}")
        if not iface.flow_min <= iface.flow_max:
            rep.add(iface.id, "flow_min exceeds flow_max")

    for gen in grid.thermal_generators:
        if gen.bus_id not in bus_set:
            rep.add(gen.id, f"references unknown bus {gen.bus_id!r}")
        if not 0.0 <= gen.p_min <= gen.p_max:
            rep.add(gen.id, f"power bounds [{gen.p_min}, {gen.p_max}] invalid")
        if not (gen.ramp_down <= 0.0 <= gen.ramp_up):
            rep.add(gen.id, "ramp_down must be <= 0 <= ramp_up")
        if gen.cost_linear < 0:
            rep.add(gen.id, "negative marginal cost")

    for unit in grid.renewable_units:
        if unit.bus_id not in bus_set:
            rep.add(unit.id, f"references unknown bus {unit.bus_id!r}")
        if unit.kind not in RENEWABLE_KINDS:
            rep.add(unit.id, f"unknown renewable kind {unit.kind!r}")
        if not unit.capacity > 0:
            rep.add(unit.id, "capacity must be positive")
        if unit.dispatch_cost < 0:
            rep.add(unit.id, "negative dispatch cost")
        if unit.kind in (SOLAR, WIND) and unit.dispatch_cost != 0.0:
            rep.add(unit.id, f"{unit.kind} units must have zero dispatch cost")

    for sto in grid.storage_units:
        if sto.bus_id not in bus_set:
            rep.add(sto.id, f"references unknown bus {sto.bus_id!r}")
        if not 0.0 <= sto.energy_min <= sto.energy_max:
            rep.add(sto.id, "energy bounds invalid")
        elif not sto.energy_min <= sto.start_soc <= sto.energy_max:
            rep.add(sto.id, f"initial SoC {sto.start_soc} outside energy bounds")
        if not sto.power_limit > 0:
            rep.add(sto.id, "power limit must be positive")
        if not 0.0 < sto.round_trip_efficiency <= 1.0:
            rep.add(sto.id, "round-trip efficiency must lie in (0, 1]")
        if sto.cycle_cost < 0:
            rep.add(sto.id, "negative cycle cost")

    for tie in grid.external_ties:
        if tie.bus_id not in bus_set:
            rep.add(tie.id, f"references unknown bus {tie.bus_id!r}")
        if tie.import_max < 0 or tie.export_max < 0:
            rep.add(tie.id, "tie capacities must be non-negative")

    max_cost = max((g.cost_linear for g in grid.thermal_generators), default=0.0)
    max_cost = max(max_cost,
                   max((u.dispatch_cost for u in grid.renewable_units), default=0.0),
                   max((t.import_price for t in grid.external_ties), default=0.0))
    if grid.unserved_energy_penalty <= max_cost:
        rep.add("<grid>", f"unserved-energy penalty {grid.unserved_energy_penalty} "
                          f"does not dominate the highest marginal cost {max_cost}")

    # connectivity over the line graph
    if len(grid.buses) > 1 and not rep.problems:
        adjacency: dict[str, list[str]] = {b.id: [] for b in grid.buses}
        for line in grid.lines:
            adjacency[line.from_bus].append(line.to_bus)
            adjacency[line.to_bus].append(line.from_bus)
        seen = {grid.buses[0].id}
        stack = [grid.buses[0].id]
        while stack:
            for nb in adjacency[stack.pop()]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        missing = [b for b in bus_ids if b not in seen]
        if missing:
            rep.add(",".join(missing), "buses disconnected from the line graph")
    return rep


def interface_flow(flows: dict[str, float], interface: Interface) -> float:
    """Signed aggregate flow over the interface's member lines."""
    total = 0.0
    for line_id, direction in interface.members:
        if line_id not in flows:
            raise GridDataError(
                f"interface {interface.id}: no flow value for line {line_id!r}")
        total += direction * flows[line_id]
    return total
