"""Multi-period DC-OPF assembly, rolling-horizon simulation, LMP extraction.

One horizon window becomes a single LP.  Hourly decision variables are
thermal output, renewable curtailment, line flows, bus phase angles,
storage charge (non-positive) / discharge (non-negative) / state of charge,
unserved load, and tie imports/exports.  Hourly constraint rows are the DC
flow definition per line, the nodal power balance equality per bus (whose
dual is the LMP), two-sided interface limits, two-sided generator ramping
coupled to the previous committed hour at the window seam, the
state-of-charge recursion with sqrt round-trip efficiency split between
charge and discharge, and the joint storage power limit.  Curtailment and
line-flow limits are variable bounds rather than rows.

The yearly simulation rolls a window of ``horizon_hours`` forward by
``advance_hours``, committing the leading hours of each solve and carrying
storage state and previous dispatch across the seam.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from .grid import Grid
from .lp import LinearProgram, LpSolution, solve_lp
from .scenario import ScenarioError, ScenarioSeries


class DispatchError(RuntimeError):
    """A window failed to solve or produced inconsistent results."""


@dataclass(frozen=True)
class HorizonConfig:
    horizon_hours: int = 24
    advance_hours: int = 24

    def __post_init__(self):
        if not 1 <= self.advance_hours <= self.horizon_hours:
            raise ValueError("need 1 <= advance_hours <= horizon_hours")

    @property
    def lmp_from(self) -> range:
        """Window hours whose results are committed to final outputs."""
        return range(self.advance_hours)


@dataclass
class SystemState:
    """Coupling state carried across horizon windows.

    prev_dispatch of None (simulation start) leaves the first hour's ramp
    unconstrained; after the first window it always holds the last
    committed thermal output.
    """
    storage_soc: dict[str, float]
    prev_dispatch: dict[str, float] | None = None

    @classmethod
    def from_grid(cls, grid: Grid) -> "SystemState":
        return cls(storage_soc={s.id: s.start_soc for s in grid.storage_units})

    def check_against(self, grid: Grid) -> None:
        for sto in grid.storage_units:
            soc = self.storage_soc.get(sto.id)
            if soc is None:
                raise DispatchError(f"no stored energy recorded for {sto.id!r}")
            if not sto.energy_min - 1e-6 <= soc <= sto.energy_max + 1e-6:
                raise DispatchError(
                    f"stored energy {soc} for {sto.id!r} outside limits")
        if self.prev_dispatch is not None:
            for gen in grid.thermal_generators:
                p = self.prev_dispatch.get(gen.id)
                if p is None:
                    raise DispatchError(f"no previous output for {gen.id!r}")
                if not gen.p_min - 1e-6 <= p <= gen.p_max + 1e-6:
                    raise DispatchError(
                        f"previous output {p} for {gen.id!r} outside bounds")


@dataclass
class OpfIndexMap:
    """Variable/row positions of every modeled quantity in one window LP."""
    n_hours: int
    timestamps: pd.DatetimeIndex
    var: dict[tuple, int] = field(default_factory=dict)
    row: dict[tuple, int] = field(default_factory=dict)
    availability: dict[str, np.ndarray] = field(default_factory=dict)


@dataclass
class DispatchSolution:
    """Hourly primal results keyed by entity id."""
    timestamps: pd.DatetimeIndex
    thermal: dict[str, np.ndarray] = field(default_factory=dict)
    curtailment: dict[str, np.ndarray] = field(default_factory=dict)
    available: dict[str, np.ndarray] = field(default_factory=dict)
    flow: dict[str, np.ndarray] = field(default_factory=dict)
    angle: dict[str, np.ndarray] = field(default_factory=dict)
    charge: dict[str, np.ndarray] = field(default_factory=dict)
    discharge: dict[str, np.ndarray] = field(default_factory=dict)
    soc: dict[str, np.ndarray] = field(default_factory=dict)
    unmet: dict[str, np.ndarray] = field(default_factory=dict)
    imports: dict[str, np.ndarray] = field(default_factory=dict)
    exports: dict[str, np.ndarray] = field(default_factory=dict)
    objective_values: list[float] = field(default_factory=list)
    window_starts: list[int] = field(default_factory=list)

    @property
    def n_hours(self) -> int:
        return len(self.timestamps)

    @property
    def dispatched_renewable(self) -> dict[str, np.ndarray]:
        return {uid: self.available[uid] - self.curtailment[uid]
                for uid in self.curtailment}

    def net_storage(self, unit_id: str) -> np.ndarray:
        return self.charge[unit_id] + self.discharge[unit_id]


@dataclass
class LmpSeries:
    """Shadow price of each bus's hourly power-balance equality."""
    timestamps: pd.DatetimeIndex
    price: dict[str, np.ndarray]

    @property
    def n_hours(self) -> int:
        return len(self.timestamps)


def build_opf(grid: Grid, window: ScenarioSeries, state: SystemState,
              cfg: HorizonConfig) -> tuple[LinearProgram, OpfIndexMap]:
    """Assemble the window LP; the index map records every variable/row."""
    T = window.n_hours
    if T != cfg.horizon_hours:
        raise DispatchError(
            f"window has {T} hours but horizon is {cfg.horizon_hours}")
    state.check_against(grid)
    for unit in grid.dispatchable_renewables:
        avail = window.available_renewable.get(unit.id)
        if avail is None:
            raise ScenarioError(
                f"no availability series for dispatchable unit {unit.id!r}")
        if np.any(avail < -1e-9) or np.any(avail > unit.capacity * (1 + 1e-9)):
            raise ScenarioError(
                f"availability for {unit.id!r} exceeds capacity "
                f"{unit.capacity} MW; upstream data fault")

    lp = LinearProgram()
    ix = OpfIndexMap(n_hours=T, timestamps=window.timestamps)
    ref_bus = grid.reference_bus.id
    M = grid.unserved_energy_penalty

    for t in range(T):
        for gen in grid.thermal_generators:
            ix.var[("thermal", gen.id, t)] = lp.add_variable(
                lower=gen.p_min, upper=gen.p_max, cost=gen.cost_linear,
                name=f"p[{gen.id},{t}]")
            lp.offset += gen.cost_const
        for unit in grid.dispatchable_renewables:
            avail = float(window.available_renewable[unit.id][t])
            avail = min(max(avail, 0.0), unit.capacity)
            # dispatched = available - curtailed; priced output makes the
            # curtailment coefficient the negated dispatch cost
            ix.var[("curtail", unit.id, t)] = lp.add_variable(
                lower=0.0, upper=avail, cost=-unit.dispatch_cost,
                name=f"curt[{unit.id},{t}]")
            lp.offset += unit.dispatch_cost * avail
        for line in grid.lines:
            ix.var[("flow", line.id, t)] = lp.add_variable(
                lower=line.flow_min, upper=line.flow_max,
                name=f"flow[{line.id},{t}]")
        for bus in grid.buses:
            fix = bus.id == ref_bus
            ix.var[("angle", bus.id, t)] = lp.add_variable(
                lower=0.0 if fix else -np.inf, upper=0.0 if fix else np.inf,
                name=f"theta[{bus.id},{t}]")
        for sto in grid.storage_units:
            # individual power bounds are implied by the joint limit plus
            # the sign constraints, so adding them leaves the feasible set
            # unchanged
            ix.var[("charge", sto.id, t)] = lp.add_variable(
                lower=-sto.power_limit, upper=0.0, cost=-sto.cycle_cost,
                name=f"psc[{sto.id},{t}]")
            ix.var[("discharge", sto.id, t)] = lp.add_variable(
                lower=0.0, upper=sto.power_limit, cost=sto.cycle_cost,
                name=f"psd[{sto.id},{t}]")
            ix.var[("soc", sto.id, t)] = lp.add_variable(
                lower=sto.energy_min, upper=sto.energy_max,
                name=f"soc[{sto.id},{t}]")
        for bus in grid.buses:
            ix.var[("unmet", bus.id, t)] = lp.add_variable(
                lower=0.0, cost=M, name=f"unmet[{bus.id},{t}]")
        for tie in grid.external_ties:
            imp_price = (window.tie_import_price[tie.id][t]
                         if tie.id in window.tie_import_price
                         else tie.import_price)
            exp_price = (window.tie_export_price[tie.id][t]
                         if tie.id in window.tie_export_price
                         else tie.export_price)
            ix.var[("import", tie.id, t)] = lp.add_variable(
                lower=0.0, upper=tie.import_max, cost=float(imp_price),
                name=f"imp[{tie.id},{t}]")
            ix.var[("export", tie.id, t)] = lp.add_variable(
                lower=0.0, upper=tie.export_max, cost=-float(exp_price),
                name=f"exp[{tie.id},{t}]")

    for unit in grid.dispatchable_renewables:
        ix.availability[unit.id] = np.clip(
            np.asarray(window.available_renewable[unit.id], dtype=float),
            0.0, unit.capacity)

    inflow: dict[str, list[str]] = {b.id: [] for b in grid.buses}
    outflow: dict[str, list[str]] = {b.id: [] for b in grid.buses}
    for line in grid.lines:
        outflow[line.from_bus].append(line.id)
        inflow[line.to_bus].append(line.id)
    gens_at: dict[str, list] = {b.id: [] for b in grid.buses}
    for gen in grid.thermal_generators:
        gens_at[gen.bus_id].append(gen)
    renew_at: dict[str, list] = {b.id: [] for b in grid.buses}
    for unit in grid.dispatchable_renewables:
        renew_at[unit.bus_id].append(unit)
    sto_at: dict[str, list] = {b.id: [] for b in grid.buses}
    for sto in grid.storage_units:
        sto_at[sto.bus_id].append(sto)
    ties_at: dict[str, list] = {b.id: [] for b in grid.buses}
    for tie in grid.external_ties:
        ties_at[tie.bus_id].append(tie)

    for t in range(T):
        for line in grid.lines:
            ix.row[("dc_flow", line.id, t)] = lp.add_constraint(
                {ix.var[("flow", line.id, t)]: 1.0,
                 ix.var[("angle", line.from_bus, t)]: -line.susceptance,
                 ix.var[("angle", line.to_bus, t)]: line.susceptance},
                "=", 0.0, name=f"dc[{line.id},{t}]")

        for iface in grid.interfaces:
            coeffs: dict[int, float] = {}
            for line_id, direction in iface.members:
                j = ix.var[("flow", line_id, t)]
                coeffs[j] = coeffs.get(j, 0.0) + float(direction)
            ix.row[("interface_lo", iface.id, t)] = lp.add_constraint(
                coeffs, ">=", iface.flow_min, name=f"iflo[{iface.id},{t}]")
            ix.row[("interface_hi", iface.id, t)] = lp.add_constraint(
                coeffs, "<=", iface.flow_max, name=f"ifhi[{iface.id},{t}]")

        for gen in grid.thermal_generators:
            j = ix.var[("thermal", gen.id, t)]
            if t == 0:
                if state.prev_dispatch is None:
                    continue
                prev = state.prev_dispatch[gen.id]
                coeffs = {j: 1.0}
                lo, hi = gen.ramp_down + prev, gen.ramp_up + prev
            else:
                coeffs = {j: 1.0, ix.var[("thermal", gen.id, t - 1)]: -1.0}
                lo, hi = gen.ramp_down, gen.ramp_up
            if math.isfinite(lo):
                ix.row[("ramp_lo", gen.id, t)] = lp.add_constraint(
                    coeffs, ">=", lo, name=f"rlo[{gen.id},{t}]")
            if math.isfinite(hi):
                ix.row[("ramp_hi", gen.id, t)] = lp.add_constraint(
                    coeffs, "<=", hi, name=f"rhi[{gen.id},{t}]")

        for sto in grid.storage_units:
            sqrt_eff = math.sqrt(sto.round_trip_efficiency)
            coeffs = {ix.var[("soc", sto.id, t)]: 1.0,
                      ix.var[("charge", sto.id, t)]: sqrt_eff,
                      ix.var[("discharge", sto.id, t)]: 1.0 / sqrt_eff}
            if t == 0:
                rhs = state.storage_soc[sto.id]
            else:
                coeffs[ix.var[("soc", sto.id, t - 1)]] = -1.0
                rhs = 0.0
            ix.row[("soc", sto.id, t)] = lp.add_constraint(
                coeffs, "=", rhs, name=f"soc[{sto.id},{t}]")
            ix.row[("storage_power", sto.id, t)] = lp.add_constraint(
                {ix.var[("discharge", sto.id, t)]: 1.0,
                 ix.var[("charge", sto.id, t)]: -1.0},
                "<=", sto.power_limit, name=f"plim[{sto.id},{t}]")

        for bus in grid.buses:
            coeffs = {}
            rhs = 0.0
            if bus.id in window.load:
                rhs += float(window.load[bus.id][t])
            if bus.id in window.negative_load:
                rhs -= float(window.negative_load[bus.id][t])
            for gen in gens_at[bus.id]:
                coeffs[ix.var[("thermal", gen.id, t)]] = 1.0
            for unit in renew_at[bus.id]:
                rhs -= ix.availability[unit.id][t]
                coeffs[ix.var[("curtail", unit.id, t)]] = -1.0
            for line_id in inflow[bus.id]:
                coeffs[ix.var[("flow", line_id, t)]] = 1.0
            for line_id in outflow[bus.id]:
                coeffs[ix.var[("flow", line_id, t)]] = -1.0
            for sto in sto_at[bus.id]:
                coeffs[ix.var[("charge", sto.id, t)]] = 1.0
                coeffs[ix.var[("discharge", sto.id, t)]] = 1.0
            for tie in ties_at[bus.id]:
                coeffs[ix.var[("import", tie.id, t)]] = 1.0
                coeffs[ix.var[("export", tie.id, t)]] = -1.0
            coeffs[ix.var[("unmet", bus.id, t)]] = 1.0
            ix.row[("balance", bus.id, t)] = lp.add_constraint(
                coeffs, "=", rhs, name=f"bal[{bus.id},{t}]")

    return lp, ix


def extract_solution(lp_solution: LpSolution, index_map: OpfIndexMap
                     ) -> DispatchSolution:
    """Populate per-entity hourly arrays from the window's primal values."""
    if not lp_solution.is_optimal:
        raise DispatchError(
            f"window starting {index_map.timestamps[0]} did not solve: "
            f"status {lp_solution.status}")
    T = index_map.n_hours
    x = lp_solution.primal
    out = DispatchSolution(timestamps=index_map.timestamps)
    fields = {"thermal": out.thermal, "curtail": out.curtailment,
              "flow": out.flow, "angle": out.angle, "charge": out.charge,
              "discharge": out.discharge, "soc": out.soc,
              "unmet": out.unmet, "import": out.imports,
              "export": out.exports}
    for (kind, entity, t), j in index_map.var.items():
        store = fields[kind]
        if entity not in store:
            store[entity] = np.zeros(T)
        store[entity][t] = x[j]
    for uid, avail in index_map.availability.items():
        out.available[uid] = avail.copy()
    out.objective_values.append(lp_solution.objective_value)
    return out


def extract_lmps(lp_solution: LpSolution, index_map: OpfIndexMap) -> LmpSeries:
    """Duals of the nodal balance equalities, signed as d(cost)/d(demand)."""
    if not lp_solution.is_optimal:
        raise DispatchError(
            f"window starting {index_map.timestamps[0]} did not solve: "
            f"status {lp_solution.status}")
    T = index_map.n_hours
    price: dict[str, np.ndarray] = {}
    for key, row in index_map.row.items():
        if key[0] != "balance":
            continue
        _, bus_id, t = key
        if bus_id not in price:
            price[bus_id] = np.zeros(T)
        price[bus_id][t] = lp_solution.dual[row]
    if not price and index_map.row:
        raise DispatchError("index map records no nodal balance rows")
    return LmpSeries(timestamps=index_map.timestamps, price=price)


def simulate(grid: Grid, scenario: ScenarioSeries, cfg: HorizonConfig,
             initial: SystemState | None = None, backend: str = "auto",
             tol: float = 1e-7) -> tuple[DispatchSolution, LmpSeries]:
    """Rolling-horizon simulation over the whole scenario span.

    Windows are solved sequentially; the first advance_hours of each are
    committed, and storage state plus previous dispatch are carried from
    the last committed hour.  A trailing stub shorter than the horizon is
    solved as a shorter window so the output covers every scenario hour.
    """
    scenario.validate(grid)
    n = scenario.n_hours
    if n < cfg.horizon_hours:
        raise DispatchError(
            f"scenario spans {n} hours, shorter than one horizon window")
    state = initial if initial is not None else SystemState.from_grid(grid)
    state.check_against(grid)

    out = DispatchSolution(timestamps=scenario.timestamps)
    lmps = LmpSeries(timestamps=scenario.timestamps, price={})

    def ensure(store: dict[str, np.ndarray], key: str) -> np.ndarray:
        if key not in store:
            store[key] = np.zeros(n)
        return store[key]

    start = 0
    while start < n:
        T = min(cfg.horizon_hours, n - start)
        commit = min(cfg.advance_hours, T)
        window_cfg = (cfg if T == cfg.horizon_hours
                      else replace(cfg, horizon_hours=T,
                                   advance_hours=commit))
        window = scenario.window(start, start + T)
        lp, ix = build_opf(grid, window, state, window_cfg)
        sol = solve_lp(lp, tol=tol, backend=backend)
        if not sol.is_optimal:
            # the unserved-load penalty keeps every window feasible, so a
            # non-optimal status signals a data or solver fault
            raise DispatchError(
                f"window starting at hour {start} "
                f"({window.timestamps[0]}) returned {sol.status}")
        wsol = extract_solution(sol, ix)
        wlmp = extract_lmps(sol, ix)

        sl = slice(start, start + commit)
        for attr in ("thermal", "curtailment", "available", "flow", "angle",
                     "charge", "discharge", "soc", "unmet", "imports",
                     "exports"):
            src = getattr(wsol, attr)
            dst = getattr(out, attr)
            for key, arr in src.items():
                ensure(dst, key)[sl] = arr[:commit]
        for bus_id, arr in wlmp.price.items():
            ensure(lmps.price, bus_id)[sl] = arr[:commit]
        out.objective_values.append(sol.objective_value)
        out.window_starts.append(start)

        last = commit - 1
        state = SystemState(
            storage_soc={s.id: float(wsol.soc[s.id][last])
                         for s in grid.storage_units},
            prev_dispatch={g.id: float(wsol.thermal[g.id][last])
                           for g in grid.thermal_generators})
        # guard against drift outside physical limits before the next window
        for sto in grid.storage_units:
            soc = state.storage_soc[sto.id]
            state.storage_soc[sto.id] = min(max(soc, sto.energy_min),
                                            sto.energy_max)
        for gen in grid.thermal_generators:
            p = state.prev_dispatch[gen.id]
            state.prev_dispatch[gen.id] = min(max(p, gen.p_min), gen.p_max)
        start += commit

    return out, lmps
