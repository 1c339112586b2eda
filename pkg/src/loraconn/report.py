"""Report assembly: frame-loss tables and power summaries from run metrics."""

from __future__ import annotations

from dataclasses import dataclass

from .power import (
    BatterySpec,
    DEFAULT_ACTIVE_DURATION_S,
    DEFAULT_IDLE_DURATION_S,
    Mode,
    estimate_lifetime,
    event_energy,
)
from .simkernel import SimMetrics


def height_label(height_m: float) -> str:
    if height_m == 0.0:
        return "ground"
    return "{:g} m".format(height_m)


@dataclass
class FlrTable:
    """One measured-style table: rows by distance, columns by SN height."""

    environment: str
    gw_height_m: float
    sn_heights: list[float]
    rows: list[tuple[float, list[str]]]  # (distance_m, cells)

    def title(self) -> str:
        if self.gw_height_m == 0.0:
            return "FLR results: {}, GW on the ground".format(self.environment)
        return "FLR results: {}, GW at {}".format(self.environment, height_label(self.gw_height_m))

    def to_text(self) -> str:
        headers = ["distance"] + ["SN ({})".format(height_label(h)) for h in self.sn_heights]
        body = [["{:g} m".format(d)] + cells for d, cells in self.rows]
        widths = [max(len(row[i]) for row in [headers] + body) for i in range(len(headers))]
        lines = [self.title()]
        lines.append("  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip())
        for row in body:
            lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        return "\n".join(lines) + "\n"


def assemble_flr_tables(metrics_list: list[SimMetrics]) -> list[FlrTable]:
    """Group run metrics into distance-by-height tables.

    Cells show the measured loss percentage to one decimal; runs whose
    uplink could not be established print "no data".  When several runs
    land on the same cell the last one wins.
    """
    cells: dict[tuple[str, float], dict[tuple[float, float], str]] = {}
    for m in metrics_list:
        group = cells.setdefault((m.environment, m.gw_height_m), {})
        value = "no data" if m.link_unreachable else "{:.1f}%".format(m.flr * 100.0)
        group[(m.distance_m, m.sn_height_m)] = value
    tables = []
    for (environment, gw_height), group in sorted(cells.items()):
        distances = sorted({d for d, _ in group})
        heights = sorted({h for _, h in group})
        rows = []
        for d in distances:
            rows.append((d, [group.get((d, h), "-") for h in heights]))
        tables.append(FlrTable(environment, gw_height, heights, rows))
    return tables


def power_report_text(
    metrics: SimMetrics,
    battery: BatterySpec,
    events_per_day: float,
) -> str:
    """Render the power summary for one run."""
    powers = metrics.power_mw
    per_event = event_energy(
        DEFAULT_IDLE_DURATION_S,
        DEFAULT_ACTIVE_DURATION_S,
        {Mode.SLEEP: powers["sleep"], Mode.IDLE: powers["idle"], Mode.ACTIVE: powers["active"]},
    )
    lifetime = estimate_lifetime(battery, events_per_day, per_event, powers["sleep"])
    lines = [
        "power report: {}".format(metrics.scenario),
        "mode powers: sleep {:.3f} mW, idle {:.1f} mW, active {:.1f} mW".format(
            powers["sleep"], powers["idle"], powers["active"]
        ),
        "per-event energy: {:.1f} mJ ({:g} s idle + {:g} s active)".format(
            per_event, DEFAULT_IDLE_DURATION_S, DEFAULT_ACTIVE_DURATION_S
        ),
    ]
    total = 0.0
    for addr in sorted(metrics.per_node):
        nm = metrics.per_node[addr]
        lines.append("node {:02x} {} energy {:.1f} mJ".format(addr, nm.role, nm.energy_mj))
        if nm.role == "sensor":
            total += nm.energy_mj
    lines.append("sensor energy total {:.1f} mJ".format(total))
    lines.append(
        "battery: {:g} mAh @ {:g} V, usable fraction {:g}".format(
            battery.capacity_mah, battery.voltage_v, battery.usable_fraction
        )
    )
    lines.append(
        "estimated lifetime at {:g} events/day: {:.1f} days".format(events_per_day, lifetime)
    )
    return "\n".join(lines) + "\n"
