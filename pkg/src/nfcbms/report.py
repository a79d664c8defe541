"""Run report assembly: canonical JSON, delimited sample export, and the
figures rendered next to each report.

JSON output is canonical (sorted keys, fixed indentation, trailing newline)
and contains only virtual-time quantities, so identical configs and seeds
produce byte-identical files. matplotlib is imported lazily; library users
who never render figures do not pay for it.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from pathlib import Path
from typing import Optional

from .config import ScenarioConfig
from .link import LinkBus
from .orchestrator import InitReport, MonitorReport
from .threats import ScenarioResult, ThreatSuiteReport


def canonical_json(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _ensure_parent(path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_json(payload, path) -> Path:
    path = _ensure_parent(path)
    path.write_text(canonical_json(payload), encoding="utf-8")
    return path


def write_samples_csv(monitor: Optional[MonitorReport], path) -> Path:
    """One row per monitoring sample; cell voltages spread across columns."""
    path = _ensure_parent(path)
    samples = monitor.samples if monitor is not None else []
    cell_count = len(samples[0].status.voltages_mv) if samples else 0
    header = ["timestamp_ms", "module_id", "temperature_dc", "thermal_alarm"] + [
        f"cell_{i + 1:02d}_mv" for i in range(cell_count)
    ]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for sample in samples:
            status = sample.status
            writer.writerow(
                [
                    sample.timestamp_ms,
                    status.module_id,
                    status.temperature_dc,
                    int(sample.thermal_alarm),
                ]
                + list(status.voltages_mv)
            )
    return path


def trace_summary(bus: LinkBus) -> dict:
    counts = Counter(entry.status for entry in bus.trace)
    return {
        "commands": len(bus.trace),
        "by_status": {status: counts[status] for status in sorted(counts)},
    }


def build_run_report(
    cfg: ScenarioConfig,
    discovered,
    init: Optional[InitReport],
    monitor: Optional[MonitorReport],
    bus: LinkBus,
    scenario_result: Optional[ScenarioResult] = None,
    include_trace: bool = False,
) -> dict:
    report = {
        "config": cfg.raw,
        "seed": cfg.seed,
        "discovered_uids": [uid.hex for uid in discovered],
        "initialization": init.to_dict() if init is not None else None,
        "monitoring": monitor.to_dict() if monitor is not None else None,
        "trace_summary": trace_summary(bus),
    }
    if scenario_result is not None:
        report["scenario"] = scenario_result.to_dict()
    if include_trace:
        report["trace"] = [entry.to_dict() for entry in bus.trace]
    return report


# -- figures ----------------------------------------------------------------


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_init_phase_figure(init: Optional[InitReport], path) -> Path:
    """Horizontal bar per executed init step, labelled with its duration."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7.0, 3.0))
    if init is not None and init.steps:
        names = [step.name for step in init.steps]
        durations = [step.duration_ms for step in init.steps]
        colors = ["tab:blue" if step.ok else "tab:red" for step in init.steps]
        bars = ax.barh(names, durations, color=colors)
        for bar, duration in zip(bars, durations):
            ax.text(
                bar.get_width(), bar.get_y() + bar.get_height() / 2,
                f" {duration:.2f} ms", va="center", fontsize=9,
            )
        ax.invert_yaxis()
        ax.set_xlabel("virtual duration (ms)")
        ax.set_title(
            f"initialization phase: {init.final.value}, total {init.total_elapsed_ms:.2f} ms"
        )
    else:
        ax.text(0.5, 0.5, "no initialization steps executed", ha="center", va="center")
        ax.set_axis_off()
    fig.tight_layout()
    fig.savefig(_ensure_parent(path), dpi=120)
    plt.close(fig)
    return Path(path)


def render_monitoring_figure(monitor: Optional[MonitorReport], path) -> Path:
    """Temperature and cell-voltage envelope across the monitoring samples."""
    plt = _pyplot()
    fig, (ax_temp, ax_volt) = plt.subplots(2, 1, figsize=(7.0, 4.8), sharex=True)
    samples = monitor.samples if monitor is not None else []
    if samples:
        times = [sample.timestamp_ms for sample in samples]
        temps = [sample.status.temperature_dc / 10 for sample in samples]
        ax_temp.plot(times, temps, marker="o", color="tab:red")
        ax_temp.set_ylabel("temperature (°C)")
        title = f"monitoring: {len(samples)} samples, {monitor.per_sample_ms:.1f} ms each"
        if monitor.field_lost:
            title += " (field lost, truncated)"
        ax_temp.set_title(title)
        v_min = [min(sample.status.voltages_mv) for sample in samples]
        v_max = [max(sample.status.voltages_mv) for sample in samples]
        ax_volt.fill_between(times, v_min, v_max, alpha=0.3, color="tab:blue")
        ax_volt.plot(times, v_min, color="tab:blue", linewidth=1)
        ax_volt.plot(times, v_max, color="tab:blue", linewidth=1)
        ax_volt.set_ylabel("cell voltage (mV)")
        ax_volt.set_xlabel("virtual time (ms)")
    else:
        for ax in (ax_temp, ax_volt):
            ax.set_axis_off()
        ax_temp.text(0.5, 0.5, "no monitoring samples", ha="center", va="center")
    fig.tight_layout()
    fig.savefig(_ensure_parent(path), dpi=120)
    plt.close(fig)
    return Path(path)


def render_field_profile_figure(
    path,
    d_max_cm: float = 5.4,
    coupling_exponent: float = 3.0,
    tag_distances=(),
    sweep_cm: float = 10.0,
    points: int = 500,
) -> Path:
    """Coupling strength over distance with the powered region shaded."""
    from .link import FieldModel

    plt = _pyplot()
    model = FieldModel(0.0, d_max_cm, coupling_exponent)
    xs = [sweep_cm * i / (points - 1) for i in range(points)]
    ys = [model.field_strength(x) for x in xs]
    fig, ax = plt.subplots(figsize=(7.0, 3.4))
    ax.plot(xs, ys, color="tab:blue")
    ax.axvspan(0, d_max_cm, alpha=0.15, color="tab:green", label=f"powered (≤ {d_max_cm} cm)")
    ax.axvline(d_max_cm, linestyle="--", color="tab:green")
    for distance in tag_distances:
        ax.plot([distance], [model.field_strength(distance)], marker="x", color="tab:red")
    ax.set_xlabel("antenna separation (cm)")
    ax.set_ylabel("field strength (normalized)")
    ax.set_title("energy-harvesting link budget")
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(_ensure_parent(path), dpi=120)
    plt.close(fig)
    return Path(path)


def render_threat_matrix_figure(suite: ThreatSuiteReport, path) -> Path:
    """One row per scenario: outcome plus the defense that fired."""
    plt = _pyplot()
    results = [suite.baseline, *suite.threats, suite.limitation]
    names, values, colors, labels = [], [], [], []
    for result in results:
        names.append(result.name)
        if result.name == "baseline":
            good = bool(result.succeeded_init)
            values.append(1.0)
            colors.append("tab:green" if good else "tab:red")
            labels.append("succeeded" if good else "failed")
        elif result.expected_limitation:
            values.append(1.0)
            colors.append("tab:orange")
            labels.append("documented limitation")
        else:
            values.append(1.0)
            colors.append("tab:green" if result.blocked else "tab:red")
            labels.append(
                f"blocked by {result.blocking_countermeasure}"
                if result.blocked
                else "NOT BLOCKED"
            )
    fig, ax = plt.subplots(figsize=(7.0, 0.6 * len(results) + 1.2))
    bars = ax.barh(names, values, color=colors)
    for bar, label in zip(bars, labels):
        ax.text(0.02, bar.get_y() + bar.get_height() / 2, label, va="center", fontsize=9)
    ax.invert_yaxis()
    ax.set_xlim(0, 1)
    ax.set_xticks([])
    ax.set_title("adversary scenarios and the defenses that stopped them")
    fig.tight_layout()
    fig.savefig(_ensure_parent(path), dpi=120)
    plt.close(fig)
    return Path(path)


def render_run_figures(
    out_path,
    cfg: ScenarioConfig,
    init: Optional[InitReport],
    monitor: Optional[MonitorReport],
) -> list[Path]:
    """Render the standard figure set next to a run report file."""
    out_path = Path(out_path)
    directory, stem = out_path.parent, out_path.stem
    reader_cfg = cfg.topology.get("reader", {})
    distances = [
        float(tag.get("distance_cm", 0.0)) for tag in cfg.topology.get("tags", [])
        if "distance_cm" in tag
    ]
    return [
        render_init_phase_figure(init, directory / f"{stem}_init_phase.png"),
        render_monitoring_figure(monitor, directory / f"{stem}_monitoring.png"),
        render_field_profile_figure(
            directory / f"{stem}_field.png",
            d_max_cm=float(reader_cfg.get("d_max_cm", 5.4)),
            coupling_exponent=float(reader_cfg.get("coupling_exponent", 3.0)),
            tag_distances=distances,
        ),
    ]
