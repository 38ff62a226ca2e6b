"""Benchmark reports in the layout of a Caliper summary.

Column headers and number formats are fixed; reports from different runs
diff cleanly.
"""

import json

from devchain.bench.resources import ResourceSummary
from devchain.bench.round import RoundMetrics

TITLE = "Summary of performance metrics"
SUMMARY_COLUMNS = (
    "Name",
    "Succ",
    "Fail",
    "Send Rate (TPS)",
    "Max Latency (s)",
    "Min Latency (s)",
    "Avg Latency (s)",
    "Throughput (TPS)",
)
RESOURCE_TITLE = "Resource Utilization for Round {index}"
RESOURCE_COLUMNS = (
    "Name",
    "CPU% (max)",
    "CPU% (avg)",
    "Memory(max) [MB]",
    "Memory(avg) [MB]",
    "Traffic In [MB]",
    "Traffic Out [MB]",
    "Disc Write [B]",
    "Disc Read [B]",
)


def _row(cells) -> str:
    return "| " + " | ".join(cells) + " |"


def _table(columns, rows) -> list[str]:
    return [_row(columns), _row("---" for _ in columns), *(_row(r) for r in rows)]


def summary_row(m: RoundMetrics) -> tuple[str, ...]:
    return (
        m.name + (" (partial)" if m.partial else ""),
        str(m.succ),
        str(m.fail),
        f"{m.send_rate_tps:.1f}",
        f"{m.max_latency_s:.2f}",
        f"{m.min_latency_s:.2f}",
        f"{m.avg_latency_s:.2f}",
        f"{m.throughput_tps:.1f}",
    )


def _traffic(mb: float) -> str:
    # three significant digits, trailing zeros kept: 0.0500, 6.03, 12.5
    return f"{mb:#.3g}" if mb else "0.00"


def resource_row(s: ResourceSummary) -> tuple[str, ...]:
    return (
        s.name + (" (partial)" if s.partial else ""),
        f"{s.cpu_max:.2f}",
        f"{s.cpu_avg:.2f}",
        f"{s.memory_max_mb:.1f}",
        f"{s.memory_avg_mb:.1f}",
        _traffic(s.traffic_in_mb),
        _traffic(s.traffic_out_mb),
        f"{s.disc_write_b:.2f}",
        f"{s.disc_read_b:.2f}",
    )


def render_markdown(rounds, resources=()) -> str:
    lines = [f"# {TITLE}", "", *_table(SUMMARY_COLUMNS, (summary_row(m) for m in rounds))]
    for index, summaries in enumerate(resources):
        if not summaries:
            continue
        lines += [
            "",
            f"## {RESOURCE_TITLE.format(index=index)}",
            "",
            *_table(RESOURCE_COLUMNS, (resource_row(s) for s in summaries)),
        ]
    return "\n".join(lines) + "\n"


def render_json(rounds, resources=()) -> str:
    doc = {
        "resources": [[s.to_doc() for s in summaries] for summaries in resources],
        "rounds": [m.to_doc() for m in rounds],
        "title": TITLE,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def render_report(rounds, resources=(), fmt: str = "markdown") -> bytes:
    """`resources[i]` holds the summaries sampled during round i."""
    if fmt == "json":
        return render_json(rounds, resources).encode("utf-8")
    return render_markdown(rounds, resources).encode("utf-8")


def parse_json_report(data: bytes) -> tuple[list[RoundMetrics], list[list[ResourceSummary]]]:
    doc = json.loads(data)
    rounds = [RoundMetrics.from_doc(d) for d in doc["rounds"]]
    resources = [[ResourceSummary.from_doc(d) for d in per_round] for per_round in doc["resources"]]
    return rounds, resources
