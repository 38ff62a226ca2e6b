from devchain.consensus.events import Audience
from devchain.contracts.engine import Contract, TxContext, operation
from devchain.contracts.models import (
    Severity,
    parse_enum,
    record_key,
    require_int,
    require_str,
)

MAX_SCALE = 18


class MonitoringContract(Contract):
    name = "monitoring"

    @operation
    def record_metric(self, ctx: TxContext):
        project = self.load_project(ctx)
        self.require_active(project)
        self.require_member(ctx, project)
        metric_name = require_str(ctx.args, "metric_name")
        scaled_value = require_int(ctx.args, "scaled_value")
        scale = require_int(ctx.args, "scale", minimum=0, maximum=MAX_SCALE)

        seq = self.next_seq(project, "metric")
        ctx.state.put(
            record_key(project["project_id"], "metric", seq),
            {
                "block_timestamp": ctx.block_timestamp,
                "height": ctx.height,
                "metric_name": metric_name,
                "scale": scale,
                "scaled_value": scaled_value,
                "seq": seq,
                "submitter": ctx.submitter_id,
            },
        )
        self.save_project(ctx, project)
        return seq

    @operation
    def raise_alert(self, ctx: TxContext):
        """The alert record and its notification are written by the same tx."""
        project = self.load_project(ctx)
        self.require_active(project)
        self.require_member(ctx, project)
        severity = parse_enum(Severity, ctx.args.get("severity"), "severity")
        description = require_str(ctx.args, "description")

        alert_id = self.next_seq(project, "alert")
        record = {
            "alert_id": alert_id,
            "block_timestamp": ctx.block_timestamp,
            "description": description,
            "height": ctx.height,
            "severity": severity.value,
            "submitter": ctx.submitter_id,
        }
        ctx.state.put(record_key(project["project_id"], "alert", alert_id), record)
        self.save_project(ctx, project)
        self.emit(
            ctx, "Alert", {"project_id": project["project_id"], **record}, Audience.developers
        )
        return alert_id


def metric_value(record: dict) -> str:
    """Render a scaled metric, e.g. 146 at scale 2 -> '1.46'."""
    value, scale = record["scaled_value"], record["scale"]
    if scale == 0:
        return str(value)
    sign = "-" if value < 0 else ""
    digits = str(abs(value)).rjust(scale + 1, "0")
    return f"{sign}{digits[:-scale]}.{digits[-scale:]}"
