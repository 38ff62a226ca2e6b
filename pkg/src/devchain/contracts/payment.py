"""Installments between client and team, and the automatic freeze on non-payment.

Open dues are mirrored in a single `payments/schedule` document
(project_id -> next_due) so the per-block hook and the orderer's deadline
heartbeat do not have to scan every project.
"""

import logging

from devchain.consensus.events import Audience
from devchain.contracts.engine import Contract, TxContext, operation, scale_ms
from devchain.contracts.models import (
    NETWORK_CONFIG_KEY,
    SCHEDULE_KEY,
    Agreement,
    PaymentTrigger,
    ProjectStatus,
    agreement_key,
    project_key,
    record_key,
)
from devchain.contracts.token import move_tokens
from devchain.errors import NothingDue, ProjectNotActive, Unauthorized
from devchain.ledger.identity import Role

logger = logging.getLogger(__name__)


def schedule_due(ctx: TxContext, project: dict, next_due: int | None):
    project["next_due"] = next_due
    schedule = ctx.state.get(SCHEDULE_KEY) or {}
    if next_due is None:
        schedule.pop(project["project_id"], None)
    else:
        schedule[project["project_id"]] = next_due
    ctx.state.put(SCHEDULE_KEY, schedule)


def unschedule(ctx: TxContext, project: dict):
    schedule_due(ctx, project, None)


class PaymentContract(Contract):
    name = "payment"

    @operation
    def pay_installment(self, ctx: TxContext):
        project = self.load_project(ctx)
        project_id = project["project_id"]
        if ctx.submitter.role is not Role.client:
            raise Unauthorized(f"{ctx.submitter} is not a client")
        self.require_member(ctx, project)
        if project["status"] not in (ProjectStatus.active.value, ProjectStatus.frozen.value):
            raise ProjectNotActive(f"Project '{project_id}' is {project['status']}")
        if project["next_due"] is None:
            raise NothingDue(f"Nothing is due for project '{project_id}'")

        agreement = Agreement.from_doc(ctx.state.get(agreement_key(project_id)))
        if project["paid_cents"] + agreement.installment_cents > agreement.project_budget_cents:
            raise NothingDue(f"Budget of project '{project_id}' is exhausted")

        move_tokens(ctx, ctx.submitter_id, project["owner"], agreement.installment_cents)
        project["paid_cents"] += agreement.installment_cents

        paid_due = project["next_due"]
        if project["paid_cents"] + agreement.installment_cents > agreement.project_budget_cents:
            next_due = None
        elif agreement.trigger is PaymentTrigger.per_two_weeks:
            next_due = paid_due + ctx.scaled(agreement.period_ms)
        else:
            next_due = None
        schedule_due(ctx, project, next_due)

        was_frozen = project["status"] == ProjectStatus.frozen.value
        if was_frozen:
            project["status"] = ProjectStatus.active.value

        seq = self.next_seq(project, "payment")
        receipt = {
            "amount_cents": agreement.installment_cents,
            "block_timestamp": ctx.block_timestamp,
            "due": paid_due,
            "from": ctx.submitter_id,
            "height": ctx.height,
            "paid_total_cents": project["paid_cents"],
            "project_id": project_id,
            "receipt_id": seq,
            "to": project["owner"],
        }
        ctx.state.put(record_key(project_id, "payment", seq), receipt)
        self.save_project(ctx, project)

        self.emit(ctx, "PaymentMade", receipt, Audience.parties)
        if was_frozen:
            self.emit(ctx, "ProjectUnfrozen", {"project_id": project_id})
        return receipt

    def on_block(self, ctx: TxContext):
        """Freeze every Active project whose due date plus grace lies behind the block."""
        schedule = ctx.state.get(SCHEDULE_KEY) or {}
        for project_id in sorted(schedule):
            project = ctx.state.get(project_key(project_id))
            if project is None or project["status"] != ProjectStatus.active.value:
                continue
            agreement = Agreement.from_doc(ctx.state.get(agreement_key(project_id)))
            deadline = schedule[project_id] + ctx.scaled(agreement.grace_ms)
            if ctx.block_timestamp <= deadline:
                continue

            project["status"] = ProjectStatus.frozen.value
            project["frozen_at"] = ctx.block_timestamp
            ctx.state.put(project_key(project_id), project)
            logger.info(f" --> Project {project_id} frozen at height {ctx.height}: payment overdue")
            self.emit(
                ctx,
                "ProjectFrozen",
                {
                    "action": agreement.nonpayment_action,
                    "due": schedule[project_id],
                    "project_id": project_id,
                },
                project_id=project_id,
            )

    def next_deadline(self, state) -> int | None:
        schedule = state.get(SCHEDULE_KEY) or {}
        divisor = (state.get(NETWORK_CONFIG_KEY) or {}).get("time_scale_divisor", 1)
        deadlines = []
        for project_id, next_due in schedule.items():
            project = state.get(project_key(project_id))
            if project is None or project["status"] != ProjectStatus.active.value:
                continue
            agreement = Agreement.from_doc(state.get(agreement_key(project_id)))
            deadlines.append(next_due + scale_ms(agreement.grace_ms, divisor))
        return min(deadlines) if deadlines else None
