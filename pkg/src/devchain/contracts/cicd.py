import logging
from dataclasses import replace

from devchain.consensus.events import Audience
from devchain.contracts.engine import Contract, TxContext, operation
from devchain.contracts.models import (
    NAME_RE,
    Agreement,
    BuildRecord,
    BuildStatus,
    GateFlags,
    PaymentTrigger,
    ProjectStatus,
    Verdict,
    build_key,
    require_str,
)
from devchain.contracts.payment import schedule_due
from devchain.errors import (
    BuildNotBuilt,
    BuildNotFound,
    DuplicateNameVersion,
    GateNotPassed,
)
from devchain.ledger.identity import Role

logger = logging.getLogger(__name__)

FAILED_BUILD_MESSAGE = "remove the error in the code"


def build_from_doc(doc: dict) -> BuildRecord:
    gate = doc.get("gate")
    return BuildRecord(
        name=doc["name"],
        version=doc["version"],
        time=doc["time"],
        date=doc["date"],
        package_cid=doc["package_cid"],
        review=Verdict(doc["review"]),
        unit=Verdict(doc["unit"]),
        integration=Verdict(doc["integration"]),
        status=BuildStatus(doc["status"]),
        gate=GateFlags(**gate) if gate else None,
    )


class CicdContract(Contract):
    """Build records, the pre-deployment gate and deployment."""

    name = "cicd"

    def _load_build(self, ctx: TxContext, project: dict) -> BuildRecord:
        name = require_str(ctx.args, "name", NAME_RE)
        version = require_str(ctx.args, "version", NAME_RE)
        doc = ctx.state.get(build_key(project["project_id"], name, version))
        if doc is None:
            raise BuildNotFound(f"No build {name}@{version} in project '{project['project_id']}'")
        return build_from_doc(doc)

    def _save_build(self, ctx: TxContext, project: dict, build: BuildRecord, **extra):
        doc = build.to_doc()
        doc.update(extra)
        ctx.state.put(build_key(project["project_id"], build.name, build.version), doc)

    @operation
    def record_build(self, ctx: TxContext):
        project = self.load_project(ctx)
        self.require_active(project)
        self.require_member(ctx, project)
        build = BuildRecord.from_args(ctx.args.get("build"))

        key = build_key(project["project_id"], build.name, build.version)
        if key in ctx.state:
            raise DuplicateNameVersion(f"{build.name}@{build.version} was already recorded")

        self._save_build(
            ctx, project, build, recorded_at=ctx.block_timestamp, submitter=ctx.submitter_id
        )
        summary = {
            "name": build.name,
            "project_id": project["project_id"],
            "status": build.status.value,
            "version": build.version,
        }
        if build.status is BuildStatus.failed:
            self.emit(
                ctx,
                "Alert",
                {**summary, "failed_stages": build.failed_stages, "message": FAILED_BUILD_MESSAGE},
                Audience.developers,
            )
        else:
            self.emit(ctx, "BuildRecorded", {**summary, "package_cid": build.package_cid})
        return build.status.value

    @operation
    def attest_gate(self, ctx: TxContext):
        project = self.load_project(ctx)
        self.require_active(project)
        build = self._load_build(ctx, project)
        if build.status is not BuildStatus.built:
            raise BuildNotBuilt(f"{build.name}@{build.version} is {build.status.value}")
        self.require_role(ctx, Role.manager, Role.tester)
        self.require_member(ctx, project)

        flags = GateFlags.from_args(ctx.args, attester=ctx.submitter_id)
        status = BuildStatus.gate_passed if flags.all_passed else BuildStatus.built
        stored = ctx.state.get(build_key(project["project_id"], build.name, build.version))
        stored.update(replace(build, gate=flags, status=status).to_doc())
        ctx.state.put(build_key(project["project_id"], build.name, build.version), stored)

        self.emit(
            ctx,
            "GateAttested",
            {
                "flags": flags.to_doc(),
                "name": build.name,
                "project_id": project["project_id"],
                "status": status.value,
                "version": build.version,
            },
        )
        return status.value

    @operation
    def deploy(self, ctx: TxContext):
        project = self.load_project(ctx)
        self.require_active(project)
        self.require_member(ctx, project)
        self.require_role(ctx, Role.owner, Role.manager, Role.developer, Role.tester)
        target = require_str(ctx.args, "target")
        build = self._load_build(ctx, project)
        if build.status is not BuildStatus.gate_passed:
            raise GateNotPassed(
                f"{build.name}@{build.version} is {build.status.value}, gate not passed"
            )

        stored = ctx.state.get(build_key(project["project_id"], build.name, build.version))
        stored.update(replace(build, status=BuildStatus.deployed).to_doc())
        stored.update({"deployed_at": ctx.block_timestamp, "target": target})
        ctx.state.put(build_key(project["project_id"], build.name, build.version), stored)

        project["iteration_counter"] += 1
        agreement = Agreement.from_doc(self.load_agreement(ctx))
        budget_left = agreement.project_budget_cents - project["paid_cents"]
        if (
            agreement.trigger is PaymentTrigger.per_iteration
            and project["status"] == ProjectStatus.active.value
            and budget_left >= agreement.installment_cents
            and project["next_due"] is None
        ):
            schedule_due(ctx, project, ctx.block_timestamp + ctx.scaled(agreement.grace_ms))
        self.save_project(ctx, project)

        logger.debug(f" --> {build.name}@{build.version} deployed to {target}")
        self.emit(
            ctx,
            "Deployed",
            {
                "iteration": project["iteration_counter"],
                "name": build.name,
                "project_id": project["project_id"],
                "target": target,
                "version": build.version,
            },
        )
        return BuildStatus.deployed.value
