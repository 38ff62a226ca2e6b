from devchain.contracts.engine import Contract, TxContext, lookup_identity, operation
from devchain.contracts.models import (
    PROJECT_ID_RE,
    Agreement,
    PaymentTrigger,
    ProjectStatus,
    Side,
    agreement_key,
    check_cid,
    member_key,
    parse_enum,
    project_key,
    registry_key,
    require_str,
)
from devchain.contracts.payment import schedule_due, unschedule
from devchain.errors import (
    AgreementImmutable,
    AlreadyActive,
    DuplicateKey,
    DuplicateProjectId,
    InvalidArguments,
    ProjectNotActive,
    Unauthorized,
    UnsupportedValue,
    WrongSide,
)
from devchain.ledger.identity import Identity, Role

MANAGING_ROLES = (Role.owner, Role.manager)


class ProjectContract(Contract):
    """Project setup and the two-sided terms handshake."""

    name = "project"

    def _member_doc(self, identity: Identity, ctx: TxContext) -> dict:
        return {
            "added_at": ctx.block_timestamp,
            "member_id": identity.member_id.hex(),
            "org": identity.org,
            "public_key": identity.public_key.hex(),
            "role": identity.role.value,
        }

    @operation
    def create_project(self, ctx: TxContext):
        self.require_role(ctx, *MANAGING_ROLES)
        project_id = ctx.project_id
        if not PROJECT_ID_RE.match(project_id):
            raise InvalidArguments(f"Invalid project id {project_id!r}")
        if project_key(project_id) in ctx.state:
            raise DuplicateProjectId(f"Project '{project_id}' already exists")

        agreement = Agreement.from_doc(ctx.args.get("agreement"))
        terms_cid = check_cid(ctx.args.get("terms_cid"), "terms_cid")
        name = require_str(ctx.args, "name")

        owner = ctx.submitter
        if ctx.args.get("owner") not in (None, ctx.submitter_id):
            try:
                owner = lookup_identity(ctx.state, ctx.args["owner"])
            except UnsupportedValue:
                owner = None
            if owner is None:
                raise InvalidArguments(f"Owner {ctx.args['owner']} is not a registered identity")

        project = {
            "client_accepted": False,
            "counters": {},
            "created_at": ctx.block_timestamp,
            "head_cid": None,
            "iteration_counter": 0,
            "name": name,
            "next_due": None,
            "owner": owner.member_id.hex(),
            "paid_cents": 0,
            "project_id": project_id,
            "status": ProjectStatus.draft.value,
            "team_accepted": False,
            "terms_cid": terms_cid,
        }
        self.save_project(ctx, project)
        ctx.state.put(agreement_key(project_id), agreement.to_doc())
        founders = [owner] if owner == ctx.submitter else [owner, ctx.submitter]
        for identity in founders:
            ctx.state.put(
                member_key(project_id, identity.member_id.hex()), self._member_doc(identity, ctx)
            )

        self.emit(
            ctx,
            "ProjectCreated",
            {"name": name, "owner": project["owner"], "project_id": project_id},
        )
        return project_id

    @operation
    def add_member(self, ctx: TxContext):
        project = self.load_project(ctx)
        self.require_role(ctx, *MANAGING_ROLES)
        self.require_member(ctx, project)
        if project["status"] not in (ProjectStatus.draft.value, ProjectStatus.active.value):
            raise ProjectNotActive(f"Cannot add members to a {project['status']} project")

        try:
            identity = Identity.from_doc(ctx.args["identity"])
        except (UnsupportedValue, KeyError, TypeError) as e:
            raise InvalidArguments(f"Invalid identity: {e}")

        mid = identity.member_id.hex()
        if member_key(project["project_id"], mid) in ctx.state:
            raise DuplicateKey(f"Public key of {identity} is already registered in this project")

        registered = ctx.state.get(registry_key(mid))
        if registered is None:
            ctx.state.put(registry_key(mid), identity.to_doc())
        elif registered["role"] != identity.role.value or registered["org"] != identity.org:
            raise DuplicateKey(
                f"Public key is already registered as {registered['role']}@{registered['org']}"
            )

        ctx.state.put(member_key(project["project_id"], mid), self._member_doc(identity, ctx))
        self.emit(
            ctx,
            "MemberAdded",
            {"member_id": mid, "org": identity.org, "role": identity.role.value},
        )
        return mid

    @operation
    def accept_terms(self, ctx: TxContext):
        project = self.load_project(ctx)
        side = parse_enum(Side, ctx.args.get("side"), "side")
        if project["status"] != ProjectStatus.draft.value:
            raise AlreadyActive(f"Project '{project['project_id']}' is {project['status']}")

        if side is Side.team and ctx.submitter.role not in MANAGING_ROLES:
            raise WrongSide(f"{ctx.submitter} cannot accept for the team")
        if side is Side.client and ctx.submitter.role is not Role.client:
            raise WrongSide(f"{ctx.submitter} cannot accept for the client")
        self.require_member(ctx, project)

        flag = "team_accepted" if side is Side.team else "client_accepted"
        if not project[flag]:
            project[flag] = True
            self.emit(
                ctx, "TermsAccepted", {"project_id": project["project_id"], "side": side.value}
            )

        if project["team_accepted"] and project["client_accepted"]:
            project["status"] = ProjectStatus.active.value
            project["activated_at"] = ctx.block_timestamp
            agreement = Agreement.from_doc(self.load_agreement(ctx))
            if agreement.trigger is PaymentTrigger.per_two_weeks:
                schedule_due(ctx, project, ctx.block_timestamp + ctx.scaled(agreement.period_ms))
            self.emit(
                ctx,
                "TermsConsensus",
                {"activated_at": ctx.block_timestamp, "project_id": project["project_id"]},
            )

        self.save_project(ctx, project)
        return project["status"]

    @operation
    def amend_agreement(self, ctx: TxContext):
        project = self.load_project(ctx)
        self.require_role(ctx, *MANAGING_ROLES)
        self.require_member(ctx, project)
        if project["status"] != ProjectStatus.draft.value:
            raise AgreementImmutable(
                f"Agreement of project '{project['project_id']}' is frozen since activation"
            )

        agreement = Agreement.from_doc(ctx.args.get("agreement"))
        ctx.state.put(agreement_key(project["project_id"]), agreement.to_doc())
        project["team_accepted"] = False
        project["client_accepted"] = False
        self.save_project(ctx, project)
        self.emit(ctx, "AgreementAmended", {"project_id": project["project_id"]})
        return project["status"]

    @operation
    def close_project(self, ctx: TxContext):
        project = self.load_project(ctx)
        if ctx.submitter_id != project["owner"]:
            raise Unauthorized(f"Only the owner may close project '{project['project_id']}'")
        self.require_active(project)

        project["status"] = ProjectStatus.closed.value
        unschedule(ctx, project)
        self.save_project(ctx, project)
        self.emit(ctx, "ProjectClosed", {"project_id": project["project_id"]})
        return project["status"]


def member_ids(state, project_id: str) -> list[str]:
    prefix = member_key(project_id, "")
    return [key[len(prefix):] for key in state.keys(prefix)]

