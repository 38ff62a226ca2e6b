from devchain.consensus.events import Audience
from devchain.contracts.engine import Contract, TxContext, operation
from devchain.contracts.models import PlanKind, check_cid, parse_enum, record_key


class DevelopmentContract(Contract):
    """Planning artifacts and repository heads. Only content ids go on chain."""

    name = "development"

    @operation
    def record_plan(self, ctx: TxContext):
        project = self.load_project(ctx)
        self.require_active(project)
        self.require_member(ctx, project)
        artifact_cid = check_cid(ctx.args.get("artifact_cid"), "artifact_cid")
        kind = parse_enum(PlanKind, ctx.args.get("kind"), "kind")
        title = ctx.args.get("title")

        record_id = self.next_seq(project, "plan")
        record = {
            "artifact_cid": artifact_cid,
            "block_timestamp": ctx.block_timestamp,
            "height": ctx.height,
            "kind": kind.value,
            "record_id": record_id,
            "submitter": ctx.submitter_id,
            "title": title if isinstance(title, str) else None,
        }
        ctx.state.put(record_key(project["project_id"], "plan", record_id), record)
        self.save_project(ctx, project)
        self.emit(ctx, "PlanRecorded", {"project_id": project["project_id"], **record})
        return record_id

    @operation
    def record_repo_head(self, ctx: TxContext):
        project = self.load_project(ctx)
        self.require_active(project)
        self.require_member(ctx, project)
        commit_cid = check_cid(ctx.args.get("commit_cid"), "commit_cid")

        head_seq = self.next_seq(project, "repo")
        record = {
            "block_timestamp": ctx.block_timestamp,
            "commit_cid": commit_cid,
            "head_seq": head_seq,
            "height": ctx.height,
            "submitter": ctx.submitter_id,
        }
        ctx.state.put(record_key(project["project_id"], "repo", head_seq), record)
        project["head_cid"] = commit_cid
        project["head_seq"] = head_seq
        self.save_project(ctx, project)
        self.emit(
            ctx,
            "RepoHeadUpdated",
            {"commit_cid": commit_cid, "head_seq": head_seq, "project_id": project["project_id"]},
            Audience.developers,
        )
        return head_seq
