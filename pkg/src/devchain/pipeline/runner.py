import logging
import os
import tempfile
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from devchain import config
from devchain.castore.objects import ContentId
from devchain.contracts.models import BuildStatus, Verdict, build_key
from devchain.errors import (
    BuildNotFound,
    CastoreError,
    DanglingRepoHead,
    GateNotPassed,
    NotFound,
    QueueFull,
    RpcTimeout,
    SubmitFailure,
    TargetUnwritable,
    TransportError,
)
from devchain.pipeline.archive import make_package
from devchain.pipeline.config import PipelineConfig
from devchain.pipeline.rules import STAGE_ORDER, StageResult, run_stage

logger = logging.getLogger(__name__)

RETRYABLE = (TransportError, RpcTimeout, QueueFull)


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


@dataclass(frozen=True)
class PipelineRun:
    project_id: str
    commit_cid: str
    name: str
    version: str
    stages: tuple[StageResult, ...]
    package_cid: str | None
    status: str
    tx_id: str

    @property
    def passed(self) -> bool:
        return all(s.verdict is Verdict.passed for s in self.stages)

    def to_doc(self) -> dict:
        return {
            "commit_cid": self.commit_cid,
            "name": self.name,
            "package_cid": self.package_cid,
            "project_id": self.project_id,
            "stages": [s.to_doc() for s in self.stages],
            "status": self.status,
            "tx_id": self.tx_id,
            "version": self.version,
        }


@dataclass(frozen=True)
class DeployOutcome:
    name: str
    version: str
    path: str
    package_cid: str
    status: str

    def to_doc(self) -> dict:
        return {
            "name": self.name,
            "package_cid": self.package_cid,
            "path": self.path,
            "status": self.status,
            "version": self.version,
        }


def commit_with_retry(signer, tx, retries=None, backoff=None):
    """Commit `tx`, resubmitting the same signed tx while the chain is unreachable.

    Contract errors such as DuplicateNameVersion are the chain's answer and
    go straight to the caller.
    """
    retries = config.submit_retries if retries is None else retries
    backoff = config.submit_backoff if backoff is None else backoff
    for attempt in range(retries + 1):
        try:
            return signer.commit(tx, resubmit=attempt > 0)
        except RETRYABLE as e:
            if attempt == retries:
                raise SubmitFailure(
                    f"{tx.contract}.{tx.operation} not committed after "
                    f"{attempt + 1} attempts: {e.message}"
                )
            delay = backoff * 2**attempt
            logger.warning(f" --> Submit failed ({e.code}), retrying in {delay:.2f}s")
            time.sleep(delay)


class PipelineRunner:
    """Runs review, test and package stages over a repo snapshot and records the build."""

    def __init__(self, store, signer, pipeline: PipelineConfig, clock=utc_now, publish=None):
        self.store = store
        self.signer = signer
        self.pipeline = pipeline
        self.clock = clock
        # optional callable bytes -> cid pushing the package to the node's store
        self.publish = publish

    def snapshot_files(self, commit_cid: str) -> tuple[str, dict]:
        try:
            commit = self.store.get_commit(commit_cid)
            return commit.tree_cid, self.store.read_tree_files(commit.tree_cid)
        except CastoreError as e:
            raise DanglingRepoHead(f"Repo head {commit_cid} is not fully present: {e}")

    def run(self, project_id: str, commit_cid: str, head_seq: int = 0) -> PipelineRun:
        tree_cid, files = self.snapshot_files(commit_cid)
        name = self.pipeline.package.name
        version = self.pipeline.package.version(head_seq, ContentId.parse(commit_cid).hex)
        logger.info(f" --> Pipeline for {project_id} {name}@{version} on {commit_cid[:19]}")

        stages = tuple(
            run_stage(stage, self.pipeline.checks_for(stage), files) for stage in STAGE_ORDER
        )
        for result in stages:
            logger.info(f" --> Stage {result.stage.value}: {result.verdict.value}")

        package_cid = None
        if all(s.verdict is Verdict.passed for s in stages):
            package = make_package(self.store, tree_cid, self.pipeline.package.include_paths)
            package_cid = self.store.put_blob(package)
            self.store.pin(package_cid)
            if self.publish is not None:
                self.publish(package)
            logger.info(f" --> Package {package_cid} ({len(package)} bytes)")

        now = self.clock()
        record = {
            "date": now.strftime("%Y-%m-%d"),
            "integration": stages[2].verdict.value,
            "name": name,
            "package_cid": package_cid,
            "review": stages[0].verdict.value,
            "time": now.strftime("%H:%M:%S"),
            "unit": stages[1].verdict.value,
            "version": version,
        }
        tx = self.signer.sign(project_id, "cicd", "record_build", {"build": record})
        status = self._submit(tx)
        return PipelineRun(
            project_id=project_id,
            commit_cid=commit_cid,
            name=name,
            version=version,
            stages=stages,
            package_cid=package_cid,
            status=status,
            tx_id=tx.tx_id.hex(),
        )

    def _submit(self, tx):
        return commit_with_retry(self.signer, tx)


def run_pipeline(repo_head_cid, pipeline, clock, store, signer, project_id, head_seq=0):
    return PipelineRunner(store, signer, pipeline, clock=clock).run(
        project_id, repo_head_cid, head_seq
    )


def _place(target: Path, filename: str, data: bytes) -> Path:
    try:
        target.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=target, prefix=".deploy-")
        with os.fdopen(fd, "wb") as file:
            file.write(data)
        path = target / filename
        os.replace(tmp, path)
        return path
    except OSError as e:
        raise TargetUnwritable(f"Cannot write to {target}: {e}")


def _roll_back(target: Path, path: Path, previous: bytes | None, created: bool):
    if previous is None:
        path.unlink(missing_ok=True)
    else:
        _place(target, path.name, previous)
    if created and not any(target.iterdir()):
        target.rmdir()


def execute_deploy(project_id, name, version, target, signer, store, client=None) -> DeployOutcome:
    """Place a gate-passed package at `target`, then record the deployment on chain.

    Nothing touches the target unless the chain reports GatePassed and the
    package reads back intact. If the deploy tx is not committed, for any
    reason, the target is restored to what it held before.
    """
    client = client or signer.client
    try:
        build = client.query_state(build_key(project_id, name, version))
    except NotFound:
        raise BuildNotFound(f"No build {name}@{version} in project '{project_id}'")
    if build["status"] != BuildStatus.gate_passed.value:
        raise GateNotPassed(f"{name}@{version} is {build['status']}, refusing to deploy")

    package_cid = build["package_cid"]
    # get() re-hashes every chunk against the id
    data = store.get(package_cid)

    target = Path(target)
    created = not target.exists()
    filename = f"{name}-{version}.dcpkg"
    previous = (target / filename).read_bytes() if (target / filename).is_file() else None
    path = _place(target, filename, data)
    logger.info(f" --> Placed {path}")
    try:
        status = signer.execute(
            project_id, "cicd", "deploy", {"name": name, "target": str(target), "version": version}
        )
    except Exception as e:
        _roll_back(target, path, previous, created)
        logger.warning(f" --> Deploy of {name}@{version} not recorded ({e}), rolled back {path}")
        raise
    return DeployOutcome(name, version, str(path), package_cid, status)
