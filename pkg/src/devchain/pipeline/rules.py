"""Deterministic check rules standing in for lint and test tooling.

A rule sees only the snapshot's files (relative path -> bytes), never the
network or the clock, so a tree always gets the same verdict.
"""

from dataclasses import dataclass, field
from enum import Enum

from devchain.castore.objects import ContentId, cid_of
from devchain.contracts.models import Verdict
from devchain.errors import InvalidPipelineConfig, MalformedContentId


class Stage(Enum):
    review = "Review"
    unit = "Unit"
    integration = "Integration"


STAGE_ORDER = (Stage.review, Stage.unit, Stage.integration)


@dataclass(frozen=True)
class Failure:
    rule: str
    path: str

    def to_doc(self) -> dict:
        return {"path": self.path, "rule": self.rule}


@dataclass(frozen=True)
class StageResult:
    stage: Stage
    failures: tuple[Failure, ...] = ()

    @property
    def verdict(self) -> Verdict:
        return Verdict.failed if self.failures else Verdict.passed

    def to_doc(self) -> dict:
        return {
            "failures": [f.to_doc() for f in self.failures],
            "stage": self.stage.value,
            "verdict": self.verdict.value,
        }


@dataclass(frozen=True)
class CheckRule:
    description: str = ""

    kind = ""

    def check(self, files: dict[str, bytes]) -> list[Failure]:
        raise NotImplementedError

    def fail(self, path: str) -> Failure:
        return Failure(self.description or self.kind, path)


@dataclass(frozen=True)
class MaxFileBytes(CheckRule):
    limit: int = 0

    kind = "MaxFileBytes"

    def check(self, files):
        return [self.fail(path) for path, data in sorted(files.items()) if len(data) > self.limit]


@dataclass(frozen=True)
class ForbiddenPattern(CheckRule):
    pattern: bytes = b""
    paths: tuple[str, ...] = field(default=())

    kind = "ForbiddenPattern"

    def check(self, files):
        return [
            self.fail(path)
            for path, data in sorted(files.items())
            if (not self.paths or any(path.startswith(p) for p in self.paths))
            and self.pattern in data
        ]


@dataclass(frozen=True)
class RequiredPath(CheckRule):
    path: str = ""

    kind = "RequiredPath"

    def check(self, files):
        target = self.path.strip("/")
        if target in files or any(p.startswith(target + "/") for p in files):
            return []
        return [self.fail(target)]


@dataclass(frozen=True)
class ManifestAssertion(CheckRule):
    path: str = ""
    expected_digest: str = ""

    kind = "ManifestAssertion"

    def check(self, files):
        data = files.get(self.path)
        if data is None or cid_of(data) != self.expected_digest:
            return [self.fail(self.path)]
        return []


RULE_KINDS = {
    cls.kind: cls for cls in (MaxFileBytes, ForbiddenPattern, RequiredPath, ManifestAssertion)
}


def rule_from_doc(doc: dict) -> CheckRule:
    if not isinstance(doc, dict) or doc.get("kind") not in RULE_KINDS:
        raise InvalidPipelineConfig(f"Unknown check rule {doc!r}")
    try:
        kind = doc["kind"]
        description = doc.get("description", "")
        if kind == MaxFileBytes.kind:
            return MaxFileBytes(description, limit=int(doc["limit"]))
        if kind == ForbiddenPattern.kind:
            return ForbiddenPattern(
                description,
                pattern=doc["pattern"].encode("utf-8"),
                paths=tuple(doc.get("paths", ())),
            )
        if kind == RequiredPath.kind:
            return RequiredPath(description, path=doc["path"])
        if kind == ManifestAssertion.kind:
            expected = doc["expected_digest"]
            if not expected.startswith("sha256-"):
                expected = "sha256-" + expected
            return ManifestAssertion(
                description, path=doc["path"], expected_digest=str(ContentId.parse(expected))
            )
    except (KeyError, TypeError, ValueError, AttributeError, MalformedContentId) as e:
        raise InvalidPipelineConfig(f"Invalid check rule {doc!r}: {e}")


def run_stage(stage: Stage, rules, files: dict[str, bytes]) -> StageResult:
    failures = []
    for rule in rules:
        failures.extend(rule.check(files))
    return StageResult(stage, tuple(failures))
