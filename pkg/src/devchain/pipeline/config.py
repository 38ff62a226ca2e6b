from dataclasses import dataclass, field
from pathlib import Path

import yaml

from devchain.errors import InvalidPipelineConfig, UnsupportedValue
from devchain.ledger.encoding import canonical_decode
from devchain.pipeline.rules import STAGE_ORDER, CheckRule, Stage, rule_from_doc

PIPELINE_FILE = "devchain.pipeline"
DEFAULT_VERSION_TEMPLATE = "0.1.{head_seq}"


@dataclass(frozen=True)
class StageSpec:
    stage: Stage
    checks: tuple[CheckRule, ...] = ()


@dataclass(frozen=True)
class PackageSpec:
    name: str
    version_template: str = DEFAULT_VERSION_TEMPLATE
    include_paths: tuple[str, ...] = ()

    def version(self, head_seq: int, commit_hex: str) -> str:
        try:
            return self.version_template.format(head_seq=head_seq, commit=commit_hex[:12])
        except (KeyError, IndexError, ValueError) as e:
            raise InvalidPipelineConfig(f"Bad version template {self.version_template!r}: {e}")


@dataclass(frozen=True)
class PipelineConfig:
    package: PackageSpec
    stages: tuple[StageSpec, ...] = field(default_factory=tuple)
    deploy_target: str = "deploy"

    def checks_for(self, stage: Stage) -> tuple[CheckRule, ...]:
        for spec in self.stages:
            if spec.stage is stage:
                return spec.checks
        return ()


def pipeline_config_from_doc(doc: dict) -> PipelineConfig:
    if not isinstance(doc, dict):
        raise InvalidPipelineConfig("Pipeline config must be a document")

    stages = []
    for entry in doc.get("stages", []):
        try:
            stage = Stage(entry["stage"])
        except (KeyError, TypeError, ValueError):
            raise InvalidPipelineConfig(f"Unknown stage in {entry!r}")
        stages.append(StageSpec(stage, tuple(rule_from_doc(c) for c in entry.get("checks", []))))

    order = [STAGE_ORDER.index(s.stage) for s in stages]
    if order != sorted(set(order)):
        raise InvalidPipelineConfig(
            "Stages must appear once each, in Review, Unit, Integration order"
        )

    package = doc.get("package") or {}
    if not isinstance(package.get("name"), str) or not package["name"]:
        raise InvalidPipelineConfig("package.name is required")
    spec = PackageSpec(
        name=package["name"],
        version_template=package.get("version_template", DEFAULT_VERSION_TEMPLATE),
        include_paths=tuple(package.get("include_paths", ())),
    )
    if "{head_seq}" not in spec.version_template and "{commit}" not in spec.version_template:
        raise InvalidPipelineConfig("version_template must contain {head_seq} or {commit}")

    return PipelineConfig(
        package=spec, stages=tuple(stages), deploy_target=doc.get("deploy_target", "deploy")
    )


def parse_pipeline_config(data: bytes) -> PipelineConfig:
    """Config bytes as checked into a repository (canonical JSON, or YAML)."""
    try:
        doc = canonical_decode(data)
    except UnsupportedValue:
        try:
            doc = yaml.safe_load(data)
        except yaml.YAMLError as e:
            raise InvalidPipelineConfig(f"Pipeline config is neither JSON nor YAML: {e}")
    return pipeline_config_from_doc(doc)


def load_pipeline_config(path) -> PipelineConfig:
    path = Path(path)
    if path.is_dir():
        path = path / PIPELINE_FILE
    if not path.exists():
        raise InvalidPipelineConfig(f"Pipeline config {path} not found")
    return parse_pipeline_config(path.read_bytes())
