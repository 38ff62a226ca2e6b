"""CI/CD runner: deterministic stages over repo snapshots, packaging and gated deploys."""

from devchain.pipeline.archive import extract_package, make_package, pack_files
from devchain.pipeline.config import (
    PIPELINE_FILE,
    PackageSpec,
    PipelineConfig,
    StageSpec,
    load_pipeline_config,
    parse_pipeline_config,
    pipeline_config_from_doc,
)
from devchain.pipeline.rules import Stage, StageResult, run_stage
from devchain.pipeline.runner import (
    DeployOutcome,
    PipelineRun,
    PipelineRunner,
    execute_deploy,
    run_pipeline,
)
from devchain.pipeline.watcher import RepoWatcher, pipeline_watcher

__all__ = [
    "PIPELINE_FILE",
    "DeployOutcome",
    "PackageSpec",
    "PipelineConfig",
    "PipelineRun",
    "PipelineRunner",
    "RepoWatcher",
    "Stage",
    "StageResult",
    "StageSpec",
    "execute_deploy",
    "extract_package",
    "load_pipeline_config",
    "make_package",
    "pack_files",
    "parse_pipeline_config",
    "pipeline_config_from_doc",
    "pipeline_watcher",
    "run_pipeline",
    "run_stage",
]
