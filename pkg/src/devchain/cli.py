"""`devchain` command line.

Every lifecycle phase is one subcommand; each talks to a peer over the node
RPC (or to an injected client in tests). `--json` switches all output to one
canonical JSON document per command. Exit codes follow the error family, see
`devchain.errors`.
"""

import argparse
import asyncio
import json
import logging
import sys
import threading
import time
from decimal import Decimal, InvalidOperation
from functools import cached_property
from pathlib import Path

import yaml

from devchain import config
from devchain.bench.config import load_bench_config, run_benchmark
from devchain.bench.report import render_report
from devchain.castore.store import ContentStore
from devchain.config import load_network_config
from devchain.consensus.events import Audience
from devchain.contracts.models import (
    Agreement,
    PaymentTrigger,
    dollars_to_cents,
    project_key,
    token_key,
)
from devchain.errors import (
    CastoreError,
    DevchainException,
    InvalidArguments,
    InvalidUsage,
    LedgerError,
    NotFound,
)
from devchain.ledger.block import Block
from devchain.ledger.blocklog import scan_log
from devchain.ledger.chain import audit_encoded_blocks, verify_chain
from devchain.ledger.identity import (
    Identity,
    Role,
    generate_identity,
    load_key_file,
    save_key_file,
)
from devchain.logs import configure_logging
from devchain.main import create_app
from devchain.node.client import NodeClient, Signer
from devchain.node.daemon import serve
from devchain.node.trail import audit_trail, chain_block_docs
from devchain.pipeline.config import load_pipeline_config
from devchain.pipeline.runner import PipelineRunner, execute_deploy
from devchain.pipeline.watcher import pipeline_watcher

logger = logging.getLogger(__name__)

DAY_MS = config.DAY_MS
HEAD_FILE = "HEAD"

DEMO_ROLES = (
    ("owner", Role.owner, 0),
    ("manager", Role.manager, 0),
    ("developer", Role.developer, 1),
    ("tester", Role.tester, 2),
    ("client", Role.client, 3),
)


class Session:
    """What a command needs, built on first use."""

    def __init__(self, args, client=None):
        self.args = args
        self._client = client

    @property
    def client(self):
        if self._client is None:
            self._client = NodeClient(self.args.endpoint)
        return self._client

    @cached_property
    def signer(self) -> Signer:
        path = self.args.key or config.DEVCHAIN_KEY
        if not path:
            raise InvalidUsage("No key file: pass --key or set DEVCHAIN_KEY")
        identity, secret_key = load_key_file(path)
        return Signer(identity, secret_key, self.client)

    @cached_property
    def store(self) -> ContentStore:
        root = Path(self.args.store or config.DEVCHAIN_STORE)
        return ContentStore(
            root / "castore",
            max_bytes=config.castore_max_bytes,
            fallbacks=[self.client.castore_get_raw],
        )

    @property
    def head_path(self) -> Path:
        return Path(self.args.store or config.DEVCHAIN_STORE) / HEAD_FILE

    def execute(self, project_id, contract, operation, args):
        return self.signer.execute(project_id, contract, operation, args)


def emit(args, doc, text=None):
    if args.json:
        print(json.dumps(doc, sort_keys=True))
    elif text is not None:
        print(text)
    elif isinstance(doc, dict):
        for key, value in sorted(doc.items()):
            print(f"{key}: {value}")
    elif isinstance(doc, list):
        for item in doc:
            print(item)
    else:
        print(doc)


# keys and network


def cmd_keygen(session, args):
    identity, secret_key = generate_identity(Role(args.role), args.org)
    save_key_file(args.out, identity, secret_key)
    public_path = Path(args.out).with_suffix(".pub.json")
    public_path.write_text(json.dumps(identity.to_doc(), indent=2, sort_keys=True))
    emit(args, {**identity.to_doc(), "key_file": str(args.out)}, identity.member_id.hex())


def init_network(directory, orgs=4, base_port=7050, divisor=1, client_cents=0) -> dict:
    """Write keys and a network config for a loopback demo network."""
    directory = Path(directory)
    keys = directory / "keys"
    org_names = [f"Org{i + 1}" for i in range(orgs)]

    orderer, orderer_key = generate_identity(Role.owner, "orderer")
    save_key_file(keys / "orderer.json", orderer, orderer_key)

    identities, allocations = [], {}
    for name, role, org_index in DEMO_ROLES:
        identity, secret_key = generate_identity(role, org_names[org_index % orgs])
        save_key_file(keys / f"{name}.json", identity, secret_key)
        identities.append(identity.to_doc())
        if role is Role.client and client_cents:
            allocations[identity.member_id.hex()] = client_cents

    content = {
        "allocations": allocations,
        "data_dir": "data",
        "identities": identities,
        "orderer": {"host": "127.0.0.1", "key_file": "keys/orderer.json", "port": base_port},
        "orgs": [
            {"host": "127.0.0.1", "name": name, "rpc_port": base_port + 1 + i}
            for i, name in enumerate(org_names)
        ],
        "time_scale_divisor": divisor,
    }
    (directory / "network.yaml").write_text(yaml.safe_dump(content, sort_keys=True))
    return content


def cmd_network_init(session, args):
    content = init_network(
        args.dir, args.orgs, args.base_port, args.time_scale_divisor, args.client_cents
    )
    emit(args, content, f"Network config written to {Path(args.dir) / 'network.yaml'}")


def cmd_serve(session, args):
    network_config = load_network_config(args.config)
    try:
        asyncio.run(serve(network_config, args.role, args.org))
    except KeyboardInterrupt:
        logger.info(" --> Shutting down")


def cmd_gateway(session, args):
    create_app(session.client).run(host=args.host, port=args.port)


# projects


def _agreement_from_args(args, terms: bytes | None) -> dict:
    if args.budget is None and terms is not None:
        try:
            return Agreement.from_doc(json.loads(terms)).to_doc()
        except ValueError:
            raise InvalidUsage("Terms file is not an agreement document; pass --budget")
    if args.budget is None or args.installment is None:
        raise InvalidUsage("--budget and --installment are required")
    return Agreement(
        project_budget_cents=dollars_to_cents(args.budget),
        installment_cents=dollars_to_cents(args.installment),
        trigger=PaymentTrigger(args.trigger),
        period_ms=args.period_days * DAY_MS,
        grace_ms=args.grace_days * DAY_MS,
    ).validate().to_doc()


def cmd_project_create(session, args):
    terms = Path(args.terms_file).read_bytes()
    agreement = _agreement_from_args(args, terms)
    terms_cid = session.client.castore_put(terms)
    project_id = session.execute(
        args.project,
        "project",
        "create_project",
        {"agreement": agreement, "name": args.name, "terms_cid": terms_cid},
    )
    emit(args, {"project_id": project_id, "terms_cid": terms_cid}, f"Created {project_id}")


def cmd_project_add_member(session, args):
    identity = Identity.from_doc(json.loads(Path(args.identity).read_text()))
    session.execute(args.project, "project", "add_member", {"identity": identity.to_doc()})
    emit(args, {"member_id": identity.member_id.hex()}, f"Added {identity}")


def cmd_project_accept_terms(session, args):
    status = session.execute(args.project, "project", "accept_terms", {"side": args.side})
    emit(args, {"status": status}, f"{args.project} is {status}")


def cmd_project_amend(session, args):
    agreement = _agreement_from_args(args, None)
    session.execute(args.project, "project", "amend_agreement", {"agreement": agreement})
    emit(args, {"agreement": agreement}, f"Amended agreement of {args.project}")


def cmd_project_close(session, args):
    status = session.execute(args.project, "project", "close_project", {})
    emit(args, {"status": status}, f"{args.project} is {status}")


def cmd_project_show(session, args):
    emit(args, session.client.query_state(project_key(args.project)))


# development


def cmd_plan_record(session, args):
    artifact_cid = session.client.castore_put(Path(args.file).read_bytes())
    seq = session.execute(
        args.project,
        "development",
        "record_plan",
        {
            "artifact_cid": artifact_cid,
            "kind": args.kind,
            "title": args.title or Path(args.file).name,
        },
    )
    emit(args, {"artifact_cid": artifact_cid, "seq": seq}, f"Plan {seq}: {artifact_cid}")


def cmd_repo_snapshot(session, args):
    store = session.store
    parent = args.parent
    if parent is None and session.head_path.exists():
        parent = session.head_path.read_text().strip() or None
    tree_cid = store.snapshot_directory(args.dir)
    commit_cid = store.commit(
        parent, tree_cid, args.author, args.message, int(time.time() * 1000)
    )
    session.head_path.write_text(commit_cid)
    emit(args, {"commit_cid": commit_cid, "parent_cid": parent, "tree_cid": tree_cid}, commit_cid)


def cmd_repo_push(session, args):
    commit_cid = args.commit
    if commit_cid is None:
        if not session.head_path.exists():
            raise InvalidUsage("Nothing to push: run `devchain repo snapshot` first")
        commit_cid = session.head_path.read_text().strip()
    copied = session.store.push(commit_cid, session.client.castore_put_raw)
    head_seq = session.execute(
        args.project, "development", "record_repo_head", {"commit_cid": commit_cid}
    )
    emit(
        args,
        {"commit_cid": commit_cid, "head_seq": head_seq, "objects": copied},
        f"Pushed {commit_cid} as head {head_seq} ({copied} objects)",
    )


def cmd_repo_log(session, args):
    history = session.store.log(args.commit or session.head_path.read_text().strip())
    emit(
        args,
        [{"commit_cid": cid, **commit.to_doc()} for cid, commit in history],
        "\n".join(f"{cid[:19]} {commit.author}: {commit.message}" for cid, commit in history),
    )


# ci/cd


def _runner(session, args) -> PipelineRunner:
    return PipelineRunner(
        session.store,
        session.signer,
        load_pipeline_config(args.config),
        publish=session.client.castore_put,
    )


def cmd_build_run(session, args):
    commit_cid, head_seq = args.commit, args.head_seq
    if commit_cid is None:
        project = session.client.query_state(project_key(args.project))
        commit_cid, head_seq = project["head_cid"], project.get("head_seq", 0)
        if commit_cid is None:
            raise InvalidUsage(f"Project {args.project} has no repo head yet")
    run = _runner(session, args).run(args.project, commit_cid, head_seq or 0)
    lines = [f"{s.stage.value}: {s.verdict.value}" for s in run.stages]
    lines.append(f"{run.name}@{run.version} {run.status}")
    emit(args, run.to_doc(), "\n".join(lines))


def cmd_build_watch(session, args):
    runner = _runner(session, args)
    watcher = pipeline_watcher(
        session.client, args.project, runner, args.last_head_seq, poll_interval=args.interval
    )
    stop = threading.Event()
    try:
        watcher.run(stop)
    except KeyboardInterrupt:
        stop.set()


def cmd_gate_attest(session, args):
    status = session.execute(
        args.project,
        "cicd",
        "attest_gate",
        {
            "compliance": args.compliance,
            "name": args.name,
            "quality": args.quality,
            "security": args.security,
            "version": args.version,
        },
    )
    emit(args, {"status": status}, f"{args.name}@{args.version} is {status}")


def cmd_deploy(session, args):
    outcome = execute_deploy(
        args.project, args.name, args.version, args.target, session.signer, session.store
    )
    emit(args, outcome.to_doc(), f"Deployed {outcome.path}")


# monitoring and payments


def scaled(value: str) -> tuple[int, int]:
    """'12.50' -> (1250, 2); metrics go on chain as scaled integers."""
    try:
        number = Decimal(value)
    except InvalidOperation:
        raise InvalidArguments(f"Not a number: {value!r}")
    if not number.is_finite():
        raise InvalidArguments(f"Not a finite number: {value!r}")
    scale = max(0, -number.as_tuple().exponent)
    return int(number.scaleb(scale)), scale


def cmd_monitor_metric(session, args):
    scaled_value, scale = scaled(args.value)
    seq = session.execute(
        args.project,
        "monitoring",
        "record_metric",
        {"metric_name": args.name, "scale": scale, "scaled_value": scaled_value},
    )
    emit(args, {"seq": seq}, f"Metric {seq} recorded")


def cmd_monitor_alert(session, args):
    alert_id = session.execute(
        args.project,
        "monitoring",
        "raise_alert",
        {"description": args.description, "severity": args.severity},
    )
    emit(args, {"alert_id": alert_id}, f"Alert {alert_id} raised")


def cmd_pay(session, args):
    result = session.execute(args.project, "payment", "pay_installment", {})
    emit(args, result)


def cmd_wallet_balance(session, args):
    member_id = args.member or session.signer.identity.member_id.hex()
    try:
        balance = session.client.query_state(token_key(member_id)).get("balance", 0)
    except NotFound:
        balance = 0
    emit(args, {"balance_cents": balance, "member_id": member_id}, f"${Decimal(balance) / 100:.2f}")


def cmd_wallet_transfer(session, args):
    session.execute("", "token", "transfer", {"cents": args.cents, "to": args.to})
    emit(args, {"cents": args.cents, "to": args.to}, f"Sent {args.cents} cents")


def cmd_events(session, args):
    audience = Audience(args.audience) if args.audience else None
    found = [
        e
        for e in session.client.query_events(args.since, audience)
        if args.project in (None, e.project_id)
    ]
    emit(
        args,
        [e.to_doc() for e in found],
        "\n".join(f"{e.seq:>6} {e.contract}.{e.event_name} {e.payload}" for e in found),
    )


# audit


def cmd_audit_verify_chain(session, args):
    if args.data_dir:
        report = audit_encoded_blocks(list(scan_log(args.data_dir)))
    else:
        client = session.client
        docs = []
        for doc in chain_block_docs(client):
            doc.pop("validity", None)
            docs.append(Block.from_doc(doc))
        report = verify_chain(docs)

    emit(args, report.to_dict(), report.summary())
    if not report.ok:
        return LedgerError.exit_code
    return 0


def cmd_audit_trail(session, args):
    client = session.client
    client.query_state(project_key(args.project))
    entries = audit_trail(chain_block_docs(client), args.project)
    emit(args, [e.to_doc() for e in entries], "\n".join(str(e) for e in entries))


# castore


def cmd_castore_put(session, args):
    data = Path(args.file).read_bytes()
    cid = session.client.castore_put(data) if args.remote else session.store.put_blob(data)
    emit(args, {"cid": cid}, cid)


def cmd_castore_get(session, args):
    data = session.client.castore_get(args.cid) if args.remote else session.store.get(args.cid)
    if args.out:
        Path(args.out).write_bytes(data)
        emit(args, {"bytes": len(data), "path": args.out}, args.out)
    else:
        sys.stdout.buffer.write(data)


def cmd_castore_gc(session, args):
    removed = session.store.gc()
    emit(args, {"removed": removed}, f"Removed {len(removed)} objects")


def cmd_castore_audit(session, args):
    corrupt = session.store.audit()
    emit(args, {"corrupt": corrupt}, f"{len(corrupt)} corrupt objects")
    return CastoreError.exit_code if corrupt else 0


# bench


def cmd_bench(session, args):
    rounds, resources = run_benchmark(load_bench_config(args.config))
    report = render_report(rounds, resources, args.format)
    if args.out:
        Path(args.out).write_bytes(report)
        emit(args, {"path": args.out, "rounds": len(rounds)}, f"Report written to {args.out}")
    else:
        sys.stdout.write(report.decode())


def _project(parser):
    parser.add_argument("--project", required=True)


def _agreement_args(parser):
    parser.add_argument("--budget", help="dollars, e.g. 1000 or $1,000")
    parser.add_argument("--installment", help="dollars per installment")
    parser.add_argument(
        "--trigger",
        default=PaymentTrigger.per_iteration.value,
        choices=[t.value for t in PaymentTrigger],
    )
    parser.add_argument("--period-days", type=int, default=14)
    parser.add_argument("--grace-days", type=int, default=2)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="devchain", description=__doc__.splitlines()[0])
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    parser.add_argument("--endpoint", default=None, help="peer RPC endpoint host:port")
    parser.add_argument("--key", default=None, help="key file of the acting member")
    parser.add_argument("--store", default=None, help="local content store directory")
    parser.add_argument("--log-level", default=None)
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("keygen", help="generate a member key pair")
    p.add_argument("--role", required=True, choices=[r.value for r in Role])
    p.add_argument("--org", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_keygen)

    network = commands.add_parser("network").add_subparsers(dest="action", required=True)
    p = network.add_parser("init", help="write a demo network config and keys")
    p.add_argument("--dir", required=True)
    p.add_argument("--orgs", type=int, default=4)
    p.add_argument("--base-port", type=int, default=7050)
    p.add_argument("--time-scale-divisor", type=int, default=1)
    p.add_argument("--client-cents", type=int, default=100_000_00)
    p.set_defaults(func=cmd_network_init)

    p = commands.add_parser("serve", help="run an orderer or peer node")
    p.add_argument("--config", default=None)
    p.add_argument("--role", required=True, choices=["orderer", "peer"])
    p.add_argument("--org")
    p.set_defaults(func=cmd_serve)

    p = commands.add_parser("gateway", help="run the HTTP gateway in front of a peer")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=config.gateway_port)
    p.set_defaults(func=cmd_gateway)

    project = commands.add_parser("project").add_subparsers(dest="action", required=True)
    p = project.add_parser("create")
    _project(p)
    p.add_argument("--name", required=True)
    p.add_argument("--terms-file", required=True)
    _agreement_args(p)
    p.set_defaults(func=cmd_project_create)
    p = project.add_parser("add-member")
    _project(p)
    p.add_argument("--identity", required=True, help="public identity file (*.pub.json)")
    p.set_defaults(func=cmd_project_add_member)
    p = project.add_parser("accept-terms")
    _project(p)
    p.add_argument("--side", required=True, choices=["Team", "Client"])
    p.set_defaults(func=cmd_project_accept_terms)
    p = project.add_parser("amend")
    _project(p)
    _agreement_args(p)
    p.set_defaults(func=cmd_project_amend)
    p = project.add_parser("close")
    _project(p)
    p.set_defaults(func=cmd_project_close)
    p = project.add_parser("show")
    _project(p)
    p.set_defaults(func=cmd_project_show)

    plan = commands.add_parser("plan").add_subparsers(dest="action", required=True)
    p = plan.add_parser("record")
    _project(p)
    p.add_argument("--file", required=True)
    p.add_argument("--kind", default="Notes", choices=["Recording", "Notes"])
    p.add_argument("--title")
    p.set_defaults(func=cmd_plan_record)

    repo = commands.add_parser("repo").add_subparsers(dest="action", required=True)
    p = repo.add_parser("snapshot")
    p.add_argument("--dir", required=True)
    p.add_argument("--parent")
    p.add_argument("--author", default="devchain")
    p.add_argument("--message", default="snapshot")
    p.set_defaults(func=cmd_repo_snapshot)
    p = repo.add_parser("push")
    _project(p)
    p.add_argument("--commit")
    p.set_defaults(func=cmd_repo_push)
    p = repo.add_parser("log")
    p.add_argument("--commit")
    p.set_defaults(func=cmd_repo_log)

    build = commands.add_parser("build").add_subparsers(dest="action", required=True)
    p = build.add_parser("run")
    _project(p)
    p.add_argument("--config", required=True, help="pipeline config")
    p.add_argument("--commit")
    p.add_argument("--head-seq", type=int)
    p.set_defaults(func=cmd_build_run)
    p = build.add_parser("watch")
    _project(p)
    p.add_argument("--config", required=True, help="pipeline config")
    p.add_argument("--last-head-seq", type=int, default=0)
    p.add_argument("--interval", type=float, default=0.5)
    p.set_defaults(func=cmd_build_watch)

    gate = commands.add_parser("gate").add_subparsers(dest="action", required=True)
    p = gate.add_parser("attest")
    _project(p)
    p.add_argument("--name", required=True)
    p.add_argument("--version", required=True)
    for flag in ("quality", "security", "compliance"):
        p.add_argument(f"--{flag}", action=argparse.BooleanOptionalAction, required=True)
    p.set_defaults(func=cmd_gate_attest)

    p = commands.add_parser("deploy")
    _project(p)
    p.add_argument("--name", required=True)
    p.add_argument("--version", required=True)
    p.add_argument("--target", required=True)
    p.set_defaults(func=cmd_deploy)

    monitor = commands.add_parser("monitor").add_subparsers(dest="action", required=True)
    p = monitor.add_parser("metric")
    _project(p)
    p.add_argument("--name", required=True)
    p.add_argument("--value", required=True)
    p.set_defaults(func=cmd_monitor_metric)
    p = monitor.add_parser("alert")
    _project(p)
    p.add_argument("--severity", required=True, choices=["Low", "Medium", "High", "Critical"])
    p.add_argument("--description", required=True)
    p.set_defaults(func=cmd_monitor_alert)

    p = commands.add_parser("pay")
    _project(p)
    p.set_defaults(func=cmd_pay)

    wallet = commands.add_parser("wallet").add_subparsers(dest="action", required=True)
    p = wallet.add_parser("balance")
    p.add_argument("--member")
    p.set_defaults(func=cmd_wallet_balance)
    p = wallet.add_parser("transfer")
    p.add_argument("--to", required=True)
    p.add_argument("--cents", type=int, required=True)
    p.set_defaults(func=cmd_wallet_transfer)

    p = commands.add_parser("events")
    p.add_argument("--since", type=int, default=0)
    p.add_argument("--audience", choices=[a.value for a in Audience])
    p.add_argument("--project")
    p.set_defaults(func=cmd_events)

    audit = commands.add_parser("audit").add_subparsers(dest="action", required=True)
    p = audit.add_parser("verify-chain")
    p.add_argument("--data-dir", help="verify a block log on disk instead of asking a peer")
    p.set_defaults(func=cmd_audit_verify_chain)
    p = audit.add_parser("trail")
    _project(p)
    p.set_defaults(func=cmd_audit_trail)

    castore = commands.add_parser("castore").add_subparsers(dest="action", required=True)
    p = castore.add_parser("put")
    p.add_argument("--file", required=True)
    p.add_argument("--remote", action="store_true", help="store on the peer")
    p.set_defaults(func=cmd_castore_put)
    p = castore.add_parser("get")
    p.add_argument("--cid", required=True)
    p.add_argument("--out")
    p.add_argument("--remote", action="store_true", help="read from the peer")
    p.set_defaults(func=cmd_castore_get)
    castore.add_parser("gc").set_defaults(func=cmd_castore_gc)
    castore.add_parser("audit").set_defaults(func=cmd_castore_audit)

    p = commands.add_parser("bench", help="run a benchmark and write its report")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--format", default="markdown", choices=["markdown", "json"])
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None, client=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    session = Session(args, client)
    try:
        return args.func(session, args) or 0
    except DevchainException as e:
        if args.json:
            print(json.dumps({"error": e.to_dict()}, sort_keys=True))
        else:
            print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
