"""Contract-side document shapes and the state key namespace."""

import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from enum import Enum

from devchain.config import DAY_MS
from devchain.errors import InvalidAgreement, InvalidArguments, MalformedCid

NONPAYMENT_ACTION = "StopProjectFunctions"
DEFAULT_PERIOD_MS = 14 * DAY_MS
DEFAULT_GRACE_MS = 2 * DAY_MS

PROJECT_ID_RE = re.compile(r"^[A-Za-z0-9._-]{1,64}$")
CID_RE = re.compile(r"^sha256-[0-9a-f]{64}$")
NAME_RE = re.compile(r"^[A-Za-z0-9._+-]{1,128}$")


class ProjectStatus(Enum):
    draft = "Draft"
    active = "Active"
    frozen = "Frozen"
    closed = "Closed"


class PaymentTrigger(Enum):
    per_iteration = "PerIteration"
    per_two_weeks = "PerTwoWeeks"


class BuildStatus(Enum):
    built = "Built"
    gate_passed = "GatePassed"
    deployed = "Deployed"
    failed = "Failed"


class Verdict(Enum):
    passed = "Pass"
    failed = "Fail"


class Side(Enum):
    team = "Team"
    client = "Client"


class PlanKind(Enum):
    recording = "Recording"
    notes = "Notes"


class Severity(Enum):
    low = "Low"
    medium = "Medium"
    high = "High"
    critical = "Critical"


def check_cid(value, what="cid") -> str:
    if not isinstance(value, str) or not CID_RE.match(value):
        raise MalformedCid(f"{what} is not a content id: {value!r}")
    return value


def parse_enum(enum_cls, value, what):
    try:
        return enum_cls(value)
    except ValueError:
        allowed = ", ".join(m.value for m in enum_cls)
        raise InvalidArguments(f"{what} must be one of {allowed}, got {value!r}")


def require_int(args: dict, name: str, minimum=None, maximum=None) -> int:
    value = args.get(name)
    if not isinstance(value, int) or isinstance(value, bool):
        raise InvalidArguments(f"{name} must be an integer")
    if minimum is not None and value < minimum:
        raise InvalidArguments(f"{name} must be >= {minimum}")
    if maximum is not None and value > maximum:
        raise InvalidArguments(f"{name} must be <= {maximum}")
    return value


def require_str(args: dict, name: str, pattern=None) -> str:
    value = args.get(name)
    if not isinstance(value, str) or not value:
        raise InvalidArguments(f"{name} must be a non-empty string")
    if pattern is not None and not pattern.match(value):
        raise InvalidArguments(f"{name} has an invalid format: {value!r}")
    return value


def dollars_to_cents(text) -> int:
    """'$1000' or '$12.50' -> integer cents."""
    if isinstance(text, int) and not isinstance(text, bool):
        return text * 100
    if not isinstance(text, str):
        raise InvalidAgreement(f"Not a dollar amount: {text!r}")
    cleaned = text.strip().lstrip("$").replace(",", "").strip()
    try:
        amount = Decimal(cleaned)
    except InvalidOperation:
        raise InvalidAgreement(f"Not a dollar amount: {text!r}")
    if not amount.is_finite():
        raise InvalidAgreement(f"Not a dollar amount: {text!r}")
    cents = amount * 100
    if cents != cents.to_integral_value():
        raise InvalidAgreement(f"Amount {text!r} has fractional cents")
    return int(cents)


@dataclass(frozen=True)
class Agreement:
    project_budget_cents: int
    installment_cents: int
    trigger: PaymentTrigger
    period_ms: int = DEFAULT_PERIOD_MS
    grace_ms: int = DEFAULT_GRACE_MS
    nonpayment_action: str = NONPAYMENT_ACTION

    def validate(self) -> "Agreement":
        for name in ("project_budget_cents", "installment_cents", "period_ms", "grace_ms"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise InvalidAgreement(f"{name} must be an integer")
        if self.installment_cents <= 0:
            raise InvalidAgreement("installment_cents must be positive")
        if self.installment_cents > self.project_budget_cents:
            raise InvalidAgreement(
                f"Installment {self.installment_cents} exceeds budget {self.project_budget_cents}"
            )
        if self.period_ms < 1:
            raise InvalidAgreement("period_ms must be >= 1")
        if self.grace_ms < 0:
            raise InvalidAgreement("grace_ms must be >= 0")
        if self.nonpayment_action != NONPAYMENT_ACTION:
            raise InvalidAgreement(f"nonpayment_action must be {NONPAYMENT_ACTION}")
        return self

    def to_doc(self) -> dict:
        return {
            "grace_ms": self.grace_ms,
            "installment_cents": self.installment_cents,
            "nonpayment_action": self.nonpayment_action,
            "period_ms": self.period_ms,
            "project_budget_cents": self.project_budget_cents,
            "trigger": self.trigger.value,
        }

    @classmethod
    def from_doc(cls, doc) -> "Agreement":
        if not isinstance(doc, dict):
            raise InvalidAgreement("Agreement must be a document")
        if "Project Budget" in doc:
            return cls.from_table(doc)
        try:
            agreement = cls(
                project_budget_cents=doc["project_budget_cents"],
                installment_cents=doc["installment_cents"],
                trigger=PaymentTrigger(doc["trigger"]),
                period_ms=doc.get("period_ms", DEFAULT_PERIOD_MS),
                grace_ms=doc.get("grace_ms", DEFAULT_GRACE_MS),
                nonpayment_action=doc.get("nonpayment_action", NONPAYMENT_ACTION),
            )
        except (KeyError, ValueError) as e:
            raise InvalidAgreement(f"Incomplete agreement: {e}")
        return agreement.validate()

    @classmethod
    def from_table(cls, doc: dict) -> "Agreement":
        """Parse the human-facing agreement shape, e.g.

        {"Project Budget": "$1000", "Payment After 1 Iteration": "$100",
         "In Case of Non Payment": "Stop Project's Functions"}
        """
        budget = dollars_to_cents(doc["Project Budget"])
        if "Payment After 1 Iteration" in doc:
            trigger = PaymentTrigger.per_iteration
            installment = dollars_to_cents(doc["Payment After 1 Iteration"])
        elif "Payment After 2 Weeks" in doc:
            trigger = PaymentTrigger.per_two_weeks
            installment = dollars_to_cents(doc["Payment After 2 Weeks"])
        else:
            raise InvalidAgreement("Agreement names no payment trigger")

        action = doc.get("In Case of Non Payment", "Stop Project's Functions")
        if action.replace("'s", "").replace(" ", "").lower() != NONPAYMENT_ACTION.lower():
            raise InvalidAgreement(f"Unsupported non-payment action {action!r}")

        return cls(
            project_budget_cents=budget,
            installment_cents=installment,
            trigger=trigger,
            grace_ms=doc.get("grace_ms", DEFAULT_GRACE_MS),
        ).validate()


@dataclass(frozen=True)
class GateFlags:
    quality: bool
    security: bool
    compliance: bool
    attester: str

    @property
    def all_passed(self) -> bool:
        return self.quality and self.security and self.compliance

    def to_doc(self) -> dict:
        return {
            "attester": self.attester,
            "compliance": self.compliance,
            "quality": self.quality,
            "security": self.security,
        }

    @classmethod
    def from_args(cls, args: dict, attester: str) -> "GateFlags":
        flags = {}
        for name in ("quality", "security", "compliance"):
            if not isinstance(args.get(name), bool):
                raise InvalidArguments(f"{name} must be true or false")
            flags[name] = args[name]
        return cls(attester=attester, **flags)


@dataclass(frozen=True)
class BuildRecord:
    name: str
    version: str
    time: str
    date: str
    package_cid: str | None
    review: Verdict
    unit: Verdict
    integration: Verdict
    status: BuildStatus
    gate: GateFlags | None = None

    @property
    def failed_stages(self) -> list[str]:
        return [
            stage
            for stage in ("review", "unit", "integration")
            if getattr(self, stage) is Verdict.failed
        ]

    def to_doc(self) -> dict:
        return {
            "date": self.date,
            "gate": self.gate.to_doc() if self.gate else None,
            "integration": self.integration.value,
            "name": self.name,
            "package_cid": self.package_cid,
            "review": self.review.value,
            "status": self.status.value,
            "time": self.time,
            "unit": self.unit.value,
            "version": self.version,
        }

    @classmethod
    def from_args(cls, args: dict) -> "BuildRecord":
        if not isinstance(args, dict):
            raise InvalidArguments("build must be a document")
        verdicts = {
            stage: parse_enum(Verdict, args.get(stage), stage)
            for stage in ("review", "unit", "integration")
        }
        failed = any(v is Verdict.failed for v in verdicts.values())

        package_cid = args.get("package_cid")
        if package_cid is not None or not failed:
            check_cid(package_cid, "package_cid")

        return cls(
            name=require_str(args, "name", NAME_RE),
            version=require_str(args, "version", NAME_RE),
            time=require_str(args, "time"),
            date=require_str(args, "date"),
            package_cid=package_cid,
            status=BuildStatus.failed if failed else BuildStatus.built,
            **verdicts,
        )


# state keys


NETWORK_CONFIG_KEY = "network/config"
SCHEDULE_KEY = "payments/schedule"


def project_key(project_id: str) -> str:
    return f"project/{project_id}"


def agreement_key(project_id: str) -> str:
    return f"project/{project_id}/agreement"


def member_key(project_id: str, member_id: str) -> str:
    return f"project/{project_id}/member/{member_id}"


def build_key(project_id: str, name: str, version: str) -> str:
    return f"project/{project_id}/build/{name}@{version}"


def record_key(project_id: str, kind: str, seq: int) -> str:
    """Append-only per-project records; zero padded so key order is sequence order."""
    return f"project/{project_id}/{kind}/{seq:012d}"


def token_key(member_id: str) -> str:
    return f"token/{member_id}"


def registry_key(member_id: str) -> str:
    return f"registry/{member_id}"
