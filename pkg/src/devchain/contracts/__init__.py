"""The six DevOps phase contracts and the engine that runs them."""

from devchain.contracts.cicd import CicdContract
from devchain.contracts.development import DevelopmentContract
from devchain.contracts.engine import Contract, ContractEngine, TxContext, operation
from devchain.contracts.monitoring import MonitoringContract
from devchain.contracts.payment import PaymentContract
from devchain.contracts.project import ProjectContract
from devchain.contracts.token import TokenContract, token_balance, total_supply


def default_contracts() -> list[Contract]:
    return [
        ProjectContract(),
        DevelopmentContract(),
        CicdContract(),
        MonitoringContract(),
        PaymentContract(),
        TokenContract(),
    ]


__all__ = [
    "CicdContract",
    "Contract",
    "ContractEngine",
    "DevelopmentContract",
    "MonitoringContract",
    "PaymentContract",
    "ProjectContract",
    "TokenContract",
    "TxContext",
    "default_contracts",
    "operation",
    "token_balance",
    "total_supply",
]
