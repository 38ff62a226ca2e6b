import logging

logger = logging.getLogger(__name__)


class DevchainException(Exception):
    status_code = 400
    exit_code = 1

    def __init__(self, message, status_code=None, payload=None):
        Exception.__init__(self, message)
        self.message = message
        if status_code is not None:
            self.status_code = status_code

        self.payload = payload
        logger.debug(f"{type(self).__name__}: {self.message}")

    @property
    def code(self) -> str:
        return type(self).__name__

    def to_dict(self):
        rv = dict(self.payload or ())
        rv["code"] = self.code
        rv["error_message"] = self.message
        return rv

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


class ConfigError(DevchainException):
    exit_code = 2


class InvalidConfig(ConfigError):
    pass


class InvalidUsage(ConfigError):
    pass


# ledger


class LedgerError(DevchainException):
    exit_code = 3


class UnsupportedValue(LedgerError):
    pass


class UnknownSubmitter(LedgerError):
    pass


class BadSignature(LedgerError):
    pass


class ReplayedNonce(LedgerError):
    pass


class MalformedTransaction(LedgerError):
    pass


class MalformedBlock(LedgerError):
    pass


class BadLinkage(LedgerError):
    pass


class BadHeight(LedgerError):
    pass


class NonMonotonicTimestamp(LedgerError):
    pass


class BadMerkleRoot(LedgerError):
    pass


class BadOrdererSignature(LedgerError):
    pass


class CorruptChain(LedgerError):
    pass


# consensus


class ConsensusError(DevchainException):
    exit_code = 7


class QueueFull(ConsensusError):
    status_code = 503


class FrameTooLarge(ConsensusError):
    pass


class UnknownMessageType(ConsensusError):
    pass


# contracts


class ContractError(DevchainException):
    exit_code = 4


class UnknownOperation(ContractError):
    pass


class InvalidArguments(ContractError):
    pass


class ProjectNotFound(ContractError):
    status_code = 404


class DuplicateProjectId(ContractError):
    pass


class InvalidAgreement(ContractError):
    pass


class AgreementImmutable(ContractError):
    pass


class DuplicateKey(ContractError):
    pass


class Unauthorized(ContractError):
    status_code = 403


class WrongSide(ContractError):
    pass


class AlreadyActive(ContractError):
    pass


class ProjectNotActive(ContractError):
    pass


class MalformedCid(ContractError):
    pass


class DuplicateNameVersion(ContractError):
    pass


class BuildNotFound(ContractError):
    status_code = 404


class BuildNotBuilt(ContractError):
    pass


class GateNotPassed(ContractError):
    pass


class InsufficientBalance(ContractError):
    pass


class NothingDue(ContractError):
    pass


# castore


class CastoreError(DevchainException):
    exit_code = 5


class NotFound(CastoreError):
    status_code = 404


class IntegrityFailure(CastoreError):
    status_code = 500


class StorageFull(CastoreError):
    status_code = 507


class DanglingReference(CastoreError):
    pass


class PathNotFound(CastoreError):
    status_code = 404


class InvalidPath(CastoreError):
    pass


class MalformedContentId(CastoreError):
    pass


# pipeline


class PipelineError(DevchainException):
    exit_code = 6


class DanglingRepoHead(PipelineError):
    pass


class SubmitFailure(PipelineError):
    status_code = 503


class TargetUnwritable(PipelineError):
    pass


class InvalidPipelineConfig(PipelineError):
    pass


# bench


class BenchError(DevchainException):
    exit_code = 8


class AdapterUnavailable(BenchError):
    pass


class ProcessVanished(BenchError):
    pass


# node


class NodeError(DevchainException):
    exit_code = 7


class PortInUse(NodeError):
    pass


class MethodNotFound(NodeError):
    status_code = 404


class RpcTimeout(NodeError):
    status_code = 504


class TransportError(NodeError):
    status_code = 502


def _all_subclasses(cls):
    for sub in cls.__subclasses__():
        yield sub
        yield from _all_subclasses(sub)


ERRORS_BY_CODE = {cls.__name__: cls for cls in _all_subclasses(DevchainException)}


def error_for_code(code, message, payload=None) -> DevchainException:
    """Rebuild a typed exception from its stable code, e.g. on the client side of an RPC."""
    cls = ERRORS_BY_CODE.get(code, DevchainException)
    return cls(message, payload=payload)
