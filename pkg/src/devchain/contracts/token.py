from devchain.consensus.events import Audience
from devchain.contracts.engine import Contract, TxContext, operation
from devchain.contracts.models import require_int, token_key
from devchain.errors import InsufficientBalance, InvalidArguments, UnsupportedValue
from devchain.ledger.encoding import from_hex


def token_balance(state, member_id: str) -> int:
    return (state.get(token_key(member_id)) or {}).get("balance", 0)


def total_supply(state) -> int:
    return sum(doc.get("balance", 0) for _, doc in state.items("token/"))


def move_tokens(ctx: TxContext, source: str, target: str, cents: int):
    """Move cents between wallets; the total supply is unchanged."""
    balance = token_balance(ctx.state, source)
    if balance < cents:
        raise InsufficientBalance(f"Balance of {source[:12]} is {balance}, needs {cents}")
    if cents == 0 or source == target:
        return
    ctx.state.put(token_key(source), {"balance": balance - cents})
    ctx.state.put(token_key(target), {"balance": token_balance(ctx.state, target) + cents})


class TokenContract(Contract):
    """The network's single simulated stable token, in integer cents."""

    name = "token"

    @operation
    def transfer(self, ctx: TxContext):
        cents = require_int(ctx.args, "cents", minimum=0)
        try:
            target = from_hex(ctx.args.get("to"), 32, "to").hex()
        except UnsupportedValue as e:
            raise InvalidArguments(e.message)

        move_tokens(ctx, ctx.submitter_id, target, cents)
        if cents:
            self.emit(
                ctx,
                "TokenTransferred",
                {"cents": cents, "from": ctx.submitter_id, "to": target},
                Audience.parties,
            )
        return {"balance": token_balance(ctx.state, ctx.submitter_id)}
