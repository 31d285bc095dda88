"""Governance token: balances, treasury dispensing, delegation, and per-block
checkpointed voting power.

Voting weight requires explicit delegation (self-delegation included);
undelegated balances carry zero votes. Historical queries resolve against
per-account checkpoints by binary search.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from typing import Optional

from .ledger import (
    Address,
    CallEnv,
    Contract,
    LedgerError,
    Revert,
    ZERO_ADDRESS,
    check_amount,
)

TOKEN_NAME = "BFHTOKEN"
TOKEN_SYMBOL = "BFHT"
TOTAL_SUPPLY = 1_000_000 * 10**18
# Declared per-user cap in the reference deployment; never enforced there, so
# not enforced here either.
TOKENS_PER_USER = 2000


@dataclass
class Checkpoint:
    from_block: int
    votes: int


def _checkpoint_lookup(checkpoints: list[Checkpoint], block: int) -> int:
    """Value of the latest checkpoint with from_block <= block, else 0."""
    idx = bisect_right(checkpoints, block, key=lambda c: c.from_block)
    return checkpoints[idx - 1].votes if idx else 0


def _write_checkpoint(checkpoints: list[Checkpoint], block: int, votes: int) -> None:
    # At most one checkpoint per block per account: latest write wins.
    if checkpoints and checkpoints[-1].from_block == block:
        checkpoints[-1].votes = votes
    else:
        checkpoints.append(Checkpoint(block, votes))


class GovernanceToken(Contract):
    name = "token"
    FUNCTIONS = ("transfer", "send_tokens", "reward", "delegate")

    def __init__(self, deployer: Address, keep_percentage: int):
        super().__init__()
        if not 0 <= keep_percentage <= 100:
            raise LedgerError("keep_percentage must be between 0 and 100")
        self.deployer = deployer
        self.keep_percentage = keep_percentage
        self.token_name = TOKEN_NAME
        self.symbol = TOKEN_SYMBOL
        self.total_supply = 0
        self.balances: dict[Address, int] = {}
        self.delegatee: dict[Address, Address] = {}
        self.vote_checkpoints: dict[Address, list[Checkpoint]] = {}
        self.supply_checkpoints: list[Checkpoint] = []
        # Mirrors the deployed contract: only the deployer is ever pushed, so
        # holder_length() undercounts by design.
        self.holders: list[Address] = []

    @property
    def treasury(self) -> Address:
        return self.address

    def treasury_balance(self) -> int:
        return self.balances.get(self.address, 0)

    def on_deploy(self, env: CallEnv) -> None:
        keep_amount = (TOTAL_SUPPLY * self.keep_percentage) // 100
        self._mint(env, self.deployer, TOTAL_SUPPLY)
        self._transfer(env, self.deployer, self.address, TOTAL_SUPPLY - keep_amount)
        self.holders.append(self.deployer)

    # -- ledger-callable functions (caller = tx sender) ------------------------

    def transfer(self, env: CallEnv, to: Address, amount: int) -> None:
        self._transfer(env, env.caller, to, check_amount(amount))

    def send_tokens(self, env: CallEnv, receiver: Address, whole_tokens: int) -> None:
        self._transfer(env, self.address, receiver,
                       check_amount(whole_tokens, "whole_tokens") * 10**18)

    def reward(self, env: CallEnv, whole_tokens: int) -> None:
        self._transfer(env, self.address, env.caller,
                       check_amount(whole_tokens, "whole_tokens") * 10**18)

    def delegate(self, env: CallEnv, delegatee: Address) -> None:
        delegator = env.caller
        previous = self.delegatee.get(delegator)
        self.delegatee[delegator] = delegatee
        self._move_votes(env, previous, delegatee, self.balances.get(delegator, 0))

    # -- internals -------------------------------------------------------------

    def _mint(self, env: CallEnv, to: Address, amount: int) -> None:
        self.balances[to] = self.balances.get(to, 0) + amount
        self.total_supply += amount
        _write_checkpoint(self.supply_checkpoints, env.block_height, self.total_supply)
        self._move_votes(env, None, self.delegatee.get(to), amount)
        env.emit(self, "TokenMinted", to=to, amount=amount)
        env.emit(self, "TokenTransferred", frm=ZERO_ADDRESS, to=to, amount=amount)

    def _transfer(self, env: CallEnv, frm: Address, to: Address, amount: int) -> None:
        if self.balances.get(frm, 0) < amount:
            raise Revert("transfer amount exceeds balance")
        self.balances[frm] = self.balances.get(frm, 0) - amount
        self.balances[to] = self.balances.get(to, 0) + amount
        if amount:
            self._move_votes(env, self.delegatee.get(frm), self.delegatee.get(to), amount)
        env.emit(self, "TokenTransferred", frm=frm, to=to, amount=amount)

    def _move_votes(self, env: CallEnv, src: Optional[Address],
                    dst: Optional[Address], amount: int) -> None:
        if src == dst or amount == 0:
            return
        if src is not None:
            points = self.vote_checkpoints.setdefault(src, [])
            current = points[-1].votes if points else 0
            _write_checkpoint(points, env.block_height, current - amount)
        if dst is not None:
            points = self.vote_checkpoints.setdefault(dst, [])
            current = points[-1].votes if points else 0
            _write_checkpoint(points, env.block_height, current + amount)

    # -- views -----------------------------------------------------------------

    def balance_of(self, account: Address) -> int:
        return self.balances.get(account, 0)

    def votes(self, account: Address) -> int:
        points = self.vote_checkpoints.get(account)
        return points[-1].votes if points else 0

    def past_votes(self, account: Address, block: int, current_block: int) -> int:
        if block >= current_block:
            raise LedgerError(f"block {block} is not yet finalized")
        return _checkpoint_lookup(self.vote_checkpoints.get(account, []), block)

    def past_total_supply(self, block: int, current_block: int) -> int:
        if block >= current_block:
            raise LedgerError(f"block {block} is not yet finalized")
        return _checkpoint_lookup(self.supply_checkpoints, block)

    def holder_length(self) -> int:
        return len(self.holders)
