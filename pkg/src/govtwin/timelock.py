"""Delayed-execution queue between approved proposals and their effects.

Operations move Waiting -> Ready (purely by clock) -> Done (absorbing).
The queue also holds native currency and can send it out.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

from .ledger import (
    Action,
    Address,
    CallEnv,
    Contract,
    LedgerError,
    Revert,
    canonical_hash,
    check_amount,
)

DEFAULT_MIN_DELAY = 3600  # seconds; one voting period's worth of wall clock


class OperationState(Enum):
    WAITING = "Waiting"
    READY = "Ready"
    DONE = "Done"


@dataclass(frozen=True)
class TimelockConfig:
    min_delay: int
    proposers: frozenset[Address]
    executors: frozenset[Address]
    admin: Address

    def __post_init__(self) -> None:
        if self.min_delay < 0:
            raise LedgerError("min_delay must be nonnegative")


@dataclass
class TimelockOperation:
    op_id: bytes
    actions: list[Action]
    eta: int
    done: bool = False

    def state(self, now: int) -> OperationState:
        if self.done:
            return OperationState.DONE
        return OperationState.READY if now >= self.eta else OperationState.WAITING


def operation_id(actions: Iterable[Action], salt: bytes) -> bytes:
    actions = list(actions)
    return canonical_hash([
        [a.target for a in actions],
        [a.value for a in actions],
        [a.call for a in actions],
        salt,
    ])


class Timelock(Contract):
    name = "timelock"
    FUNCTIONS = ("schedule", "execute", "cancel", "send_ether")

    def __init__(self, config: TimelockConfig):
        super().__init__()
        self.config = config
        self.operations: dict[bytes, TimelockOperation] = {}

    # -- ledger-callable functions ---------------------------------------------

    def schedule(self, env: CallEnv, actions: list[Action], delay: int,
                 salt: bytes) -> bytes:
        if env.caller not in self.config.proposers:
            raise Revert("Caller is not a proposer")
        if delay < self.config.min_delay:
            raise Revert("Delay is less than the minimum delay")
        op_id = operation_id(actions, salt)
        if op_id in self.operations:
            raise Revert("Operation is already scheduled")
        eta = env.now + delay
        self.operations[op_id] = TimelockOperation(op_id, list(actions), eta)
        env.emit(self, "OperationScheduled", op_id=op_id, eta=eta)
        return op_id

    def execute(self, env: CallEnv, op_id: bytes) -> None:
        if env.caller not in self.config.executors:
            raise Revert("Caller is not an executor")
        op = self.operations.get(op_id)
        if op is None:
            raise Revert("Operation is not scheduled")
        state = op.state(env.now)
        if state is OperationState.DONE:
            raise Revert("Operation is already done")
        if state is not OperationState.READY:
            raise Revert("Operation is not ready")
        for action in op.actions:
            env.call(action.target, action.call.function_name, action.call.args,
                     caller=self.address, value=action.value)
        op.done = True
        env.emit(self, "OperationExecuted", op_id=op_id)

    def cancel(self, env: CallEnv, op_id: bytes) -> None:
        if env.caller not in self.config.proposers and env.caller != self.config.admin:
            raise Revert("Caller is not a proposer")
        op = self.operations.get(op_id)
        if op is None:
            raise Revert("Operation is not scheduled")
        if op.done:
            raise Revert("Operation is already done")
        del self.operations[op_id]
        env.emit(self, "OperationCanceled", op_id=op_id)

    def send_ether(self, env: CallEnv, receiver: Address, amount: int) -> None:
        check_amount(amount)
        env.transfer_native(self.address, receiver, amount,
                            reason="Insufficient balance in the contract")

    # -- views -----------------------------------------------------------------

    def operation_state(self, op_id: bytes, now: int) -> Optional[OperationState]:
        op = self.operations.get(op_id)
        return op.state(now) if op else None

    def eta_of(self, op_id: bytes) -> Optional[int]:
        op = self.operations.get(op_id)
        return op.eta if op else None
