"""Proposal lifecycle state machine: token-snapshot voting, quorum-fraction
checking, member registry, timelock wiring, and treasury forwarding.

Lifecycle: Pending -> Active -> Succeeded/Defeated; Succeeded -> Queued ->
Executed/Expired; Canceled reachable from any pre-execution state. State is a
pure function of the stored record and the current clock.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .ledger import (
    Action,
    Address,
    CallEnv,
    Contract,
    Ledger,
    LedgerError,
    Revert,
    canonical_hash,
    check_amount,
)
from .timelock import Timelock
from .token import GovernanceToken

VOTE_AGAINST = 0
VOTE_FOR = 1
VOTE_ABSTAIN = 2

# A Queued proposal left unexecuted this long past its eta becomes Expired.
DEFAULT_GRACE_PERIOD = 14 * 86400


class ProposalState(Enum):
    PENDING = "Pending"
    ACTIVE = "Active"
    CANCELED = "Canceled"
    DEFEATED = "Defeated"
    SUCCEEDED = "Succeeded"
    QUEUED = "Queued"
    EXPIRED = "Expired"
    EXECUTED = "Executed"


@dataclass(frozen=True)
class GovernorConfig:
    voting_delay: int
    voting_period: int
    quorum_numerator: int
    proposal_threshold: int = 0

    def __post_init__(self) -> None:
        if self.voting_period < 1:
            raise LedgerError("voting_period must be >= 1 block")
        if self.voting_delay < 0:
            raise LedgerError("voting_delay must be nonnegative")
        if not 0 <= self.quorum_numerator <= 100:
            raise LedgerError("quorum_numerator must be between 0 and 100")


@dataclass
class VoteTally:
    against: int = 0
    for_: int = 0
    abstain: int = 0


@dataclass
class Proposal:
    id: bytes
    proposer: Address
    actions: list[Action]
    description: str
    description_hash: bytes
    snapshot_block: int
    deadline_block: int
    tally: VoteTally = field(default_factory=VoteTally)
    voted: set = field(default_factory=set)
    canceled: bool = False
    queued: bool = False
    executed: bool = False
    eta: Optional[int] = None
    timelock_op: Optional[bytes] = None


def description_hash(description: str) -> bytes:
    return hashlib.sha256(description.encode("utf-8")).digest()


def proposal_id(actions: list[Action], desc_hash: bytes) -> bytes:
    return canonical_hash([
        [a.target for a in actions],
        [a.value for a in actions],
        [a.call for a in actions],
        desc_hash,
    ])


LIVE_STATES = frozenset({
    ProposalState.PENDING, ProposalState.ACTIVE,
    ProposalState.SUCCEEDED, ProposalState.QUEUED,
})


def proposal_succeeded(for_: int, against: int, abstain: int, quorum: int) -> bool:
    """Outcome rule: participation (For + Abstain) meets quorum and For
    strictly beats Against. Invariant under uniform scaling of all four."""
    return for_ + abstain >= quorum and for_ > against


class Governor(Contract):
    name = "governor"
    FUNCTIONS = ("propose", "cast_vote", "queue", "execute", "cancel",
                 "add_member", "remove_member", "send_ether")

    def __init__(self, deployer: Address, config: GovernorConfig,
                 token_name: str = "token", timelock_name: str = "timelock",
                 grace_period: int = DEFAULT_GRACE_PERIOD):
        super().__init__()
        self.deployer = deployer
        self.config = config
        self.token_name = token_name
        self.timelock_name = timelock_name
        self.grace_period = grace_period
        self.proposal_count = 0
        self.proposals: dict[bytes, Proposal] = {}
        self.members: list[Address] = []
        self.is_member: dict[Address, bool] = {}

    def on_deploy(self, env: CallEnv) -> None:
        # Both collaborators must already be on the ledger.
        env.contract(self.token_name)
        env.contract(self.timelock_name)
        self.members.append(self.deployer)
        self.is_member[self.deployer] = True

    # -- member registry ---------------------------------------------------------

    def _require_member(self, caller: Address) -> None:
        if not self.is_member.get(caller, False):
            raise Revert("Only members can call this function")

    def add_member(self, env: CallEnv, new_member: Address) -> None:
        self._require_member(env.caller)
        if self.is_member.get(new_member, False):
            raise Revert("Address is already a member")
        self.members.append(new_member)
        self.is_member[new_member] = True
        env.emit(self, "MemberAdded", member=new_member)

    def remove_member(self, env: CallEnv, member: Address) -> None:
        self._require_member(env.caller)
        if not self.is_member.get(member, False):
            raise Revert("Address is not a member")
        # Swap-remove: the last entry takes the removed slot, so order can change.
        index = self.members.index(member)
        self.members[index] = self.members[-1]
        self.members.pop()
        self.is_member[member] = False
        env.emit(self, "MemberRemoved", member=member)

    def member_count(self) -> int:
        return len(self.members)

    # -- proposal lifecycle --------------------------------------------------------

    def _token(self, ledger: Ledger) -> GovernanceToken:
        return ledger.contract(self.token_name)  # type: ignore[return-value]

    def _timelock(self, ledger: Ledger) -> Timelock:
        return ledger.contract(self.timelock_name)  # type: ignore[return-value]

    def propose(self, env: CallEnv, actions: list[Action], description: str) -> bytes:
        if not actions:
            raise Revert("empty proposal")
        height = env.block_height
        if self.config.proposal_threshold > 0:
            token = self._token(env.ledger)
            votes = token.past_votes(env.caller, height - 1, height) if height else 0
            if votes < self.config.proposal_threshold:
                raise Revert("proposer votes below proposal threshold")
        desc_hash = description_hash(description)
        pid = proposal_id(actions, desc_hash)
        existing = self.proposals.get(pid)
        if existing is not None and self._state_of(existing, env.ledger) in LIVE_STATES:
            raise Revert("proposal already exists")
        snapshot = height + self.config.voting_delay
        proposal = Proposal(
            id=pid,
            proposer=env.caller,
            actions=list(actions),
            description=description,
            description_hash=desc_hash,
            snapshot_block=snapshot,
            deadline_block=snapshot + self.config.voting_period,
        )
        self.proposals[pid] = proposal
        self.proposal_count += 1
        env.emit(self, "ProposalCreated", proposal_id=pid, proposer=env.caller,
                 description=description, snapshot_block=proposal.snapshot_block,
                 deadline_block=proposal.deadline_block)
        return pid

    def cast_vote(self, env: CallEnv, pid: bytes, support: int) -> int:
        proposal = self._get(pid)
        if self._state_of(proposal, env.ledger) is not ProposalState.ACTIVE:
            raise Revert("voting is not active")
        if env.caller in proposal.voted:
            raise Revert("vote already cast")
        if support not in (VOTE_AGAINST, VOTE_FOR, VOTE_ABSTAIN):
            raise Revert("invalid vote type")
        token = self._token(env.ledger)
        weight = token.past_votes(env.caller, proposal.snapshot_block,
                                  env.block_height)
        if support == VOTE_AGAINST:
            proposal.tally.against += weight
        elif support == VOTE_FOR:
            proposal.tally.for_ += weight
        else:
            proposal.tally.abstain += weight
        proposal.voted.add(env.caller)
        env.emit(self, "VoteCast", proposal_id=pid, voter=env.caller,
                 support=support, weight=weight)
        return weight

    def queue(self, env: CallEnv, pid: bytes) -> int:
        proposal = self._get(pid)
        if self._state_of(proposal, env.ledger) is not ProposalState.SUCCEEDED:
            raise Revert("proposal is not ready to queue")
        timelock = self._timelock(env.ledger)
        op_id = env.call(self.timelock_name, "schedule",
                         (proposal.actions, timelock.config.min_delay,
                          proposal.description_hash),
                         caller=self.address)
        proposal.queued = True
        proposal.timelock_op = op_id
        proposal.eta = timelock.eta_of(op_id)
        env.emit(self, "ProposalQueued", proposal_id=pid, eta=proposal.eta)
        return proposal.eta

    def execute(self, env: CallEnv, pid: bytes) -> None:
        proposal = self._get(pid)
        if self._state_of(proposal, env.ledger) is not ProposalState.QUEUED:
            raise Revert("proposal is not queued")
        env.call(self.timelock_name, "execute", (proposal.timelock_op,),
                 caller=self.address)
        proposal.executed = True
        env.emit(self, "ProposalExecuted", proposal_id=pid)

    def cancel(self, env: CallEnv, pid: bytes) -> None:
        proposal = self._get(pid)
        if env.caller != proposal.proposer:
            raise Revert("Only the proposer can cancel")
        if proposal.executed:
            raise Revert("proposal already executed")
        if proposal.queued and proposal.timelock_op is not None:
            timelock = self._timelock(env.ledger)
            if proposal.timelock_op in timelock.operations:
                env.call(self.timelock_name, "cancel", (proposal.timelock_op,),
                         caller=self.address)
        proposal.canceled = True
        env.emit(self, "ProposalCanceled", proposal_id=pid)

    def send_ether(self, env: CallEnv, receiver: Address, amount: int) -> None:
        check_amount(amount)
        env.transfer_native(self.address, receiver, amount,
                            reason="Insufficient balance in the contract")

    # -- views ---------------------------------------------------------------------

    def _get(self, pid: bytes) -> Proposal:
        proposal = self.proposals.get(pid)
        if proposal is None:
            raise LedgerError(f"unknown proposal 0x{pid.hex()}")
        return proposal

    def proposal(self, pid: bytes) -> Proposal:
        return self._get(pid)

    def quorum(self, ledger: Ledger, block: int) -> int:
        token = self._token(ledger)
        supply = token.past_total_supply(block, ledger.height)
        return supply * self.config.quorum_numerator // 100

    def _state_of(self, proposal: Proposal, ledger: Ledger) -> ProposalState:
        if proposal.executed:
            return ProposalState.EXECUTED
        if proposal.canceled:
            return ProposalState.CANCELED
        height = ledger.height
        if height <= proposal.snapshot_block:
            return ProposalState.PENDING
        if height <= proposal.deadline_block:
            return ProposalState.ACTIVE
        tally = proposal.tally
        if not proposal_succeeded(tally.for_, tally.against, tally.abstain,
                                  self.quorum(ledger, proposal.snapshot_block)):
            return ProposalState.DEFEATED
        if proposal.queued:
            if proposal.eta is not None and ledger.timestamp >= proposal.eta + self.grace_period:
                return ProposalState.EXPIRED
            return ProposalState.QUEUED
        return ProposalState.SUCCEEDED

    def state(self, ledger: Ledger, pid: bytes) -> ProposalState:
        return self._state_of(self._get(pid), ledger)
