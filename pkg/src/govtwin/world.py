"""Composition root: genesis, contract deployment and wiring, the twin loop,
and a single simulated clock driving both block height and simulator ticks.

All mutations funnel through World methods (single-writer); the service layer
adds its own lock on top for concurrent HTTP handlers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Optional

from .automation import ActionLogEntry, ThresholdRegistry, controller_tick
from .building import (
    BuildingSim,
    OccupancySchedule,
    PhysicsParams,
    SensorReading,
    default_initial_reading,
)
from .governor import Governor, GovernorConfig
from .ledger import (
    Action,
    Address,
    CallData,
    GasSchedule,
    Ledger,
    LedgerError,
    Receipt,
    Transaction,
    WEI_PER_ETH,
    create_genesis,
)
from .timelock import Timelock, TimelockConfig
from .token import GovernanceToken


def eth_to_wei(eth: float | str | Decimal) -> int:
    return int(Decimal(str(eth)) * WEI_PER_ETH)


@dataclass
class WorldConfig:
    """Validated scenario parameters; see scenario.load_config for the JSON form."""

    name: str = "adhoc"
    seed: int = 0
    seconds_per_block: int = 12
    gas_price: int = 10**9
    usd_per_eth: Decimal = Decimal("2362")
    accounts: list = field(default_factory=list)          # (name, Address, wei)
    contract_balances: dict = field(default_factory=dict)  # contract name -> wei
    keep_percentage: int = 100
    governor: GovernorConfig = field(
        default_factory=lambda: GovernorConfig(1, 300, 4))
    min_delay: int = 3600
    initial_thresholds: dict = field(default_factory=dict)
    gas_overrides: dict = field(default_factory=dict)
    physics: PhysicsParams = field(default_factory=PhysicsParams)
    occupancy: OccupancySchedule = field(default_factory=OccupancySchedule)
    device_watts: dict = field(default_factory=dict)
    initial_reading: Optional[SensorReading] = None
    controller_enabled: bool = True
    controller_period_ticks: int = 1
    auto_self_delegate: list = field(default_factory=list)  # account names
    timeline: list = field(default_factory=list)
    expect: dict = field(default_factory=dict)
    fee_rows: list = field(default_factory=list)
    stated_usd_per_eth: Optional[Decimal] = None
    analytics: dict = field(default_factory=dict)
    narrate_hook: Optional[str] = None


class World:
    def __init__(self, config: WorldConfig):
        self.config = config
        self.account_names = {name: address for name, address, _ in config.accounts}
        self.address_names = {address: name for name, address, _ in config.accounts}

        funded = [(address, wei) for _, address, wei in config.accounts]
        # The dao (timelock) signs the setup transactions that seed thresholds,
        # so its derived address needs gas money before deployment.
        timelock_address = Address.for_contract("timelock")
        governor_address = Address.for_contract("governor")
        balances = dict(config.contract_balances)
        if config.initial_thresholds and "timelock" not in balances:
            balances["timelock"] = eth_to_wei("0.01")
        for contract_name, wei in balances.items():
            funded.append((Address.for_contract(contract_name), wei))

        self.ledger = create_genesis(
            funded,
            GasSchedule(config.gas_overrides),
            seconds_per_block=config.seconds_per_block,
            default_gas_price=config.gas_price,
        )

        deployer = config.accounts[0][1] if config.accounts else Address.for_account("deployer")
        self.deployer = deployer

        self.token = GovernanceToken(deployer, config.keep_percentage)
        self.timelock = Timelock(TimelockConfig(
            min_delay=config.min_delay,
            proposers=frozenset({governor_address}),
            executors=frozenset({governor_address}),
            admin=deployer,
        ))
        self.governor = Governor(deployer, config.governor)
        self.thresholds = ThresholdRegistry(dao=timelock_address)

        self.deploy_receipts = [
            self.ledger.deploy(self.token, deployer),
            self.ledger.deploy(self.timelock, deployer),
            self.ledger.deploy(self.governor, deployer),
            self.ledger.deploy(self.thresholds, deployer),
        ]

        for field_name, value in config.initial_thresholds.items():
            self.execute(timelock_address, "thresholds", f"set_{field_name}", (int(value),))

        for account_name in config.auto_self_delegate:
            address = self.resolve_actor(account_name)
            self.execute(address, "token", "delegate", (address,))

        physics = config.physics
        initial = config.initial_reading or default_initial_reading(physics)
        self.sim = BuildingSim(physics, config.occupancy, initial,
                               device_watts=config.device_watts)

        self.telemetry: list[SensorReading] = [initial]
        self.action_log: list[ActionLogEntry] = []
        self.latent_history: list[tuple[int, float, float, float]] = [
            (0, self.sim.temperature, self.sim.humidity, self.sim.gas)
        ]
        self.proposal_names: dict[str, bytes] = {}

    # -- identity -----------------------------------------------------------------

    def resolve_actor(self, actor: str | Address) -> Address:
        if isinstance(actor, Address):
            return actor
        if actor in self.account_names:
            return self.account_names[actor]
        if actor in ("timelock", "governor", "token", "thresholds"):
            return Address.for_contract(actor)
        if actor.startswith("0x"):
            return Address.from_hex(actor)
        raise LedgerError(f"unknown actor {actor!r}")

    def display_name(self, address: Address) -> str:
        return self.address_names.get(address, address.hex)

    # -- transaction helpers ---------------------------------------------------------

    def execute(self, actor: str | Address, contract: str, function: str,
                args: Iterable = (), value: int = 0,
                gas_price: Optional[int] = None) -> Receipt:
        sender = self.resolve_actor(actor)
        tx = Transaction(sender, CallData(contract, function, tuple(args)),
                         value=value, gas_price=gas_price or self.config.gas_price)
        return self.ledger.execute(tx)

    def transfer_native(self, actor: str | Address, to: str | Address, wei: int) -> Receipt:
        return self.ledger.transfer_native(self.resolve_actor(actor),
                                           self.resolve_actor(to), wei)

    def propose(self, actor: str | Address, actions: list[Action],
                description: str) -> Receipt:
        return self.execute(actor, "governor", "propose", (actions, description))

    # -- clock ------------------------------------------------------------------------

    @property
    def sim_time(self) -> int:
        """Unified simulated time: blocks and ticks both derive from it."""
        return max(self.ledger.timestamp,
                   self.sim.tick_index * self.sim.params.seconds_per_tick)

    def advance_seconds(self, seconds: int) -> None:
        """Advance both clocks, processing block and tick boundaries in
        chronological order (block first on ties, so an executed proposal is
        visible to the controller at the same instant)."""
        if seconds < 0:
            raise LedgerError("cannot advance time backwards")
        target = self.sim_time + seconds
        spb = self.ledger.seconds_per_block
        spt = self.sim.params.seconds_per_tick
        while True:
            next_block = (self.ledger.height + 1) * spb
            next_tick = (self.sim.tick_index + 1) * spt
            upcoming = min(next_block, next_tick)
            if upcoming > target:
                break
            if next_block <= next_tick:
                self.ledger.advance_blocks(1)
            else:
                self._sim_tick()

    def advance_blocks(self, blocks: int) -> None:
        if blocks < 0:
            raise LedgerError("cannot advance a negative block count")
        target_height = self.ledger.height + blocks
        self.advance_seconds(
            max(0, target_height * self.ledger.seconds_per_block - self.sim_time))
        # Remainder only when the tick clock already sat ahead of the target.
        while self.ledger.height < target_height:
            self.ledger.advance_blocks(1)

    def advance_ticks(self, ticks: int) -> None:
        if ticks < 0:
            raise LedgerError("cannot advance a negative tick count")
        target = self.sim.tick_index + ticks
        spt = self.sim.params.seconds_per_tick
        self.advance_seconds(max(0, target * spt - self.sim_time))
        while self.sim.tick_index < target:
            self._sim_tick()

    def _sim_tick(self) -> None:
        reading = self.sim.tick()
        self.telemetry.append(reading)
        self.latent_history.append(
            (self.sim.tick_index, self.sim.temperature, self.sim.humidity, self.sim.gas))
        if self.config.controller_enabled and \
                self.sim.tick_index % self.config.controller_period_ticks == 0:
            snapshot = self.thresholds.snapshot()
            if snapshot.is_initialized():
                controller_tick(self.sim, snapshot, self.action_log)

    # -- views ---------------------------------------------------------------------------

    def proposal_summary(self, pid: bytes) -> dict:
        proposal = self.governor.proposal(pid)
        state = self.governor.state(self.ledger, pid)
        return {
            "id": "0x" + pid.hex(),
            "proposer": proposal.proposer.hex,
            "proposer_name": self.display_name(proposal.proposer),
            "description": proposal.description,
            "state": state.value,
            "snapshot_block": proposal.snapshot_block,
            "deadline_block": proposal.deadline_block,
            "eta": proposal.eta,
            "tally": {
                "against": str(proposal.tally.against),
                "for": str(proposal.tally.for_),
                "abstain": str(proposal.tally.abstain),
                "against_tokens": proposal.tally.against / WEI_PER_ETH,
                "for_tokens": proposal.tally.for_ / WEI_PER_ETH,
                "abstain_tokens": proposal.tally.abstain / WEI_PER_ETH,
            },
            "actions": [
                {
                    "contract": action.target,
                    "function": action.call.function_name,
                    "args": [a.hex if isinstance(a, Address) else a
                             for a in action.call.args],
                    "value_wei": str(action.value),
                }
                for action in proposal.actions
            ],
        }

    def treasury_summary(self) -> dict:
        governor_eth = self.ledger.balance(self.governor.address)
        timelock_eth = self.ledger.balance(self.timelock.address)
        token_treasury = self.token.treasury_balance()
        return {
            "eth_balance": str(governor_eth + timelock_eth),
            "token_balance": str(token_treasury),
            "eth": (governor_eth + timelock_eth) / WEI_PER_ETH,
            "tokens": token_treasury / WEI_PER_ETH,
            "governor_eth": str(governor_eth),
            "timelock_eth": str(timelock_eth),
        }

    def member_summaries(self) -> list[dict]:
        rows = []
        for address in self.governor.members:
            rows.append({
                "address": address.hex,
                "name": self.display_name(address),
                "eth_balance": str(self.ledger.balance(address)),
                "eth": self.ledger.balance(address) / WEI_PER_ETH,
                "token_balance": str(self.token.balance_of(address)),
                "tokens": self.token.balance_of(address) / WEI_PER_ETH,
                "votes": str(self.token.votes(address)),
                "votes_tokens": self.token.votes(address) / WEI_PER_ETH,
            })
        return rows

    def snapshot(self) -> dict:
        """A consistent point-in-time view for pollers; all fields read together."""
        reading = self.sim.current_reading()
        return {
            "block_height": self.ledger.height,
            "timestamp": self.ledger.timestamp,
            "tick": self.sim.tick_index,
            "proposals": [self.proposal_summary(pid)
                          for pid in self.governor.proposals],
            "thresholds": dict(self.thresholds.values),
            "latest_reading": reading.to_json_dict(self.sim.devices),
            "treasury": self.treasury_summary(),
            "members": self.member_summaries(),
            "fees_burned": str(self.ledger.fees_burned),
        }

    # -- log export -------------------------------------------------------------------------

    def telemetry_jsonl(self) -> str:
        return "".join(json.dumps(r.to_json_dict(), sort_keys=True) + "\n"
                       for r in self.telemetry)

    def actions_jsonl(self) -> str:
        return "".join(json.dumps(e.to_json_dict(), sort_keys=True) + "\n"
                       for e in self.action_log)
