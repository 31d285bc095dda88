from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from govtwin.automation import ThresholdRegistry
from govtwin.governor import Governor, GovernorConfig
from govtwin.ledger import (
    Address,
    CallData,
    GasSchedule,
    Ledger,
    Receipt,
    Transaction,
    create_genesis,
)
from govtwin.timelock import Timelock, TimelockConfig
from govtwin.token import GovernanceToken

ETH = 10**18
GWEI = 10**9


@dataclass
class Stack:
    """A fully wired ledger + contract deployment for governance tests."""

    ledger: Ledger
    token: GovernanceToken
    timelock: Timelock
    governor: Governor
    thresholds: ThresholdRegistry
    accounts: dict

    def call(self, sender: Address, contract: str, function: str, *args,
             value: int = 0, gas_price: int = GWEI) -> Receipt:
        tx = Transaction(sender, CallData(contract, function, tuple(args)),
                         value=value, gas_price=gas_price)
        return self.ledger.execute(tx)

    def call_ok(self, sender: Address, contract: str, function: str, *args,
                value: int = 0):
        receipt = self.call(sender, contract, function, *args, value=value)
        assert receipt.ok, f"{contract}.{function} reverted: {receipt.revert_reason}"
        return receipt.result


def deploy_stack(n_members: int = 3, keep_percentage: int = 100,
                 config: GovernorConfig | None = None,
                 min_delay: int = 3600, grace_period: int = 14 * 86400,
                 fund_timelock_wei: int = ETH // 100,
                 balance_wei: int = ETH) -> Stack:
    config = config or GovernorConfig(voting_delay=1, voting_period=300,
                                      quorum_numerator=4)
    names = ["deployer"] + [f"member{i}" for i in range(1, n_members + 1)]
    accounts = {name: Address.for_account(name) for name in names}
    funded = [(address, balance_wei) for address in accounts.values()]
    governor_address = Address.for_contract("governor")
    timelock_address = Address.for_contract("timelock")
    if fund_timelock_wei:
        funded.append((timelock_address, fund_timelock_wei))

    ledger = create_genesis(funded, GasSchedule())
    deployer = accounts["deployer"]
    token = GovernanceToken(deployer, keep_percentage)
    timelock = Timelock(TimelockConfig(
        min_delay=min_delay,
        proposers=frozenset({governor_address}),
        executors=frozenset({governor_address}),
        admin=deployer,
    ))
    governor = Governor(deployer, config, grace_period=grace_period)
    thresholds = ThresholdRegistry(dao=timelock_address)
    ledger.deploy(token, deployer)
    ledger.deploy(timelock, deployer)
    ledger.deploy(governor, deployer)
    ledger.deploy(thresholds, deployer)
    return Stack(ledger, token, timelock, governor, thresholds, accounts)


@pytest.fixture
def stack() -> Stack:
    return deploy_stack()


def week_fixture_csv(night_power: float = 100.0, day_power: float = 30.0,
                     day_fan_speed: float = 80.0, day_occupancy: int = 5,
                     minutes: int = 10_080) -> str:
    """Seven days of one-minute samples: a constant night fan load during
    22:00-06:00 with zero occupancy, occupied low-power days 08:00-18:00.
    Every value is constructed, so the idle-energy ground truth is exact:
    56 idle-high hours totalling 5600 Wh at the default 100 W night load."""
    lines = ["ts,temperature,fan_speed,occupancy,energy"]
    for minute in range(minutes):
        ts = minute * 60
        hour_of_day = (minute % 1440) / 60.0
        night = hour_of_day < 6 or hour_of_day >= 22
        occupied = 8 <= hour_of_day < 18
        occupancy = day_occupancy if occupied else 0
        if night:
            fan_speed, energy = 100.0, night_power
        elif occupied:
            fan_speed, energy = day_fan_speed, day_power
        else:
            fan_speed, energy = 0.0, 0.0
        temperature = 21.0 + (1.5 if occupied else 0.0)
        lines.append(f"{ts},{temperature},{fan_speed},{occupancy},{energy}")
    return "\n".join(lines) + "\n"


@pytest.fixture(scope="session")
def week_csv() -> str:
    return week_fixture_csv()
