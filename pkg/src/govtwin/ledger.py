"""Deterministic in-process ledger: block clock, native balances, gas-metered
transaction execution against registered contracts, canonical hashing, and an
append-only event log.

Amounts are plain Python ints in base units (1 token / 1 ETH = 10**18).
Negative balances are impossible by construction; every mutation goes through
credit/debit helpers that raise instead of wrapping.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from decimal import Decimal, ROUND_HALF_UP
from typing import Any, Callable, Iterable, Optional

WEI_PER_ETH = 10**18
GWEI = 10**9

DEFAULT_SECONDS_PER_BLOCK = 12
DEFAULT_GAS_PRICE = GWEI  # 1 gwei

# Measured per-operation gas for the reference deployment; entries without a
# measured value are round numbers in the same ballpark as comparable ops.
DEFAULT_GAS_SCHEDULE = {
    "deploy.governor": 3_880_388,
    "deploy.timelock": 1_909_795,
    "deploy.token": 1_971_098,
    "deploy.thresholds": 488_638,
    "deploy.reservation": 1_662_788,  # never executed; kept for fee tables
    "governor.add_member": 73_610,
    "governor.remove_member": 60_000,
    "governor.propose": 108_168,
    "governor.cast_vote": 93_186,
    "governor.queue": 123_769,
    "governor.execute": 132_563,
    "governor.cancel": 70_000,
    "governor.send_ether": 30_000,
    "token.transfer": 72_954,
    "token.send_tokens": 55_000,
    "token.reward": 55_000,
    "token.delegate": 95_000,
    "timelock.schedule": 80_000,
    "timelock.execute": 120_000,
    "timelock.cancel": 40_000,
    "timelock.send_ether": 21_055,
    "thresholds.set_min_temperature": 45_000,
    "thresholds.set_max_temperature": 45_000,
    "thresholds.set_min_co_level": 45_000,
    "thresholds.set_max_co_level": 45_000,
    "thresholds.set_min_lux_level": 45_000,
    "thresholds.set_max_lux_level": 45_000,
    "thresholds.set_min_humidity": 45_000,
    "thresholds.set_max_humidity": 45_000,
    "native.transfer": 21_000,
}


class LedgerError(Exception):
    """Precondition violation: the transaction is rejected, nothing executes."""


class Revert(Exception):
    """Contract-level failure: state rolls back, the gas fee is still charged."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True, order=True)
class Address:
    """20-byte opaque account identifier, rendered as 0x-prefixed lowercase hex."""

    raw: bytes

    def __post_init__(self) -> None:
        if not isinstance(self.raw, bytes) or len(self.raw) != 20:
            raise LedgerError("address must be exactly 20 bytes")

    @classmethod
    def from_hex(cls, text: str) -> "Address":
        body = text[2:] if text.lower().startswith("0x") else text
        if len(body) != 40:
            raise LedgerError(f"not a 20-byte hex address: {text!r}")
        return cls(bytes.fromhex(body))

    @classmethod
    def for_contract(cls, name: str) -> "Address":
        return cls(hashlib.sha256(b"contract:" + name.encode()).digest()[:20])

    @classmethod
    def for_account(cls, name: str) -> "Address":
        return cls(hashlib.sha256(b"account:" + name.encode()).digest()[:20])

    @property
    def hex(self) -> str:
        return "0x" + self.raw.hex()

    def __str__(self) -> str:
        return self.hex

    def __repr__(self) -> str:
        return f"Address({self.hex})"


ZERO_ADDRESS = Address(b"\x00" * 20)

MAX_UNSIGNED = 2**256 - 1
MIN_SIGNED = -(2**255)


def check_amount(value: int, what: str = "amount") -> int:
    """Amounts are unsigned base-unit integers; reject negatives and overflow."""
    if not isinstance(value, int) or isinstance(value, bool):
        raise LedgerError(f"{what} must be an int, got {type(value).__name__}")
    if value < 0:
        raise LedgerError(f"{what} must be nonnegative, got {value}")
    if value > MAX_UNSIGNED:
        raise LedgerError(f"{what} exceeds 256-bit range")
    return value


def canonical_bytes(payload: Any) -> bytes:
    """Canonical injective serialization of the call/proposal value vocabulary.

    Lists: 4-byte big-endian count, then each element length-prefixed with a
    4-byte big-endian length. Addresses: raw 20 bytes. Nonnegative ints:
    32-byte big-endian. Negative ints: 32-byte big-endian two's complement.
    Text: UTF-8. Bytes: raw.
    """
    if isinstance(payload, Address):
        return payload.raw
    if isinstance(payload, bool):
        raise LedgerError("bool is outside the canonical value vocabulary")
    if isinstance(payload, int):
        if payload >= 0:
            if payload > MAX_UNSIGNED:
                raise LedgerError("integer exceeds 256-bit range")
            return payload.to_bytes(32, "big")
        if payload < MIN_SIGNED:
            raise LedgerError("integer below signed 256-bit range")
        return (payload + 2**256).to_bytes(32, "big")
    if isinstance(payload, str):
        return payload.encode("utf-8")
    if isinstance(payload, bytes):
        return payload
    if isinstance(payload, (list, tuple)):
        parts = [len(payload).to_bytes(4, "big")]
        for element in payload:
            body = canonical_bytes(element)
            parts.append(len(body).to_bytes(4, "big"))
            parts.append(body)
        return b"".join(parts)
    to_canonical = getattr(payload, "to_canonical", None)
    if callable(to_canonical):
        return canonical_bytes(to_canonical())
    raise LedgerError(f"value outside canonical vocabulary: {type(payload).__name__}")


def canonical_hash(payload: Any) -> bytes:
    """SHA-256 digest of the canonical serialization."""
    return hashlib.sha256(canonical_bytes(payload)).digest()


@dataclass(frozen=True)
class CallData:
    """A structured contract call: target contract, function, typed arguments."""

    contract_name: str
    function_name: str
    args: tuple = ()

    def to_canonical(self) -> list:
        return [self.contract_name, self.function_name, list(self.args)]


@dataclass(frozen=True)
class Action:
    """One proposal/timelock action: a call with optional attached native value."""

    call: CallData
    value: int = 0

    @property
    def target(self) -> str:
        return self.call.contract_name

    def to_canonical(self) -> list:
        return [self.target, self.value, self.call]


@dataclass(frozen=True)
class Transaction:
    sender: Address
    call: CallData
    value: int = 0
    gas_price: int = DEFAULT_GAS_PRICE

    @property
    def target(self) -> str:
        return self.call.contract_name


@dataclass
class EventRecord:
    contract_name: str
    event_name: str
    fields: dict
    block_height: int
    seq: int

    def to_json_dict(self) -> dict:
        return {
            "contract": self.contract_name,
            "event": self.event_name,
            "fields": {k: _json_value(v) for k, v in self.fields.items()},
            "block": self.block_height,
            "seq": self.seq,
        }


def _json_value(value: Any) -> Any:
    if isinstance(value, Address):
        return value.hex
    if isinstance(value, bytes):
        return "0x" + value.hex()
    return value


@dataclass
class Receipt:
    tx_hash: bytes
    op_name: str
    gas_used: int
    gas_price: int
    fee: int
    status: str  # "success" | "revert"
    revert_reason: Optional[str] = None
    events: list = field(default_factory=list)
    result: Any = None

    @property
    def ok(self) -> bool:
        return self.status == "success"

    def to_json_dict(self) -> dict:
        return {
            "tx_hash": "0x" + self.tx_hash.hex(),
            "op": self.op_name,
            "gas_used": self.gas_used,
            "gas_price": self.gas_price,
            "fee_wei": str(self.fee),
            "status": self.status,
            "revert_reason": self.revert_reason,
            "events": [e.to_json_dict() for e in self.events],
        }


class GasSchedule:
    """Per-operation gas units; every ledger-visible op must have an entry > 0."""

    def __init__(self, entries: Optional[dict] = None):
        merged = dict(DEFAULT_GAS_SCHEDULE)
        if entries:
            merged.update(entries)
        for op, gas in merged.items():
            if not isinstance(gas, int) or gas <= 0:
                raise LedgerError(f"gas schedule entry {op!r} must be a positive int")
        self.entries = merged

    def gas_for(self, op_name: str) -> int:
        try:
            return self.entries[op_name]
        except KeyError:
            raise LedgerError(f"no gas schedule entry for operation {op_name!r}") from None


class Contract:
    """Base for ledger-hosted contracts.

    Subclasses set ``name`` and list ledger-callable functions in FUNCTIONS;
    those methods take a CallEnv first. Contracts hold only plain data (no
    ledger back-references) so transaction snapshots can deep-copy them.
    """

    name: str = ""
    FUNCTIONS: tuple = ()

    def __init__(self) -> None:
        if not self.name:
            raise LedgerError("contract subclass must define a name")
        self.address = Address.for_contract(self.name)

    def on_deploy(self, env: "CallEnv") -> None:
        """Constructor-time logic, run inside the deployment transaction."""

    def dispatch(self, env: "CallEnv", function_name: str, args: Iterable) -> Any:
        if function_name not in self.FUNCTIONS:
            raise LedgerError(
                f"contract {self.name!r} has no function {function_name!r}"
            )
        return getattr(self, function_name)(env, *args)


class CallEnv:
    """Execution context passed to contract functions for one transaction."""

    def __init__(self, ledger: "Ledger", caller: Address, value: int = 0):
        self.ledger = ledger
        self.caller = caller
        self.value = value

    @property
    def block_height(self) -> int:
        return self.ledger.height

    @property
    def now(self) -> int:
        return self.ledger.timestamp

    def emit(self, contract: Contract, event_name: str, **fields: Any) -> None:
        self.ledger._append_event(contract.name, event_name, fields)

    def contract(self, name: str) -> Contract:
        return self.ledger.contract(name)

    def transfer_native(self, frm: Address, to: Address, amount: int,
                        reason: str = "Insufficient balance in the contract") -> None:
        """Move native currency inside a transaction (no fee); Revert on shortfall."""
        check_amount(amount)
        if self.ledger.balance(frm) < amount:
            raise Revert(reason)
        self.ledger._debit(frm, amount)
        self.ledger._credit(to, amount)

    def call(self, contract_name: str, function_name: str, args: Iterable = (),
             caller: Optional[Address] = None, value: int = 0) -> Any:
        """Inner contract-to-contract call; shares the outer transaction's
        atomicity and charges no additional gas."""
        target = self.ledger.contract(contract_name)
        if value:
            self.transfer_native(caller or self.caller, target.address, value)
        inner = CallEnv(self.ledger, caller or self.caller, value)
        return target.dispatch(inner, function_name, args)

    def revert(self, reason: str) -> None:
        raise Revert(reason)


class Ledger:
    """Single-writer simulated chain: serialized mutations, shareable snapshots."""

    def __init__(self, accounts: Iterable[tuple[Address, int]],
                 gas_schedule: Optional[GasSchedule] = None,
                 seconds_per_block: int = DEFAULT_SECONDS_PER_BLOCK,
                 default_gas_price: int = DEFAULT_GAS_PRICE):
        if seconds_per_block < 1:
            raise LedgerError("seconds_per_block must be >= 1")
        if default_gas_price <= 0:
            raise LedgerError("gas price must be positive")
        self.gas_schedule = gas_schedule or GasSchedule()
        self.seconds_per_block = seconds_per_block
        self.default_gas_price = default_gas_price
        self.height = 0
        self.balances: dict[Address, int] = {}
        self.fees_burned = 0
        self.contracts: dict[str, Contract] = {}
        self.events: list[EventRecord] = []
        self.receipts: list[Receipt] = []
        self._tx_counter = 0
        for address, balance in accounts:
            if address in self.balances:
                raise LedgerError(f"duplicate genesis address {address}")
            self.balances[address] = check_amount(balance, "genesis balance")

    # -- clock ---------------------------------------------------------------

    @property
    def timestamp(self) -> int:
        return self.height * self.seconds_per_block

    def advance_blocks(self, n: int) -> int:
        if n < 0:
            raise LedgerError("cannot advance by a negative block count")
        self.height += n
        return self.height

    # -- accounts ------------------------------------------------------------

    def balance(self, address: Address) -> int:
        return self.balances.get(address, 0)

    def _credit(self, address: Address, amount: int) -> None:
        self.balances[address] = self.balances.get(address, 0) + amount

    def _debit(self, address: Address, amount: int) -> None:
        new_balance = self.balances.get(address, 0) - amount
        if new_balance < 0:
            raise LedgerError(f"debit would make {address} negative")
        self.balances[address] = new_balance

    def total_native(self) -> int:
        return sum(self.balances.values())

    # -- contracts -----------------------------------------------------------

    def contract(self, name: str) -> Contract:
        try:
            return self.contracts[name]
        except KeyError:
            raise LedgerError(f"contract {name!r} is not deployed") from None

    def deploy(self, contract: Contract, deployer: Address,
               gas_price: Optional[int] = None) -> Receipt:
        if contract.name in self.contracts:
            raise LedgerError(f"contract {contract.name!r} already deployed")
        op_name = f"deploy.{contract.name}"

        def run(env: CallEnv) -> None:
            self.contracts[contract.name] = contract
            self.balances.setdefault(contract.address, 0)
            contract.on_deploy(env)

        return self._run_tx(op_name, deployer, gas_price or self.default_gas_price,
                            value=0, value_to=None, body=run)

    # -- execution -----------------------------------------------------------

    def transfer_native(self, frm: Address, to: Address, amount: int,
                        gas_price: Optional[int] = None) -> Receipt:
        check_amount(amount)
        if frm not in self.balances:
            raise LedgerError(f"unknown sender account {frm}")

        def run(env: CallEnv) -> None:
            env.transfer_native(frm, to, amount)

        return self._run_tx("native.transfer", frm,
                            gas_price or self.default_gas_price,
                            value=0, value_to=None, body=run)

    def execute(self, tx: Transaction) -> Receipt:
        contract = self.contract(tx.call.contract_name)
        if tx.call.function_name not in contract.FUNCTIONS:
            raise LedgerError(
                f"contract {contract.name!r} has no function {tx.call.function_name!r}"
            )
        if tx.gas_price <= 0:
            raise LedgerError("gas price must be positive")
        check_amount(tx.value, "attached value")
        op_name = f"{contract.name}.{tx.call.function_name}"

        def run(env: CallEnv) -> Any:
            return contract.dispatch(env, tx.call.function_name, tx.call.args)

        return self._run_tx(op_name, tx.sender, tx.gas_price,
                            value=tx.value, value_to=contract.address, body=run)

    def _run_tx(self, op_name: str, sender: Address, gas_price: int,
                value: int, value_to: Optional[Address],
                body: Callable[[CallEnv], Any]) -> Receipt:
        """Shared transaction machinery: fee charging, atomic rollback, events."""
        gas = self.gas_schedule.gas_for(op_name)
        fee = gas * gas_price
        if sender not in self.balances:
            raise LedgerError(f"unknown sender account {sender}")
        if self.balance(sender) < fee:
            raise LedgerError(f"sender {sender} cannot cover the {fee} wei gas fee")

        self._tx_counter += 1
        tx_hash = canonical_hash(
            [self._tx_counter, self.height, sender, op_name, value, gas_price]
        )
        snapshot = self._snapshot()
        events_before = len(self.events)
        self._debit(sender, fee)
        self.fees_burned += fee
        try:
            if value:
                if self.balance(sender) < value:
                    raise Revert("Insufficient balance in the contract")
                self._debit(sender, value)
                if value_to is not None:
                    self._credit(value_to, value)
            env = CallEnv(self, sender, value)
            result = body(env)
        except Revert as exc:
            self._restore(snapshot)
            del self.events[events_before:]
            self._debit(sender, fee)
            self.fees_burned += fee
            receipt = Receipt(tx_hash, op_name, gas, gas_price, fee,
                              "revert", revert_reason=exc.reason)
        except LedgerError:
            # precondition failure discovered mid-execution: the transaction
            # is rejected outright, so not even the fee is kept
            self._restore(snapshot)
            del self.events[events_before:]
            self._tx_counter -= 1
            raise
        else:
            receipt = Receipt(tx_hash, op_name, gas, gas_price, fee, "success",
                              events=self.events[events_before:], result=result)
        self.receipts.append(receipt)
        return receipt

    def _snapshot(self) -> tuple:
        return (
            copy.deepcopy(self.contracts),
            dict(self.balances),
            self.fees_burned,
        )

    def _restore(self, snapshot: tuple) -> None:
        """Roll contract state back in place so references held by callers
        stay valid; contracts deployed inside the failed tx are dropped."""
        contracts_copy, balances, fees_burned = snapshot
        restored: dict[str, Contract] = {}
        for name, copied in contracts_copy.items():
            live = self.contracts.get(name)
            if live is not None:
                live.__dict__ = copied.__dict__
                restored[name] = live
            else:
                restored[name] = copied
        self.contracts = restored
        self.balances = dict(balances)
        self.fees_burned = fees_burned

    # -- events --------------------------------------------------------------

    def _append_event(self, contract_name: str, event_name: str, fields: dict) -> None:
        self.events.append(
            EventRecord(contract_name, event_name, fields, self.height, len(self.events))
        )

    def events_jsonl(self) -> str:
        return "".join(json.dumps(e.to_json_dict(), sort_keys=True) + "\n"
                       for e in self.events)


def create_genesis(accounts: Iterable[tuple[Address, int]],
                   gas_schedule: Optional[GasSchedule] = None,
                   seconds_per_block: int = DEFAULT_SECONDS_PER_BLOCK,
                   default_gas_price: int = DEFAULT_GAS_PRICE) -> Ledger:
    """Build a height-0 ledger with the given funded accounts."""
    return Ledger(accounts, gas_schedule, seconds_per_block, default_gas_price)


# -- fee reporting ----------------------------------------------------------

CENT = Decimal("0.01")
MICRO_ETH = Decimal("0.000001")


def wei_to_eth(wei: int) -> Decimal:
    return Decimal(wei) / Decimal(WEI_PER_ETH)


@dataclass
class FeeRow:
    op: str
    gas: int
    fee_eth: Decimal
    fee_usd: Decimal

    def to_json_dict(self) -> dict:
        return {
            "op": self.op,
            "gas": self.gas,
            "fee_eth": str(self.fee_eth.quantize(MICRO_ETH, rounding=ROUND_HALF_UP)),
            "fee_usd": str(self.fee_usd),
        }


def fee_report(receipts: Iterable[Receipt], usd_per_eth: Decimal | float | str) -> list[FeeRow]:
    """Tabulate (op, gas, fee_eth, fee_usd) per receipt; USD rounded half-up to cents."""
    rate = Decimal(str(usd_per_eth))
    if rate <= 0:
        raise LedgerError("usd_per_eth must be positive")
    rows = []
    for receipt in receipts:
        fee_eth = wei_to_eth(receipt.fee)
        fee_usd = (fee_eth * rate).quantize(CENT, rounding=ROUND_HALF_UP)
        rows.append(FeeRow(receipt.op_name, receipt.gas_used, fee_eth, fee_usd))
    return rows
