"""Communication accounting per subprotocol."""

import csv
import io
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, TextIO, Union

LEDGER_COLUMNS = ("subprotocol", "invocations", "bytes", "rounds")


@dataclass
class LedgerEntry:
    invocations: int = 0
    bytes: int = 0
    messages: int = 0
    rounds: int = 0


class CommLedger:
    """Bytes, messages and rounds charged by each subprotocol name."""

    def __init__(self):
        self._entries: dict[str, LedgerEntry] = {}

    def charge(self, subprotocol: str, *, nbytes: int, messages: int, rounds: int = 1) -> None:
        if nbytes < 0 or messages < 0 or rounds < 0:
            raise ValueError(
                f"negative charge for {subprotocol}: bytes={nbytes} messages={messages}"
            )
        entry = self._entries.setdefault(subprotocol, LedgerEntry())
        entry.invocations += 1
        entry.bytes += nbytes
        entry.messages += messages
        entry.rounds += rounds

    def entry(self, subprotocol: str) -> LedgerEntry:
        return replace(self._entries.get(subprotocol, LedgerEntry()))

    def snapshot(self) -> dict[str, LedgerEntry]:
        return {name: replace(entry) for name, entry in self._entries.items()}

    @property
    def total_bytes(self) -> int:
        return sum(e.bytes for e in self._entries.values())

    @property
    def total_rounds(self) -> int:
        return sum(e.rounds for e in self._entries.values())

    def bytes_for(self, names: Iterable[str]) -> int:
        return sum(self._entries[n].bytes for n in names if n in self._entries)

    def merge(self, other: "CommLedger") -> None:
        for name, theirs in other._entries.items():
            mine = self._entries.setdefault(name, LedgerEntry())
            mine.invocations += theirs.invocations
            mine.bytes += theirs.bytes
            mine.messages += theirs.messages
            mine.rounds += theirs.rounds

    def diff(self, before: dict[str, LedgerEntry]) -> "CommLedger":
        """Charges made since `before` was snapshotted."""
        delta = CommLedger()
        for name, now in self._entries.items():
            then = before.get(name, LedgerEntry())
            if now.invocations != then.invocations:
                delta._entries[name] = LedgerEntry(
                    now.invocations - then.invocations,
                    now.bytes - then.bytes,
                    now.messages - then.messages,
                    now.rounds - then.rounds,
                )
        return delta

    def rows(self) -> list[tuple[str, int, int, int]]:
        return [
            (name, e.invocations, e.bytes, e.rounds)
            for name, e in sorted(self._entries.items())
        ]

    def to_csv(self, target: Optional[Union[str, Path, TextIO]] = None) -> str:
        """Write (subprotocol, invocations, bytes, rounds) rows; returns the CSV text."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(LEDGER_COLUMNS)
        writer.writerows(self.rows())
        text = buffer.getvalue()
        if isinstance(target, (str, Path)):
            Path(target).write_text(text)
        elif target is not None:
            target.write(text)
        return text
