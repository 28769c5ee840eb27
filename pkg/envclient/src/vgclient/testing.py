"""Replay transport for protocol-conformance fixtures.

A transcript is a JSONL file of {"send": line, "recv": line} records taken
from a real session. The replay transport asserts that the client emits
byte-for-byte the recorded request before handing back the recorded
response, so client behavior is pinned without a live server.
"""

from __future__ import annotations

import json
from pathlib import Path


class TranscriptMismatch(AssertionError):
    pass


def load_transcript(path) -> list[dict]:
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line:
            records.append(json.loads(line))
    return records


class ReplayTransport:
    """Feeds recorded responses; verifies requests match the recording."""

    def __init__(self, records: list[dict]):
        self._records = list(records)
        self._pos = 0
        self.closed = False

    @classmethod
    def from_file(cls, path) -> "ReplayTransport":
        return cls(load_transcript(path))

    def request(self, line: str) -> str:
        if self._pos >= len(self._records):
            raise TranscriptMismatch(f"transcript exhausted; unexpected request {line!r}")
        record = self._records[self._pos]
        self._pos += 1
        expected = record["send"].rstrip("\n") + "\n"
        if line != expected:
            raise TranscriptMismatch(
                f"request differs from transcript at step {self._pos}:\n"
                f"  sent:     {line!r}\n  expected: {expected!r}"
            )
        return record["recv"].rstrip("\n") + "\n"

    def close(self) -> None:
        self.closed = True

    @property
    def exhausted(self) -> bool:
        return self._pos == len(self._records)
