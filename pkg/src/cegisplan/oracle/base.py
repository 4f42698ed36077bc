from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Protocol

from ..plan import Plan, PlanParseError, parse_plan

ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class Message:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")

    def to_json(self) -> dict:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class OracleQuery:
    """A conversation to send to a solution oracle.

    ``metadata`` carries ``problem`` (name), ``trial`` (1-based) and
    ``objects`` (block names used to validate the reply).
    """

    messages: tuple[Message, ...]
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.messages:
            raise ValueError("a query needs at least one message")
        if self.messages[0].role not in ("system", "user"):
            raise ValueError("a query must start with a system or user message")

    @property
    def text(self) -> str:
        return "\n".join(m.content for m in self.messages)

    @property
    def objects(self) -> tuple[str, ...] | None:
        return self.metadata.get("objects")

    def wire_messages(self) -> list[dict]:
        return [m.to_json() for m in self.messages]


@dataclass(frozen=True)
class OracleResponse:
    raw_text: str
    parsed: Plan | None = None
    parse_error: PlanParseError | None = None


def response_from_text(text: str, objects: Iterable[str] | None = None) -> OracleResponse:
    try:
        return OracleResponse(text, parsed=parse_plan(text, objects))
    except PlanParseError as e:
        return OracleResponse(text, parse_error=e)


class Oracle(Protocol):
    def query(self, query: OracleQuery) -> OracleResponse: ...


class OracleTransportError(RuntimeError):
    """The oracle could not be reached or answered nonsense at the protocol level."""
