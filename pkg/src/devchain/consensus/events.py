import logging
import threading
from dataclasses import dataclass
from enum import Enum
from typing import Callable

logger = logging.getLogger(__name__)


class Audience(Enum):
    all_members = "AllMembers"
    developers = "Developers"
    parties = "Parties"

    def admits(self, event_audience: "Audience") -> bool:
        """A subscriber for an audience also sees events addressed to everyone."""
        return event_audience in (self, Audience.all_members)


@dataclass(frozen=True)
class EventDraft:
    contract: str
    event_name: str
    payload: dict
    audience: Audience
    project_id: str = ""


@dataclass(frozen=True)
class Event:
    seq: int
    block_height: int
    tx_id: bytes | None
    project_id: str
    contract: str
    event_name: str
    payload: dict
    audience: Audience

    def to_doc(self) -> dict:
        return {
            "audience": self.audience.value,
            "block_height": self.block_height,
            "contract": self.contract,
            "event_name": self.event_name,
            "payload": self.payload,
            "project_id": self.project_id,
            "seq": self.seq,
            "tx_id": self.tx_id.hex() if self.tx_id else None,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "Event":
        return cls(
            seq=doc["seq"],
            block_height=doc["block_height"],
            tx_id=bytes.fromhex(doc["tx_id"]) if doc["tx_id"] else None,
            project_id=doc["project_id"],
            contract=doc["contract"],
            event_name=doc["event_name"],
            payload=doc["payload"],
            audience=Audience(doc["audience"]),
        )


class EventLog:
    """Committed events in commit order, plus push delivery to subscribers.

    Events are appended only after their block's state write is applied, so a
    subscriber never observes an event before the record it announces.
    """

    def __init__(self):
        self.events: list[Event] = []
        self._subscribers: list[tuple[Audience | None, Callable[[Event], None]]] = []
        self._lock = threading.Lock()

    def __len__(self):
        return len(self.events)

    def publish(self, block_height: int, tx_id: bytes | None, drafts) -> list[Event]:
        with self._lock:
            published = []
            for draft in drafts:
                event = Event(
                    seq=len(self.events),
                    block_height=block_height,
                    tx_id=tx_id,
                    project_id=draft.project_id,
                    contract=draft.contract,
                    event_name=draft.event_name,
                    payload=draft.payload,
                    audience=draft.audience,
                )
                self.events.append(event)
                published.append(event)
            subscribers = list(self._subscribers)

        for audience, callback in subscribers:
            for event in published:
                if audience is None or audience.admits(event.audience):
                    try:
                        callback(event)
                    except Exception as e:
                        logger.error(f" --> Event subscriber failed on {event.event_name}: {e}")
        return published

    def query(self, since: int = 0, audience: Audience | None = None, project_id=None):
        with self._lock:
            events = self.events[max(since, 0):]
        return [
            e
            for e in events
            if (audience is None or audience.admits(e.audience))
            and (project_id is None or e.project_id == project_id)
        ]

    def subscribe(self, callback: Callable[[Event], None], audience: Audience | None = None):
        with self._lock:
            self._subscribers.append((audience, callback))
        return callback

    def unsubscribe(self, callback):
        with self._lock:
            self._subscribers = [(a, c) for a, c in self._subscribers if c is not callback]
