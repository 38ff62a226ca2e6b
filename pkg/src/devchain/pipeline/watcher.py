import logging
import threading
from typing import Callable

from devchain.consensus.events import Audience
from devchain.contracts.models import project_key, record_key
from devchain.errors import DevchainException, DuplicateNameVersion, NotFound, SubmitFailure

logger = logging.getLogger(__name__)

REPO_HEAD_EVENT = "RepoHeadUpdated"


class RepoWatcher:
    """Turns RepoHeadUpdated events for one project into pipeline runs.

    Runs are serialized and strictly in head_seq order. A head_seq is handled
    at most once, however often its event is delivered; when a head_seq is
    skipped (missed delivery, restart) the missing heads are read back from
    the on-chain repo records.
    """

    def __init__(
        self,
        client,
        project_id: str,
        on_head: Callable[[int, str], object],
        last_head_seq: int = 0,
        poll_interval: float = 0.5,
    ):
        self.client = client
        self.project_id = project_id
        self.on_head = on_head
        self.last_head_seq = last_head_seq
        self.poll_interval = poll_interval
        self._since = 0
        self._lock = threading.Lock()

    def __repr__(self):
        return f"RepoWatcher({self.project_id}, last_head_seq={self.last_head_seq})"

    def _head_record(self, head_seq: int) -> str:
        return self.client.query_state(record_key(self.project_id, "repo", head_seq))["commit_cid"]

    def _handle(self, head_seq: int, commit_cid: str) -> bool:
        try:
            self.on_head(head_seq, commit_cid)
        except DuplicateNameVersion as e:
            logger.warning(f" --> head {head_seq} of {self.project_id} already built: {e.message}")
        except SubmitFailure:
            # not marked handled; the next poll retries this head
            logger.error(f" --> Build record for head {head_seq} not committed, will retry")
            return False
        except DevchainException as e:
            logger.error(f" --> Pipeline run for head {head_seq} failed: {e}")
        self.last_head_seq = head_seq
        return True

    def catch_up(self, upto: int) -> list[int]:
        """Handle every head after the last handled one, up to and including `upto`."""
        handled = []
        while self.last_head_seq < upto:
            head_seq = self.last_head_seq + 1
            try:
                commit_cid = self._head_record(head_seq)
            except NotFound:
                logger.error(f" --> Repo record {head_seq} of {self.project_id} missing")
                break
            if not self._handle(head_seq, commit_cid):
                break
            handled.append(head_seq)
        return handled

    def poll(self) -> list[int]:
        """One round of event polling; returns the head_seqs handled."""
        with self._lock:
            events = self.client.query_events(self._since, Audience.developers)
            handled = []
            for event in events:
                self._since = max(self._since, event.seq + 1)
                if event.event_name != REPO_HEAD_EVENT or event.project_id != self.project_id:
                    continue
                head_seq = event.payload["head_seq"]
                if head_seq <= self.last_head_seq:
                    continue
                if head_seq > self.last_head_seq + 1:
                    logger.info(f" --> Gap before head {head_seq}, resyncing from chain")
                    handled.extend(self.catch_up(head_seq - 1))
                    if self.last_head_seq != head_seq - 1:
                        break
                if not self._handle(head_seq, event.payload["commit_cid"]):
                    break
                handled.append(head_seq)
            else:
                return handled
            # a head could not be handled; rewind so its event is seen again
            self._since = 0
            return handled

    def resync(self) -> list[int]:
        """Catch up to the project's current head without relying on events."""
        with self._lock:
            project = self.client.query_state(project_key(self.project_id))
            return self.catch_up(project.get("head_seq", 0))

    def run(self, stop: threading.Event):
        logger.info(f" --> Watching {self.project_id} from head {self.last_head_seq}")
        self.resync()
        while not stop.is_set():
            try:
                self.poll()
            except DevchainException as e:
                logger.warning(f" --> Polling events failed: {e}")
            stop.wait(self.poll_interval)


def pipeline_watcher(client, project_id: str, runner, last_head_seq: int = 0, **kwargs):
    """A RepoWatcher that feeds each new head to a PipelineRunner."""

    def on_head(head_seq, commit_cid):
        run = runner.run(project_id, commit_cid, head_seq)
        logger.info(f" --> head {head_seq}: {run.name}@{run.version} {run.status}")
        return run

    return RepoWatcher(client, project_id, on_head, last_head_seq=last_head_seq, **kwargs)
