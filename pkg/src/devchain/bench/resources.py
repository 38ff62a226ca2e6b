import logging
import threading
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import psutil

from devchain.errors import InvalidConfig, ProcessVanished

logger = logging.getLogger(__name__)

MB = 1024 * 1024
DEFAULT_INTERVAL = 1.0


@dataclass
class MonitorTarget:
    """A process to watch. `traffic` returns (bytes_in, bytes_out) from its transport."""

    name: str
    pid: int
    traffic: Callable[[], tuple[int, int]] | None = None


@dataclass(frozen=True)
class ResourceSummary:
    name: str
    cpu_max: float
    cpu_avg: float
    memory_max_mb: float
    memory_avg_mb: float
    traffic_in_mb: float
    traffic_out_mb: float
    disc_write_b: int
    disc_read_b: int
    partial: bool = False

    def to_doc(self) -> dict:
        return {
            "cpu_avg": self.cpu_avg,
            "cpu_max": self.cpu_max,
            "disc_read_b": self.disc_read_b,
            "disc_write_b": self.disc_write_b,
            "memory_avg_mb": self.memory_avg_mb,
            "memory_max_mb": self.memory_max_mb,
            "name": self.name,
            "partial": self.partial,
            "traffic_in_mb": self.traffic_in_mb,
            "traffic_out_mb": self.traffic_out_mb,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "ResourceSummary":
        return cls(**{k: doc[k] for k in cls.__dataclass_fields__ if k in doc})


def _io_bytes(process: psutil.Process) -> tuple[int, int]:
    try:
        io = process.io_counters()
    except (AttributeError, psutil.AccessDenied):
        # not every platform exposes per-process disc counters
        return 0, 0
    return io.write_bytes, io.read_bytes


@dataclass
class _Track:
    target: MonitorTarget
    process: psutil.Process | None
    cpu: list[float] = field(default_factory=list)
    memory: list[int] = field(default_factory=list)
    io_start: tuple[int, int] = (0, 0)
    io_end: tuple[int, int] = (0, 0)
    traffic_start: tuple[int, int] = (0, 0)
    traffic_end: tuple[int, int] = (0, 0)
    vanished: bool = False


class ResourceSampler:
    """Samples CPU and memory of a set of processes at a fixed interval.

    Use as a context manager around a round; `summaries` is filled on exit.
    A process that disappears mid-round keeps the samples taken so far and
    its summary is flagged partial.
    """

    def __init__(self, targets: list[MonitorTarget], interval: float = DEFAULT_INTERVAL):
        names = [t.name for t in targets]
        if len(set(names)) != len(names):
            raise InvalidConfig(f"Process names must be unique: {names}")
        self.targets = targets
        self.interval = interval
        self.summaries: list[ResourceSummary] = []
        self._stop = threading.Event()
        self._thread = None
        self._tracks: list[_Track] = []

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc):
        self.stop()

    def start(self):
        self._tracks = []
        for target in self.targets:
            try:
                process = psutil.Process(target.pid)
                process.cpu_percent(None)
                track = _Track(target, process, io_start=_io_bytes(process))
            except psutil.NoSuchProcess:
                track = _Track(target, None, vanished=True)
            if target.traffic is not None:
                track.traffic_start = target.traffic()
            self._tracks.append(track)
        self._stop.clear()
        self._thread = threading.Thread(target=self._run, name="resource-sampler", daemon=True)
        self._thread.start()

    def _sample(self):
        for track in self._tracks:
            if track.vanished:
                continue
            try:
                with track.process.oneshot():
                    track.cpu.append(track.process.cpu_percent(None))
                    track.memory.append(track.process.memory_info().rss)
                    track.io_end = _io_bytes(track.process)
            except psutil.NoSuchProcess:
                logger.warning(f" --> {track.target.name} (pid {track.target.pid}) vanished")
                track.vanished = True

    def _run(self):
        while not self._stop.wait(self.interval):
            self._sample()

    def stop(self) -> list[ResourceSummary]:
        self._stop.set()
        if self._thread is not None:
            self._thread.join()
            self._thread = None
        self._sample()
        for track in self._tracks:
            if track.target.traffic is not None:
                track.traffic_end = track.target.traffic()
        self.summaries = [_summarize(track) for track in self._tracks]
        return self.summaries

    def raise_for_vanished(self):
        gone = [s.name for s in self.summaries if s.partial]
        if gone:
            raise ProcessVanished(f"Processes vanished during sampling: {', '.join(gone)}")


def _summarize(track: _Track) -> ResourceSummary:
    cpu = np.asarray(track.cpu or [0.0], dtype=np.float64)
    memory = np.asarray(track.memory or [0], dtype=np.float64) / MB
    io_end = track.io_end if track.cpu else track.io_start
    return ResourceSummary(
        name=track.target.name,
        cpu_max=float(cpu.max()),
        cpu_avg=float(cpu.mean()),
        memory_max_mb=float(memory.max()),
        memory_avg_mb=float(memory.mean()),
        traffic_in_mb=(track.traffic_end[0] - track.traffic_start[0]) / MB,
        traffic_out_mb=(track.traffic_end[1] - track.traffic_start[1]) / MB,
        disc_write_b=max(0, io_end[0] - track.io_start[0]),
        disc_read_b=max(0, io_end[1] - track.io_start[1]),
        partial=track.vanished,
    )


def sample_resources(targets: list[MonitorTarget], duration: float, interval=DEFAULT_INTERVAL):
    """Blocking variant: sample for `duration` seconds and summarize."""
    sampler = ResourceSampler(targets, interval)
    sampler.start()
    threading.Event().wait(duration)
    return sampler.stop()
