"""Event logging and performance metrics for simulation runs.

A run produces a MetricsLog of raw timestamped records; the functions here
derive client delays (request to CS entry), synchronization delays (one CS
exit to the next CS entry) and summary statistics from it. All records carry
a trial index because unloaded scenarios merge many independent trials, each
with its own time axis starting at zero.
"""

import statistics
from collections import Counter, defaultdict
from dataclasses import dataclass, field


class LogIntegrityError(RuntimeError):
    """The event log contradicts its own bookkeeping rules."""


class MutualExclusionError(RuntimeError):
    """Two critical-section sessions overlap in time."""


@dataclass
class MetricsLog:
    """Raw request/enter/exit records plus per-kind message counters.

    Each record is a ``(trial, node, time_ms)`` tuple, appended in dispatch
    order. ``messages_sent`` counts protocol messages at their send instant,
    keyed by message kind; internal engine events are never counted.
    """

    requests: list = field(default_factory=list)
    enters: list = field(default_factory=list)
    exits: list = field(default_factory=list)
    messages_sent: Counter = field(default_factory=Counter)

    def record_request(self, trial, node, t):
        self.requests.append((trial, node, t))

    def record_enter(self, trial, node, t):
        self.enters.append((trial, node, t))

    def record_exit(self, trial, node, t):
        self.exits.append((trial, node, t))

    def count_message(self, kind):
        self.messages_sent[kind] += 1

    def merge(self, other):
        """Fold another log's records into this one (pure append)."""
        self.requests.extend(other.requests)
        self.enters.extend(other.enters)
        self.exits.extend(other.exits)
        self.messages_sent.update(other.messages_sent)

    @property
    def enter_count(self):
        return len(self.enters)

    @property
    def exit_count(self):
        return len(self.exits)

    def messages_per_entry(self):
        if not self.enters:
            return 0.0
        return sum(self.messages_sent.values()) / len(self.enters)


@dataclass(frozen=True)
class Session:
    """One critical-section occupancy; ``exit`` is None while still open."""

    trial: int
    node: int
    enter: float
    exit: float | None


@dataclass(frozen=True)
class Violation:
    """First pair of overlapping sessions found by check_mutual_exclusion."""

    first: Session
    second: Session

    def __str__(self):
        return (
            f"mutual exclusion violated in trial {self.first.trial}: "
            f"node {self.first.node} in CS [{self.first.enter}, {self.first.exit}] "
            f"overlaps node {self.second.node} entering at {self.second.enter}"
        )


@dataclass(frozen=True)
class SummaryStats:
    """count/mean/sample-stddev/min/max of a sample set.

    stddev uses the n-1 denominator and is None for fewer than two samples;
    an empty sample set yields count 0 with every other field None.
    """

    count: int
    mean: float | None
    stddev: float | None
    min: float | None
    max: float | None


def _sessions(log):
    """Pair the k-th enter with the k-th exit per (trial, node).

    Returns sessions grouped by trial, each group sorted by enter time.
    The final session of a node may be open (exit None) when a run stops
    while that node is still inside the critical section.
    """
    enters = defaultdict(list)
    exits = defaultdict(list)
    for trial, node, t in log.enters:
        enters[(trial, node)].append(t)
    for trial, node, t in log.exits:
        exits[(trial, node)].append(t)

    by_trial = defaultdict(list)
    for key, enter_times in enters.items():
        trial, node = key
        exit_times = exits.get(key, [])
        if len(exit_times) > len(enter_times):
            raise LogIntegrityError(
                f"node {node} in trial {trial} has more exits than enters"
            )
        for k, enter_t in enumerate(enter_times):
            exit_t = exit_times[k] if k < len(exit_times) else None
            if exit_t is not None and exit_t < enter_t:
                raise LogIntegrityError(
                    f"node {node} in trial {trial} exits at {exit_t} "
                    f"before entering at {enter_t}"
                )
            by_trial[trial].append(Session(trial, node, enter_t, exit_t))
    for sessions in by_trial.values():
        sessions.sort(key=lambda s: s.enter)
    return by_trial


def client_delay_samples(log):
    """(trial, node, delay) for each served request, in request order."""
    enters = defaultdict(list)
    for trial, node, t in log.enters:
        enters[(trial, node)].append(t)
    requests = defaultdict(int)
    for key, ts in enters.items():
        if len(ts) > sum(1 for tr, nd, _ in log.requests if (tr, nd) == key):
            raise LogIntegrityError(
                f"node {key[1]} in trial {key[0]} entered the CS more often "
                "than it requested it"
            )

    out = []
    for trial, node, req_t in log.requests:
        key = (trial, node)
        k = requests[key]
        requests[key] += 1
        node_enters = enters.get(key, [])
        if k < len(node_enters):
            enter_t = node_enters[k]
            if enter_t < req_t:
                raise LogIntegrityError(
                    f"node {node} in trial {trial} entered at {enter_t} "
                    f"before requesting at {req_t}"
                )
            out.append((trial, node, enter_t - req_t))
    return out


def client_delays(log):
    """Request-to-entry delay of each served request, in request order."""
    return [delay for _, _, delay in client_delay_samples(log)]


def sync_delay_samples(log):
    """(trial, node, delay) between consecutive CS sessions, per trial.

    The node attributed to a sample is the one entering; the first session
    of a trial contributes no sample. Overlapping sessions raise
    MutualExclusionError since a negative gap is a safety breach.
    """
    out = []
    for trial in sorted(_sessions(log)):
        sessions = _sessions(log)[trial]
        for prev, cur in zip(sessions, sessions[1:]):
            if prev.exit is None or cur.enter < prev.exit:
                raise MutualExclusionError(str(Violation(prev, cur)))
            out.append((trial, cur.node, cur.enter - prev.exit))
    return out


def sync_delays(log):
    return [delay for _, _, delay in sync_delay_samples(log)]


def summarize(samples):
    """Summary statistics of a sample list; safe on empty input."""
    if not samples:
        return SummaryStats(0, None, None, None, None)
    mean = statistics.fmean(samples)
    stddev = statistics.stdev(samples) if len(samples) > 1 else None
    return SummaryStats(len(samples), mean, stddev, min(samples), max(samples))


def check_mutual_exclusion(log):
    """Scan sessions per trial for overlap; returns a Violation or None.

    A violation is returned, never raised, so the check doubles as a test
    oracle. Sessions touching at a single instant do not overlap.
    """
    for trial, sessions in _sessions(log).items():
        latest = None
        for session in sessions:
            if latest is not None:
                open_ended = latest.exit is None
                if open_ended or session.enter < latest.exit:
                    return Violation(latest, session)
            if latest is None or latest.exit is None:
                latest = session
            elif session.exit is None or session.exit > latest.exit:
                latest = session
    return None
