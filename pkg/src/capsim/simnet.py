"""Synchronous machine model with exact cost and memory ledgers.

P processors advance through globally ordered phases.  Within a phase each
processor accumulates its own contribution (flops in a compute phase,
messages and words in a communicate phase); when the phase ends, the maximum
over processors joins the critical-path ledger and the sum joins the total
ledger.  Sending a message of w words is modeled as costing alpha + beta*w,
computation costs gamma per flop, so a finished run has

    modeled_time = alpha * messages_critical
                 + beta * words_critical
                 + gamma * flops_critical.

Two communication primitives with deliberately different counting rules:

* exchange: a seven-way all-to-all among a group.  Every member is charged
  its six sends and its six receives (12 messages; words likewise count
  both directions), the tally used by the recursive algorithm's operand
  redistribution.
* send: a point-to-point transfer charged to the sender alone (one message,
  w words).  Disjoint pairs communicating in the same phase therefore count
  once on the critical path, the tally used by the torus baselines.

Memory is tracked per processor against the capacity M: alloc/free model
the algorithm's matrix shards and operand buffers, and the high-water mark
per processor is the reported peak.  Implementation scratch of the simulator
itself is not part of the model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

__all__ = [
    "MachineParams",
    "SimMachine",
    "CostReport",
    "PhaseError",
    "OutOfSimulatedMemory",
    "CSV_FIELDS",
    "csv_header",
    "csv_row",
]


class PhaseError(Exception):
    """Raised when phase bracketing or group structure is violated."""


class OutOfSimulatedMemory(Exception):
    """Raised when a modeled allocation would exceed the per-processor M."""


@dataclass(frozen=True)
class MachineParams:
    """Machine description: processor count, per-processor memory in words,
    and the latency/bandwidth/flop rates of the time model."""

    P: int
    M: int | None = None
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if self.P < 1:
            raise ValueError("P must be at least 1")
        if self.M is not None and self.M < 1:
            raise ValueError("M must be positive when given")
        for name in ("alpha", "beta", "gamma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


@dataclass(frozen=True)
class CostReport:
    """Ledger of a finished run; all counters are exact integers."""

    flops_critical: int
    flops_total: int
    words_critical: int
    words_total: int
    messages_critical: int
    messages_total: int
    peak_memory_words: int
    modeled_time: float

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)


CSV_FIELDS = ("algorithm", "n", "P", "M", "ell", "schedule", "flops_crit",
              "words_crit", "msgs_crit", "peak_mem", "modeled_time",
              "effective_gflops")


def csv_header() -> str:
    return ",".join(CSV_FIELDS)


def csv_row(report: CostReport, *, algorithm: str, n: int, P: int,
            M: int | None, ell: int, schedule: str,
            effective_gflops: float) -> str:
    """One delimited line per run, fields in CSV_FIELDS order."""
    vals = {
        "algorithm": algorithm,
        "n": n,
        "P": P,
        "M": "" if M is None else M,
        "ell": ell,
        "schedule": schedule,
        "flops_crit": report.flops_critical,
        "words_crit": report.words_critical,
        "msgs_crit": report.messages_critical,
        "peak_mem": report.peak_memory_words,
        "modeled_time": repr(report.modeled_time),
        "effective_gflops": repr(effective_gflops),
    }
    return ",".join(str(vals[f]) for f in CSV_FIELDS)


class _Phase:
    __slots__ = ("kind", "flops", "messages", "words")

    def __init__(self, kind):
        self.kind = kind
        self.flops = {}
        self.messages = {}
        self.words = {}


class SimMachine:
    """Cost, memory and phase bookkeeping for one simulated run."""

    def __init__(self, params: MachineParams):
        self.params = params
        P = params.P
        self._usage = [0] * P
        self._peak = [0] * P
        self._phase = None
        self.flops_critical = 0
        self.flops_total = 0
        self.words_critical = 0
        self.words_total = 0
        self.messages_critical = 0
        self.messages_total = 0

    # -- phases ---------------------------------------------------------

    def begin_phase(self, kind: str):
        if self._phase is not None:
            raise PhaseError("phase already open")
        if kind not in ("compute", "communicate"):
            raise PhaseError(f"unknown phase kind {kind!r}")
        self._phase = _Phase(kind)

    def end_phase(self):
        if self._phase is None:
            raise PhaseError("no open phase")
        ph, self._phase = self._phase, None
        if ph.kind == "compute":
            if ph.flops:
                self.flops_critical += max(ph.flops.values())
                self.flops_total += sum(ph.flops.values())
        else:
            if ph.messages:
                self.messages_critical += max(ph.messages.values())
                self.messages_total += sum(ph.messages.values())
            if ph.words:
                self.words_critical += max(ph.words.values())
                self.words_total += sum(ph.words.values())

    def _require(self, kind):
        if self._phase is None or self._phase.kind != kind:
            raise PhaseError(f"operation requires an open {kind} phase")
        return self._phase

    def _check_proc(self, p):
        if not (0 <= p < self.params.P):
            raise ValueError(f"processor id {p} out of range")

    # -- contributions --------------------------------------------------

    def add_flops(self, proc: int, count: int):
        ph = self._require("compute")
        self._check_proc(proc)
        if count < 0:
            raise ValueError("flop count must be nonnegative")
        ph.flops[proc] = ph.flops.get(proc, 0) + int(count)

    def exchange(self, group, payload_words):
        """Seven-way all-to-all; payload_words is the per-ordered-pair word
        count, either one integer for all pairs or a mapping (src, dst) ->
        words.  Each member is charged 6 sends plus 6 receives and the words
        it sent plus the words it received."""
        ph = self._require("communicate")
        group = list(group)
        if len(group) != 7 or len(set(group)) != 7:
            raise PhaseError("exchange group must be 7 distinct processors")
        for p in group:
            self._check_proc(p)

        def pair_words(src, dst):
            if isinstance(payload_words, dict):
                w = payload_words[(src, dst)]
            else:
                w = payload_words
            if w < 0:
                raise ValueError("payload must be nonnegative")
            return int(w)

        sent = {p: 0 for p in group}
        received = {p: 0 for p in group}
        for src in group:
            for dst in group:
                if src == dst:
                    continue
                w = pair_words(src, dst)
                sent[src] += w
                received[dst] += w
        if self.params.M is not None:
            # Receive buffers reuse the space of the shipped-out payload;
            # only net growth counts against the capacity.
            for p in group:
                grow = received[p] - sent[p]
                if grow > 0 and self._usage[p] + grow > self.params.M:
                    raise OutOfSimulatedMemory(
                        f"processor {p}: receive volume exceeds remaining memory")
        for p in group:
            ph.messages[p] = ph.messages.get(p, 0) + 12
            ph.words[p] = ph.words.get(p, 0) + sent[p] + received[p]

    def send(self, src: int, dst: int, words: int):
        """Point-to-point transfer charged to the sender only."""
        ph = self._require("communicate")
        self._check_proc(src)
        self._check_proc(dst)
        if src == dst:
            raise ValueError("src and dst must differ")
        if words < 0:
            raise ValueError("words must be nonnegative")
        ph.messages[src] = ph.messages.get(src, 0) + 1
        ph.words[src] = ph.words.get(src, 0) + int(words)

    # -- memory ---------------------------------------------------------

    def alloc(self, proc: int, words: int):
        self._check_proc(proc)
        if words < 0:
            raise ValueError("words must be nonnegative")
        new = self._usage[proc] + int(words)
        if self.params.M is not None and new > self.params.M:
            raise OutOfSimulatedMemory(
                f"processor {proc}: {new} words exceeds capacity {self.params.M}")
        self._usage[proc] = new
        if new > self._peak[proc]:
            self._peak[proc] = new

    def free(self, proc: int, words: int):
        self._check_proc(proc)
        if words < 0:
            raise ValueError("words must be nonnegative")
        if int(words) > self._usage[proc]:
            raise ValueError(f"processor {proc}: freeing more than allocated")
        self._usage[proc] -= int(words)

    def usage(self, proc: int) -> int:
        self._check_proc(proc)
        return self._usage[proc]

    def peak(self, proc: int) -> int:
        self._check_proc(proc)
        return self._peak[proc]

    # -- results --------------------------------------------------------

    def report(self) -> CostReport:
        if self._phase is not None:
            raise PhaseError("cannot report with an open phase")
        t = (self.params.alpha * self.messages_critical
             + self.params.beta * self.words_critical
             + self.params.gamma * self.flops_critical)
        return CostReport(
            flops_critical=self.flops_critical,
            flops_total=self.flops_total,
            words_critical=self.words_critical,
            words_total=self.words_total,
            messages_critical=self.messages_critical,
            messages_total=self.messages_total,
            peak_memory_words=max(self._peak),
            modeled_time=t,
        )
