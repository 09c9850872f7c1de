"""CPU topology discovery and thread placement patterns.

Topologies come either from the live system (sysfs) or from a fixture
file with one line per logical cpu: ``<logical_id> <core_id> [offline]``.
Placement patterns map a thread count onto logical cpus: compact,
scatter, seeded random, same-core, or an explicit list.
"""

from __future__ import annotations

import os
import random
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import PlacementError, TopologyError


@dataclass(frozen=True)
class CoreGroup:
    core_id: int
    hw_threads: tuple[int, ...]


@dataclass(frozen=True)
class CpuTopology:
    cores: tuple[CoreGroup, ...]

    def __post_init__(self):
        seen: set[int] = set()
        for core in self.cores:
            if not core.hw_threads:
                raise TopologyError(f"core {core.core_id} has no hw threads")
            for cpu in core.hw_threads:
                if cpu in seen:
                    raise TopologyError(f"logical cpu {cpu} appears twice")
                seen.add(cpu)
        if not self.cores:
            raise TopologyError("topology has no cores")

    @property
    def core_count(self) -> int:
        return len(self.cores)

    @property
    def logical_cpus(self) -> tuple[int, ...]:
        return tuple(cpu for core in self.cores for cpu in core.hw_threads)

    @property
    def total_threads(self) -> int:
        return len(self.logical_cpus)

    def core_index_of(self, cpu: int) -> int:
        for i, core in enumerate(self.cores):
            if cpu in core.hw_threads:
                return i
        raise TopologyError(f"logical cpu {cpu} not in topology")


@dataclass(frozen=True)
class PlacementPattern:
    variant: str  # compact | scatter | random | samecore | explicit
    seed: int | None = None
    cpus: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.variant not in {"compact", "scatter", "random", "samecore", "explicit"}:
            raise PlacementError(f"unknown placement variant {self.variant!r}")
        if self.variant == "random" and self.seed is None:
            raise PlacementError("random placement requires a seed")
        if self.variant == "explicit" and not self.cpus:
            raise PlacementError("explicit placement requires cpu ids")

    @classmethod
    def compact(cls) -> "PlacementPattern":
        return cls("compact")

    @classmethod
    def scatter(cls) -> "PlacementPattern":
        return cls("scatter")

    @classmethod
    def random_order(cls, seed: int) -> "PlacementPattern":
        return cls("random", seed=seed)

    @classmethod
    def samecore(cls) -> "PlacementPattern":
        return cls("samecore")

    @classmethod
    def explicit(cls, cpus: Iterable[int]) -> "PlacementPattern":
        return cls("explicit", cpus=tuple(cpus))

    @classmethod
    def parse(cls, text: str) -> "PlacementPattern":
        """Parse CLI syntax: compact | scatter | random:<seed> | samecore."""
        if text == "compact":
            return cls.compact()
        if text == "scatter":
            return cls.scatter()
        if text == "samecore":
            return cls.samecore()
        m = re.fullmatch(r"random:(-?\d+)", text)
        if m:
            return cls.random_order(int(m.group(1)))
        raise PlacementError(f"cannot parse placement {text!r}")

    @property
    def label(self) -> str:
        if self.variant == "random":
            return f"random:{self.seed}"
        if self.variant == "explicit":
            return "explicit:" + ",".join(str(c) for c in self.cpus or ())
        return self.variant


def parse_topology_fixture(text: str) -> CpuTopology:
    """Parse the fixture format: one ``<logical_id> <core_id> [offline]`` per line."""
    by_core: dict[int, list[int]] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3) or (len(parts) == 3 and parts[2] != "offline"):
            raise TopologyError(f"unparsable fixture entry at line {line_no}: {raw!r}")
        try:
            logical_id, core_id = int(parts[0]), int(parts[1])
        except ValueError:
            raise TopologyError(
                f"unparsable fixture entry at line {line_no}: {raw!r}"
            ) from None
        if len(parts) == 3:
            continue  # offline cpus are excluded
        by_core.setdefault(core_id, []).append(logical_id)

    if not by_core:
        raise TopologyError("fixture describes no online cpus")
    cores = tuple(
        CoreGroup(core_id=cid, hw_threads=tuple(sorted(threads)))
        for cid, threads in sorted(by_core.items())
    )
    return CpuTopology(cores=cores)


def _discover_live(sysfs_root: str = "/sys/devices/system/cpu") -> CpuTopology:
    root = Path(sysfs_root)
    by_core: dict[int, list[int]] = {}
    for cpu_dir in sorted(root.glob("cpu[0-9]*"), key=lambda p: int(p.name[3:])):
        cpu = int(cpu_dir.name[3:])
        online = cpu_dir / "online"
        if online.exists() and online.read_text().strip() == "0":
            continue
        core_id_file = cpu_dir / "topology" / "core_id"
        if not core_id_file.exists():
            continue
        core_id = int(core_id_file.read_text().strip())
        by_core.setdefault(core_id, []).append(cpu)
    if not by_core:
        raise TopologyError(f"no online cpus found under {sysfs_root}")
    cores = tuple(
        CoreGroup(core_id=cid, hw_threads=tuple(sorted(threads)))
        for cid, threads in sorted(by_core.items())
    )
    return CpuTopology(cores=cores)


def discover_topology(source: str | Path | None = None) -> CpuTopology:
    """Enumerate the topology from the live system or a fixture file."""
    if source is None or source == "live":
        return _discover_live()
    return parse_topology_fixture(Path(source).read_text())


def assign_threads(
    topology: CpuTopology, n: int, pattern: PlacementPattern
) -> list[int]:
    """Map ``n`` threads onto logical cpus according to ``pattern``."""
    total = topology.total_threads
    if n < 1 or n > total:
        raise PlacementError(f"thread count {n} out of range 1..{total}")

    if pattern.variant == "compact":
        flat = list(topology.logical_cpus)
        return flat[:n]

    if pattern.variant == "scatter":
        C = topology.core_count
        used = [0] * C
        out = []
        for i in range(n):
            core_idx = (i * C) // n if n <= C else i % C
            slot = used[core_idx]
            threads = topology.cores[core_idx].hw_threads
            if slot >= len(threads):
                raise PlacementError(
                    f"core {topology.cores[core_idx].core_id} has no free hw thread"
                )
            out.append(threads[slot])
            used[core_idx] += 1
        return out

    if pattern.variant == "random":
        rng = random.Random(pattern.seed)
        order = list(range(topology.core_count))
        rng.shuffle(order)
        out = []
        round_no = 0
        while len(out) < n:
            progressed = False
            for core_idx in order:
                if len(out) == n:
                    break
                threads = topology.cores[core_idx].hw_threads
                if round_no < len(threads):
                    out.append(threads[round_no])
                    progressed = True
            if not progressed:
                raise PlacementError("random placement exhausted hw threads")
            round_no += 1
        return out

    if pattern.variant == "samecore":
        threads = topology.cores[0].hw_threads
        if n > len(threads):
            raise PlacementError(
                f"samecore placement supports at most {len(threads)} threads"
            )
        return list(threads[:n])

    # explicit
    assert pattern.cpus is not None
    known = set(topology.logical_cpus)
    for cpu in pattern.cpus:
        if cpu not in known:
            raise PlacementError(f"explicit cpu {cpu} not present in topology")
    if len(pattern.cpus) < n:
        raise PlacementError("explicit placement has fewer cpus than threads")
    return list(pattern.cpus[:n])


def pin_current_thread(cpu: int) -> None:
    """Pin the calling thread to one logical cpu; failure is a hard error."""
    try:
        os.sched_setaffinity(0, {cpu})
    except (OSError, AttributeError) as exc:
        raise PlacementError(f"cannot pin to cpu {cpu}: {exc}") from exc
