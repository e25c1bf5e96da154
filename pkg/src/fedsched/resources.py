"""Multi-dimensional resource quantities.

Three dimensions: CPU millicores, memory bytes, whole GPU devices.
The comparison is a component-wise partial order, so vectors expose
``fits_within`` instead of rich comparison operators.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import OvercommitError

KIB = 1024
MIB = 1024 * KIB
GIB = 1024 * MIB
TIB = 1024 * GIB

_MEMORY_RE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*(Ki|Mi|Gi|Ti)?B?\s*$")
_MEMORY_UNITS = {None: 1, "Ki": KIB, "Mi": MIB, "Gi": GIB, "Ti": TIB}

DIMENSIONS = ("cpu_millicores", "memory_bytes", "gpu_count")


def parse_memory(value) -> int:
    """Parse a memory quantity: plain byte count or '<n>GiB'-style string."""
    if isinstance(value, bool):
        raise ValueError(f"not a memory quantity: {value!r}")
    if isinstance(value, int):
        if value < 0:
            raise ValueError(f"memory must be >= 0, got {value}")
        return value
    if isinstance(value, str):
        m = _MEMORY_RE.match(value)
        if not m:
            raise ValueError(f"bad memory quantity: {value!r}")
        return int(float(m.group(1)) * _MEMORY_UNITS[m.group(2)])
    raise ValueError(f"not a memory quantity: {value!r}")


@dataclass(frozen=True)
class ResourceVector:
    cpu_millicores: int = 0
    memory_bytes: int = 0
    gpu_count: int = 0

    def __post_init__(self):
        for dim in DIMENSIONS:
            v = getattr(self, dim)
            if not isinstance(v, int) or isinstance(v, bool):
                raise ValueError(f"{dim} must be an integer, got {v!r}")
            if v < 0:
                raise ValueError(f"{dim} must be >= 0, got {v}")

    @classmethod
    def zero(cls) -> "ResourceVector":
        return cls(0, 0, 0)

    @classmethod
    def of(cls, cpu: int = 0, memory=0, gpu: int = 0) -> "ResourceVector":
        return cls(cpu, parse_memory(memory), gpu)

    def __add__(self, other: "ResourceVector") -> "ResourceVector":
        return ResourceVector(
            self.cpu_millicores + other.cpu_millicores,
            self.memory_bytes + other.memory_bytes,
            self.gpu_count + other.gpu_count,
        )

    def subtract(self, other: "ResourceVector") -> "ResourceVector":
        """Component-wise difference; going negative is an accounting bug."""
        diff = (
            self.cpu_millicores - other.cpu_millicores,
            self.memory_bytes - other.memory_bytes,
            self.gpu_count - other.gpu_count,
        )
        if any(v < 0 for v in diff):
            raise OvercommitError(f"resource underflow: {self} - {other}")
        return ResourceVector(*diff)

    def fits_within(self, other: "ResourceVector") -> bool:
        """Partial order: every component of self <= the matching one of other."""
        return (
            self.cpu_millicores <= other.cpu_millicores
            and self.memory_bytes <= other.memory_bytes
            and self.gpu_count <= other.gpu_count
        )

    def is_zero(self) -> bool:
        return self == ResourceVector.zero()

    def as_tuple(self) -> tuple:
        return (self.cpu_millicores, self.memory_bytes, self.gpu_count)

    def as_list(self) -> list:
        return [self.cpu_millicores, self.memory_bytes, self.gpu_count]


def sum_vectors(vectors) -> ResourceVector:
    total = ResourceVector.zero()
    for v in vectors:
        total = total + v
    return total
