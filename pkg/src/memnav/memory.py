"""Episodic memory: a bounded FIFO of (position, description) nodes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class MemoryNode:
    position: tuple[float, float]
    description: str
    step: int

    def __post_init__(self) -> None:
        if not self.description:
            raise ValueError("memory node description must be non-empty")
        object.__setattr__(self, "position", (float(self.position[0]), float(self.position[1])))


@dataclass
class MemoryBuffer:
    """First-in-first-out queue of at most `capacity` memory nodes.

    Capacity 0 keeps the buffer permanently empty, which disables
    memory-based decision correction.
    """

    capacity: int = 10
    nodes: list[MemoryNode] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.capacity < 0:
            raise ValueError("capacity must be >= 0")
        if len(self.nodes) > self.capacity:
            raise ValueError("initial node list exceeds capacity")

    def __len__(self) -> int:
        return len(self.nodes)

    def push(self, node: MemoryNode) -> "MemoryBuffer":
        """Append a node, evicting the oldest when the buffer is full.

        Steps must be strictly increasing across pushes.
        """
        if self.nodes and node.step <= self.nodes[-1].step:
            raise ValueError(
                f"node step {node.step} does not exceed last stored step {self.nodes[-1].step}"
            )
        if self.capacity == 0:
            return self
        self.nodes.append(node)
        if len(self.nodes) > self.capacity:
            del self.nodes[0]
        return self

    def furthest_hit(self, hit_indices: set[int], p_current: tuple[float, float]) -> MemoryNode:
        """Among the given node indices, the node furthest from p_current.

        Ties go to the oldest node, maximizing the temporal novelty of the
        retrieved description.
        """
        if not hit_indices:
            raise ValueError("hit_indices must be non-empty")
        bad = [i for i in hit_indices if not (0 <= i < len(self.nodes))]
        if bad:
            raise IndexError(f"hit indices {bad} out of range for buffer of {len(self.nodes)}")
        return max(
            (self.nodes[i] for i in sorted(hit_indices)),
            key=lambda n: (
                math.hypot(n.position[0] - p_current[0], n.position[1] - p_current[1]),
                -n.step,
            ),
        )
