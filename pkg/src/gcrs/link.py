"""Long-distance links between gateways.

A message is framed at the sending gateway, spends ``delta_ticks`` on the
link, and is decoded at the receiving gateway. Links are lossless and FIFO.
Terrestrial and satellite links differ only in their delay.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Tuple

from .wire import WireMessage, encode_frame


class RoutingError(RuntimeError):
    pass


@dataclass(frozen=True)
class LinkConfig:
    link_id: str
    endpoint_a: int
    endpoint_b: int
    delta_ticks: int
    # reserved for loss/corruption injection; always 0.0 in this version
    loss_probability: float = 0.0

    def __post_init__(self):
        if self.delta_ticks < 0:
            raise ValueError(f"link {self.link_id}: negative delay")
        if self.endpoint_a == self.endpoint_b:
            raise ValueError(f"link {self.link_id}: endpoints must differ")

    def connects(self, a: int, b: int) -> bool:
        return {a, b} == {self.endpoint_a, self.endpoint_b}


@dataclass
class Link:
    config: LinkConfig
    in_flight: Deque[Tuple[int, bytes]] = field(default_factory=deque)

    @property
    def delta(self) -> int:
        return self.config.delta_ticks

    def transmit(self, m: WireMessage, now: int) -> int:
        """Frame ``m`` and put it on the link. Returns the delivery tick."""
        if not self.config.connects(m.src, m.dst):
            raise RoutingError(
                f"link {self.config.link_id} does not join {m.src} and {m.dst}")
        at = now + self.config.delta_ticks
        self.in_flight.append((at, encode_frame(m)))
        return at

    def deliver(self, now: int) -> bytes:
        """Pop the oldest frame; it must be due exactly at ``now``."""
        at, frame = self.in_flight.popleft()
        if at != now:
            raise RuntimeError(f"link {self.config.link_id}: frame due at {at} popped at {now}")
        return frame
