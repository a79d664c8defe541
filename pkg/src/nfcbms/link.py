"""Reader/tag link simulation: near-field power model, device state
machines, and the command set they speak.

A LinkBus owns one reader and any number of tag placements. Every exchange
runs through transceive(), which also appends to the command trace used for
reporting. Placement distances may change over virtual time via scheduled
moves; losing the field resets the affected tag and, when it was the
selected one, the reader session as well.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Union

from .auth import UID_BYTES, OriginalitySignature, TagUid
from .clock import SimClock, ms_to_us

log = logging.getLogger(__name__)

DEFAULT_D_MAX_CM = 5.4  # largest antenna separation the harvested supply tolerates
DEFAULT_COUPLING_EXPONENT = 3.0
BLOCK_BYTES = 4
DEFAULT_BLOCK_COUNT = 8


@dataclass
class FieldModel:
    """Near-field coupling between the reader antenna and one tag antenna."""

    distance_cm: float
    d_max_cm: float = DEFAULT_D_MAX_CM
    coupling_exponent: float = DEFAULT_COUPLING_EXPONENT

    def __post_init__(self):
        if self.distance_cm < 0:
            raise ValueError("distance cannot be negative")
        if self.d_max_cm <= 0:
            raise ValueError("power threshold distance must be positive")

    def field_strength(self, distance_cm: float | None = None) -> float:
        """Normalized coupling strength in (0, 1]: 1 at contact, strictly
        decreasing with distance (loop-antenna style falloff)."""
        d = self.distance_cm if distance_cm is None else distance_cm
        if d < 0:
            raise ValueError("distance cannot be negative")
        return (1.0 + (d / self.d_max_cm) ** 2) ** (-self.coupling_exponent / 2.0)

    def powered(self, distance_cm: float | None = None) -> bool:
        """True while harvested energy can run the tag; boundary inclusive."""
        d = self.distance_cm if distance_cm is None else distance_cm
        if d < 0:
            raise ValueError("distance cannot be negative")
        return d <= self.d_max_cm


class TagState(Enum):
    UNPOWERED = "Unpowered"
    IDLE = "Idle"
    SELECTED = "Selected"
    CONFIGURED = "Configured"


class ReaderState(Enum):
    IDLE = "Idle"
    DISCOVERING = "Discovering"
    CONNECTED = "Connected"


class LinkStatus(Enum):
    OK = "Ok"
    NO_TAG = "NoTag"
    NOT_POWERED = "NotPowered"
    NOT_SELECTED = "NotSelected"
    PROTECTED = "Protected"
    BAD_INDEX = "BadIndex"


@dataclass(frozen=True)
class LinkResponse:
    status: LinkStatus
    payload: bytes = b""

    def __post_init__(self):
        if self.status is not LinkStatus.OK and self.payload:
            raise ValueError("only Ok responses carry a payload")

    @property
    def ok(self) -> bool:
        return self.status is LinkStatus.OK


# Reader/writer-mode command set.


@dataclass(frozen=True)
class Inventory:
    pass


@dataclass(frozen=True)
class Select:
    uid: TagUid


@dataclass(frozen=True)
class ReadBlock:
    index: int


@dataclass(frozen=True)
class WriteBlock:
    index: int
    data: bytes

    def __post_init__(self):
        if len(self.data) != BLOCK_BYTES:
            raise ValueError(f"block writes carry exactly {BLOCK_BYTES} bytes")


@dataclass(frozen=True)
class ReadSignature:
    pass


@dataclass(frozen=True)
class GetEnergyStatus:
    pass


@dataclass(frozen=True)
class ConfigureTag:
    pass


@dataclass(frozen=True)
class ReadSensor:
    pass


LinkCommand = Union[
    Inventory,
    Select,
    ReadBlock,
    WriteBlock,
    ReadSignature,
    GetEnergyStatus,
    ConfigureTag,
    ReadSensor,
]


def _describe(cmd: LinkCommand) -> str:
    if isinstance(cmd, Select):
        return f"Select({cmd.uid.hex})"
    if isinstance(cmd, ReadBlock):
        return f"ReadBlock({cmd.index})"
    if isinstance(cmd, WriteBlock):
        return f"WriteBlock({cmd.index})"
    return type(cmd).__name__


class LinkCommandFailed(Exception):
    """A link exchange returned a status the caller cannot proceed past."""

    def __init__(self, status: LinkStatus, command: str):
        super().__init__(f"{command} -> {status.value}")
        self.status = status
        self.command = command


class NfcTagDevice:
    """Passive tag: identifier, factory signature in a read-only region,
    small block-addressed user memory, and an optional pass-through sensor.

    No command writes the signature region; the attribute is only ever
    assigned at provisioning time, outside the link.
    """

    def __init__(
        self,
        uid: TagUid,
        signature: OriginalitySignature,
        blocks=None,
        protected_blocks=(),
        attached_sensor=None,
    ):
        self.uid = uid
        self.signature = signature
        if blocks is None:
            blocks = [bytes(BLOCK_BYTES) for _ in range(DEFAULT_BLOCK_COUNT)]
        self.blocks = [bytearray(b) for b in blocks]
        for block in self.blocks:
            if len(block) != BLOCK_BYTES:
                raise ValueError(f"user memory blocks are {BLOCK_BYTES} bytes")
        self.protected_blocks = frozenset(protected_blocks)
        self.attached_sensor = attached_sensor
        self.state = TagState.UNPOWERED

    def power_down(self) -> None:
        self.state = TagState.UNPOWERED
        if self.attached_sensor is not None:
            self.attached_sensor.power_down()  # harvested supply is gone


class NfcReaderDevice:
    """Active side of the link."""

    def __init__(self):
        self.state = ReaderState.IDLE
        self.selected_uid: Optional[TagUid] = None

    def reset(self) -> None:
        self.state = ReaderState.IDLE
        self.selected_uid = None


@dataclass(frozen=True)
class TraceEntry:
    t_ms: float
    command: str
    status: str
    payload_len: int

    def to_dict(self) -> dict:
        return {
            "t_ms": self.t_ms,
            "command": self.command,
            "status": self.status,
            "payload_len": self.payload_len,
        }


@dataclass
class _Placement:
    tag: NfcTagDevice
    field: FieldModel


class LinkBus:
    """One reader, its field, and the tags within reach."""

    def __init__(self, clock: SimClock | None = None):
        self.clock = clock if clock is not None else SimClock()
        self.reader = NfcReaderDevice()
        self.trace: list[TraceEntry] = []
        self.fault_hook: Optional[Callable[[LinkCommand, bytes], bytes]] = None
        self.on_field_loss: Optional[Callable[[TagUid], None]] = None
        self._placements: dict[TagUid, _Placement] = {}
        self._moves: list[tuple[int, TagUid, float]] = []
        # set when the selected tag drops out of the field, so the next data
        # command can report the loss as NotPowered instead of NotSelected
        self._session_lost_uid: Optional[TagUid] = None

    # -- topology ---------------------------------------------------------

    def attach_tag(
        self,
        tag: NfcTagDevice,
        distance_cm: float,
        d_max_cm: float = DEFAULT_D_MAX_CM,
        coupling_exponent: float = DEFAULT_COUPLING_EXPONENT,
    ) -> None:
        if tag.uid in self._placements:
            raise ValueError(f"duplicate tag uid {tag.uid.hex}")
        self._placements[tag.uid] = _Placement(
            tag, FieldModel(distance_cm, d_max_cm, coupling_exponent)
        )

    def detach_tag(self, uid: TagUid) -> NfcTagDevice:
        placement = self._placements.pop(uid)
        if self.reader.selected_uid == uid:
            self.reader.reset()
        return placement.tag

    @property
    def placements(self) -> dict[TagUid, _Placement]:
        return dict(self._placements)

    def placement(self, uid: TagUid) -> _Placement:
        try:
            return self._placements[uid]
        except KeyError:
            raise KeyError(f"no tag {uid.hex} on this bus") from None

    def field(self, uid: TagUid) -> FieldModel:
        return self.placement(uid).field

    def tag(self, uid: TagUid) -> NfcTagDevice:
        return self.placement(uid).tag

    # -- geometry over time -----------------------------------------------

    def set_distance(self, uid: TagUid, distance_cm: float) -> None:
        placement = self.placement(uid)
        placement.field.distance_cm = distance_cm
        if not placement.field.powered():
            self._field_loss(uid)

    def schedule_move(self, at_ms: float, uid: TagUid, distance_cm: float) -> None:
        self.placement(uid)
        self._moves.append((ms_to_us(at_ms), uid, distance_cm))
        self._moves.sort(key=lambda move: move[0])

    def sync(self) -> None:
        """Apply scheduled placement moves that are due at the current time."""
        while self._moves and self._moves[0][0] <= self.clock.now_us:
            _, uid, distance_cm = self._moves.pop(0)
            self.set_distance(uid, distance_cm)

    def _field_loss(self, uid: TagUid) -> None:
        placement = self._placements[uid]
        had_session = placement.tag.state is not TagState.UNPOWERED
        placement.tag.power_down()
        if self.reader.selected_uid == uid:
            self._session_lost_uid = uid
            self.reader.reset()
        if had_session and self.on_field_loss is not None:
            log.debug("field loss on %s", uid.hex)
            self.on_field_loss(uid)

    def powered_uids(self) -> list[TagUid]:
        return sorted(uid for uid, pl in self._placements.items() if pl.field.powered())

    # -- exchanges ----------------------------------------------------------

    def discovery_loop(self) -> list[TagUid]:
        """Inventory every powered tag, in ascending uid order. Newly powered
        tags wake from Unpowered to Idle; the reader ends back in Idle."""
        self.sync()
        if self.reader.state is ReaderState.CONNECTED:
            self._deselect_current()
        self.reader.state = ReaderState.DISCOVERING
        response = self.transceive(Inventory())
        self.reader.reset()
        payload = response.payload
        return [
            TagUid(payload[i : i + UID_BYTES]) for i in range(0, len(payload), UID_BYTES)
        ]

    def transceive(self, cmd: LinkCommand) -> LinkResponse:
        """Execute one command against the bus and record it in the trace."""
        self.sync()
        response = self._dispatch(cmd)
        if response.ok and response.payload and self.fault_hook is not None:
            response = LinkResponse(LinkStatus.OK, self.fault_hook(cmd, response.payload))
        self.trace.append(
            TraceEntry(
                self.clock.now_ms,
                _describe(cmd),
                response.status.value,
                len(response.payload),
            )
        )
        log.debug("%s -> %s", _describe(cmd), response.status.value)
        return response

    def _deselect_current(self) -> None:
        uid = self.reader.selected_uid
        if uid is not None:
            placement = self._placements.get(uid)
            if placement is not None and placement.tag.state in (
                TagState.SELECTED,
                TagState.CONFIGURED,
            ):
                placement.tag.state = TagState.IDLE
        self.reader.reset()

    def _dispatch(self, cmd: LinkCommand) -> LinkResponse:
        if isinstance(cmd, Inventory):
            self._session_lost_uid = None
            chunks = []
            for uid in self.powered_uids():
                tag = self._placements[uid].tag
                if tag.state is TagState.UNPOWERED:
                    tag.state = TagState.IDLE
                chunks.append(uid.value)
            return LinkResponse(LinkStatus.OK, b"".join(chunks))

        if isinstance(cmd, Select):
            self._session_lost_uid = None
            placement = self._placements.get(cmd.uid)
            if placement is None:
                return LinkResponse(LinkStatus.NO_TAG)
            if not placement.field.powered():
                self._field_loss(cmd.uid)
                return LinkResponse(LinkStatus.NOT_POWERED)
            if self.reader.selected_uid not in (None, cmd.uid):
                self._deselect_current()
            if placement.tag.state in (TagState.UNPOWERED, TagState.IDLE):
                placement.tag.state = TagState.SELECTED
            self.reader.state = ReaderState.CONNECTED
            self.reader.selected_uid = cmd.uid
            return LinkResponse(LinkStatus.OK)

        # Everything below addresses the currently selected tag.
        if self.reader.selected_uid is None:
            if self._session_lost_uid is not None:
                self._session_lost_uid = None
                return LinkResponse(LinkStatus.NOT_POWERED)
            return LinkResponse(LinkStatus.NOT_SELECTED)
        placement = self._placements[self.reader.selected_uid]
        tag = placement.tag
        if not placement.field.powered():
            self._field_loss(tag.uid)
            return LinkResponse(LinkStatus.NOT_POWERED)

        if isinstance(cmd, ReadBlock):
            if not 0 <= cmd.index < len(tag.blocks):
                return LinkResponse(LinkStatus.BAD_INDEX)
            return LinkResponse(LinkStatus.OK, bytes(tag.blocks[cmd.index]))

        if isinstance(cmd, WriteBlock):
            if not 0 <= cmd.index < len(tag.blocks):
                return LinkResponse(LinkStatus.BAD_INDEX)
            if cmd.index in tag.protected_blocks:
                return LinkResponse(LinkStatus.PROTECTED)
            tag.blocks[cmd.index][:] = cmd.data
            return LinkResponse(LinkStatus.OK)

        if isinstance(cmd, ReadSignature):
            return LinkResponse(LinkStatus.OK, tag.signature.value)

        if isinstance(cmd, GetEnergyStatus):
            strength = placement.field.field_strength()
            return LinkResponse(LinkStatus.OK, bytes([1, min(255, round(strength * 255))]))

        if isinstance(cmd, ConfigureTag):
            # Reachable only through an established session, so the prior
            # state here is Selected (or already Configured).
            tag.state = TagState.CONFIGURED
            return LinkResponse(LinkStatus.OK)

        if isinstance(cmd, ReadSensor):
            if tag.state is not TagState.CONFIGURED:
                return LinkResponse(LinkStatus.NOT_SELECTED)
            sensor = tag.attached_sensor
            if sensor is None:
                raise RuntimeError(f"tag {tag.uid.hex} has no attached sensor")
            value = int(sensor.read_deci_celsius(self.clock.now_ms))
            return LinkResponse(LinkStatus.OK, value.to_bytes(2, "big", signed=True))

        raise TypeError(f"unknown link command: {cmd!r}")
