"""Experience collection, dataset mixing and the ``.exp`` store format.

Binary layout (little-endian)::

    magic      8 bytes  b"AOSEXP\\0\\0"
    version    uint16
    relays     uint16
    fingerprint 64 bytes ASCII hex (SHA-256 of the physics config)
    label_len  uint16, then label_len bytes UTF-8 source label
    count      uint64
    records    count x RECORD (see ``record_dtype``)
"""

import logging
import struct
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..config import SystemConfig, config_fingerprint
from .env import NcsEnv
from .errors import (
    DatasetError,
    FingerprintMismatchError,
    InsufficientRecordsError,
    StoreVersionError,
    TruncatedStoreError,
)
from .seeding import derive_int, derive_rng
from .types import NO_ASSOCIATION, Action, EnvState, Experience, Policy

logger = logging.getLogger(__name__)

STORE_MAGIC = b"AOSEXP\x00\x00"
STORE_VERSION = 1
STORE_EXTENSION = ".exp"
_FIXED_HEADER = struct.Struct("<HH64s")


@dataclass(frozen=True)
class StoreHeader:
    version: int
    fingerprint: str
    source: str
    count: int
    num_relays: int


@dataclass(frozen=True)
class ExperienceStore:
    """Immutable static dataset."""

    header: StoreHeader
    records: Tuple[Experience, ...]

    def __post_init__(self) -> None:
        if self.header.count != len(self.records):
            raise DatasetError(
                f"header count {self.header.count} does not match {len(self.records)} records"
            )

    def __len__(self) -> int:
        return len(self.records)

    @property
    def source(self) -> str:
        return self.header.source


def make_store(records: Tuple[Experience, ...], cfg: SystemConfig, source: str) -> ExperienceStore:
    header = StoreHeader(
        version=STORE_VERSION,
        fingerprint=config_fingerprint(cfg),
        source=source,
        count=len(records),
        num_relays=cfg.num_relays,
    )
    return ExperienceStore(header, records)


def collect(
    policy: Policy,
    env: NcsEnv,
    num_steps: int,
    seed: int,
    source: str = "random",
) -> ExperienceStore:
    """Roll ``policy`` for ``num_steps`` transitions.

    The environment is reset from a derived seed every ``episode_length``
    steps so the dataset also covers stale-controller states.
    """
    if num_steps < 1:
        raise ValueError("num_steps must be >= 1")
    policy_relays = getattr(policy, "num_relays", env.cfg.num_relays)
    if policy_relays != env.cfg.num_relays:
        raise ValueError(
            f"policy acts over {policy_relays} relays, environment has {env.cfg.num_relays}"
        )

    rng = derive_rng(seed, "collect.policy")
    records = []
    state = env.current
    for step in range(num_steps):
        if step % env.cfg.episode_length == 0:
            state = env.reset(derive_int(seed, "collect.episode", step // env.cfg.episode_length))
        action = policy.act(state, rng)
        result = env.step(action)
        records.append(Experience(state, action, result.reward, result.next_state))
        state = result.next_state
    logger.info("collected %d %s transitions", num_steps, source)
    return make_store(tuple(records), env.cfg, source)


def mix(
    expert: ExperienceStore,
    random: ExperienceStore,
    xi: float,
    total: int,
    seed: int,
) -> ExperienceStore:
    """Subsample ``floor(xi * total)`` expert and the rest random records."""
    if not 0.0 <= xi <= 1.0:
        raise ValueError("xi must lie in [0, 1]")
    if expert.header.fingerprint != random.header.fingerprint:
        raise FingerprintMismatchError("expert and random stores come from different configurations")
    num_expert = int(np.floor(xi * total))
    num_random = total - num_expert
    for name, store, needed in (("expert", expert, num_expert), ("random", random, num_random)):
        if len(store) < needed:
            raise InsufficientRecordsError(
                f"{name} store holds {len(store)} records, {needed} requested"
            )

    rng = derive_rng(seed, "dataset.mix")
    expert_idx = rng.choice(len(expert), size=num_expert, replace=False)
    random_idx = rng.choice(len(random), size=num_random, replace=False)
    pool = [expert.records[i] for i in expert_idx] + [random.records[i] for i in random_idx]
    order = rng.permutation(total)
    records = tuple(pool[i] for i in order)
    header = StoreHeader(
        version=STORE_VERSION,
        fingerprint=expert.header.fingerprint,
        source=f"mixed({xi!r})",
        count=total,
        num_relays=expert.header.num_relays,
    )
    return ExperienceStore(header, records)


def record_dtype(num_relays: int) -> np.dtype:
    gains = ("<f8", (num_relays,))
    return np.dtype(
        [
            ("aos", "<u4"),
            ("assoc", "<i4"),
            ("gains_sr",) + gains,
            ("gains_rc",) + gains,
            ("action", "<i4"),
            ("reward", "<f8"),
            ("next_aos", "<u4"),
            ("next_assoc", "<i4"),
            ("next_gains_sr",) + gains,
            ("next_gains_rc",) + gains,
        ]
    )


def _to_array(store: ExperienceStore) -> np.ndarray:
    array = np.zeros(len(store), dtype=record_dtype(store.header.num_relays))
    for i, record in enumerate(store.records):
        array[i] = (
            record.state.aos_slots,
            record.state.association,
            record.state.gains_sr,
            record.state.gains_rc,
            record.action.index,
            record.reward,
            record.next_state.aos_slots,
            record.next_state.association,
            record.next_state.gains_sr,
            record.next_state.gains_rc,
        )
    return array


def _state(aos: int, assoc: int, gains_sr: np.ndarray, gains_rc: np.ndarray) -> EnvState:
    return EnvState(
        aos_slots=int(aos),
        gains_sr=np.array(gains_sr, dtype=np.float64),
        gains_rc=np.array(gains_rc, dtype=np.float64),
        association=int(assoc),
    )


def save(store: ExperienceStore, path: str) -> None:
    """Write ``store`` and a human-readable ``<path>.txt`` sidecar."""
    label = store.header.source.encode("utf-8")
    with open(path, "wb") as handle:
        handle.write(STORE_MAGIC)
        handle.write(
            _FIXED_HEADER.pack(
                store.header.version, store.header.num_relays, store.header.fingerprint.encode("ascii")
            )
        )
        handle.write(struct.pack("<H", len(label)))
        handle.write(label)
        handle.write(struct.pack("<Q", len(store)))
        handle.write(_to_array(store).tobytes())

    with open(path + ".txt", "w", encoding="utf-8") as sidecar:
        sidecar.write(f"format_version = {store.header.version}\n")
        sidecar.write(f"fingerprint = {store.header.fingerprint}\n")
        sidecar.write(f"source = {store.header.source}\n")
        sidecar.write(f"count = {store.header.count}\n")
        sidecar.write(f"num_relays = {store.header.num_relays}\n")


class _Reader:
    def __init__(self, data: bytes, path: str) -> None:
        self.data = data
        self.offset = 0
        self.path = path

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.data):
            raise TruncatedStoreError(f"{self.path}: truncated store")
        chunk = self.data[self.offset : self.offset + size]
        self.offset += size
        return chunk


def _decode(raw: bytes, encoding: str, what: str, path: str) -> str:
    try:
        return raw.decode(encoding)
    except UnicodeDecodeError:
        raise DatasetError(f"{path}: corrupt {what}") from None


def _check_rows(array: np.ndarray, num_relays: int, path: str) -> None:
    """Reject records that cannot come from the simulator."""
    for prefix in ("", "next_"):
        if np.any(array[prefix + "aos"] < 1):
            raise DatasetError(f"{path}: record with AoS below one slot")
        assoc = array[prefix + "assoc"]
        if np.any((assoc < NO_ASSOCIATION) | (assoc >= num_relays)):
            raise DatasetError(f"{path}: record with an unknown relay association")
        for name in ("gains_sr", "gains_rc"):
            gains = array[prefix + name]
            if not (np.all(np.isfinite(gains)) and np.all(gains >= 0)):
                raise DatasetError(f"{path}: record with invalid channel gains")
    action = array["action"]
    if np.any((action < 0) | (action > num_relays)):
        raise DatasetError(f"{path}: record with an action outside the action space")
    if not np.all(np.isfinite(array["reward"])):
        raise DatasetError(f"{path}: record with a non-finite reward")

def load(path: str, cfg: Optional[SystemConfig] = None, force: bool = False) -> ExperienceStore:
    """Read a store; with ``cfg`` the physics fingerprint must match unless
    ``force`` is set."""
    try:
        with open(path, "rb") as handle:
            data = handle.read()
    except FileNotFoundError:
        raise DatasetError(f"experience store not found at {path}") from None

    reader = _Reader(data, path)
    if reader.take(len(STORE_MAGIC)) != STORE_MAGIC:
        raise DatasetError(f"{path}: not an experience store")
    version, num_relays, fingerprint_raw = _FIXED_HEADER.unpack(reader.take(_FIXED_HEADER.size))
    if version != STORE_VERSION:
        raise StoreVersionError(f"{path}: store version {version}, expected {STORE_VERSION}")
    (label_size,) = struct.unpack("<H", reader.take(2))
    source = _decode(reader.take(label_size), "utf-8", "source label", path)
    (count,) = struct.unpack("<Q", reader.take(8))
    dtype = record_dtype(num_relays)
    array = np.frombuffer(reader.take(count * dtype.itemsize), dtype=dtype)

    fingerprint = _decode(fingerprint_raw, "ascii", "fingerprint", path)
    _check_rows(array, num_relays, path)
    if cfg is not None and not force and fingerprint != config_fingerprint(cfg):
        raise FingerprintMismatchError(
            f"{path}: collected under a different configuration (use --force to override)"
        )

    records = tuple(
        Experience(
            state=_state(row["aos"], row["assoc"], row["gains_sr"], row["gains_rc"]),
            action=Action.from_index(int(row["action"]), num_relays),
            reward=float(row["reward"]),
            next_state=_state(row["next_aos"], row["next_assoc"], row["next_gains_sr"], row["next_gains_rc"]),
        )
        for row in array
    )
    header = StoreHeader(version, fingerprint, source, int(count), int(num_relays))
    return ExperienceStore(header, records)
