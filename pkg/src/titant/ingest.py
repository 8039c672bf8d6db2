"""Transaction record parsing, windowing, and synthetic data generation.

Record files are UTF-8 text, one transaction per line:

    txn_id,timestamp,transferor,transferee,amount,f1,...,f52

Label files carry one reported-fraud verdict per line:

    txn_id,is_fraud{0|1},report_time

All floats are serialized with ``repr`` so that parse(serialize(x)) is
bit-exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Iterable, Sequence

import numpy as np

N_BASIC_FEATURES = 52
SECONDS_PER_DAY = 86400

# Indices of the transaction-context columns that carry a (weak) fraud
# signal in synthetic data. Everything else is user profile or noise.
# Column 47 is bimodal (a noisy risk flag); the rest are mean shifts.
SIGNAL_FEATURES = (48, 49, 50, 51)
SIGNAL_SHIFTS = (1.0, 0.8, 0.6, 0.45)
FLAG_FEATURE = 47
FLAG_SCALE = 2.2
FLAG_RATE_NORMAL = 0.02
FLAG_RATE_FRAUD = 0.75

# The trans_city profile code is a coarsened view of the social community:
# basic features see only this lossy proxy of the graph structure.
CITY_COARSENESS = 5


class ParseError(ValueError):
    """Malformed record or label line; message names line number and field."""


@dataclass(frozen=True, eq=False)
class TransactionRecord:
    """One transfer event. ``basic_features`` is a length-52 float vector."""

    txn_id: str
    timestamp: int
    transferor: str
    transferee: str
    amount: float
    basic_features: np.ndarray

    def __post_init__(self):
        if len(self.basic_features) != N_BASIC_FEATURES:
            raise ValueError(
                f"basic_features must have length {N_BASIC_FEATURES}, "
                f"got {len(self.basic_features)}"
            )

    def __eq__(self, other):
        if not isinstance(other, TransactionRecord):
            return NotImplemented
        return (
            self.txn_id == other.txn_id
            and self.timestamp == other.timestamp
            and self.transferor == other.transferor
            and self.transferee == other.transferee
            and self.amount == other.amount
            and np.array_equal(self.basic_features, other.basic_features)
        )


@dataclass(frozen=True)
class LabelRecord:
    """A fraud report. Reports always arrive at or after the transaction."""

    txn_id: str
    is_fraud: bool
    report_time: int


@dataclass(frozen=True)
class WindowSpec:
    """T+1 windowing: a long network window, a training window, one test day.

    With defaults, test_date=D gives network [D-104d, D-15d], train
    [D-14d, D-1d], test [D]. The three windows are contiguous and disjoint.
    """

    test_date: date
    network_days: int = 90
    train_days: int = 14

    def __post_init__(self):
        if self.network_days < 1 or self.train_days < 1:
            raise ValueError("network_days and train_days must be positive")

    def day_ranges(self) -> tuple[tuple[int, int], tuple[int, int], tuple[int, int]]:
        """Inclusive (first_day, last_day) epoch-day bounds per window."""
        test_day = date_to_epoch_day(self.test_date)
        train_first = test_day - self.train_days
        net_first = train_first - self.network_days
        return (
            (net_first, train_first - 1),
            (train_first, test_day - 1),
            (test_day, test_day),
        )


@dataclass(frozen=True)
class SyntheticConfig:
    """Knobs for the synthetic transaction generator.

    Fraud is planted primarily in graph topology: scammers run repeat
    sprees against small victim pools (star-shaped fan-in), victims groom
    with small prior transfers, and scammers launder among themselves,
    knitting the fraud neighbourhoods into one community. A weak shift on
    five transaction-context features is the only non-graph signal.
    """

    n_users: int = 50_000
    n_days: int = 105
    txns_per_day: int = 3000
    fraudster_fraction: float = 0.03
    repeat_fraud_prob: float = 0.7
    fraud_base_rate: float = 0.01
    feature_noise: float = 0.25
    seed: int = 7
    # Secondary structure knobs; defaults match the checked-in fixture.
    n_communities: int = 200
    in_community_prob: float = 0.7
    grooming_per_victim: float = 2.0
    laundering_per_fraudster: float = 3.0
    start_date: date = date(2017, 1, 1)

    def __post_init__(self):
        for name in ("fraudster_fraction", "repeat_fraud_prob", "fraud_base_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        for name in ("n_users", "n_days", "txns_per_day", "n_communities"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")


class RecordFrame:
    """Column-oriented view of a record batch.

    The per-record dataclass is convenient at the edges but too slow for
    window slicing and feature assembly at full scale, so the pipeline
    works on this columnar form. ``y`` is present once labels are joined.
    """

    def __init__(self, txn_ids, timestamps, transferors, transferees, amounts,
                 features, y=None):
        self.txn_ids = np.asarray(txn_ids, dtype=object)
        self.timestamps = np.asarray(timestamps, dtype=np.int64)
        self.transferors = np.asarray(transferors, dtype=object)
        self.transferees = np.asarray(transferees, dtype=object)
        self.amounts = np.asarray(amounts, dtype=np.float64)
        self.features = np.ascontiguousarray(features, dtype=np.float64)
        if self.features.shape != (len(self.txn_ids), N_BASIC_FEATURES):
            raise ValueError(
                f"features must be (n, {N_BASIC_FEATURES}), got {self.features.shape}"
            )
        self.y = None if y is None else np.asarray(y, dtype=bool)

    def __len__(self):
        return len(self.txn_ids)

    @property
    def days(self) -> np.ndarray:
        return self.timestamps // SECONDS_PER_DAY

    @classmethod
    def from_records(cls, records: Sequence[TransactionRecord]) -> "RecordFrame":
        n = len(records)
        feats = np.empty((n, N_BASIC_FEATURES), dtype=np.float64)
        for i, r in enumerate(records):
            feats[i] = r.basic_features
        return cls(
            [r.txn_id for r in records],
            [r.timestamp for r in records],
            [r.transferor for r in records],
            [r.transferee for r in records],
            [r.amount for r in records],
            feats,
        )

    def take(self, idx: np.ndarray) -> "RecordFrame":
        return RecordFrame(
            self.txn_ids[idx], self.timestamps[idx], self.transferors[idx],
            self.transferees[idx], self.amounts[idx], self.features[idx],
            None if self.y is None else self.y[idx],
        )

    def record(self, i: int) -> TransactionRecord:
        return TransactionRecord(
            txn_id=self.txn_ids[i],
            timestamp=int(self.timestamps[i]),
            transferor=self.transferors[i],
            transferee=self.transferees[i],
            amount=float(self.amounts[i]),
            basic_features=self.features[i],
        )

    def records(self) -> list[TransactionRecord]:
        return [self.record(i) for i in range(len(self))]


def as_frame(records) -> RecordFrame:
    if isinstance(records, RecordFrame):
        return records
    return RecordFrame.from_records(records)


def date_to_epoch_day(d: date) -> int:
    return d.toordinal() - date(1970, 1, 1).toordinal()


def epoch_day_to_date(day: int) -> date:
    return date.fromordinal(day + date(1970, 1, 1).toordinal())


# ---------------------------------------------------------------------------
# Text formats


def parse_records(stream) -> list[TransactionRecord]:
    """Parse a record file (bytes, str, or line iterable) in file order.

    Raises ParseError naming the offending line and field on any malformed
    input, including a feature vector whose arity is not 52.
    """
    records = []
    seen = set()
    for line_no, line in enumerate(_iter_lines(stream), start=1):
        if not line.strip():
            continue
        parts = line.rstrip("\n").split(",")
        if len(parts) != 5 + N_BASIC_FEATURES:
            raise ParseError(
                f"line {line_no}: expected {5 + N_BASIC_FEATURES} fields "
                f"(5 header fields + {N_BASIC_FEATURES} features), got {len(parts)}"
            )
        txn_id = parts[0]
        if not txn_id:
            raise ParseError(f"line {line_no}: empty txn_id")
        if txn_id in seen:
            raise ParseError(f"line {line_no}: duplicate txn_id {txn_id!r}")
        seen.add(txn_id)
        try:
            timestamp = int(parts[1])
        except ValueError:
            raise ParseError(f"line {line_no}: bad timestamp {parts[1]!r}") from None
        try:
            amount = float(parts[4])
        except ValueError:
            raise ParseError(f"line {line_no}: bad amount {parts[4]!r}") from None
        if not math.isfinite(amount) or amount < 0:
            raise ParseError(f"line {line_no}: amount must be finite and >= 0")
        try:
            feats = np.array([float(x) for x in parts[5:]], dtype=np.float64)
        except ValueError:
            bad = next(i for i, x in enumerate(parts[5:]) if not _is_float(x))
            raise ParseError(
                f"line {line_no}: bad feature f{bad + 1} value {parts[5 + bad]!r}"
            ) from None
        records.append(TransactionRecord(
            txn_id=txn_id, timestamp=timestamp, transferor=parts[2],
            transferee=parts[3], amount=amount, basic_features=feats,
        ))
    return records


def serialize_records(records) -> str:
    """Inverse of parse_records; floats use repr for a bit-exact round trip."""
    frame = as_frame(records)
    lines = []
    for i in range(len(frame)):
        feats = ",".join(repr(v) for v in frame.features[i].tolist())
        lines.append(
            f"{frame.txn_ids[i]},{frame.timestamps[i]},{frame.transferors[i]},"
            f"{frame.transferees[i]},{repr(float(frame.amounts[i]))},{feats}"
        )
    return "\n".join(lines) + ("\n" if lines else "")


def parse_labels(stream) -> list[LabelRecord]:
    labels = []
    for line_no, line in enumerate(_iter_lines(stream), start=1):
        if not line.strip():
            continue
        parts = line.rstrip("\n").split(",")
        if len(parts) != 3:
            raise ParseError(f"line {line_no}: expected 3 fields, got {len(parts)}")
        if parts[1] not in ("0", "1"):
            raise ParseError(f"line {line_no}: is_fraud must be 0 or 1, got {parts[1]!r}")
        try:
            report_time = int(parts[2])
        except ValueError:
            raise ParseError(f"line {line_no}: bad report_time {parts[2]!r}") from None
        labels.append(LabelRecord(parts[0], parts[1] == "1", report_time))
    return labels


def serialize_labels(labels: Iterable[LabelRecord]) -> str:
    lines = [f"{l.txn_id},{1 if l.is_fraud else 0},{l.report_time}" for l in labels]
    return "\n".join(lines) + ("\n" if lines else "")


def _iter_lines(stream):
    if isinstance(stream, bytes):
        stream = stream.decode("utf-8")
    if isinstance(stream, str):
        return stream.splitlines()
    return (ln.decode("utf-8") if isinstance(ln, bytes) else ln for ln in stream)


def _is_float(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


# ---------------------------------------------------------------------------
# Windowing


def slice_windows(records, labels, spec: WindowSpec):
    """Partition records into (network, train, test) frames per the T+1 spec.

    Records outside all three windows are discarded. Train and test frames
    get a boolean ``y`` joined from labels by txn_id; transactions without
    a fraud report count as not-fraud.
    """
    frame = as_frame(records)
    (net_lo, net_hi), (tr_lo, tr_hi), (te_lo, te_hi) = spec.day_ranges()
    days = frame.days

    net_idx = np.flatnonzero((days >= net_lo) & (days <= net_hi))
    tr_idx = np.flatnonzero((days >= tr_lo) & (days <= tr_hi))
    te_idx = np.flatnonzero((days >= te_lo) & (days <= te_hi))

    if len(tr_idx) == 0:
        raise ValueError("train window contains no records")
    if len(te_idx) == 0:
        raise ValueError("test window contains no records")

    fraud_ids = {l.txn_id for l in labels if l.is_fraud}
    network = frame.take(net_idx)
    train = frame.take(tr_idx)
    test = frame.take(te_idx)
    train.y = np.array([t in fraud_ids for t in train.txn_ids], dtype=bool)
    test.y = np.array([t in fraud_ids for t in test.txn_ids], dtype=bool)
    return network, train, test


# ---------------------------------------------------------------------------
# Synthetic data


def generate_synthetic(cfg: SyntheticConfig):
    """Generate (records, labels) lists; deterministic in cfg.

    See generate_synthetic_frame for the columnar variant the pipeline and
    the test harness use directly.
    """
    frame, labels = generate_synthetic_frame(cfg)
    return frame.records(), labels


def generate_synthetic_frame(cfg: SyntheticConfig) -> tuple[RecordFrame, list[LabelRecord]]:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed)))
    n = cfg.n_users
    base_day = date_to_epoch_day(cfg.start_date)

    # Population: power-law activity weights concentrate traffic on a core
    # of active users; community id doubles as the trans_city profile code.
    activity = (np.arange(n) + 8.0) ** -1.0
    activity = rng.permutation(activity)
    activity /= activity.sum()
    community = rng.integers(0, cfg.n_communities, size=n)
    profile = _make_profiles(rng, n, community)

    n_fraudsters = int(round(cfg.fraudster_fraction * n))
    fraudsters = rng.choice(n, size=n_fraudsters, replace=False) if n_fraudsters else np.array([], dtype=np.int64)
    if len(fraudsters):
        # Scam collection accounts carry almost no organic traffic.
        activity[fraudsters] *= 0.05
        activity /= activity.sum()

    total_quota = cfg.n_days * cfg.txns_per_day
    target_fraud = int(round(cfg.fraud_base_rate * total_quota))

    ev_day, ev_from, ev_to, ev_kind = _plan_fraud_events(
        rng, cfg, fraudsters, target_fraud, community, activity)

    # Normal transactions fill each day's quota after fraud-driven events.
    per_day_special = np.bincount(ev_day, minlength=cfg.n_days)
    normal_per_day = np.maximum(cfg.txns_per_day - per_day_special, 0)
    n_normal = int(normal_per_day.sum())
    nm_from = rng.choice(n, size=n_normal, p=activity)
    nm_to = _pick_transferees(rng, cfg, nm_from, community, activity)
    nm_day = np.repeat(np.arange(cfg.n_days), normal_per_day)

    day = np.concatenate([ev_day, nm_day])
    src = np.concatenate([ev_from, nm_from])
    dst = np.concatenate([ev_to, nm_to])
    kind = np.concatenate([ev_kind, np.zeros(n_normal, dtype=np.int8)])

    m = len(day)
    tod = rng.integers(0, SECONDS_PER_DAY, size=m)
    ts = (base_day + day) * SECONDS_PER_DAY + tod

    order = np.argsort(ts, kind="stable")
    day, src, dst, kind, ts = day[order], src[order], dst[order], kind[order], ts[order]

    amounts = _make_amounts(rng, kind)
    features = _make_features(rng, cfg, profile, src, kind)

    user_ids = np.array([f"u{u:06d}" for u in range(n)], dtype=object)
    txn_ids = np.array([f"t{i:08d}" for i in range(m)], dtype=object)

    frame = RecordFrame(txn_ids, ts, user_ids[src], user_ids[dst], amounts, features)

    is_fraud = kind == 2
    delays = (rng.exponential(1.5, size=int(is_fraud.sum())) * SECONDS_PER_DAY).astype(np.int64)
    labels = [
        LabelRecord(txn_ids[i], True, int(ts[i] + delays[j]))
        for j, i in enumerate(np.flatnonzero(is_fraud))
    ]
    return frame, labels


def _make_profiles(rng, n, community):
    """Per-user profile block: columns 0..31 of the feature vector."""
    prof = np.empty((n, 32), dtype=np.float64)
    prof[:, 0] = rng.integers(18, 76, size=n)              # age
    prof[:, 1] = rng.integers(0, 3, size=n)                # gender code
    prof[:, 2] = community // CITY_COARSENESS              # trans_city code
    prof[:, 3] = rng.integers(30, 4000, size=n)            # account age, days
    prof[:, 4:] = rng.normal(0.0, 1.0, size=(n, 28))       # behavioural traits
    return prof


def _plan_fraud_events(rng, cfg, fraudsters, target_fraud, community, activity):
    """Schedule fraud sprees, grooming transfers, and laundering edges.

    Fraudster accounts operate in rings that share a victim pool drawn
    from the quieter half of one farmed community (scammers target less
    active users): each fraud payment runs victim -> some ring account, so
    repeat victims touch several accounts of the same ring. Grooming
    payments (kind 1) land 5..30 days before the ring wakes, anchoring
    victim-ring edges in the long network window. Laundering (kind 3) is
    dense inside a ring and cashes out into a small hub layer, knitting
    all fraud neighbourhoods into one component. Returns parallel arrays
    (day, transferor, transferee, kind) with kind 2 marking fraud.
    """
    empty = np.array([], dtype=np.int64)
    if len(fraudsters) == 0 or target_fraud == 0:
        return empty, empty, empty, np.array([], dtype=np.int8)

    p = cfg.repeat_fraud_prob
    # Spree sizes: geometric with stop probability 1-p, so the fraction of
    # engaged fraudster accounts with two or more fraud events is p.
    est = max(int(target_fraud * (1 - p) * 1.3) + 8, 8)
    sizes = []
    total = 0
    while total < target_fraud and len(sizes) < len(fraudsters):
        draw = rng.geometric(1 - p, size=est) if p < 1 else rng.integers(10, 11, size=est)
        for s in draw:
            if total >= target_fraud or len(sizes) >= len(fraudsters):
                break
            sizes.append(int(s))
            total += int(s)
    sizes = np.asarray(sizes, dtype=np.int64)
    engaged = fraudsters[: len(sizes)]
    n_eng = len(engaged)

    # Cash-out hubs: a small second layer every ring launders into, tying
    # the fraud neighbourhoods together around a few heavy accounts.
    n_hubs = max(2, min(n_eng // 25, len(fraudsters) - n_eng)) if len(fraudsters) > n_eng else max(2, min(n_eng // 25, n_eng))
    if len(fraudsters) > n_eng:
        hubs = fraudsters[n_eng:n_eng + n_hubs]
    else:
        hubs = engaged[:n_hubs]

    is_fraudster = np.zeros(cfg.n_users, dtype=bool)
    is_fraudster[fraudsters] = True
    civilians = np.flatnonzero(~is_fraudster)
    civ_comm = community[civilians]
    order = np.argsort(civ_comm, kind="stable")
    civ_sorted = civilians[order]
    comm_sizes = np.bincount(civ_comm, minlength=cfg.n_communities)
    comm_offsets = np.concatenate([[0], np.cumsum(comm_sizes)])

    days, froms, tos, kinds = [], [], [], []
    ring_size = 6
    ring_bounds = list(range(0, n_eng, ring_size)) + [n_eng]

    for r in range(len(ring_bounds) - 1):
        members = engaged[ring_bounds[r]:ring_bounds[r + 1]]
        quotas = sizes[ring_bounds[r]:ring_bounds[r + 1]]
        ring_events = int(quotas.sum())
        wake = int(rng.integers(0, cfg.n_days))

        farm = int(rng.integers(0, cfg.n_communities))
        candidates = civ_sorted[comm_offsets[farm]:comm_offsets[farm + 1]]
        if len(candidates) == 0:
            candidates = civilians
        quiet = candidates[activity[candidates] <= np.median(activity[candidates])]
        if len(quiet) >= 2:
            candidates = quiet
        pool_size = min(max(2, ring_events // 3), len(candidates))
        victims = rng.choice(candidates, size=pool_size, replace=False)

        for m, q in zip(members, quotas):
            gaps = rng.integers(1, 6, size=q)
            gaps[0] = rng.integers(0, 5)
            ev_days = wake + np.cumsum(gaps)
            ev_victims = victims[rng.integers(0, pool_size, size=q)]
            keep = ev_days < cfg.n_days  # sprees truncate at the horizon
            ev_days, ev_victims = ev_days[keep], ev_victims[keep]
            if len(ev_days):
                days.append(ev_days)
                froms.append(ev_victims)
                tos.append(np.full(len(ev_days), m))
                kinds.append(np.full(len(ev_days), 2, dtype=np.int8))

        # Grooming: a few small payments from each victim to 1-3 ring
        # accounts before the ring wakes.
        for v in victims:
            collectors = members[rng.integers(0, len(members), size=min(3, len(members)))]
            for m in np.unique(collectors):
                k = 1 + rng.poisson(max(cfg.grooming_per_victim / 2 - 1, 0))
                g_days = np.clip(wake - rng.integers(5, 31, size=k), 0, cfg.n_days - 1)
                days.append(g_days)
                froms.append(np.full(k, v))
                tos.append(np.full(k, m))
                kinds.append(np.full(k, 1, dtype=np.int8))

        # Laundering: dense inside the ring, plus cash-out to the hubs.
        for m in members:
            k = 1 + rng.poisson(max(cfg.laundering_per_fraudster - 1, 0))
            peers = members[rng.integers(0, len(members), size=k)]
            peers = peers[peers != m]
            peers = np.append(peers, hubs[rng.integers(0, len(hubs), size=2)])
            l_days = np.clip(wake + rng.integers(0, 25, size=len(peers)), 0, cfg.n_days - 1)
            days.append(l_days)
            froms.append(np.full(len(peers), m))
            tos.append(peers)
            kinds.append(np.full(len(peers), 3, dtype=np.int8))

    # Hub-to-hub settlement traffic keeps the cash-out layer itself dense.
    if len(hubs) > 1:
        k = 4 * len(hubs)
        h_from = hubs[rng.integers(0, len(hubs), size=k)]
        h_to = hubs[rng.integers(0, len(hubs), size=k)]
        ok = h_from != h_to
        days.append(rng.integers(0, cfg.n_days, size=int(ok.sum())))
        froms.append(h_from[ok])
        tos.append(h_to[ok])
        kinds.append(np.full(int(ok.sum()), 3, dtype=np.int8))

    if not days:
        return empty, empty, empty, np.array([], dtype=np.int8)
    return (np.concatenate(days), np.concatenate(froms),
            np.concatenate(tos), np.concatenate(kinds))


def _pick_transferees(rng, cfg, src, community, activity):
    """Transferee choice: mostly within the transferor's community, and
    activity-weighted on both sides (popular accounts also receive more)."""
    n = cfg.n_users
    order = np.argsort(community, kind="stable")
    sorted_members = order
    comm_sizes = np.bincount(community, minlength=cfg.n_communities)
    comm_offsets = np.concatenate([[0], np.cumsum(comm_sizes)])

    # Per-community cumulative activity, offset by community id, so one
    # searchsorted maps (community, r) to an activity-weighted member.
    w = activity[sorted_members]
    cum = np.cumsum(w)
    base = np.where(comm_offsets[:-1] > 0, cum[np.maximum(comm_offsets[:-1] - 1, 0)], 0.0)
    totals = np.maximum(cum[np.maximum(comm_offsets[1:] - 1, 0)] - base, 1e-300)
    row_of = np.repeat(np.arange(cfg.n_communities), comm_sizes)
    aug = row_of + (cum - base[row_of]) / totals[row_of]
    nonempty = comm_offsets[1:] > comm_offsets[:-1]
    aug[comm_offsets[1:][nonempty] - 1] = np.flatnonzero(nonempty) + 1.0

    m = len(src)
    dst = rng.choice(n, size=m, p=activity)
    local = np.flatnonzero(rng.random(m) < cfg.in_community_prob)
    c = community[src[local]]
    pos = np.searchsorted(aug, c + rng.random(len(local)), side="right")
    dst[local] = sorted_members[pos]
    return dst


def _make_amounts(rng, kind):
    amounts = rng.lognormal(3.5, 1.0, size=len(kind))
    amounts[kind == 1] *= 0.2        # grooming payments are small
    amounts[kind == 2] *= 3.0        # fraud hauls skew large
    return np.round(amounts, 2)


def _make_features(rng, cfg, profile, src, kind):
    m = len(src)
    feats = np.empty((m, N_BASIC_FEATURES), dtype=np.float64)
    feats[:, :32] = profile[src]
    # Integer-coded profile columns stay exact; continuous ones get noise.
    feats[:, 4:32] += rng.normal(0.0, cfg.feature_noise, size=(m, 28))
    feats[:, 32:] = rng.normal(0.0, 1.0, size=(m, N_BASIC_FEATURES - 32))
    is_fraud = kind == 2
    flag_rate = np.where(is_fraud, FLAG_RATE_FRAUD, FLAG_RATE_NORMAL)
    feats[:, FLAG_FEATURE] += (rng.random(m) < flag_rate) * FLAG_SCALE
    fraud_rows = np.flatnonzero(is_fraud)
    for col, shift in zip(SIGNAL_FEATURES, SIGNAL_SHIFTS):
        feats[fraud_rows, col] += shift
    return feats
