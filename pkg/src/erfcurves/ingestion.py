"""Reading GME-style offer/bid files and generating synthetic corpora.

Input files hold one side of the market each, with the header::

    date,hour,volume,price

``date`` is ``dd-mm-yyyy`` or ``yyyy-mm-dd``, ``hour`` is 1-24, ``volume`` is
in MW and ``price`` in EUR (0-3000).  Whitespace around fields is ignored.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
from collections import defaultdict
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyCorpusError, InvalidArgumentError, ParseError
from .market_curves import DEMAND, MARKET_MAX_PRICE, SUPPLY, BidLayer, check_side

HEADER = ("date", "hour", "volume", "price")
OFFERS_FILE = "offers.csv"
BIDS_FILE = "bids.csv"
PROVENANCE_FILE = "provenance.json"


@dataclass(frozen=True)
class HourlyAuction:
    date: dt.date
    hour: int
    offers: tuple[BidLayer, ...] = ()
    bids: tuple[BidLayer, ...] = ()

    @property
    def key(self) -> tuple[dt.date, int]:
        return (self.date, self.hour)

    @property
    def label(self) -> str:
        return f"{self.date.isoformat()} h{self.hour:02d}"


@dataclass(frozen=True)
class Corpus:
    auctions: tuple[HourlyAuction, ...]
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        auctions = tuple(sorted(self.auctions, key=lambda a: a.key))
        keys = [a.key for a in auctions]
        if len(set(keys)) != len(keys):
            raise InvalidArgumentError("duplicate (date, hour) in corpus")
        object.__setattr__(self, "auctions", auctions)

    def __len__(self):
        return len(self.auctions)

    def __iter__(self):
        return iter(self.auctions)

    def __getitem__(self, i):
        return self.auctions[i]

    def get(self, date: dt.date, hour: int) -> HourlyAuction:
        for a in self.auctions:
            if a.key == (date, hour):
                return a
        raise KeyError(f"no auction for {date} hour {hour}")


@dataclass
class CorpusFragment:
    """Layers of one side parsed from one file, grouped by (date, hour)."""

    path: str
    side: str
    layers: dict[tuple[dt.date, int], list[BidLayer]]
    rows_read: int
    bad_rows: list[tuple[int, str]]

    @property
    def rows_accepted(self) -> int:
        return sum(len(v) for v in self.layers.values())


def parse_date(text: str) -> dt.date:
    text = text.strip()
    for fmt in ("%d-%m-%Y", "%Y-%m-%d"):
        try:
            return dt.datetime.strptime(text, fmt).date()
        except ValueError:
            pass
    raise ValueError(f"unrecognised date {text!r}")


def _parse_row(fields: list[str], side: str) -> tuple[tuple[dt.date, int], BidLayer]:
    if len(fields) != 4:
        raise ValueError(f"expected 4 fields, got {len(fields)}")
    date = parse_date(fields[0])
    hour_text = fields[1].strip()
    try:
        hour = int(hour_text)
    except ValueError:
        raise ValueError(f"hour {hour_text!r} is not an integer") from None
    if not 1 <= hour <= 24:
        raise ValueError(f"hour {hour} outside 1-24")
    try:
        volume = float(fields[2])
        price = float(fields[3])
    except ValueError:
        raise ValueError(f"non-numeric volume/price {fields[2].strip()!r}, {fields[3].strip()!r}") from None
    if not np.isfinite(volume) or volume < 0:
        raise ValueError(f"volume {volume} must be finite and >= 0")
    if not (0 <= price <= MARKET_MAX_PRICE):
        raise ValueError(f"price {price} outside [0, {MARKET_MAX_PRICE:g}]")
    return (date, hour), BidLayer(volume, price, side)


def parse_auction_csv(path, side: str, delimiter: str = ",", skip_bad: bool = False) -> CorpusFragment:
    """Parse one offer (``side="supply"``) or bid (``side="demand"``) file.

    Parsing is strict: any malformed row raises :class:`ParseError` listing
    every bad line, unless ``skip_bad`` is set, in which case bad rows are
    reported in ``bad_rows`` and skipped.  Blank lines are ignored.
    """
    check_side(side)
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    layers: dict[tuple[dt.date, int], list[BidLayer]] = defaultdict(list)
    bad: list[tuple[int, str]] = []
    rows = 0
    with path.open(newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        header = None
        for fields in reader:
            if not any(f.strip() for f in fields):
                continue
            if header is None:
                header = tuple(f.strip() for f in fields)
                if header != HEADER:
                    raise ParseError(path, [(reader.line_num, f"header {list(header)} != {list(HEADER)}")])
                continue
            rows += 1
            try:
                key, layer = _parse_row(fields, side)
            except ValueError as exc:
                bad.append((reader.line_num, str(exc)))
                continue
            layers[key].append(layer)
    if header is None or rows == 0:
        raise EmptyCorpusError(f"{path}: no data rows")
    if bad and not skip_bad:
        raise ParseError(path, bad)
    return CorpusFragment(str(path), side, dict(layers), rows, bad)


def corpus_from_fragments(supply: CorpusFragment | None, demand: CorpusFragment | None,
                          provenance: dict | None = None) -> Corpus:
    """Join an offer and a bid fragment into hourly auctions.

    Hours present in only one file are kept with the other side empty.
    """
    s = supply.layers if supply else {}
    d = demand.layers if demand else {}
    keys = sorted(set(s) | set(d))
    if not keys:
        raise EmptyCorpusError("no hours in input")
    auctions = tuple(
        HourlyAuction(k[0], k[1], tuple(s.get(k, ())), tuple(d.get(k, ()))) for k in keys
    )
    prov = {"supply_file": supply.path if supply else None,
            "demand_file": demand.path if demand else None}
    prov.update(provenance or {})
    return Corpus(auctions, prov)


def load_corpus(supply_file=None, demand_file=None, delimiter=",", skip_bad=False) -> Corpus:
    s = parse_auction_csv(supply_file, SUPPLY, delimiter, skip_bad) if supply_file else None
    d = parse_auction_csv(demand_file, DEMAND, delimiter, skip_bad) if demand_file else None
    return corpus_from_fragments(s, d)


def fixture_paths() -> tuple[Path, Path]:
    """Offer and bid files of the small bundled sample (two hours, dd-mm-yyyy dates)."""
    data = resources.files("erfcurves") / "data"
    return Path(str(data / "table1_offers.csv")), Path(str(data / "table1_bids.csv"))


def load_fixture() -> Corpus:
    return load_corpus(*fixture_paths())


def load_corpus_dir(directory) -> Corpus:
    """Load a corpus written by :func:`write_corpus`."""
    directory = Path(directory)
    corpus = load_corpus(directory / OFFERS_FILE, directory / BIDS_FILE)
    prov_path = directory / PROVENANCE_FILE
    if prov_path.exists():
        return Corpus(corpus.auctions, json.loads(prov_path.read_text()))
    return corpus


def write_auction_csv(path, auctions: Iterable[HourlyAuction], side: str) -> Path:
    """Write one side of ``auctions`` in the canonical input format (ISO dates, repr floats)."""
    check_side(side)
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(HEADER)
        for a in auctions:
            for layer in a.offers if side == SUPPLY else a.bids:
                writer.writerow((a.date.isoformat(), a.hour, repr(float(layer.volume)), repr(float(layer.price))))
    return path


def write_corpus(corpus: Corpus, directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_auction_csv(directory / OFFERS_FILE, corpus, SUPPLY)
    write_auction_csv(directory / BIDS_FILE, corpus, DEMAND)
    (directory / PROVENANCE_FILE).write_text(json.dumps(corpus.provenance, indent=2, sort_keys=True) + "\n")
    return directory


# synthetic corpora ---------------------------------------------------------


@dataclass(frozen=True)
class TechBand:
    """A cluster of supply layers: prices in ``[price_lo, price_hi]``."""

    name: str
    price_lo: float
    price_hi: float
    share: float  # fraction of the offer layers
    mean_volume: float  # MW per layer


# Renewables bid near zero, then hydro, coal, gas and oil, plus a thin
# high-price tail up to the market maximum.
DEFAULT_PROFILE: tuple[TechBand, ...] = (
    TechBand("renewables", 0.0, 12.0, 0.14, 60.0),
    TechBand("hydro", 12.0, 40.0, 0.16, 120.0),
    TechBand("coal", 40.0, 52.0, 0.18, 200.0),
    TechBand("gas", 52.0, 95.0, 0.30, 160.0),
    TechBand("oil", 95.0, 300.0, 0.14, 90.0),
    TechBand("tail", 300.0, MARKET_MAX_PRICE, 0.08, 150.0),
)


@dataclass(frozen=True)
class SynthParams:
    supply_layers: int = 324
    demand_layers: int = 65
    profile: tuple[TechBand, ...] = DEFAULT_PROFILE
    must_run_volume: float = 12000.0  # the single zero-price offer layer
    base_load: float = 24000.0  # zero-price (price-taking) demand block
    load_swing: float = 0.25  # relative day/night amplitude of the block
    elastic_volume: float = 250.0  # mean MW of each priced bid
    count_jitter: int = 0  # +- variation of layer counts between hours
    start: str = "2017-01-01"

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["profile"] = [dict(b.__dict__) for b in self.profile]
        return d

    @classmethod
    def from_dict(cls, record: dict) -> "SynthParams":
        known = set(cls.__dataclass_fields__)
        unknown = set(record) - known
        if unknown:
            raise InvalidArgumentError(f"unknown generator keys: {sorted(unknown)}")
        record = dict(record)
        if "profile" in record:
            record["profile"] = tuple(TechBand(**b) for b in record["profile"])
        return cls(**record)


def _distinct_prices(rng, lo, hi, n, resolution=0.1):
    # distinct prices on the exchange's 0.1 EUR grid
    grid_lo = int(np.ceil(lo / resolution))
    grid_hi = int(np.floor(hi / resolution))
    span = grid_hi - grid_lo + 1
    n = min(n, span)
    ticks = rng.choice(span, size=n, replace=False) + grid_lo
    return np.round(np.sort(ticks) * resolution, 1)


def _synthetic_hour(rng, date, hour, n_supply, n_demand, p: SynthParams) -> HourlyAuction:
    # supply: one large zero-price layer plus technology clusters
    shares = np.array([b.share for b in p.profile])
    counts = rng.multinomial(n_supply - 1, shares / shares.sum())
    offers = [BidLayer(round(float(p.must_run_volume * rng.uniform(0.85, 1.15)), 1), 0.0, SUPPLY)]
    used = {0.0}
    for band, count in zip(p.profile, counts):
        lo = max(band.price_lo, 0.1)
        prices = _distinct_prices(rng, lo, band.price_hi, count + 8)
        prices = [x for x in prices if x not in used][:count]
        while len(prices) < count:  # band too narrow for its share: spill upwards
            extra = round(float(rng.uniform(lo, MARKET_MAX_PRICE)), 1)
            if extra not in used and extra not in prices:
                prices.append(extra)
        volumes = rng.lognormal(np.log(band.mean_volume), 0.8, size=count)
        for price, volume in zip(prices, volumes):
            used.add(float(price))
            offers.append(BidLayer(round(float(volume), 1) or 0.1, float(price), SUPPLY))
    # demand: a price-taking block at 0 EUR and an elastic tail
    swing = 1.0 + p.load_swing * np.sin(np.pi * (hour - 6) / 12.0)
    block = p.base_load * swing * rng.uniform(0.95, 1.05)
    bids = [BidLayer(round(float(block), 1), 0.0, DEMAND)]
    tail_prices = _distinct_prices(rng, 0.1, 400.0, n_demand - 1)
    tail_prices = np.where(rng.random(tail_prices.size) < 0.6,
                           np.round(tail_prices * 0.35, 1), tail_prices)
    tail_prices = np.unique(np.maximum(tail_prices, 0.1))
    while tail_prices.size < n_demand - 1:
        tail_prices = np.unique(np.append(tail_prices, round(float(rng.uniform(0.1, 400.0)), 1)))
    volumes = rng.lognormal(np.log(p.elastic_volume), 0.9, size=n_demand - 1)
    for price, volume in zip(tail_prices, volumes):
        bids.append(BidLayer(round(float(volume), 1) or 0.1, float(price), DEMAND))
    return HourlyAuction(date, hour, tuple(offers), tuple(bids))


def generate_synthetic_corpus(seed: int, hours: int, supply_layers: int | None = None,
                              demand_layers: int | None = None,
                              params: SynthParams | None = None) -> Corpus:
    """Deterministic pseudo-random corpus of ``hours`` consecutive hourly auctions.

    Supply prices cluster in the technology bands of ``params.profile``;
    demand is a large zero-price block (a 3000 EUR bid once the curve is
    built) plus an elastic tail.  Layer counts are exact unless
    ``params.count_jitter`` is set.
    """
    p = params or SynthParams()
    if supply_layers is not None or demand_layers is not None:
        p = SynthParams(**{**p.__dict__,
                           "supply_layers": supply_layers or p.supply_layers,
                           "demand_layers": demand_layers or p.demand_layers})
    if hours < 1 or p.supply_layers < 1 or p.demand_layers < 1:
        raise InvalidArgumentError("hours and layer counts must be >= 1")
    rng = np.random.default_rng(seed)
    start = dt.datetime.combine(parse_date(p.start), dt.time())
    auctions = []
    for i in range(hours):
        stamp = start + dt.timedelta(hours=i)
        jitter = p.count_jitter
        n_s = p.supply_layers + (int(rng.integers(-jitter, jitter + 1)) if jitter else 0)
        n_d = p.demand_layers + (int(rng.integers(-jitter, jitter + 1)) if jitter else 0)
        auctions.append(_synthetic_hour(rng, stamp.date(), stamp.hour + 1,
                                        max(n_s, 1), max(n_d, 1), p))
    provenance = {"generator": "synthetic", "seed": seed, "hours": hours, "params": p.to_dict()}
    return Corpus(tuple(auctions), provenance)


def layer_counts(auction: HourlyAuction) -> tuple[int, int]:
    return len(auction.offers), len(auction.bids)


def parse_rows(rows: Sequence[str], side: str) -> list[tuple[tuple[dt.date, int], BidLayer]]:
    """Parse data rows given as strings (no header); strict."""
    out = []
    for i, row in enumerate(rows, start=1):
        try:
            out.append(_parse_row(row.split(","), side))
        except ValueError as exc:
            raise ParseError("<rows>", [(i, str(exc))]) from None
    return out
