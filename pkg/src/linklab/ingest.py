"""Parsing and writing of timestamped link logs.

Canonical format: UTF-8 TSV with LF line endings and no header, one link
per line::

    source_url<TAB>source_ts<TAB>target_url<TAB>target_ts

Timestamps are non-negative numbers (epoch seconds in real data; any
consistent unit works).  Lines whose target timestamp exceeds the source
timestamp are dropped as impossible (a page cannot link to one that does
not exist yet); equal timestamps are kept.  Structurally broken lines
(wrong field count, empty URLs, unparsable or negative timestamps,
self-links) are skipped and counted, never fatal.

A page is identified by its exact URL; its creation time is the earliest
timestamp at which the URL is observed on any kept line (the only choice
that is monotone under noisy, inconsistent timestamps).  Its host is the
URL's authority component, lowercased.
"""

import io
import os
from dataclasses import dataclass
from urllib.parse import urlsplit

import numpy as np

from .core import EdgeLog


@dataclass(frozen=True)
class RawLinkRecord:
    """One well-formed input line."""

    source_url: str
    source_ts: float
    target_url: str
    target_ts: float

    def __post_init__(self):
        if not self.source_url or not self.target_url:
            raise ValueError("URLs must be non-empty")
        if self.source_ts < 0 or self.target_ts < 0:
            raise ValueError("timestamps must be non-negative")


@dataclass
class IngestReport:
    """Counters from one parse; kept + dropped_future + dropped_malformed
    always equals lines_read."""

    lines_read: int = 0
    kept: int = 0
    dropped_future: int = 0
    dropped_malformed: int = 0
    distinct_pages: int = 0
    distinct_hosts: int = 0
    host_internal_fraction: float = 0.0

    def to_dict(self):
        return {
            "lines_read": self.lines_read,
            "kept": self.kept,
            "dropped_future": self.dropped_future,
            "dropped_malformed": self.dropped_malformed,
            "distinct_pages": self.distinct_pages,
            "distinct_hosts": self.distinct_hosts,
            "host_internal_fraction": self.host_internal_fraction,
        }


def _authority(url: str) -> str:
    netloc = urlsplit(url).netloc
    if not netloc:
        # scheme-less input: take everything up to the first slash
        netloc = url.split("/", 1)[0]
    return netloc.lower()


def _iter_lines(source):
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            yield from fh
        return
    if isinstance(source, (bytes, bytearray)):
        yield from io.BytesIO(bytes(source))
        return
    yield from source


def parse(source, fmt: str = "tsv") -> tuple[EdgeLog, IngestReport]:
    """Read a link log from a byte stream, path, or bytes.

    Returns the filtered ``EdgeLog`` (edges stably sorted by source
    timestamp, pages by creation time) and the ingest counters.  An empty
    result is legal.
    """
    if fmt != "tsv":
        raise ValueError(f"unsupported format {fmt!r}")
    report = IngestReport()
    records = []
    for raw in _iter_lines(source):
        report.lines_read += 1
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError:
                report.dropped_malformed += 1
                continue
        line = raw.rstrip("\r\n")
        fields = line.split("\t")
        if len(fields) != 4:
            report.dropped_malformed += 1
            continue
        su, st_s, tu, tt_s = fields
        try:
            st = float(st_s)
            tt = float(tt_s)
        except ValueError:
            report.dropped_malformed += 1
            continue
        if not su or not tu or su == tu or not np.isfinite(st) \
                or not np.isfinite(tt) or st < 0 or tt < 0:
            report.dropped_malformed += 1
            continue
        if tt > st:
            report.dropped_future += 1
            continue
        records.append((su, st, tu, tt))
    report.kept = len(records)

    # page identity: exact URL; creation = earliest observation on kept lines
    created: dict[str, float] = {}
    for su, st, tu, tt in records:
        if created.get(su, np.inf) > st:
            created[su] = st
        if created.get(tu, np.inf) > tt:
            created[tu] = tt
    order = {u: i for i, u in enumerate(created)}  # first-observation order
    urls = sorted(created, key=lambda u: (created[u], order[u]))
    index = {u: i for i, u in enumerate(urls)}

    host_index: dict[str, int] = {}
    page_host = np.empty(len(urls), dtype=np.int64)
    for i, u in enumerate(urls):
        a = _authority(u)
        page_host[i] = host_index.setdefault(a, len(host_index))
    host_names = list(host_index)

    records.sort(key=lambda r: r[1])  # stable: input order breaks ties
    e_src = [index[r[0]] for r in records]
    e_tgt = [index[r[2]] for r in records]
    e_time = [r[1] for r in records]

    internal = sum(1 for s, t in zip(e_src, e_tgt)
                   if page_host[s] == page_host[t])
    report.distinct_pages = len(urls)
    report.distinct_hosts = len(host_names)
    report.host_internal_fraction = internal / len(records) if records else 0.0

    log = EdgeLog(urls, page_host, [created[u] for u in urls],
                  e_src, e_tgt, e_time,
                  n_hosts=max(len(host_names), 1) if urls else 0,
                  host_names=host_names)
    return log, report


def _format_ts(t: float) -> str:
    return str(int(t)) if float(t).is_integer() else repr(float(t))


def _page_url(log: EdgeLog, i: int) -> str:
    pid = log.page_ids[i]
    if isinstance(pid, str):
        return pid
    return f"http://h{int(log.page_host[i])}/p{pid}"


def write(log: EdgeLog, sink) -> None:
    """Emit the canonical TSV.

    Pages with synthetic integer ids (simulator output) are written as
    ``http://h<host>/p<id>`` so the authority maps back to the host on
    re-parse.  ``parse(write(log))`` reproduces the edge multiset, the
    creation times, and the host assignment of every edge-incident page
    (isolated pages have no line to live on).  Float times round-trip
    exactly.
    """
    own = isinstance(sink, (str, os.PathLike))
    fh = open(sink, "wb") if own else sink
    try:
        for s, t, ts in zip(log.edge_src, log.edge_tgt, log.edge_time):
            line = "\t".join((
                _page_url(log, int(s)), _format_ts(float(ts)),
                _page_url(log, int(t)), _format_ts(float(log.page_created[t])),
            ))
            fh.write(line.encode("utf-8") + b"\n")
    finally:
        if own:
            fh.close()
