"""Corpus metrics and critic analytics over finished sessions.

Pass rates are computed on each session's final plan under every
applicable critic, whatever critic subset drove the loop:

* micro: passed constraint instances / applicable constraint instances,
  per group (commonsense, hard);
* macro: share of queries whose final plan passes every applicable
  constraint of the group;
* final pass: share of queries passing every applicable constraint of
  both groups;
* delivery: share of sessions that produced a schema-valid plan.

An undelivered session fails all of its applicable constraints.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .critics import CRITIC_IDS, CriticVerdict, applicable_critics
from .metacontroller import SessionResult

REPORT_COLUMNS = (
    ("delivery_rate", "Delivery Rate"),
    ("commonsense_micro", "Commonsense Micro"),
    ("commonsense_macro", "Commonsense Macro"),
    ("hard_micro", "Hard Micro"),
    ("hard_macro", "Hard Macro"),
    ("final_pass_rate", "Final Pass Rate"),
)


@dataclass(frozen=True)
class CooccurrenceMatrix:
    """Counts of iterations in which two critics both fired; diagonal = firings."""

    ids: tuple[str, ...] = ()
    counts: tuple[tuple[int, ...], ...] = ()

    def get(self, a: str, b: str) -> int:
        if a not in self.ids or b not in self.ids:
            return 0
        return self.counts[self.ids.index(a)][self.ids.index(b)]

    def conditional(self) -> tuple[tuple[float, ...], ...]:
        """Row-normalized view: share of C1's firings in which C2 also fired."""
        return tuple(
            tuple((c / row[i]) if row[i] else 0.0 for c in row)
            for i, row in enumerate(self.counts)
        )

    def to_dict(self) -> dict:
        return {"ids": list(self.ids), "counts": [list(r) for r in self.counts]}

    @classmethod
    def from_dict(cls, d: dict) -> "CooccurrenceMatrix":
        return cls(tuple(d["ids"]), tuple(tuple(r) for r in d["counts"]))


@dataclass(frozen=True)
class EvalReport:
    corpus_size: int
    delivery_rate: float
    commonsense_micro: float
    commonsense_macro: float
    hard_micro: float
    hard_macro: float
    final_pass_rate: float
    per_query: tuple[dict, ...] = ()
    critic_frequency: dict = field(default_factory=dict)
    cooccurrence: CooccurrenceMatrix = field(default_factory=CooccurrenceMatrix)
    pass_by_iteration: tuple[float, ...] = ()
    label: str = ""

    def metrics(self) -> dict:
        return {key: getattr(self, key) for key, _ in REPORT_COLUMNS}

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "corpus_size": self.corpus_size,
            **self.metrics(),
            "pass_by_iteration": list(self.pass_by_iteration),
            "critic_frequency": dict(self.critic_frequency),
            "cooccurrence": self.cooccurrence.to_dict(),
            "per_query": [dict(r) for r in self.per_query],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(
            corpus_size=d["corpus_size"],
            **{key: d[key] for key, _ in REPORT_COLUMNS},
            per_query=tuple(d.get("per_query", ())),
            critic_frequency=dict(d.get("critic_frequency", {})),
            cooccurrence=CooccurrenceMatrix.from_dict(d.get("cooccurrence", {"ids": [], "counts": []})),
            pass_by_iteration=tuple(d.get("pass_by_iteration", ())),
            label=d.get("label", ""),
        )


def _pct(num: int, den: int) -> float:
    return 100.0 * num / den if den else 100.0


def final_verdicts(s: SessionResult) -> tuple[CriticVerdict, ...]:
    if s.delivered:
        return s.final_evaluation
    return tuple(
        CriticVerdict(c.critic_id, c.group, False, f"[{c.title}] no plan was delivered")
        for c in applicable_critics(s.query)
    )


def _passes(verdicts, group: str | None = None) -> bool:
    return all(v.passed for v in verdicts if group is None or v.group == group)


def _id_order(ids) -> list[str]:
    known = [i for i in CRITIC_IDS if i in ids]
    return known + sorted(set(ids) - set(CRITIC_IDS))


def critic_frequency(sessions: Sequence[SessionResult]) -> dict[str, int]:
    """Failing verdicts per critic over every iteration of every session."""
    counts = {cid: 0 for cid in CRITIC_IDS}
    for s in sessions:
        for t in s.traces:
            for v in t.verdicts:
                if not v.passed:
                    counts[v.critic_id] = counts.get(v.critic_id, 0) + 1
    return {cid: counts[cid] for cid in _id_order(counts)}


def critic_cooccurrence(sessions: Sequence[SessionResult]) -> CooccurrenceMatrix:
    """Pairwise co-firing counts over iterations, labeled by critics that ever fired."""
    fired_sets = [set(t.fired) for s in sessions for t in s.traces]
    ids = _id_order(set().union(*fired_sets) if fired_sets else set())
    counts = tuple(
        tuple(sum(1 for f in fired_sets if a in f and b in f) for b in ids)
        for a in ids
    )
    return CooccurrenceMatrix(tuple(ids), counts)


def pass_by_iteration(sessions: Sequence[SessionResult]) -> tuple[float, ...]:
    """Entry k-1: share of sessions that ended on a final-passing plan within k iterations."""
    if not sessions:
        return ()
    horizon = max(max(s.max_iterations, s.iterations_used) for s in sessions)
    passing = [s.iterations_used for s in sessions if s.delivered and _passes(final_verdicts(s))]
    return tuple(
        _pct(sum(1 for used in passing if used <= k), len(sessions))
        for k in range(1, horizon + 1)
    )


def evaluate_corpus(sessions: Sequence[SessionResult], label: str = "") -> EvalReport:
    if not sessions:
        raise ValueError("cannot evaluate an empty corpus")
    # order-independent: aggregate over a canonical ordering
    ordered = sorted(sessions, key=lambda s: (s.session_id, json.dumps(s.summary(), sort_keys=True)))
    c_pass = c_total = h_pass = h_total = 0
    c_macro = h_macro = final = delivered = 0
    rows = []
    for s in ordered:
        verdicts = final_verdicts(s)
        common = [v for v in verdicts if v.group == "commonsense"]
        hard = [v for v in verdicts if v.group == "hard"]
        c_pass += sum(v.passed for v in common)
        c_total += len(common)
        h_pass += sum(v.passed for v in hard)
        h_total += len(hard)
        ok_c = s.delivered and _passes(common)
        ok_h = s.delivered and _passes(hard)
        c_macro += ok_c
        h_macro += ok_h
        final += ok_c and ok_h
        delivered += s.delivered
        rows.append({
            "session_id": s.session_id,
            "delivered": s.delivered,
            "all_passed": s.all_passed,
            "final_pass": bool(ok_c and ok_h),
            "iterations_used": s.iterations_used,
            "selector": s.selector,
            "verdicts": {v.critic_id: v.passed for v in verdicts},
        })
    n = len(ordered)
    return EvalReport(
        corpus_size=n,
        delivery_rate=_pct(delivered, n),
        commonsense_micro=_pct(c_pass, c_total) if any(s.delivered for s in ordered) else 0.0,
        commonsense_macro=_pct(c_macro, n),
        hard_micro=_pct(h_pass, h_total) if any(s.delivered for s in ordered) else 0.0,
        hard_macro=_pct(h_macro, n),
        final_pass_rate=_pct(final, n),
        per_query=tuple(rows),
        critic_frequency=critic_frequency(ordered),
        cooccurrence=critic_cooccurrence(ordered),
        pass_by_iteration=pass_by_iteration(ordered),
        label=label,
    )


# --- rendering -----------------------------------------------------------------


def fmt_pct(value: float) -> str:
    """Up to two decimals, trailing zeros dropped: 100, 84.9, 93.75."""
    return f"{value:.2f}".rstrip("0").rstrip(".")


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def frequency_csv(freq: dict[str, int]) -> str:
    return _csv([("critic_id", "count"), *freq.items()])


def cooccurrence_csv(m: CooccurrenceMatrix, conditional: bool = False) -> str:
    values = m.conditional() if conditional else m.counts
    rows = [("critic_id", *m.ids)]
    for cid, row in zip(m.ids, values):
        rows.append((cid, *(f"{x:.4f}" if conditional else x for x in row)))
    return _csv(rows)


def pass_by_iteration_csv(curve: Sequence[float]) -> str:
    return _csv([("iteration", "final_pass_rate"), *((k, fmt_pct(v)) for k, v in enumerate(curve, start=1))])


def render_report(r: EvalReport, fmt: str = "markdown") -> str:
    """Render as ``json``, ``csv`` (one metrics row) or ``markdown`` (metrics table)."""
    if fmt == "json":
        return json.dumps(r.to_dict(), indent=2)
    if fmt == "csv":
        header = ["label", "corpus_size"] + [key for key, _ in REPORT_COLUMNS]
        row = [r.label, r.corpus_size] + [fmt_pct(getattr(r, key)) for key, _ in REPORT_COLUMNS]
        return _csv([header, row])
    if fmt == "markdown":
        titles = [title for _, title in REPORT_COLUMNS]
        lines = [
            "| Model | " + " | ".join(titles) + " |",
            "|---|" + "---|" * len(titles),
            f"| {r.label or '-'} | " + " | ".join(fmt_pct(getattr(r, key)) for key, _ in REPORT_COLUMNS) + " |",
        ]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}; expected json, csv or markdown")


def write_report_files(r: EvalReport, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "report.json": render_report(r, "json") + "\n",
        "report.csv": render_report(r, "csv"),
        "report.md": render_report(r, "markdown"),
    }
    files.update(analytics_files(r.critic_frequency, r.cooccurrence, r.pass_by_iteration))
    paths = []
    for name, text in files.items():
        path = out / name
        path.write_text(text, encoding="utf-8")
        paths.append(path)
    return paths


def analytics_files(freq, matrix: CooccurrenceMatrix, curve) -> dict[str, str]:
    return {
        "frequency.csv": frequency_csv(freq),
        "cooccurrence.csv": cooccurrence_csv(matrix),
        "pass_by_iteration.csv": pass_by_iteration_csv(curve),
    }
