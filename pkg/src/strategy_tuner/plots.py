"""Static evolution charts from a recorded trace.

Emits one plain-text file per parameter (base point and exploration
parameter per iteration, with a sparkline) plus an alarm-count chart.
Output is a pure function of the trace, so replotting is byte-identical.
"""

from __future__ import annotations

from pathlib import Path

from .analyzers import Completed
from .distributions import Bernoulli, BernoulliVector, Poisson
from .lattice import format_value
from .orchestrator import IterationRecord

_LEVELS = "▁▂▃▄▅▆▇█"


def sparkline(series: list[float]) -> str:
    if not series:
        return ""
    lo, hi = min(series), max(series)
    if hi == lo:
        return _LEVELS[3] * len(series)
    span = hi - lo
    return "".join(_LEVELS[min(7, int((x - lo) / span * 8))] for x in series)


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else f"{x:.6g}"


def _base_magnitude(record: IterationRecord, name: str) -> float:
    from .analyzers import precision_contribution

    return precision_contribution(record.distributions_after[name].base)


def _delta_summary(record: IterationRecord, name: str) -> tuple[str, float]:
    delta = record.distributions_after[name].delta
    if isinstance(delta, Poisson):
        return "lambda", delta.lam
    if isinstance(delta, Bernoulli):
        return "q", delta.q
    assert isinstance(delta, BernoulliVector)
    return "mean_q", sum(delta.qs) / delta.width


def write_param_chart(records: list[IterationRecord], name: str, path: Path) -> None:
    lines = [f"parameter: {name}", ""]
    delta_label, _ = _delta_summary(records[0], name)
    lines.append(f"{'iter':>4}  {'base':>12}  {delta_label:>12}")
    bases, deltas = [], []
    for record in records:
        base = record.distributions_after[name].base
        _, delta_value = _delta_summary(record, name)
        bases.append(_base_magnitude(record, name))
        deltas.append(delta_value)
        lines.append(f"{record.index:>4}  {format_value(base):>12}  {_fmt(delta_value):>12}")
    lines.append("")
    lines.append(f"base:  {sparkline(bases)}")
    lines.append(f"{delta_label}: {sparkline(deltas)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_alarm_chart(records: list[IterationRecord], path: Path) -> None:
    lines = ["alarms per iteration (best completed analysis)", ""]
    lines.append(f"{'iter':>4}  {'completed':>9}  {'best':>6}")
    series = []
    for record in records:
        counts = [len(o.alarms) for o in record.outcomes if isinstance(o, Completed)]
        best = min(counts) if counts else None
        series.append(float(best) if best is not None else -1.0)
        shown = str(best) if best is not None else "-"
        lines.append(f"{record.index:>4}  {record.completed:>9}  {shown:>6}")
    lines.append("")
    lines.append(f"best: {sparkline([x for x in series])}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_plots(records: list[IterationRecord], out_dir: Path) -> list[Path]:
    """One chart file per parameter plus the alarm chart."""
    if not records:
        raise ValueError("cannot plot an empty trace")
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for name in records[0].distributions_before:
        path = out_dir / f"param-{name}.txt"
        write_param_chart(records, name, path)
        written.append(path)
    alarm_path = out_dir / "alarms.txt"
    write_alarm_chart(records, alarm_path)
    written.append(alarm_path)
    return written
