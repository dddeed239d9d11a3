"""Subprocess adapter for real analyzers.

Runs a command template with the rendered configuration arguments,
enforces the wall-clock deadline by killing the process group, and
extracts alarm identifiers from captured output with a line-wise regular
expression. Alarm identity is the join of the pattern's capture groups,
so distinct report lines that normalize to the same key are deduplicated.
"""

from __future__ import annotations

import logging
import os
import re
import shlex
import signal
import subprocess
import time
from dataclasses import dataclass

from .analyzers import AnalysisOutcome, AnalysisTask, Completed, Crashed, TimedOut
from .paramspace import Catalog, render_cli_args

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdapterConfig:
    """How to invoke one external analyzer.

    ``command`` is a template with ``{program}`` and ``{args}``
    placeholders. ``pattern`` is applied to each output line; a match
    yields one alarm whose id is the capture groups joined by ``join``
    (the whole match if there are no groups). With an empty
    ``env_passthrough`` the child inherits the full environment;
    otherwise only the named variables plus PATH are forwarded.
    """

    command: str
    pattern: str
    join: str = ":"
    env_passthrough: tuple[str, ...] = ()
    grace: float = 2.0


class SubprocessAnalyzer:
    def __init__(self, adapter: AdapterConfig, catalog: Catalog):
        self.adapter = adapter
        self.catalog = catalog
        self._pattern = re.compile(adapter.pattern)

    def command_argv(self, task: AnalysisTask) -> list[str]:
        args = render_cli_args(task.config, self.catalog)
        cmdline = self.adapter.command.format(
            program=task.program_ref, args=shlex.join(args)
        )
        return shlex.split(cmdline)

    def _child_env(self) -> dict[str, str] | None:
        names = self.adapter.env_passthrough
        if not names:
            return None
        env = {name: os.environ[name] for name in names if name in os.environ}
        env.setdefault("PATH", os.environ.get("PATH", ""))
        return env

    def run(self, task: AnalysisTask) -> AnalysisOutcome:
        try:
            argv = self.command_argv(task)
        except Exception as exc:
            return Crashed(exit_info=f"cannot build command: {exc}")
        start = time.monotonic()
        try:
            proc = subprocess.Popen(
                argv,
                stdout=subprocess.PIPE,
                stderr=subprocess.STDOUT,
                text=True,
                env=self._child_env(),
                start_new_session=True,
            )
        except OSError as exc:
            return Crashed(exit_info=f"spawn failed: {exc}")
        try:
            output, _ = proc.communicate(timeout=task.timeout)
        except subprocess.TimeoutExpired:
            self._kill_group(proc)
            try:
                proc.communicate(timeout=self.adapter.grace)
            except subprocess.TimeoutExpired:
                proc.kill()
            return TimedOut(wall_time=time.monotonic() - start)
        wall = time.monotonic() - start
        if proc.returncode != 0:
            return Crashed(exit_info=f"exit status {proc.returncode}")
        alarms, anomalies = self.extract_alarms(output or "")
        if anomalies:
            log.warning("%d output line(s) matched the alarm pattern incompletely", anomalies)
        return Completed(alarms=alarms, wall_time=wall)

    @staticmethod
    def _kill_group(proc: subprocess.Popen) -> None:
        try:
            os.killpg(proc.pid, signal.SIGKILL)
        except (ProcessLookupError, PermissionError):
            proc.kill()

    def extract_alarms(self, output: str) -> tuple[frozenset[str], int]:
        alarms: set[str] = set()
        anomalies = 0
        for line in output.splitlines():
            match = self._pattern.search(line)
            if match is None:
                continue
            groups = match.groups()
            if not groups:
                alarms.add(match.group(0))
            elif any(g is None for g in groups):
                anomalies += 1
            else:
                alarms.add(self.adapter.join.join(groups))
        return frozenset(alarms), anomalies
