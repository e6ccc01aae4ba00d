"""Compliance checker for external learner processes.

Replays a golden request transcript against a candidate adapter command and
verifies the responses: handshake behaviour, error codes for malformed
traffic, bundle shape and simplex validity, deterministic replay, and clean
shutdown on end-of-input.  The transcript ships with the package so every
adapter implementation is held to the same bar.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from tempfile import TemporaryDirectory

import numpy as np

from ..core.bundle import PredictionBundle
from ..errors import AdapterError, AlbenchError
from . import protocol
from .client import AdapterClient

TRANSCRIPT_RESOURCE = "golden_transcript.jsonl"
DATASET_PLACEHOLDER = "$DATASET"
DATASET_FILENAME = "adapter-check.csv"

STEP_TIMEOUT = 60.0

# Tiny linearly separable pool written verbatim so every run of the checker
# presents the exact same bytes to the adapter under test.
TOY_DATASET_CSV = """feature_0,feature_1,target
-1.2,0.1,0
-0.9,-0.3,0
-1.1,0.4,0
-0.8,0.0,0
-1.3,-0.2,0
-1.0,0.25,0
-0.7,-0.15,0
-1.15,0.05,0
1.1,0.2,1
0.9,-0.1,1
1.3,0.35,1
0.8,-0.25,1
1.2,0.0,1
1.0,0.15,1
0.75,-0.05,1
1.25,0.3,1
"""


@dataclass(frozen=True)
class CheckStep:
    """Outcome of one transcript step or session-level assertion."""

    name: str
    ok: bool
    detail: str = ""


@dataclass
class CheckReport:
    """Aggregate result of an adapter compliance run."""

    command: str
    steps: list[CheckStep] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(step.ok for step in self.steps)

    def lines(self) -> list[str]:
        out = []
        for step in self.steps:
            mark = "PASS" if step.ok else "FAIL"
            line = f"{mark}  {step.name}"
            if step.detail and not step.ok:
                line += f": {step.detail}"
            out.append(line)
        verdict = "COMPLIANT" if self.passed else "NOT COMPLIANT"
        out.append(f"{verdict}: {self.command}")
        return out


def load_transcript(path: str | Path | None = None) -> list[dict]:
    """Read transcript steps from *path* or from the packaged golden file."""
    if path is None:
        text = resources.files(__package__).joinpath(TRANSCRIPT_RESOURCE).read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    steps = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            step = json.loads(line)
        except json.JSONDecodeError as exc:
            raise AlbenchError(f"transcript line {lineno} is not valid JSON: {exc}") from exc
        for key in ("session", "name", "send", "expect"):
            if key not in step:
                raise AlbenchError(f"transcript line {lineno} is missing {key!r}")
        steps.append(step)
    if not steps:
        raise AlbenchError("transcript holds no steps")
    return steps


def write_check_dataset(directory: str | Path) -> Path:
    """Materialize the deterministic toy pool used by the checker."""
    path = Path(directory) / DATASET_FILENAME
    path.write_text(TOY_DATASET_CSV, "utf-8")
    return path


def _substitute(message: dict, dataset: str) -> dict:
    out = dict(message)
    for key, value in out.items():
        if value == DATASET_PLACEHOLDER:
            out[key] = dataset
    return out


def _mismatches(expect: dict, response: dict, require_keys: list[str]) -> list[str]:
    problems = []
    for key, want in expect.items():
        got = response.get(key)
        if got != want:
            problems.append(f"{key}={got!r}, wanted {want!r}")
    for key in require_keys:
        if key not in response:
            problems.append(f"missing key {key!r}")
    return problems


def _check_bundle(response: dict, spec: dict) -> list[str]:
    problems = []
    try:
        indices, arrays = protocol.decode_bundle_fields(response)
    except AlbenchError as exc:
        return [f"undecodable bundle: {exc}"]
    if len(indices) != spec["rows"]:
        problems.append(f"{len(indices)} rows, wanted {spec['rows']}")
    for name in spec["fields"]:
        if name not in arrays:
            problems.append(f"missing field {name!r}")
    if problems or spec["rows"] == 0:
        return problems
    kwargs = {}
    for name, value in arrays.items():
        if name == "entropy_maps":
            kwargs[name] = tuple(np.asarray(m) for m in value)
        else:
            kwargs[name] = np.asarray(value)
    try:
        PredictionBundle(indices=tuple(indices), **kwargs)
    except AlbenchError as exc:
        problems.append(f"bundle invariants violated: {exc}")
    return problems


class _SessionRun:
    """Responses and canonical bundle lines from one replayed session."""

    def __init__(self) -> None:
        self.steps: list[CheckStep] = []
        self.bundle_lines: list[str] = []


def _play_session(
    command: str | list[str],
    steps: list[dict],
    dataset: str,
    label: str,
) -> _SessionRun:
    run = _SessionRun()
    client = AdapterClient(command)
    failed_transport = False
    try:
        for step in steps:
            name = f"[{label}] {step['name']}"
            message = _substitute(step["send"], dataset)
            try:
                response = client.send_raw(message, timeout=STEP_TIMEOUT)
            except AdapterError as exc:
                run.steps.append(CheckStep(name, False, str(exc)))
                failed_transport = True
                break
            problems = _mismatches(step["expect"], response, step.get("require_keys", []))
            if not problems and "bundle" in step:
                problems = _check_bundle(response, step["bundle"])
            if response.get("kind") == protocol.BUNDLE:
                run.bundle_lines.append(protocol.encode_message(response))
            detail = "; ".join(problems)
            run.steps.append(CheckStep(name, not problems, detail))
    finally:
        client.close()
    code = client.returncode
    if failed_transport:
        run.steps.append(CheckStep(f"[{label}] exits cleanly on end of input", False, "session aborted before shutdown"))
    else:
        run.steps.append(
            CheckStep(
                f"[{label}] exits cleanly on end of input",
                code == 0,
                f"exit code {code}",
            )
        )
    return run


def run_check(
    command: str | list[str],
    transcript_path: str | Path | None = None,
    workdir: str | Path | None = None,
) -> CheckReport:
    """Replay the golden transcript against *command* and report compliance.

    The main session is replayed twice; the bundle responses must repeat
    byte for byte (after canonical JSON re-encoding) so that experiment
    replays stay deterministic.
    """
    steps = load_transcript(transcript_path)
    sessions: dict[str, list[dict]] = {}
    for step in steps:
        sessions.setdefault(step["session"], []).append(step)

    display = command if isinstance(command, str) else " ".join(command)
    report = CheckReport(command=display)

    def _run_all(directory: Path) -> None:
        dataset = str(write_check_dataset(directory))
        replays: dict[str, _SessionRun] = {}
        for session_name, session_steps in sessions.items():
            run = _play_session(command, session_steps, dataset, session_name)
            report.steps.extend(run.steps)
            replays[session_name] = run
        main = replays.get("main")
        if main is None or not all(s.ok for s in main.steps):
            report.steps.append(
                CheckStep("[determinism] repeated replay matches", False, "main session did not pass")
            )
            return
        second = _play_session(command, sessions["main"], dataset, "main replay")
        report.steps.extend(second.steps)
        same = main.bundle_lines == second.bundle_lines
        detail = "" if same else "bundle responses differ between identical sessions"
        report.steps.append(CheckStep("[determinism] repeated replay matches", same, detail))

    if workdir is None:
        with TemporaryDirectory(prefix="adapter-check-") as tmp:
            _run_all(Path(tmp))
    else:
        Path(workdir).mkdir(parents=True, exist_ok=True)
        _run_all(Path(workdir))
    return report
