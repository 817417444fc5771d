"""External SMT solver discovery and one-shot script execution.

Discovery order: the ``RDTV_SOLVER`` environment variable (path to any
executable that accepts an ``.smt2`` file argument and prints results), a
native ``z3`` on PATH, then the ``z3-solver`` npm package driven through
the bundled Node shim (``solver_shim/z3cli.mjs``).

One solver process is spawned per script; the process is killed at the
wall-clock timeout. Scripts additionally carry a soft ``(set-option
:timeout …)`` so the solver usually returns ``unknown`` gracefully first.
"""

from __future__ import annotations

import os
import shutil
import subprocess
import tempfile
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

_SHIM = Path(__file__).parent / "solver_shim" / "z3cli.mjs"


class SolverNotFound(Exception):
    pass


@dataclass(frozen=True)
class SolverCommand:
    argv: tuple[str, ...]  # invoked as argv + [script-path]
    env: tuple[tuple[str, str], ...] = ()
    description: str = ""

    def command_for(self, script_path: str) -> list[str]:
        return list(self.argv) + [script_path]


@lru_cache(maxsize=1)
def _npm_global_root() -> str | None:
    npm = shutil.which("npm")
    if npm is None:
        return None
    try:
        out = subprocess.run(
            [npm, "root", "-g"], capture_output=True, text=True, timeout=30
        )
    except (OSError, subprocess.TimeoutExpired):
        return None
    root = out.stdout.strip()
    return root or None


def _node_shim_command() -> SolverCommand | None:
    node = shutil.which("node")
    if node is None or not _SHIM.exists():
        return None
    candidates: list[str] = []
    env_path = os.environ.get("NODE_PATH")
    if env_path:
        candidates.append(env_path)
    root = _npm_global_root()
    if root:
        candidates.append(root)
    for node_path in candidates:
        if (Path(node_path) / "z3-solver").exists():
            return SolverCommand(
                (node, str(_SHIM)),
                (("NODE_PATH", node_path),),
                "z3 (wasm via node shim)",
            )
    return None


def find_solver(explicit: str | None = None) -> SolverCommand:
    """Locate the SMT solver; raises :class:`SolverNotFound`."""
    path = explicit or os.environ.get("RDTV_SOLVER")
    if path:
        resolved = shutil.which(path) or (path if os.path.exists(path) else None)
        if resolved is None:
            raise SolverNotFound(f"solver executable not found: {path}")
        return SolverCommand((resolved,), (), f"{path} (explicit)")
    native = shutil.which("z3")
    if native is not None:
        return SolverCommand((native,), (), "z3 (native)")
    shim = _node_shim_command()
    if shim is not None:
        return shim
    raise SolverNotFound(
        "no SMT solver found: set RDTV_SOLVER, install z3 on PATH, "
        "or `npm install -g z3-solver` for the bundled wasm shim"
    )


@dataclass
class SolverRun:
    status: str  # 'sat' | 'unsat' | 'unknown' | 'timeout' | 'error'
    output: str
    duration_ms: int


def run_script(
    script_text: str,
    timeout_ms: int,
    solver: SolverCommand | None = None,
    keep_path: str | None = None,
) -> SolverRun:
    """Run one SMT-LIB script in a fresh solver process."""
    import time

    if solver is None:
        solver = find_solver()
    env = dict(os.environ)
    env.update(dict(solver.env))
    if keep_path is not None:
        path = keep_path
        Path(path).write_text(script_text)
        cleanup = False
    else:
        fd, path = tempfile.mkstemp(suffix=".smt2", prefix="rdtv-")
        with os.fdopen(fd, "w") as f:
            f.write(script_text)
        cleanup = True
    start = time.monotonic()
    try:
        proc = subprocess.run(
            solver.command_for(path),
            capture_output=True,
            text=True,
            timeout=max(1.0, timeout_ms / 1000.0 + 10.0),
            env=env,
        )
        output = proc.stdout + (("\n" + proc.stderr) if proc.stderr.strip() else "")
    except subprocess.TimeoutExpired:
        return SolverRun("timeout", "", int((time.monotonic() - start) * 1000))
    except OSError as exc:
        return SolverRun("error", str(exc), int((time.monotonic() - start) * 1000))
    finally:
        if cleanup:
            try:
                os.unlink(path)
            except OSError:
                pass
    duration = int((time.monotonic() - start) * 1000)
    first = next((line.strip() for line in output.splitlines() if line.strip()), "")
    if first == "sat":
        return SolverRun("sat", output, duration)
    if first == "unsat":
        return SolverRun("unsat", output, duration)
    if first == "unknown":
        return SolverRun("unknown", output, duration)
    return SolverRun("error", output, duration)
