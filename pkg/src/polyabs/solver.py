"""SMT-LIB emission and the external solver process driver.

Validity of a closed query is decided by asserting the negation of its
body (outermost universals become free constants) and reading the solver's
check-sat answer: unsat means valid, sat yields a countermodel over those
constants, anything else is unknown.  One fresh solver process runs per
query; scripts are byte-deterministic for a given query.
"""

from __future__ import annotations

import os
import shlex
import shutil
import subprocess
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Optional

from . import formula as F
from .encode import CoreQuery
from .formula import Formula, LinTerm

VALID = "valid"
INVALID = "invalid"
UNKNOWN = "unknown"


class SolverUnavailable(Exception):
    pass


@dataclass(frozen=True)
class SolverVerdict:
    status: str  # "valid" | "invalid" | "unknown"
    countermodel: Optional[dict[str, int]] = None
    reason: Optional[str] = None  # "timeout" | "solver-unknown" | "process-error"
    output: str = ""

    @property
    def is_valid(self) -> bool:
        return self.status == VALID

    @property
    def is_invalid(self) -> bool:
        return self.status == INVALID

    @property
    def decided(self) -> bool:
        return self.status in (VALID, INVALID)


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------

def term_to_smt(t: LinTerm) -> str:
    def lit(k: int) -> str:
        return str(k) if k >= 0 else f"(- {-k})"

    parts = []
    for v, c in t.coeffs:
        parts.append(v if c == 1 else f"(* {lit(c)} {v})")
    if t.const != 0 or not parts:
        parts.append(lit(t.const))
    if len(parts) == 1:
        return parts[0]
    return f"(+ {' '.join(parts)})"


def formula_to_smt(f: Formula) -> str:
    if isinstance(f, F.BoolLit):
        return "true" if f.value else "false"
    if isinstance(f, F.Cmp):
        return f"({f.op} {term_to_smt(f.lhs)} {term_to_smt(f.rhs)})"
    if isinstance(f, F.Not):
        return f"(not {formula_to_smt(f.sub)})"
    if isinstance(f, F.And):
        return f"(and {' '.join(formula_to_smt(s) for s in f.subs)})"
    if isinstance(f, F.Or):
        return f"(or {' '.join(formula_to_smt(s) for s in f.subs)})"
    if isinstance(f, F.Implies):
        return f"(=> {formula_to_smt(f.lhs)} {formula_to_smt(f.rhs)})"
    if isinstance(f, F.Iff):
        return f"(= {formula_to_smt(f.lhs)} {formula_to_smt(f.rhs)})"
    if isinstance(f, (F.Exists, F.Forall)):
        binder = "exists" if isinstance(f, F.Exists) else "forall"
        decls = " ".join(f"({n} Int)" for n in f.names)
        guards = " ".join(f"(>= {n} 0)" for n in f.names)
        guard = guards if len(f.names) == 1 else f"(and {guards})"
        body = formula_to_smt(f.body)
        if binder == "exists":
            return f"(exists ({decls}) (and {guard} {body}))"
        return f"(forall ({decls}) (=> {guard} {body}))"
    raise TypeError(f"unknown formula node {f!r}")


def outer_universals(f: Formula) -> tuple[tuple[str, ...], Formula]:
    names: list[str] = []
    while isinstance(f, F.Forall):
        names.extend(f.names)
        f = f.body
    return tuple(names), f


def emit_validity_script(query: CoreQuery) -> str:
    """SMT-LIB text whose check-sat answer is unsat iff the query is valid.

    Outermost universal variables become free natural constants so a sat
    answer carries a countermodel for them; remaining quantifiers stay.
    """
    names, body = outer_universals(query.formula)
    lines = [
        f"; {query.kind} {query.subject} tau={query.tau_form}",
        "(set-option :produce-models true)",
        "(set-logic LIA)",
    ]
    for n in names:
        lines.append(f"(declare-const {n} Int)")
        lines.append(f"(assert (>= {n} 0))")
    lines.append(f"(assert (not {formula_to_smt(body)}))")
    lines.append("(check-sat)")
    lines.append("(get-model)")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Model parsing
# ---------------------------------------------------------------------------

def _tokenize_sexpr(text: str) -> list[str]:
    out: list[str] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in "()":
            out.append(c)
            i += 1
        elif c.isspace():
            i += 1
        elif c == '"':
            j = i + 1
            while j < n and text[j] != '"':
                j += 1
            out.append(text[i:j + 1])
            i = j + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "()":
                j += 1
            out.append(text[i:j])
            i = j
    return out


def _parse_sexprs(tokens: list[str]) -> list:
    stack: list[list] = [[]]
    for tok in tokens:
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                continue  # stray close, ignore
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    return stack[0]

def _int_of(node) -> Optional[int]:
    if isinstance(node, str):
        try:
            return int(node)
        except ValueError:
            return None
    if (isinstance(node, list) and len(node) == 2 and node[0] == "-"):
        inner = _int_of(node[1])
        return -inner if inner is not None else None
    return None


def parse_model(text: str) -> Optional[dict[str, int]]:
    """Integer define-fun bindings from a get-model answer, or None."""
    nodes = _parse_sexprs(_tokenize_sexpr(text))
    bindings: dict[str, int] = {}
    found = False

    def walk(node) -> None:
        nonlocal found
        if not isinstance(node, list):
            return
        if (len(node) == 5 and node[0] == "define-fun"
                and node[2] == [] and node[3] == "Int"):
            value = _int_of(node[4])
            if value is not None:
                bindings[node[1]] = value
                found = True
            return
        for sub in node:
            walk(sub)

    for node in nodes:
        walk(node)
    return bindings if found else None


# ---------------------------------------------------------------------------
# Process driver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolverConfig:
    command: tuple[str, ...]
    timeout_ms: int = 60000
    env: Optional[dict[str, str]] = None

    @staticmethod
    def default(timeout_ms: int = 60000) -> "SolverConfig":
        command, env = _default_command()
        return SolverConfig(tuple(command), timeout_ms, env)

    @staticmethod
    def from_command(command: str, timeout_ms: int = 60000) -> "SolverConfig":
        return SolverConfig(tuple(shlex.split(command)), timeout_ms,
                            _node_env())


def _find_node_modules() -> Optional[str]:
    probe = Path.cwd()
    for base in (probe, *probe.parents):
        cand = base / "node_modules" / "z3-solver"
        if cand.is_dir():
            return str(base / "node_modules")
    npm = shutil.which("npm")
    if npm:
        try:
            root = subprocess.run([npm, "root", "-g"], capture_output=True,
                                  text=True, timeout=15).stdout.strip()
            if root and (Path(root) / "z3-solver").is_dir():
                return root
        except (OSError, subprocess.TimeoutExpired):
            pass
    return None


@lru_cache(maxsize=1)
def _node_modules_cached() -> Optional[str]:
    return _find_node_modules()


def _node_env() -> Optional[dict[str, str]]:
    root = _node_modules_cached()
    if root is None:
        return None
    env = dict(os.environ)
    existing = env.get("NODE_PATH")
    env["NODE_PATH"] = root if not existing else root + os.pathsep + existing
    return env


def _default_command() -> tuple[list[str], Optional[dict[str, str]]]:
    override = os.environ.get("POLYABS_SOLVER_CMD")
    if override:
        return shlex.split(override), _node_env()
    z3 = shutil.which("z3")
    if z3:
        return [z3, "-in"], None
    node = shutil.which("node")
    if node:
        wrapper = resources.files("polyabs").joinpath("data/z3_smt2.js")
        with resources.as_file(wrapper) as path:
            script = str(path)
        if _node_modules_cached() is not None:
            return [node, script], _node_env()
    raise SolverUnavailable(
        "no SMT solver found: install z3 on PATH, or node plus the "
        "z3-solver npm package, or set POLYABS_SOLVER_CMD")


def run(script: str, config: SolverConfig) -> SolverVerdict:
    """Run one script in a fresh solver process and interpret the answer."""
    try:
        proc = subprocess.run(
            list(config.command), input=script.encode(),
            capture_output=True, timeout=config.timeout_ms / 1000.0,
            env=config.env)
    except subprocess.TimeoutExpired:
        return SolverVerdict(UNKNOWN, reason="timeout")
    except OSError as exc:
        return SolverVerdict(UNKNOWN, reason="process-error", output=str(exc))

    text = proc.stdout.decode(errors="replace")
    answer = None
    rest_lines: list[str] = []
    for line in text.splitlines():
        stripped = line.strip()
        if answer is None and stripped in ("sat", "unsat", "unknown"):
            answer = stripped
            continue
        if answer is not None:
            rest_lines.append(line)
    if answer == "unsat":
        return SolverVerdict(VALID, output=text)
    if answer == "unknown":
        return SolverVerdict(UNKNOWN, reason="solver-unknown", output=text)
    if answer == "sat":
        model = parse_model("\n".join(rest_lines))
        if model is None:
            return SolverVerdict(UNKNOWN, reason="process-error", output=text)
        return SolverVerdict(INVALID, countermodel=model, output=text)
    stderr = proc.stderr.decode(errors="replace")
    return SolverVerdict(UNKNOWN, reason="process-error",
                         output=text + stderr)


def check_validity(query: CoreQuery, config: SolverConfig) -> SolverVerdict:
    """Emit, run, and restrict any countermodel to the outer universals."""
    script = emit_validity_script(query)
    verdict = run(script, config)
    if verdict.is_invalid:
        names, _ = outer_universals(query.formula)
        model = {n: verdict.countermodel.get(n, 0) for n in names}
        return SolverVerdict(INVALID, countermodel=model,
                             output=verdict.output)
    return verdict
