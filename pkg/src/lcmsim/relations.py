"""Computational-power relations between (light model, scheduler) pairs.

Two kinds of base fact are kept:

* ``Dominates(X, Y)``: every problem solvable in ``Y`` is solvable in ``X``.
* ``Separates(X, Y, problem)``: ``problem`` is solvable in ``X`` but not in ``Y``.

The closure applies transitivity of dominance and pushes separations
outward (a stronger solver, a weaker non-solver).  Each derived fact
remembers the rule and premises that produced it, so any answer can be
unwound into a chain back to base facts.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Optional

from .engine import Model

SCHEDULERS = ("F", "S", "A")
SCHEDULER_NAMES = {"F": "FSYNC", "S": "SSYNC", "A": "ASYNC"}

EQUIVALENT = "≡"
STRONGER = ">"
WEAKER = "<"
INCOMPARABLE = "⊥"
UNKNOWN = "unknown"
INCONSISTENT = "inconsistent"


@dataclass(frozen=True, order=True)
class ModelSched:
    model: str
    scheduler: str

    def __post_init__(self) -> None:
        if self.model not in {m.value for m in Model}:
            raise ValueError(f"unknown model {self.model!r}")
        if self.scheduler not in SCHEDULERS:
            raise ValueError(f"unknown scheduler {self.scheduler!r}")

    @classmethod
    def parse(cls, text: str) -> "ModelSched":
        """Accepts ``FSTA^A``, ``FSTA-A`` or ``FSTA^ASYNC`` (case-insensitive)."""
        raw = text.strip().upper()
        for sep in ("^", "-", "_", " "):
            if sep in raw:
                model, sched = raw.split(sep, 1)
                break
        else:
            raise ValueError(f"cannot parse {text!r}; expected MODEL^SCHEDULER")
        sched = {"FSYNC": "F", "SSYNC": "S", "ASYNC": "A"}.get(sched, sched)
        return cls(model, sched)

    def __str__(self) -> str:
        return f"{self.model}^{self.scheduler}"


def all_pairs() -> list[ModelSched]:
    return [ModelSched(m.value, s) for m in Model for s in SCHEDULERS]


@dataclass(frozen=True)
class Fact:
    kind: str  # "dominates" | "separates"
    x: ModelSched
    y: ModelSched
    problem: Optional[str] = None
    origin: str = "derived"  # axiom | imported | new | derived
    provenance: str = ""
    rule: Optional[str] = None
    premises: tuple["Fact", ...] = field(default=(), compare=False)

    @property
    def key(self) -> tuple:
        return (self.kind, self.x, self.y, self.problem)

    @property
    def is_base(self) -> bool:
        return self.rule is None

    def statement(self) -> str:
        if self.kind == "dominates":
            return f"{self.x} ≥ {self.y}"
        return f"{self.problem} separates {self.x} from {self.y}"

    def to_json(self) -> dict:
        out = {"kind": self.kind, "x": str(self.x), "y": str(self.y)}
        if self.problem is not None:
            out["problem"] = self.problem
        if self.is_base:
            out.update(origin=self.origin, provenance=self.provenance)
        else:
            out.update(rule=self.rule, premises=[p.to_json() for p in self.premises])
        return out


def _fact_from_json(d: dict) -> Fact:
    kind = d["kind"]
    if kind not in ("dominates", "separates"):
        raise ValueError(f"unknown fact kind {kind!r}")
    problem = d.get("problem")
    if kind == "separates" and not problem:
        raise ValueError("a separation needs a problem name")
    if not d.get("provenance"):
        raise ValueError(f"fact {d['x']} / {d['y']} has no provenance")
    return Fact(
        kind,
        ModelSched.parse(d["x"]),
        ModelSched.parse(d["y"]),
        problem,
        d.get("origin", "imported"),
        d.get("provenance", ""),
    )


def load_facts(path=None) -> list[Fact]:
    """Read a fact file; the packaged one when ``path`` is ``None``."""
    if path is None:
        text = resources.files("lcmsim").joinpath("data/facts.json").read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return [_fact_from_json(d) for d in json.loads(text)["facts"]]


def base_facts(include_new: bool = True, path=None) -> list[Fact]:
    facts = load_facts(path)
    return facts if include_new else [f for f in facts if f.origin != "new"]


class FactBase:
    """Deductive closure of a set of base facts."""

    def __init__(self, facts: Iterable[Fact]):
        self.facts: dict[tuple, Fact] = {}
        self.conflicts: list[Fact] = []
        self._dom_out: dict[ModelSched, set[ModelSched]] = {}
        self._dom_in: dict[ModelSched, set[ModelSched]] = {}
        self._sep: dict[tuple[ModelSched, ModelSched], dict[str, Fact]] = {}
        queue: deque[Fact] = deque()
        for f in facts:
            self._add(f, queue)
        self._close(queue)

    # -- construction --------------------------------------------------------

    def _add(self, f: Fact, queue: deque) -> None:
        if f.key in self.facts:
            return
        if f.x == f.y:
            if f.kind == "separates":
                self.conflicts.append(f)
            return
        self.facts[f.key] = f
        if f.kind == "dominates":
            self._dom_out.setdefault(f.x, set()).add(f.y)
            self._dom_in.setdefault(f.y, set()).add(f.x)
        else:
            self._sep.setdefault((f.x, f.y), {})[f.problem] = f
        queue.append(f)

    def _dom(self, x: ModelSched, y: ModelSched) -> Fact:
        return self.facts[("dominates", x, y, None)]

    def _close(self, queue: deque) -> None:
        # breadth-first, so each fact keeps a shortest derivation
        while queue:
            f = queue.popleft()
            if f.kind == "dominates":
                for z in list(self._dom_out.get(f.y, ())):
                    self._add(Fact("dominates", f.x, z, rule="transitivity", premises=(f, self._dom(f.y, z))), queue)
                for w in list(self._dom_in.get(f.x, ())):
                    self._add(Fact("dominates", w, f.y, rule="transitivity", premises=(self._dom(w, f.x), f)), queue)
                # f: X' >= X lifts separations of X; f: Y >= Y' lowers separations against Y
                for (sx, sy), by_problem in list(self._sep.items()):
                    for s in list(by_problem.values()):
                        if sx == f.y:
                            self._add(Fact("separates", f.x, sy, s.problem, rule="stronger-solver", premises=(s, f)), queue)
                        if sy == f.x:
                            self._add(Fact("separates", sx, f.y, s.problem, rule="weaker-non-solver", premises=(s, f)), queue)
            else:
                for w in list(self._dom_in.get(f.x, ())):
                    self._add(Fact("separates", w, f.y, f.problem, rule="stronger-solver", premises=(f, self._dom(w, f.x))), queue)
                for z in list(self._dom_out.get(f.y, ())):
                    self._add(Fact("separates", f.x, z, f.problem, rule="weaker-non-solver", premises=(f, self._dom(f.y, z))), queue)

    # -- queries ---------------------------------------------------------------

    def dominates(self, x: ModelSched, y: ModelSched) -> Optional[Fact]:
        return self.facts.get(("dominates", x, y, None))

    def separations(self, x: ModelSched, y: ModelSched) -> list[Fact]:
        return list(self._sep.get((x, y), {}).values())

    def separation(self, x: ModelSched, y: ModelSched) -> Optional[Fact]:
        seps = self.separations(x, y)
        if not seps:
            return None
        # prefer the shortest chain, then a named problem
        return min(seps, key=lambda f: (len(chain(f)), f.problem.startswith("witness["), f.problem))


def chain(f: Fact) -> list[Fact]:
    """Post-order list of facts used to derive ``f`` (base facts first)."""
    out: list[Fact] = []
    seen: set[tuple] = set()

    def visit(g: Fact) -> None:
        if g.key in seen:
            return
        for p in g.premises:
            visit(p)
        seen.add(g.key)
        out.append(g)

    visit(f)
    return out


def replay_chain(steps: list[Fact]) -> bool:
    """Re-check every derived step of a chain against the closure rules."""
    known: set[tuple] = set()
    for f in steps:
        if f.is_base:
            known.add(f.key)
            continue
        if any(p.key not in known for p in f.premises) or len(f.premises) != 2:
            return False
        a, b = f.premises
        if f.rule == "transitivity":
            ok = (a.kind == b.kind == f.kind == "dominates" and a.y == b.x and (f.x, f.y) == (a.x, b.y))
        elif f.rule == "stronger-solver":
            ok = (a.kind == "separates" and b.kind == "dominates" and b.y == a.x
                  and (f.x, f.y, f.problem) == (b.x, a.y, a.problem))
        elif f.rule == "weaker-non-solver":
            ok = (a.kind == "separates" and b.kind == "dominates" and b.x == a.y
                  and (f.x, f.y, f.problem) == (a.x, b.y, a.problem))
        else:
            ok = False
        if not ok:
            return False
        known.add(f.key)
    return True


@dataclass
class DerivedRelation:
    x: ModelSched
    y: ModelSched
    relation: str
    partial: Optional[str] = None
    support: list[Fact] = field(default_factory=list)

    def chains(self) -> list[list[Fact]]:
        return [chain(f) for f in self.support]

    def replays(self) -> bool:
        return all(replay_chain(c) for c in self.chains())

    def to_json(self) -> dict:
        return {
            "x": str(self.x),
            "y": str(self.y),
            "relation": self.relation,
            "partial": self.partial,
            "support": [f.to_json() for f in self.support],
        }

    def explain(self) -> str:
        lines = [f"{self.x} {self.relation} {self.y}" + (f" ({self.partial})" if self.partial else "")]
        for c in self.chains():
            for f in c:
                how = f"[{f.origin}] {f.provenance}" if f.is_base else f"by {f.rule}"
                lines.append(f"  {f.statement()}  {how}")
        return "\n".join(lines)


def derive(x, y, base: Optional[FactBase] = None) -> DerivedRelation:
    x = x if isinstance(x, ModelSched) else ModelSched.parse(x)
    y = y if isinstance(y, ModelSched) else ModelSched.parse(y)
    kb = base if base is not None else default_base()
    if x == y:
        return DerivedRelation(x, y, EQUIVALENT)
    dxy, dyx = kb.dominates(x, y), kb.dominates(y, x)
    sxy, syx = kb.separation(x, y), kb.separation(y, x)
    if (dxy and syx) or (dyx and sxy):
        return DerivedRelation(x, y, INCONSISTENT, support=[f for f in (dxy, syx, dyx, sxy) if f])
    if dxy and dyx:
        return DerivedRelation(x, y, EQUIVALENT, support=[dxy, dyx])
    if dxy and sxy:
        return DerivedRelation(x, y, STRONGER, support=[dxy, sxy])
    if dyx and syx:
        return DerivedRelation(x, y, WEAKER, support=[dyx, syx])
    if sxy and syx:
        return DerivedRelation(x, y, INCOMPARABLE, support=[sxy, syx])
    partial = None
    if dxy:
        partial = "≥ known, strictness open"
    elif dyx:
        partial = "≤ known, strictness open"
    elif sxy:
        partial = f"{x} solves a problem {y} cannot; converse open"
    elif syx:
        partial = f"{y} solves a problem {x} cannot; converse open"
    return DerivedRelation(x, y, UNKNOWN, partial, [f for f in (dxy, dyx, sxy, syx) if f])


_DEFAULT: Optional[FactBase] = None


def default_base() -> FactBase:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = FactBase(base_facts())
    return _DEFAULT


# -- claims checked against the closure ------------------------------------------

# (label, x, expected relation, y)
CLAIMS: tuple[tuple[str, str, str, str], ...] = (
    ("D1", "FSTA^F", ">", "OBLOT^A"),
    ("D2", "FCOM^F", ">", "OBLOT^A"),
    ("D3", "LUMI^F", ">", "OBLOT^A"),
    ("D4", "LUMI^S", ">", "OBLOT^A"),
    ("D5", "FCOM^F", ">", "FSTA^A"),
    ("D6", "FSTA^F", ">", "FSTA^A"),
    ("D7", "LUMI^A", ">", "FSTA^A"),
    ("D8", "LUMI^S", ">", "FSTA^A"),
    ("D9", "LUMI^F", ">", "FSTA^A"),
    ("D10", "FCOM^F", ">", "FCOM^A"),
    ("D11", "LUMI^A", ">", "FCOM^A"),
    ("D12", "LUMI^S", ">", "FCOM^A"),
    ("D13", "LUMI^F", ">", "FCOM^A"),
    ("D14", "FCOM^F", ">", "LUMI^A"),
    ("D15", "LUMI^F", ">", "LUMI^A"),
    ("D16", "FSTA^S", "<", "LUMI^A"),
    ("D17", "FCOM^S", "<", "LUMI^A"),
    ("T1", "OBLOT^F", "⊥", "FSTA^A"),
    ("T2", "OBLOT^A", "<", "FSTA^A"),
    ("T3", "FCOM^A", "⊥", "FSTA^F"),
    ("T4", "FCOM^A", "⊥", "FSTA^S"),
    ("T5", "FCOM^A", "⊥", "OBLOT^F"),
    ("T6", "FCOM^S", "⊥", "FSTA^A"),
    ("T7", "FCOM^A", "⊥", "FSTA^A"),
    ("open-1", "OBLOT^S", "unknown", "OBLOT^A"),
    ("open-2", "FSTA^S", "unknown", "FSTA^A"),
    ("open-3", "FSTA^A", "unknown", "OBLOT^S"),
    ("open-4", "FCOM^S", "unknown", "FCOM^A"),
    ("open-5", "FCOM^A", "unknown", "OBLOT^S"),
)


@dataclass
class ClaimResult:
    label: str
    x: str
    y: str
    expected: str
    derived: DerivedRelation

    @property
    def ok(self) -> bool:
        return self.derived.relation == self.expected and self.derived.replays()

    def line(self) -> str:
        mark = "ok" if self.ok else "MISMATCH"
        return f"{self.label:7s} {self.x} {self.expected} {self.y}: derived {self.derived.relation} [{mark}]"


@dataclass
class Report:
    claims: list[ClaimResult]
    conflicts: list[str]
    ablation: list[ClaimResult]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.claims) and not self.conflicts

    def ablation_blocks_theorems(self) -> bool:
        """Without the new separations, none of the T-claims is derivable."""
        return all(c.derived.relation != c.expected for c in self.ablation)

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "claims": [
                {"label": c.label, "x": c.x, "y": c.y, "expected": c.expected, "derived": c.derived.relation, "ok": c.ok}
                for c in self.claims
            ],
            "conflicts": self.conflicts,
            "ablation": [{"label": c.label, "derived": c.derived.relation} for c in self.ablation],
            "ablation_blocks_theorems": self.ablation_blocks_theorems(),
        }

    def text(self) -> str:
        lines = [c.line() for c in self.claims]
        lines.append(f"conflicts: {len(self.conflicts)}")
        lines.extend(f"  {c}" for c in self.conflicts)
        lines.append("without new facts:")
        lines.extend(f"  {c.label:4s} {c.x} vs {c.y}: {c.derived.relation}" for c in self.ablation)
        return "\n".join(lines)


def consistency_conflicts(kb: FactBase) -> list[str]:
    out = [f"self-separation: {f.statement()}" for f in kb.conflicts]
    for x in all_pairs():
        for y in all_pairs():
            if x != y and kb.dominates(x, y) and kb.separation(y, x):
                out.append(f"{x} ≥ {y} contradicts {kb.separation(y, x).statement()}")
    return out


def verify_claims(path=None) -> Report:
    kb = FactBase(base_facts(True, path))
    claims = [ClaimResult(lbl, x, y, rel, derive(x, y, kb)) for lbl, x, rel, y in CLAIMS]
    ablated = FactBase(base_facts(False, path))
    ablation = [ClaimResult(lbl, x, y, rel, derive(x, y, ablated)) for lbl, x, rel, y in CLAIMS if lbl.startswith("T")]
    return Report(claims, consistency_conflicts(kb), ablation)
