"""Line-oriented input files for systems, hints and maps.

Example::

    vars: x1, x2
    f:
      x2
      0
    g:
      0
      1
    omega[0]:        # optional, one coefficient per coordinate
      1
      0
    phi[1]:          # optional, stage-1 map over the stage variables
      z1 + z2^2
    map:             # for invert-map
      x1 + x2^2
      x2

``#`` starts a comment.  Errors carry 1-based line and column numbers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .algebra import ParseError, Poly, VarContext, parse_poly
from .geometry import KForm, PolyMap, VecField
from .linearizer import ControlSystem, OmegaHints, stage_context


class InputError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)
        self.line = line
        self.column = column


_HEADER = re.compile(r"^\s*(vars|f|g|map|omega\[(\d+)\]|phi\[(\d+)\])\s*:(.*)$")


@dataclass(frozen=True)
class _Entry:
    text: str
    line: int
    column: int


@dataclass(frozen=True)
class SystemFile:
    vars: tuple[str, ...]
    f: tuple[str, ...] = ()
    g: tuple[str, ...] = ()
    omega: tuple[tuple[int, tuple[str, ...]], ...] = ()
    phi: tuple[tuple[int, tuple[str, ...]], ...] = ()
    map: tuple[str, ...] = ()
    _positions: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    @property
    def context(self) -> VarContext:
        return VarContext(self.vars)

    @property
    def n(self) -> int:
        return len(self.vars)

    def has_system(self) -> bool:
        return bool(self.f or self.g)

    def system(self) -> ControlSystem:
        if not self.has_system():
            raise InputError("file has no f/g sections")
        ctx = self.context
        return ControlSystem(ctx, VecField(ctx, tuple(self._poly("f", k, e, ctx) for k, e in enumerate(self.f))),
                             VecField(ctx, tuple(self._poly("g", k, e, ctx) for k, e in enumerate(self.g))))

    def omega_hints(self) -> OmegaHints:
        if not self.omega:
            return OmegaHints()
        ctx = self.context
        top = max(i for i, _ in self.omega)
        forms: list[KForm | None] = [None] * (top + 1)
        for i, exprs in self.omega:
            key = f"omega[{i}]"
            forms[i] = KForm.one_form(ctx, [self._poly(key, k, e, ctx) for k, e in enumerate(exprs)])
        try:
            return OmegaHints.from_list(forms)
        except ValueError as exc:
            raise InputError(str(exc)) from exc

    def map_hints(self) -> list[list[Poly] | None]:
        if not self.phi:
            return []
        top = max(i for i, _ in self.phi)
        hints: list[list[Poly] | None] = [None] * (top + 1)
        for i, exprs in self.phi:
            ctx = self.stage(i)
            hints[i] = [self._poly(f"phi[{i}]", k, e, ctx) for k, e in enumerate(exprs)]
        return hints

    def stage(self, i: int) -> VarContext:
        """Variables used by stage-i map hints (the declared vars at stage 0)."""
        return self.context if i == 0 else stage_context(self.n, i)

    def polymap(self) -> PolyMap:
        if not self.map:
            raise InputError("file has no map section")
        ctx = self.context
        target = target_context(ctx)
        return PolyMap(ctx, tuple(self._poly("map", k, e, ctx) for k, e in enumerate(self.map)), target)

    def _poly(self, section: str, k: int, text: str, ctx: VarContext) -> Poly:
        line, column = self._positions.get((section, k), (None, None))
        try:
            return parse_poly(text, ctx)
        except ParseError as exc:
            col = column + exc.pos if column is not None else exc.pos + 1
            raise InputError(f"{section} entry {k + 1}: {exc.message}", line, col) from exc

    def validate(self) -> SystemFile:
        """Parse every expression in its context; raise InputError on the first problem."""
        n = self.n
        if self.has_system():
            for name, exprs in (("f", self.f), ("g", self.g)):
                if len(exprs) != n:
                    raise InputError(f"section {name} has {len(exprs)} entries for {n} variables",
                                     self._section_line(name))
            self.system()
        for i, exprs in self.omega:
            if len(exprs) != n:
                raise InputError(f"section omega[{i}] has {len(exprs)} entries for {n} variables",
                                 self._section_line(f"omega[{i}]"))
        for i, exprs in self.phi:
            if i > max(n - 2, 0) or len(exprs) not in (n, n - i):
                raise InputError(f"section phi[{i}] has {len(exprs)} entries; expected {n} or {n - i}"
                                 f" with stage index at most {max(n - 2, 0)}", self._section_line(f"phi[{i}]"))
        self.omega_hints()
        self.map_hints()
        if self.map:
            if len(self.map) != n:
                raise InputError(f"section map has {len(self.map)} entries for {n} variables",
                                 self._section_line("map"))
            self.polymap()
        return self

    def _section_line(self, name: str):
        return self._positions.get((name, "header"), (None, None))[0]

    def dumps(self) -> str:
        lines = ["vars: " + ", ".join(self.vars)]

        def block(name, exprs):
            lines.append(f"{name}:")
            lines.extend(f"  {e}" for e in exprs)

        if self.f:
            block("f", self.f)
        if self.g:
            block("g", self.g)
        for i, exprs in self.omega:
            block(f"omega[{i}]", exprs)
        for i, exprs in self.phi:
            block(f"phi[{i}]", exprs)
        if self.map:
            block("map", self.map)
        return "\n".join(lines) + "\n"


def target_context(ctx: VarContext) -> VarContext:
    """Output coordinates for a map over ``ctx`` that avoid its names."""
    for letter in "zwvuts":
        cand = VarContext.indexed(letter, ctx.n)
        if not set(cand.names) & set(ctx.names):
            return cand
    return VarContext(tuple(f"out{i + 1}" for i in range(ctx.n)))


def _strip_comment(raw: str) -> str:
    pos = raw.find("#")
    return raw if pos < 0 else raw[:pos]


def loads(text: str) -> SystemFile:
    sections: dict[str, list[_Entry]] = {}
    order: list[str] = []
    positions: dict = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = _strip_comment(raw)
        if not body.strip():
            continue
        m = _HEADER.match(body)
        if m:
            current = m.group(1).replace(" ", "")
            if current in sections:
                raise InputError(f"duplicate section {current}", lineno, body.find(m.group(1)) + 1)
            sections[current] = []
            order.append(current)
            positions[(current, "header")] = (lineno, 1)
            rest = m.group(4)
            if rest.strip():
                col = m.start(4) + (len(rest) - len(rest.lstrip())) + 1
                sections[current].append(_Entry(rest.strip(), lineno, col))
            continue
        if current is None:
            col = len(body) - len(body.lstrip()) + 1
            raise InputError("expression outside of any section", lineno, col)
        col = len(body) - len(body.lstrip()) + 1
        sections[current].append(_Entry(body.strip(), lineno, col))

    if "vars" not in sections:
        raise InputError("missing vars: section")
    names: list[str] = []
    for e in sections["vars"]:
        names.extend(t for t in re.split(r"[\s,]+", e.text) if t)
    try:
        VarContext(tuple(names))
    except ValueError as exc:
        raise InputError(f"bad variable list: {exc}", positions[("vars", "header")][0]) from exc

    def exprs(name: str) -> tuple[str, ...]:
        entries = sections.get(name, [])
        for k, e in enumerate(entries):
            positions[(name, k)] = (e.line, e.column)
        return tuple(e.text for e in entries)

    omega, phi = [], []
    for name in order:
        m = re.fullmatch(r"(omega|phi)\[(\d+)\]", name)
        if m:
            (omega if m.group(1) == "omega" else phi).append((int(m.group(2)), exprs(name)))
    if ("f" in sections) != ("g" in sections):
        raise InputError("sections f: and g: must appear together")
    sf = SystemFile(tuple(names), exprs("f"), exprs("g"), tuple(sorted(omega)), tuple(sorted(phi)),
                    exprs("map"), positions)
    if not sf.has_system() and not sf.map:
        raise InputError("file needs f:/g: sections or a map: section")
    return sf.validate()


def load(path: str) -> SystemFile:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    return loads(text)


def dumps(sf: SystemFile) -> str:
    return sf.dumps()
