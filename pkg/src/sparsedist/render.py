"""Pseudo-code listing of a plan.

The listing has four labeled blocks: initial partitions, coordinate-tree
derivation, distributed loops and the leaf kernel.  Level ``k`` of tensor
``B`` is written ``B{k+1}`` when a level function is invoked on it and
``B[k]`` when its regions are addressed.
"""

from __future__ import annotations

from .formats import COMPRESSED, DENSE
from .planner import (CommunicateStep, CoordBlocks, DeriveTree, DistributedLoop, InitialPartition,
                      IntersectBundles, LeafKernel, Plan, PositionBlocks, ProjectBounds,
                      Projected, ReduceCombine, Replicate)
from .tensor import group_levels

_BLOCKS = ("initial partitions", "coordinate trees", "distributed loops", "leaf kernel")


class _Names:
    def __init__(self, plan: Plan):
        self.plan = plan
        self.multi = {s.tensor for s in plan.steps if isinstance(s, IntersectBundles)}

    def suffix(self, tensor: str, dist: int) -> str:
        return f"_{self.plan.distributions[dist].var}" if tensor in self.multi else ""

    def kinds(self, tensor: str) -> list[str]:
        return [k for k, _ in group_levels(self.plan.formats[tensor])]

    def part(self, tensor: str, li: int, dist: int) -> str:
        role = "" if self.kinds(tensor)[li] == DENSE else "Crd"
        return f"{tensor}{li + 1}{role}Part{self.suffix(tensor, dist)}"

    def pos_part(self, tensor: str, li: int, dist: int) -> str:
        return f"{tensor}{li + 1}PosPart{self.suffix(tensor, dist)}"

    def vals(self, tensor: str, dist: int | None = None) -> str:
        return f"{tensor}ValsPart" + ("" if dist is None else self.suffix(tensor, dist))


def _pieces(d) -> str:
    return f"M.{d.machine_dim}"


def _initial(step: InitialPartition, plan: Plan, names: _Names) -> list[str]:
    t, li = step.tensor, step.level
    kind = names.kinds(t)[li]
    b = step.bounds
    d = plan.distributions[b.dist]
    col = f"{t}Coloring{names.suffix(t, b.dist)}"
    out = []
    if isinstance(b, Projected):
        return []
    if step.function == "universe":
        var = b.var
        extent = f"{t}[{li}].dim" if kind == COMPRESSED else f"{t}.dims[{b.mode}]"
        out.append(f"// {t}{li + 1}.initUniversePartition()")
        out.append(f"Coloring {col} = {{}};")
        out.append(f"for (int {d.var} = 0; {d.var} < {_pieces(d)}; {d.var}++) {{")
        if d.kind == "split":
            out.append(f"  int {var}Lo = {d.var} * {d.size};")
            out.append(f"  int {var}Hi = min(({d.var} + 1) * {d.size}, {extent});")
        else:
            out.append(f"  int {var}Lo = {d.var} * ceil({extent} / {_pieces(d)});")
            out.append(f"  int {var}Hi = min(({d.var} + 1) * ceil({extent} / {_pieces(d)}), {extent});")
        out.append(f"  // {t}{li + 1}.createUniversePartitionEntry({d.var}, {{{var}Lo, {var}Hi - 1}})")
        out.append(f"  {col}[{d.var}] = {{{var}Lo, {var}Hi - 1}}; }}")
        out.append(f"// {t}{li + 1}.finalizeUniversePartition()")
    else:
        var = d.origin
        size = f"{t}[{li}].crd.size" if kind == COMPRESSED else f"{t}[{li}].dom.size"
        out.append(f"// {t}{li + 1}.initNonZeroPartition()")
        out.append(f"Coloring {col} = {{}};")
        out.append(f"for (int {d.var} = 0; {d.var} < {_pieces(d)}; {d.var}++) {{")
        if d.kind == "pos_split":
            out.append(f"  int {var}Lo = {d.var} * {d.size};")
            out.append(f"  int {var}Hi = min(({d.var} + 1) * {d.size}, {size});")
        else:
            out.append(f"  int {var}Lo = {d.var} * ({size} / {_pieces(d)});")
            out.append(f"  int {var}Hi = {d.var} == {_pieces(d)} - 1 ? {size} "
                       f": ({d.var} + 1) * ({size} / {_pieces(d)});")
        out.append(f"  // {t}{li + 1}.createNonZeroPartitionEntry({d.var}, {{{var}Lo, {var}Hi - 1}})")
        out.append(f"  {col}[{d.var}] = {{{var}Lo, {var}Hi - 1}}; }}")
        out.append(f"// {t}{li + 1}.finalizeNonZeroPartition()")
    out.extend(_finalize(t, li, kind, col, b.dist, names, step.function))
    return out


def _finalize(t, li, kind, col, dist, names, function) -> list[str]:
    if kind == DENSE:
        return [f"auto {names.part(t, li, dist)} = partitionByBounds({t}[{li}].dom, {col});"]
    crd, pos = names.part(t, li, dist), names.pos_part(t, li, dist)
    split = "partitionByValue" if function == "universe" else "partitionByBounds"
    return [f"auto {crd} = {split}({t}[{li}].crd, {col});",
            f"auto {pos} = preimage({crd}, {t}[{li}].pos);"]


def _derive(step: DeriveTree, names: _Names) -> list[str]:
    t, d = step.tensor, step.dist
    kinds = names.kinds(t)
    out = []
    up = names.pos_part(t, step.start, d) if kinds[step.start] == COMPRESSED \
        else names.part(t, step.start, d)
    for li in range(step.start - 1, -1, -1):
        out.append(f"// {t}{li + 1}.partitionFromChild({up})")
        if kinds[li] == DENSE:
            part = names.part(t, li, d)
            verb = "copy" if li == 0 else "contract"
            out.append(f"auto {part} = {verb}({up}, {t}[{li}].dom);")
            up = part
        else:
            crd, pos = names.part(t, li, d), names.pos_part(t, li, d)
            out.append(f"auto {crd} = copy({up}, {t}[{li}].crd);")
            out.append(f"auto {pos} = preimage({crd}, {t}[{li}].pos);")
            up = pos
    down = names.part(t, step.start, d)
    for li in range(step.start + 1, step.nlevels):
        out.append(f"// {t}{li + 1}.partitionFromParent({down})")
        if kinds[li] == DENSE:
            part = names.part(t, li, d)
            out.append(f"auto {part} = expand({down}, {t}[{li}].dom);")
            down = part
        else:
            crd, pos = names.part(t, li, d), names.pos_part(t, li, d)
            out.append(f"auto {pos} = copy({down}, {t}[{li}].pos);")
            out.append(f"auto {crd} = image({pos}, {t}[{li}].pos);")
            down = crd
    out.append(f"auto {names.vals(t, d)} = copy({down}, {t}.vals);")
    return out


def _projected(step: InitialPartition, names: _Names) -> list[str]:
    t, li, b = step.tensor, step.level, step.bounds
    kind = names.kinds(t)[li]
    col = f"{b.var}Bounds{names.suffix(b.source, b.dist)}"
    return [f"// {t}{li + 1}.initUniversePartition() from projected {b.var} bounds"] + \
        _finalize(t, li, kind, col, b.dist, names, "universe")


def _bundle(t: str, plan: Plan, names: _Names, dist: int | None) -> str:
    parts = []
    for li, kind in enumerate(names.kinds(t)):
        if dist is None:
            base = f"{t}{li + 1}"
            parts.append(f"{base}Part" if kind == DENSE else f"{{{base}PosPart, {base}CrdPart}}")
        elif kind == DENSE:
            parts.append(names.part(t, li, dist))
        else:
            parts.append(f"{{{names.pos_part(t, li, dist)}, {names.part(t, li, dist)}}}")
    parts.append(names.vals(t, dist))
    return ", ".join(parts)


class _Leaf:
    def __init__(self, plan: Plan, out: list[str], indent: str):
        self.plan = plan
        self.out = out
        self.ind = indent
        self.stmt = plan.stmt
        self.pos_var: dict[str, str] = {}

    def emit(self, text):
        self.out.append(self.ind + text)

    def run(self, leaf: LeafKernel):
        stmt, plan = self.stmt, self.plan
        value_dist = {d.originals[0]: d for d in plan.distributions if d.kind in ("divide", "split")}
        pos_dist = {d.iteration.tensor: d for d in plan.distributions
                    if d.kind in ("pos_divide", "pos_split")}
        consumed = {t: 0 for t in stmt.input_tensors}
        closers = 0
        for v in leaf.leaf_order:
            iters, dense_done = [], []
            for t in stmt.input_tensors:
                fmt = plan.formats[t]
                if fmt.all_dense:
                    continue
                sv = [stmt.access_of(t).vars[m] for m in fmt.mode_order]
                groups = group_levels(fmt)
                li = consumed[t]
                if li < len(groups) and sv[groups[li][1][-1]] == v:
                    (iters if groups[li][0] == COMPRESSED else dense_done).append((t, li))
                    consumed[t] += 1
            if iters:
                texts = []
                for t, li in iters:
                    parent = self._parent(t, li)
                    lo, hi = f"{t}[{li}].pos[{parent}].lo", f"{t}[{li}].pos[{parent}].hi"
                    d = pos_dist.get(t)
                    if d is not None and self._split_level(t) == li:
                        lo, hi = f"max({lo}, {d.origin}Lo)", f"min({hi}, {d.origin}Hi - 1)"
                    texts.append((t, li, lo, hi))
                if len(texts) == 1:
                    t, li, lo, hi = texts[0]
                    p = f"{v}{t}"
                    self.emit(f"for (int {p} = {lo}; {p} <= {hi}; {p}++) {{")
                    self.ind += "  "
                    self.emit(f"int {v} = {t}[{li}].crd[{p}];")
                    self.pos_var[t] = p
                else:
                    how = "union" if len(stmt.terms) > 1 else "intersect"
                    srcs = ", ".join(f"{t}[{li}].crd[{lo} ... {hi}]" for t, li, lo, hi in texts)
                    self.emit(f"for (int {v} : {how}({srcs})) {{")
                    self.ind += "  "
                    for t, li, _, _ in texts:
                        self.pos_var[t] = f"{v}{t}"
                closers += 1
            else:
                d = value_dist.get(v)
                if d is not None:
                    self.emit(f"for (int {v} = {v}Lo; {v} < {v}Hi; {v}++) {{")
                else:
                    self.emit(f"for (int {v} = 0; {v} < {self._extent(v)}; {v}++) {{")
                self.ind += "  "
                closers += 1
            for t, li in dense_done:
                parent = self._parent(t, li)
                level_vars = self._level_vars(t, li)
                local = level_vars[0] if len(level_vars) == 1 else f"({', '.join(level_vars)})"
                p = f"{v}{t}"
                if li == 0 and len(level_vars) == 1:
                    p = v
                elif li == 0:
                    self.emit(f"int {p} = {local};")
                else:
                    self.emit(f"int {p} = {parent} * {t}[{li}].dom.size + {local};")
                self.pos_var[t] = p
        self.emit(self._body() + ";")
        for _ in range(closers):
            self.ind = self.ind[:-2]
            self.emit("}")

    def _split_level(self, t):
        d = next(d for d in self.plan.distributions if getattr(d.iteration, "tensor", None) == t)
        fmt = self.plan.formats[t]
        mode = self.stmt.access_of(t).vars.index(d.originals[-1])
        s = fmt.level_of_mode(mode)
        return next(li for li, (_, g) in enumerate(group_levels(fmt)) if s in g)

    def _parent(self, t, li):
        return self.pos_var.get(t, "0") if li else "0"

    def _level_vars(self, t, li):
        fmt = self.plan.formats[t]
        sv = [self.stmt.access_of(t).vars[m] for m in fmt.mode_order]
        return [sv[s] for s in group_levels(fmt)[li][1]]

    def _extent(self, v):
        for acc in self.stmt.accesses:
            if v in acc.vars:
                return f"{acc.tensor}.dims[{acc.vars.index(v)}]"
        return "?"

    def _access(self, t):
        acc = self.stmt.access_of(t)
        if t in self.pos_var and not self.plan.formats[t].all_dense:
            return f"{t}.vals[{self.pos_var[t]}]"
        return f"{t}.vals[{', '.join(acc.vars)}]" if acc.vars else f"{t}.vals[0]"

    def _body(self):
        stmt = self.stmt
        terms = [" * ".join(self._access(f.tensor) for f in term.factors) for term in stmt.terms]
        lhs = stmt.lhs
        target = f"{lhs.tensor}.vals[{', '.join(lhs.vars)}]" if lhs.vars else f"{lhs.tensor}.vals[0]"
        return f"{target} += " + " + ".join(terms)


def render_plan(plan: Plan) -> str:
    """Deterministic pseudo-code for ``plan``."""
    if not plan.steps:
        return ""
    names = _Names(plan)
    stmt = plan.stmt
    blocks: dict[str, list[str]] = {b: [] for b in _BLOCKS}
    pending = None
    for step in plan.steps:
        if isinstance(step, InitialPartition):
            if isinstance(step.bounds, Projected):
                blocks["coordinate trees"].extend(_projected(step, names))
            else:
                blocks["initial partitions"].extend(_initial(step, plan, names))
            pending = step
        elif isinstance(step, DeriveTree):
            blocks["coordinate trees"].extend(_derive(step, names))
        elif isinstance(step, ProjectBounds):
            d = plan.distributions[step.dist]
            blocks["coordinate trees"].append(
                f"auto {step.var}Bounds{names.suffix(step.source, step.dist)} = "
                f"projectBounds({names.vals(step.source, step.dist)}, {step.source}, {step.var});"
                f"  // min/max {step.var} per {d.var}")
        elif isinstance(step, Replicate) and plan.distributions:
            blocks["coordinate trees"].append(f"auto {step.tensor}Part = replicate({step.tensor});")
        elif isinstance(step, IntersectBundles):
            vars_ = ", ".join(plan.distributions[d].var for d in step.dists)
            blocks["coordinate trees"].append(
                f"auto {step.tensor}Part = intersect({step.tensor}, {{{vars_}}});")

    loops = [s for s in plan.steps if isinstance(s, DistributedLoop)]
    comms = [s for s in plan.steps if isinstance(s, CommunicateStep)]
    reduce = [s for s in plan.steps if isinstance(s, ReduceCombine)]
    leaf = next(s for s in plan.steps if isinstance(s, LeafKernel))
    dist_lines = blocks["distributed loops"]
    indent = ""
    for loop in loops:
        dist_lines.append(f"{indent}// Execute each iteration on a different node.")
        dist_lines.append(f"{indent}distributed for {loop.var} in {{0 ... M.{loop.machine_dim}}} {{")
        indent += "  "
        here = [c.tensor for c in comms if c.var == loop.var]
        if here:
            dist_lines.append(f"{indent}communicate({', '.join(here)});")
        for t in stmt.input_tensors:
            if t in names.multi:
                if loop is loops[-1]:
                    dist_lines.append(f"{indent}{t} = Tensor({t}Part[{loop.var}]);")
                continue
            owner = [s for s in plan.steps if isinstance(s, DeriveTree) and s.tensor == t]
            if owner and plan.distributions[owner[0].dist].var == loop.var:
                dist_lines.append(f"{indent}{t} = Tensor({{{_bundle(t, plan, names, owner[0].dist)}}}"
                                  f"[{loop.var}]);")
            elif not owner and loop is loops[-1]:
                dist_lines.append(f"{indent}{t} = Tensor({t}Part[{loop.var}]);")
    leaf_lines: list[str] = []
    _Leaf(plan, leaf_lines, indent).run(leaf)
    blocks["leaf kernel"] = leaf_lines
    closing = []
    for k in range(len(loops)):
        closing.append("  " * (len(loops) - k - 1) + "}")
    for r in reduce:
        closing.append(f"reduce({r.output}, +);  // {r.reason}")

    args = ", ".join(f"Tensor {t}" for t in stmt.tensors)
    grid = ", ".join(f"{n}={e}" for n, e in zip(plan.grid.names, plan.grid.extents))
    out = [f"// {stmt}", f"void {plan.name}({args}, Machine M({grid})) {{"]
    for label in _BLOCKS:
        body = blocks[label]
        if not body:
            continue
        n = _BLOCKS.index(label) + 1
        out.append(f"  // ({n}) {label}")
        out.extend("  " + line for line in body)
        if label == "leaf kernel":
            out.extend("  " + line for line in closing)
    out.append("}")
    return "\n".join(out) + "\n"
