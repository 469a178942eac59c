"""Compile prediction functions and graph-construction rules into MILP constraints.

Two families are produced:

* network constraints that force a variable ``y`` to equal the output of a
  trained ReLU network (or linear model) on descriptor variables, and
* graph constraints whose feasible assignments are exactly the chemical
  graphs with a tree-shaped interior over a bounded number of vertex slots,
  decorated with fringe trees from a registry, together with the values of
  every descriptor of such a graph.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .chemgraph import ChemicalGraph, ElementSpec
from .descriptors import ChemicalSymbol, DescriptorRegistry, FringeClass, featurize
from .milp import INF, LinExpr, MilpModel, lin_sum
from .regression import LinearModel, MlpModel

__all__ = [
    "EncodeError",
    "TargetInterval",
    "TopologySpec",
    "GraphEncoding",
    "InferenceModel",
    "encode_linear",
    "encode_mlp",
    "bind_target",
    "encode_graph",
    "assemble_inference",
    "parse_topology_spec",
    "format_topology_spec",
]


class EncodeError(ValueError):
    pass


def _bounds_of(model: MilpModel, name: str) -> tuple[float, float]:
    v = model.variables[name]
    return v.lb, v.ub


def _expr_bounds(model: MilpModel, expr: LinExpr) -> tuple[float, float]:
    lo = hi = expr.const
    for n, c in expr.terms.items():
        lb, ub = _bounds_of(model, n)
        a, b = c * lb, c * ub
        lo += min(a, b)
        hi += max(a, b)
    return lo, hi


# ---------------------------------------------------------------------------
# prediction functions


def encode_linear(
    lin: LinearModel, model: MilpModel, x_names: Sequence[str], y_name: str, prefix: str = "lin"
) -> MilpModel:
    """Add ``y = w . x + bias`` to ``model`` (in place) and return it."""
    if len(x_names) != lin.n_inputs:
        raise EncodeError(f"model expects {lin.n_inputs} inputs, got {len(x_names)} variables")
    for n in (*x_names, y_name):
        if n not in model.variables:
            raise EncodeError(f"variable {n!r} is not declared")
    expr = lin_sum(float(w) * LinExpr.of(n) for w, n in zip(lin.weights, x_names)) + float(lin.bias)
    model.add_constraint(LinExpr.of(y_name) - expr, "=", 0.0, f"{prefix}_out")
    return model


def encode_mlp(
    net: MlpModel, model: MilpModel, x_names: Sequence[str], y_name: str, prefix: str = "nn"
) -> MilpModel:
    """Add big-M ReLU constraints forcing ``y`` to the network output.

    Pre-activation bounds are propagated from the input variable bounds by
    interval arithmetic; every hidden unit gets an output ``h`` and an
    activity indicator ``s``.
    """
    if len(x_names) != net.n_inputs:
        raise EncodeError(f"network expects {net.n_inputs} inputs, got {len(x_names)} variables")
    lo = np.empty(len(x_names))
    hi = np.empty(len(x_names))
    for j, n in enumerate(x_names):
        if n not in model.variables:
            raise EncodeError(f"variable {n!r} is not declared")
        lo[j], hi[j] = _bounds_of(model, n)
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise EncodeError("network inputs need finite bounds")
    if y_name not in model.variables:
        raise EncodeError(f"variable {y_name!r} is not declared")
    prev = list(x_names)
    for k, (W, b) in enumerate(net.layers[:-1], start=1):
        zlo = np.minimum(W * lo, W * hi).sum(axis=1) + b
        zhi = np.maximum(W * lo, W * hi).sum(axis=1) + b
        if not (np.all(np.isfinite(zlo)) and np.all(np.isfinite(zhi))):
            raise EncodeError("propagated pre-activation bounds are not finite")
        cur = []
        for u in range(W.shape[0]):
            upper = max(float(zhi[u]), 0.0)
            lower = min(float(zlo[u]), 0.0)
            h = model.add_var(f"{prefix}_h{k}_{u}", "continuous", 0.0, upper).name
            s = model.add_var(f"{prefix}_s{k}_{u}", "binary").name
            z = lin_sum(float(W[u, j]) * LinExpr.of(prev[j]) for j in range(W.shape[1])) + float(b[u])
            model.add_constraint(LinExpr.of(h) - z, ">=", 0.0, f"{prefix}_ge{k}_{u}")
            # h <= z - lower * (1 - s)
            model.add_constraint(
                LinExpr.of(h) - z - lower * LinExpr.of(s), "<=", -lower, f"{prefix}_act{k}_{u}"
            )
            model.add_constraint(LinExpr.of(h) - upper * LinExpr.of(s), "<=", 0.0, f"{prefix}_off{k}_{u}")
            cur.append(h)
        lo = np.maximum(zlo, 0.0)
        hi = np.maximum(zhi, 0.0)
        prev = cur
    W, b = net.layers[-1]
    out = lin_sum(float(W[0, j]) * LinExpr.of(prev[j]) for j in range(W.shape[1])) + float(b[0])
    model.add_constraint(LinExpr.of(y_name) - out, "=", 0.0, f"{prefix}_out")
    return model


@dataclass(frozen=True)
class TargetInterval:
    lower: float
    upper: float

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise EncodeError("target interval bounds must be finite")
        if self.lower > self.upper:
            raise EncodeError(f"empty target interval [{self.lower}, {self.upper}]")


def bind_target(model: MilpModel, y_name: str, target: TargetInterval, prefix: str = "target") -> MilpModel:
    if not isinstance(target, TargetInterval):
        target = TargetInterval(*target)
    if y_name not in model.variables:
        raise EncodeError(f"variable {y_name!r} is not declared")
    model.add_constraint(LinExpr.of(y_name), ">=", target.lower, f"{prefix}_lo")
    model.add_constraint(LinExpr.of(y_name), "<=", target.upper, f"{prefix}_hi")
    return model


# ---------------------------------------------------------------------------
# topology specification


Bounds = tuple[int, int]


@dataclass
class TopologySpec:
    """Bounds on the graphs the graph encoding may produce.

    Configuration keys use the registry spellings (``C.O.1``, ``C2.O1.1``,
    ``C3``, fringe codes).  Missing keys are unconstrained; ``elements`` and
    ``fringe_allowed`` of ``None`` mean "everything in the registry".
    """

    n_interior_max: int
    n_interior_min: int = 1
    elements: tuple[str, ...] | None = None
    element_bounds: dict[str, Bounds] = field(default_factory=dict)
    ac_bounds: dict[str, Bounds] = field(default_factory=dict)
    ec_bounds: dict[str, Bounds] = field(default_factory=dict)
    ns_bounds: dict[str, Bounds] = field(default_factory=dict)
    fringe_bounds: dict[str, Bounds] = field(default_factory=dict)
    fringe_allowed: tuple[str, ...] | None = None
    bond_bounds: dict[int, Bounds] = field(default_factory=dict)

    def __post_init__(self):
        if self.n_interior_max < 1 or self.n_interior_min < 1:
            raise EncodeError("interior vertex bounds must be positive")
        if self.n_interior_min > self.n_interior_max:
            raise EncodeError("n_interior_min exceeds n_interior_max")
        for section in (self.element_bounds, self.ac_bounds, self.ec_bounds,
                        self.ns_bounds, self.fringe_bounds, self.bond_bounds):
            for key, (lo, hi) in section.items():
                if not (math.isfinite(lo) and math.isfinite(hi)):
                    raise EncodeError(f"bounds of {key} must be finite")
                if lo > hi:
                    raise EncodeError(f"bounds of {key} are inverted: {lo} > {hi}")

    @classmethod
    def pinned(cls, counts: Mapping[str, float], reg: DescriptorRegistry, n_interior_max: int) -> "TopologySpec":
        """Spec fixing every ac/ec/symbol count of ``reg`` to ``counts`` (absent = 0)."""
        def pick(kind: str) -> dict[str, Bounds]:
            out = {}
            for d in reg.ids:
                if d.startswith(kind + ":"):
                    v = int(round(counts.get(d, 0)))
                    out[d.split(":", 1)[1]] = (v, v)
            return out

        return cls(n_interior_max, ac_bounds=pick("ac"), ec_bounds=pick("ec"), ns_bounds=pick("cs"))


def _pair(text: str, key: str) -> Bounds:
    parts = text.split()
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) != 2:
        raise EncodeError(f"{key}: expected 'lower upper', got {text!r}")
    try:
        lo, hi = (int(p) for p in parts)
    except ValueError:
        raise EncodeError(f"{key}: bounds must be integers, got {text!r}") from None
    return lo, hi


def parse_topology_spec(text: str) -> TopologySpec:
    """Parse the sectioned ``key = lower upper`` topology file."""
    cp = configparser.ConfigParser(delimiters=("=",), interpolation=None, comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise EncodeError(f"malformed topology spec: {exc}") from None
    known = {"scaffold", "elements", "ac", "ec", "ns", "fringe", "bonds"}
    unknown = set(cp.sections()) - known
    if unknown:
        raise EncodeError(f"unknown topology sections: {', '.join(sorted(unknown))}")
    if not cp.has_section("scaffold") or "n_interior_max" not in cp["scaffold"]:
        raise EncodeError("topology spec needs [scaffold] n_interior_max")
    sc = cp["scaffold"]
    try:
        nmax = int(sc["n_interior_max"])
        nmin = int(sc.get("n_interior_min", "1"))
    except ValueError:
        raise EncodeError("[scaffold] values must be integers") from None
    allowed = tuple(sc["allowed_elements"].split()) if "allowed_elements" in sc else None
    fringe_allowed = tuple(sc["allowed_fringe"].split()) if "allowed_fringe" in sc else None

    def section(name: str) -> dict[str, Bounds]:
        if not cp.has_section(name):
            return {}
        return {k: _pair(v, f"[{name}] {k}") for k, v in cp[name].items()}

    return TopologySpec(
        n_interior_max=nmax,
        n_interior_min=nmin,
        elements=allowed,
        element_bounds=section("elements"),
        ac_bounds=section("ac"),
        ec_bounds=section("ec"),
        ns_bounds=section("ns"),
        fringe_bounds=section("fringe"),
        fringe_allowed=fringe_allowed,
        bond_bounds={int(k): v for k, v in section("bonds").items()},
    )


def format_topology_spec(spec: TopologySpec) -> str:
    lines = ["[scaffold]", f"n_interior_max = {spec.n_interior_max}", f"n_interior_min = {spec.n_interior_min}"]
    if spec.elements is not None:
        lines.append("allowed_elements = " + " ".join(spec.elements))
    if spec.fringe_allowed is not None:
        lines.append("allowed_fringe = " + " ".join(spec.fringe_allowed))
    for name, sec in (("elements", spec.element_bounds), ("ac", spec.ac_bounds), ("ec", spec.ec_bounds),
                      ("ns", spec.ns_bounds), ("fringe", spec.fringe_bounds), ("bonds", spec.bond_bounds)):
        if sec:
            lines.append(f"\n[{name}]")
            lines.extend(f"{k} = {lo} {hi}" for k, (lo, hi) in sec.items())
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# graph encoding


@dataclass
class GraphEncoding:
    """A graph-construction model plus the bookkeeping needed to decode it."""

    model: MilpModel
    registry: DescriptorRegistry
    spec: TopologySpec
    x_names: tuple[str, ...]  # one variable per registry descriptor, registry order
    n_slots: int
    symbols: tuple[ChemicalSymbol, ...]
    fringe: tuple[FringeClass, ...]
    pairs: tuple[tuple[int, int], ...]

    def x_var(self, descriptor_id: str) -> str:
        return self.x_names[self.registry.index[descriptor_id]]

    def descriptor_values(self, assignment: Mapping[str, float]) -> np.ndarray:
        return np.array([assignment[n] for n in self.x_names])

    def decode(self, assignment: Mapping[str, float]) -> ChemicalGraph:
        """Rebuild the chemical graph described by a feasible assignment."""
        def on(name: str) -> bool:
            return round(assignment[name]) == 1

        slot_vertex: dict[int, int] = {}
        elements: list[ElementSpec] = []
        bonds: dict[tuple[int, int], int] = {}
        for i in range(1, self.n_slots + 1):
            if not on(f"v_{i}"):
                continue
            chosen = [s for si, s in enumerate(self.symbols) if on(f"dns_{i}_{si}")]
            if len(chosen) != 1:
                raise EncodeError(f"slot {i} has {len(chosen)} chemical symbols")
            slot_vertex[i] = len(elements)
            elements.append(chosen[0].element)
        for t, h in self.pairs:
            if not on(f"lk_{t}_{h}"):
                continue
            mult = [m for m in (1, 2, 3) if on(f"db_{t}_{h}_{m}")]
            if len(mult) != 1 or t not in slot_vertex or h not in slot_vertex:
                raise EncodeError(f"edge slot {t}-{h} is inconsistent")
            bonds[(slot_vertex[t], slot_vertex[h])] = mult[0]
        for i, root in slot_vertex.items():
            chosen = [c for ci, c in enumerate(self.fringe) if on(f"dfc_{i}_{ci}")]
            if len(chosen) != 1:
                raise EncodeError(f"slot {i} has {len(chosen)} fringe classes")
            local = {0: root}
            for idx, parent, mult, el in chosen[0].exterior_edges():
                local[idx] = len(elements)
                elements.append(el)
                bonds[(local[parent], local[idx])] = mult
        return ChemicalGraph(elements, bonds)


def _oriented(configs):
    out = []
    for c in configs:
        out.append(c)
        r = c.reversed()
        if r != c:
            out.append(r)
    return sorted(set(out))


def encode_graph(spec: TopologySpec, reg: DescriptorRegistry, prefix_x: str = "x") -> GraphEncoding:
    """Graph-construction constraints over ``spec.n_interior_max`` interior slots.

    Slot 1 is always used and used slots form a prefix.  Each used slot picks
    a chemical symbol and a fringe class; each pair of slots may carry one
    interior edge with multiplicity 1..3.  Edges form a spanning tree of the
    used slots (edge count plus single-commodity flow).  Per-edge one-hot
    indicators over oriented adjacency and edge configurations are tied to
    the endpoint labels through slack channels that are released only when
    the edge is unused.
    """
    N = spec.n_interior_max
    allowed = set(spec.elements) if spec.elements is not None else {el.label for el in reg.elements}
    for lab in allowed:
        reg.element(lab)
    for key in spec.element_bounds:
        reg.element(key)
    ac_keys = {a.key: a for a in reg.adjacency}
    ec_keys = {e.key: e for e in reg.edge}
    ns_keys = {s.key: s for s in reg.symbols}
    fc_keys = {f.code: f for f in reg.fringe}
    for sec, keys, what in ((spec.ac_bounds, ac_keys, "adjacency configuration"),
                            (spec.ec_bounds, ec_keys, "edge configuration"),
                            (spec.ns_bounds, ns_keys, "chemical symbol"),
                            (spec.fringe_bounds, fc_keys, "fringe class")):
        for k in sec:
            if k not in keys:
                raise EncodeError(f"{what} {k} is not in the registry")
    for k in spec.fringe_allowed or ():
        if k not in fc_keys:
            raise EncodeError(f"fringe class {k} is not in the registry")

    symbols = tuple(s for s in reg.symbols if s.element.label in allowed)
    fringe_ok = set(spec.fringe_allowed) if spec.fringe_allowed is not None else set(fc_keys)
    fringe = tuple(
        f for f in reg.fringe
        if f.code in fringe_ok and f.root_element.label in allowed and f.valid and f.height <= reg.rho
    )
    if not symbols:
        raise EncodeError("no chemical symbol is available for the allowed elements")
    lam = sorted({s.element for s in symbols})
    # a root without exterior vertices is a choice, not a counted class
    fringe = fringe + tuple(FringeClass(el.label, reg.element) for el in lam)
    code = {el: k + 1 for k, el in enumerate(lam)}
    ac_or = [a for a in _oriented(reg.adjacency) if a.a in code and a.b in code]
    ec_or = [g for g in _oriented(reg.edge) if g.mu in symbols and g.mu_prime in symbols]
    pairs = tuple((t, h) for t in range(1, N + 1) for h in range(t + 1, N + 1))
    incident = {i: [p for p in pairs if i in p] for i in range(1, N + 1)}
    big_label = 2 * len(lam)
    max_deg = max([s.degree for s in symbols] + [4])
    big_deg = max(8, 2 * max_deg)

    m = MilpModel("graph")
    E = LinExpr.of

    # slots
    for i in range(1, N + 1):
        m.add_var(f"v_{i}", "binary")
    m.set_bounds("v_1", 1, 1)
    for i in range(1, N):
        m.add_constraint(E(f"v_{i}") - E(f"v_{i + 1}"), ">=", 0, f"prefix_{i}")
    m.add_constraint(lin_sum(f"v_{i}" for i in range(1, N + 1)), ">=", spec.n_interior_min, "slots_min")

    elem_expr: dict[tuple[int, ElementSpec], LinExpr] = {}
    deg_expr: dict[int, LinExpr] = {}
    label_expr: dict[int, LinExpr] = {}
    for i in range(1, N + 1):
        for si, _ in enumerate(symbols):
            m.add_var(f"dns_{i}_{si}", "binary")
        m.add_constraint(lin_sum(f"dns_{i}_{si}" for si in range(len(symbols))) - E(f"v_{i}"), "=", 0, f"symone_{i}")
        for el in lam:
            elem_expr[(i, el)] = lin_sum(f"dns_{i}_{si}" for si, s in enumerate(symbols) if s.element == el)
        deg_expr[i] = lin_sum(s.degree * E(f"dns_{i}_{si}") for si, s in enumerate(symbols))
        label_expr[i] = lin_sum(code[s.element] * E(f"dns_{i}_{si}") for si, s in enumerate(symbols))

    # interior edges: spanning tree over used slots
    for t, h in pairs:
        lk = f"lk_{t}_{h}"
        m.add_var(lk, "binary")
        m.add_constraint(E(lk) - E(f"v_{t}"), "<=", 0, f"lkt_{t}_{h}")
        m.add_constraint(E(lk) - E(f"v_{h}"), "<=", 0, f"lkh_{t}_{h}")
    used = lin_sum(f"v_{i}" for i in range(1, N + 1))
    m.add_constraint(lin_sum(f"lk_{t}_{h}" for t, h in pairs) - used, "=", -1, "tree_edges")
    for t, h in pairs:
        for a, b in ((t, h), (h, t)):
            f = m.add_var(f"flow_{a}_{b}", "continuous", 0, N - 1).name
            m.add_constraint(E(f) - (N - 1) * E(f"lk_{t}_{h}"), "<=", 0, f"flowcap_{a}_{b}")
    for i in range(1, N + 1):
        out_f = lin_sum(f"flow_{i}_{j}" for j in range(1, N + 1) if j != i)
        in_f = lin_sum(f"flow_{j}_{i}" for j in range(1, N + 1) if j != i)
        if i == 1:
            m.add_constraint(out_f - in_f - used, "=", -1, "flow_src")
        else:
            m.add_constraint(in_f - out_f - E(f"v_{i}"), "=", 0, f"flow_{i}")

    # multiplicities and per-edge configuration indicators
    beta: dict[tuple[int, int], LinExpr] = {}
    for t, h in pairs:
        for mult in (1, 2, 3):
            m.add_var(f"db_{t}_{h}_{mult}", "binary")
        m.add_constraint(lin_sum(f"db_{t}_{h}_{k}" for k in (1, 2, 3)) - E(f"lk_{t}_{h}"), "=", 0, f"bone_{t}_{h}")
        beta[(t, h)] = lin_sum(k * E(f"db_{t}_{h}_{k}") for k in (1, 2, 3))

        for ni, nu in enumerate(ac_or):
            m.add_var(f"dac_{t}_{h}_{ni}", "binary")
        dac = [E(f"dac_{t}_{h}_{ni}") for ni in range(len(ac_or))]
        m.add_constraint(lin_sum(dac) - E(f"lk_{t}_{h}"), "=", 0, f"acone_{t}_{h}")
        m.add_constraint(lin_sum(nu.m * d for nu, d in zip(ac_or, dac)) - beta[(t, h)], "=", 0, f"acmult_{t}_{h}")
        for end, slot, pick in (("t", t, lambda nu: nu.a), ("h", h, lambda nu: nu.b)):
            dp = m.add_var(f"acp{end}_{t}_{h}", "continuous", 0, big_label).name
            dm = m.add_var(f"acm{end}_{t}_{h}", "continuous", 0, big_label).name
            m.add_constraint(
                lin_sum(code[pick(nu)] * d for nu, d in zip(ac_or, dac)) - label_expr[slot] - E(dp) + E(dm),
                "=", 0, f"aclab{end}_{t}_{h}",
            )
            m.add_constraint(E(dp) + E(dm) + big_label * E(f"lk_{t}_{h}"), "<=", big_label, f"acslk{end}_{t}_{h}")

        for gi, _ in enumerate(ec_or):
            m.add_var(f"dec_{t}_{h}_{gi}", "binary")
        for ni, nu in enumerate(ac_or):
            proj = lin_sum(f"dec_{t}_{h}_{gi}" for gi, g in enumerate(ec_or) if g.adjacency == nu)
            m.add_constraint(proj - E(f"dac_{t}_{h}_{ni}"), "=", 0, f"proj_{t}_{h}_{ni}")
        for end, slot, pick in (("t", t, lambda g: g.mu), ("h", h, lambda g: g.mu_prime)):
            dp = m.add_var(f"sdp{end}_{t}_{h}", "continuous", 0, big_deg).name
            dm = m.add_var(f"sdm{end}_{t}_{h}", "continuous", 0, big_deg).name
            m.add_constraint(
                lin_sum(pick(g).degree * E(f"dec_{t}_{h}_{gi}") for gi, g in enumerate(ec_or))
                - deg_expr[slot] - E(dp) + E(dm),
                "=", 0, f"sdeg{end}_{t}_{h}",
            )
            m.add_constraint(E(dp) + E(dm) + big_deg * E(f"lk_{t}_{h}"), "<=", big_deg, f"sdslk{end}_{t}_{h}")

    # fringe classes, degree, height and valence per slot
    for i in range(1, N + 1):
        for ci, _ in enumerate(fringe):
            m.add_var(f"dfc_{i}_{ci}", "binary")
        m.add_constraint(lin_sum(f"dfc_{i}_{ci}" for ci in range(len(fringe))) - E(f"v_{i}"), "=", 0, f"fcone_{i}")
        for el in lam:
            roots = lin_sum(f"dfc_{i}_{ci}" for ci, c in enumerate(fringe) if c.root_element == el)
            m.add_constraint(roots - elem_expr[(i, el)], "=", 0, f"fcroot_{i}_{code[el]}")
        inc_e = lin_sum(f"lk_{t}_{h}" for t, h in incident[i])
        inc_b = lin_sum(beta[p] for p in incident[i])
        ext_deg = lin_sum(c.root_degree * E(f"dfc_{i}_{ci}") for ci, c in enumerate(fringe))
        ext_bs = lin_sum(c.root_bond_sum * E(f"dfc_{i}_{ci}") for ci, c in enumerate(fringe))
        deep = lin_sum(c.deep_children(reg.rho) * E(f"dfc_{i}_{ci}") for ci, c in enumerate(fringe))
        m.add_constraint(inc_e + ext_deg - deg_expr[i], "=", 0, f"deg_{i}")
        m.add_constraint(inc_e + deep - 2 * E(f"v_{i}"), ">=", 0, f"height_{i}")
        val = lin_sum(el.valence * elem_expr[(i, el)] for el in lam)
        m.add_constraint(inc_b + ext_bs - val, "<=", 0, f"valence_{i}")

    for mult, (lo, hi) in spec.bond_bounds.items():
        tot = lin_sum(f"db_{t}_{h}_{mult}" for t, h in pairs)
        m.add_constraint(tot, ">=", lo, f"bonds{mult}_lo")
        m.add_constraint(tot, "<=", hi, f"bonds{mult}_hi")

    # descriptor definitions
    fc_total = {ci: lin_sum(f"dfc_{i}_{ci}" for i in range(1, N + 1)) for ci in range(len(fringe))}
    fc_index = {c.code: ci for ci, c in enumerate(fringe) if c.size > 0}
    n_expr = used + lin_sum(c.size * fc_total[ci] for ci, c in enumerate(fringe))
    all_beta = lin_sum(beta.values())
    elem_total: dict[ElementSpec, LinExpr] = {}
    for el in reg.elements:
        ex = lin_sum(elem_expr[(i, el)] for i in range(1, N + 1)) if el in code else LinExpr()
        ex = ex + lin_sum(c.element_counts.get(el, 0) * fc_total[ci] for ci, c in enumerate(fringe))
        elem_total[el] = ex
    n_h = (
        lin_sum(el.valence * elem_expr[(i, el)] for i in range(1, N + 1) for el in lam)
        - 2 * all_beta
        + lin_sum((c.hydrogens - c.root_bond_sum) * fc_total[ci] for ci, c in enumerate(fringe))
    )
    defs: dict[str, LinExpr] = {
        "n": n_expr,
        "n_H": n_h,
        "rank": LinExpr(),
        "n_int": used,
        "n_int_edge": lin_sum(f"lk_{t}_{h}" for t, h in pairs),
    }
    for el in reg.elements:
        defs[f"elem:{el.label}"] = elem_total[el]
    for s in reg.symbols:
        si = symbols.index(s) if s in symbols else None
        defs[f"cs:{s.key}"] = (
            lin_sum(f"dns_{i}_{si}" for i in range(1, N + 1)) if si is not None else LinExpr()
        )
    for a in reg.adjacency:
        idx = [ni for ni, nu in enumerate(ac_or) if nu == a or nu == a.reversed()]
        defs[f"ac:{a.key}"] = lin_sum(f"dac_{t}_{h}_{ni}" for t, h in pairs for ni in idx)
    for g in reg.edge:
        idx = [gi for gi, gg in enumerate(ec_or) if gg == g or gg == g.reversed()]
        defs[f"ec:{g.key}"] = lin_sum(f"dec_{t}_{h}_{gi}" for t, h in pairs for gi in idx)
    for c in reg.fringe:
        defs[f"fc:{c.code}"] = fc_total[fc_index[c.code]] if c.code in fc_index else LinExpr()

    spec_bounds: dict[str, Bounds] = {}
    for k, b in spec.element_bounds.items():
        spec_bounds[f"elem:{reg.element(k).label}"] = b
    for k, b in spec.ac_bounds.items():
        spec_bounds[f"ac:{k}"] = b
    for k, b in spec.ec_bounds.items():
        spec_bounds[f"ec:{k}"] = b
    for k, b in spec.ns_bounds.items():
        spec_bounds[f"cs:{k}"] = b
    for k, b in spec.fringe_bounds.items():
        spec_bounds[f"fc:{k}"] = b

    x_names = []
    for j, d in enumerate(reg.ids):
        name = f"{prefix_x}_{j}"
        x_names.append(name)
        if d == "mass_avg":
            continue
        expr = defs[d]
        lo, hi = _expr_bounds(m, expr)
        if d in spec_bounds:
            lo, hi = max(lo, spec_bounds[d][0]), min(hi, spec_bounds[d][1])
        if lo > hi:
            raise EncodeError(f"bounds on {d} are unsatisfiable: [{lo}, {hi}]")
        m.add_var(name, "integer", math.floor(lo + 1e-9), math.ceil(hi - 1e-9))
        m.add_constraint(E(name) - expr, "=", 0, f"def_{j}")

    # average mass: select n with a one-hot and pin mass_avg * n = total mass
    n_lo, n_hi = _expr_bounds(m, n_expr)
    n_lo, n_hi = max(1, int(math.floor(n_lo))), int(math.ceil(n_hi))
    hyd = reg.hydrogen.mass
    per_vertex = [el.mass for el in reg.elements] + [el.mass + el.valence * hyd for el in reg.elements]
    m_lo, m_hi = min(per_vertex), max(per_vertex)
    j_mass = reg.index["mass_avg"]
    mavg = m.add_var(x_names[j_mass], "continuous", m_lo, m_hi).name
    total_mass = (
        lin_sum(el.mass * elem_total[el] for el in reg.elements) + hyd * E(x_names[reg.index["n_H"]])
    )
    for k in range(n_lo, n_hi + 1):
        m.add_var(f"dn_{k}", "binary")
        m.add_var(f"wn_{k}", "continuous", 0, m_hi)
        m.add_constraint(E(f"wn_{k}") - m_hi * E(f"dn_{k}"), "<=", 0, f"wncap_{k}")
    ks = range(n_lo, n_hi + 1)
    m.add_constraint(lin_sum(f"dn_{k}" for k in ks), "=", 1, "dn_one")
    m.add_constraint(lin_sum(k * E(f"dn_{k}") for k in ks) - E(x_names[reg.index["n"]]), "=", 0, "dn_val")
    m.add_constraint(lin_sum(f"wn_{k}" for k in ks) - E(mavg), "=", 0, "wn_sum")
    m.add_constraint(lin_sum(k * E(f"wn_{k}") for k in ks) - total_mass, "=", 0, "mass_total")

    return GraphEncoding(
        model=m,
        registry=reg,
        spec=spec,
        x_names=tuple(x_names),
        n_slots=N,
        symbols=symbols,
        fringe=fringe,
        pairs=pairs,
    )


# ---------------------------------------------------------------------------
# full inference model


@dataclass
class InferenceModel:
    """Graph constraints joined to a trained predictor and a target interval."""

    encoding: GraphEncoding
    predictor: MlpModel | LinearModel
    target: TargetInterval | None
    y_name: str = "y"

    @property
    def model(self) -> MilpModel:
        return self.encoding.model

    def check(self, g: ChemicalGraph, tol: float = 1e-6) -> float:
        """Predicted property of ``g``; raises when it misses the target."""
        x = featurize(g, self.encoding.registry).values
        cols = [self.encoding.registry.index[d] for d in self.predictor.selected]
        y = float(self.predictor.predict(x[cols]))
        if self.target is not None and not (self.target.lower - tol <= y <= self.target.upper + tol):
            raise EncodeError(f"prediction {y} is outside [{self.target.lower}, {self.target.upper}]")
        return y


def assemble_inference(
    enc: GraphEncoding, predictor: MlpModel | LinearModel, target: TargetInterval | None
) -> InferenceModel:
    """Connect descriptor variables to ``predictor`` (in place) and bind the target.

    Selected descriptors are min-max normalized with the predictor's stored
    scaling; the normalized output is mapped back to property units.
    """
    reg = enc.registry
    m = enc.model
    if not predictor.selected:
        raise EncodeError("predictor does not name its input descriptors")
    missing = [d for d in predictor.selected if d not in reg.index]
    if missing:
        raise EncodeError("predictor uses descriptors absent from the registry: " + ", ".join(missing))
    sc = predictor.x_scaling
    inputs = []
    for k, d in enumerate(predictor.selected):
        xn = enc.x_var(d)
        lo = float(sc.lo[k]) if sc is not None else 0.0
        span = float(sc.hi[k] - sc.lo[k]) if sc is not None else 1.0
        name = f"nx_{k}"
        if span <= 0:
            m.add_var(name, "continuous", 0.0, 0.0)
        else:
            xl, xu = _bounds_of(m, xn)
            m.add_var(name, "continuous", (xl - lo) / span, (xu - lo) / span)
            m.add_constraint(span * LinExpr.of(name) - LinExpr.of(xn), "=", -lo, f"norm_{k}")
        inputs.append(name)
    m.add_var("yhat", "continuous", -INF, INF)
    if isinstance(predictor, MlpModel):
        encode_mlp(predictor, m, inputs, "yhat")
    else:
        encode_linear(predictor, m, inputs, "yhat")
    y_lo, y_hi = predictor.y_scaling
    m.add_var("y", "continuous", -INF, INF)
    m.add_constraint(LinExpr.of("y") - (y_hi - y_lo) * LinExpr.of("yhat"), "=", y_lo, "y_scale")
    if target is not None:
        bind_target(m, "y", target)
    return InferenceModel(enc, predictor, target, "y")

