"""Linear theory of 1-forms on a metric graph.

A 1-form assigns a real number to every oriented leaf-edge, antisymmetric
under orientation reversal, with the three outgoing values at every vertex
summing to zero (balancing).  The value on an inward-oriented leaf is the
residue at that leaf.

Exact forms (vanishing integral around every loop) are determined by their
residues; they are computed as the electrical flow on the graph with edge
resistance equal to edge length, which is precisely Kirchhoff's voltage law
for the integral formula ``integral = sum l(e) * w(e)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    BalancingViolationError,
    InfiniteIntegralError,
    InputError,
    NotPathOrLoopError,
    ResiduesDontSumToZeroError,
    SingularSystemError,
    TooFewLeavesError,
)
from .graph import GraphPath, MetricGraph, OrientedEdge, check_path, cycle_basis, graph_from_dict

# Balancing / residue tolerances: relative to the largest stored value.
TOL_BALANCE = 1e-9
TOL_RESIDUE = 1e-9
RANK_TOL = 1e-9


@dataclass(frozen=True)
class OneForm:
    """Values on canonical orientations: edges ends[0]->ends[1], leaves inward."""

    carrier: MetricGraph
    values: dict[str, float]

    def __post_init__(self):
        g = self.carrier.graph
        vals: dict[str, float] = {}
        for ref in list(g.edge_ids) + list(g.leaf_ids):
            vals[ref] = float(self.values.get(ref, 0.0))
        extra = set(self.values) - set(vals)
        if extra:
            raise InputError(f"values on unknown leaf-edges: {sorted(extra)}")
        object.__setattr__(self, "values", vals)
        tol = TOL_BALANCE * max(1.0, max(abs(v) for v in vals.values()) if vals else 1.0)
        for v, defect in _balancing_defects(self.carrier, vals).items():
            if abs(defect) > 3 * tol:
                raise BalancingViolationError(f"balancing fails at vertex {v} by {defect:.3e}")

    def value(self, oe: OrientedEdge) -> float:
        stored = self.values[oe.id]
        return stored if oe.forward else -stored


def _balancing_defects(mg: MetricGraph, vals: dict[str, float]) -> dict[str, float]:
    g = mg.graph
    out: dict[str, float] = {v: 0.0 for v in g.vertices}
    for e in g.edges:
        out[e.ends[0]] += vals[e.id]
        out[e.ends[1]] -= vals[e.id]
    for l in g.leaves:
        out[l.vertex] -= vals[l.id]  # outgoing at the vertex = -(inward value)
    return out


def residues(form: OneForm) -> np.ndarray:
    """Inward leaf values, in leaf order."""
    return np.array([form.values[l.id] for l in form.carrier.graph.leaves], dtype=float)


def balancing_residual(form: OneForm) -> float:
    """Largest |sum of outgoing values| over the vertices."""
    return max(abs(d) for d in _balancing_defects(form.carrier, form.values).values())


def integrate(form: OneForm, path: GraphPath) -> float:
    """Sum of length(e) * value(e as oriented by the path) over non-leaf edges.

    Leaves are metrically infinite: a nonzero value on a leaf inside the path
    makes the integral infinite, which is refused.
    """
    g = form.carrier.graph
    check_path(g, path)
    scale = max(1.0, max(abs(v) for v in form.values.values()))
    total = 0.0
    for oe in path.items:
        if g.is_leaf(oe.id):
            if abs(form.values[oe.id]) > TOL_BALANCE * scale:
                raise InfiniteIntegralError(f"nonzero value on leaf {oe.id} inside the path")
            continue
        total += form.carrier.length[oe.id] * form.value(oe)
    return total


def dual_form(mg: MetricGraph, path: GraphPath) -> OneForm:
    """Form with value +1 on the oriented leaf-edges of a loop or leaf-to-leaf path."""
    try:
        check_path(mg.graph, path)
    except NotPathOrLoopError:
        raise
    except Exception as exc:  # NotALoop on a bad loop is still "not a path or loop" here
        raise NotPathOrLoopError(str(exc)) from exc
    vals: dict[str, float] = {}
    for oe in path.items:
        vals[oe.id] = 1.0 if oe.forward else -1.0
    return OneForm(mg, vals)


def _injection_vector(mg: MetricGraph, residue_row: np.ndarray) -> dict[str, float]:
    b = {v: 0.0 for v in mg.graph.vertices}
    for r, l in zip(residue_row, mg.graph.leaves):
        b[l.vertex] += float(r)
    return b


def check_residue_row(mg: MetricGraph, residue_row) -> np.ndarray:
    row = np.asarray(residue_row, dtype=float)
    if row.shape != (mg.n_leaves,):
        raise InputError(f"expected {mg.n_leaves} residues, got shape {row.shape}")
    scale = max(1.0, float(np.max(np.abs(row))) if row.size else 1.0)
    if abs(float(row.sum())) > max(1, row.size) * TOL_RESIDUE * scale:
        raise ResiduesDontSumToZeroError(f"residues sum to {row.sum():.3e}")
    return row


def solve_exact_form(mg: MetricGraph, residue_row) -> OneForm:
    """The unique balanced form with the given residues and zero loop integrals.

    Electrical formulation: inject current residue_row[j] at the vertex of
    leaf j, give edge e conductance 1/length(e), solve the grounded weighted
    Laplacian for potentials, and read currents off potential differences.
    """
    row = check_residue_row(mg, residue_row)
    g = mg.graph
    verts = g.vertices
    idx = {v: i for i, v in enumerate(verts)}
    nv = len(verts)

    lap = np.zeros((nv, nv))
    for e in g.edges:
        c = 1.0 / mg.length[e.id]
        i, j = idx[e.ends[0]], idx[e.ends[1]]
        lap[i, i] += c
        lap[j, j] += c
        lap[i, j] -= c
        lap[j, i] -= c

    b = np.zeros(nv)
    for r, l in zip(row, g.leaves):
        b[idx[l.vertex]] += r

    # Potentials grounded at the lexicographically smallest vertex (index 0).
    phi = np.zeros(nv)
    if nv > 1:
        try:
            phi[1:] = np.linalg.solve(lap[1:, 1:], b[1:])
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(f"grounded Laplacian is singular: {exc}") from exc

    vals: dict[str, float] = {}
    for e in g.edges:
        vals[e.id] = (phi[idx[e.ends[0]]] - phi[idx[e.ends[1]]]) / mg.length[e.id]
    for r, l in zip(row, g.leaves):
        vals[l.id] = float(r)
    return OneForm(mg, vals)


@dataclass(frozen=True)
class FormDecomposition:
    exact: OneForm
    holomorphic: OneForm


def decompose(form: OneForm) -> FormDecomposition:
    """Split into the exact part (from the residues) and a holomorphic remainder."""
    exact = solve_exact_form(form.carrier, residues(form))
    holo_vals = {k: form.values[k] - exact.values[k] for k in form.values}
    return FormDecomposition(exact, OneForm(form.carrier, holo_vals))


def _column_order(mg: MetricGraph) -> list[str]:
    return list(mg.graph.edge_ids) + list(mg.graph.leaf_ids)


def balancing_matrix(mg: MetricGraph) -> np.ndarray:
    """|V| x (|E|+n) matrix of the balancing conditions on canonical values."""
    g = mg.graph
    cols = {ref: k for k, ref in enumerate(_column_order(mg))}
    mat = np.zeros((len(g.vertices), len(cols)))
    vidx = {v: i for i, v in enumerate(g.vertices)}
    for e in g.edges:
        mat[vidx[e.ends[0]], cols[e.id]] += 1.0
        mat[vidx[e.ends[1]], cols[e.id]] -= 1.0
    for l in g.leaves:
        mat[vidx[l.vertex], cols[l.id]] -= 1.0
    return mat


def loop_integral_matrix(mg: MetricGraph, loops=None) -> np.ndarray:
    """Rows of loop-integral conditions sum_e length(e)*value(e) over basis loops."""
    if loops is None:
        loops = cycle_basis(mg)
    cols = {ref: k for k, ref in enumerate(_column_order(mg))}
    mat = np.zeros((len(loops), len(cols)))
    for i, loop in enumerate(loops):
        for oe in loop.items:
            mat[i, cols[oe.id]] += mg.length[oe.id] * (1.0 if oe.forward else -1.0)
    return mat


def form_space_dims(mg: MetricGraph) -> tuple[int, int]:
    """(dim of exact forms, dim of holomorphic forms) = (n-1, g), rank-verified."""
    n, g = mg.n_leaves, mg.genus
    if n < 2:
        raise TooFewLeavesError(f"need at least 2 leaves, have {n}")
    bal = balancing_matrix(mg)
    total = bal.shape[1]
    loops = loop_integral_matrix(mg)
    leaf_rows = np.zeros((n, total))
    for j in range(n):
        leaf_rows[j, len(mg.graph.edges) + j] = 1.0

    dim_exact = total - np.linalg.matrix_rank(np.vstack([bal, loops]), tol=None)
    dim_holo = total - np.linalg.matrix_rank(np.vstack([bal, leaf_rows]), tol=None)
    dim_all = total - np.linalg.matrix_rank(bal, tol=None)
    if (dim_exact, dim_holo) != (n - 1, g) or dim_all != g + n - 1:
        raise RuntimeError(
            f"internal: rank verification failed, got dims ({dim_exact}, {dim_holo}, {dim_all}) "
            f"for (n-1, g, g+n-1) = ({n - 1}, {g}, {g + n - 1})"
        )
    return n - 1, g


def is_integer_form(form: OneForm, tol: float = 1e-9) -> bool:
    vals = np.array(list(form.values.values()))
    return bool(np.all(np.abs(vals - np.round(vals)) <= tol))


@dataclass(frozen=True)
class ResidueMatrix:
    """m x n real matrix of residues, rows summing to zero, columns in leaf order."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.atleast_2d(np.asarray(self.entries, dtype=float))
        scale = max(1.0, float(np.max(np.abs(arr))) if arr.size else 1.0)
        sums = arr.sum(axis=1)
        if arr.size and np.max(np.abs(sums)) > arr.shape[1] * TOL_RESIDUE * scale:
            raise ResiduesDontSumToZeroError(f"row sums {sums} are not zero")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    def row(self, k: int) -> np.ndarray:
        return self.entries[k]

    def is_integer(self, tol: float = 1e-9) -> bool:
        return bool(np.all(np.abs(self.entries - np.round(self.entries)) <= tol))


# ----------------------------------------------------------------------
# file formats


def one_form_from_dict(d: dict, mg: MetricGraph | None = None) -> OneForm:
    if mg is None:
        gdoc = d.get("graph")
        if isinstance(gdoc, str):
            from .graph import load_graph

            mg = load_graph(gdoc)
        elif isinstance(gdoc, dict):
            mg = graph_from_dict(gdoc)
        else:
            raise InputError("one-form document has no usable 'graph' entry")
    try:
        vals = {str(k): float(v) for k, v in d["values"].items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed one-form document: {exc}") from exc
    return OneForm(mg, vals)


def residues_from_dict(d: dict, mg: MetricGraph | None = None) -> ResidueMatrix:
    try:
        rows = int(d["rows"])
        entries = np.asarray(d["entries"], dtype=float)
        leaf_order = [str(x) for x in d["leaf_order"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed residue-matrix document: {exc}") from exc
    if entries.shape != (rows, len(leaf_order)):
        raise InputError(
            f"entries shape {entries.shape} does not match rows={rows}, {len(leaf_order)} leaves"
        )
    if mg is not None and list(mg.graph.leaf_ids) != leaf_order:
        raise InputError(
            f"leaf_order {leaf_order} does not match the graph's leaf order {list(mg.graph.leaf_ids)}"
        )
    return ResidueMatrix(entries)


def residues_to_dict(r: ResidueMatrix, mg: MetricGraph) -> dict:
    return {
        "rows": r.m,
        "leaf_order": list(mg.graph.leaf_ids),
        "entries": [[float(x) for x in row] for row in r.entries],
    }


def load_residues(path: str, mg: MetricGraph | None = None) -> ResidueMatrix:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read residue file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"residue file {path} is not valid JSON: {exc}") from exc
    return residues_from_dict(d, mg)
