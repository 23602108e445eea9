"""Epigraph assembly of the robust risk minimization program.

The decision vector stacks the test joint q, one witness distribution per
bridge triple, per-feature entropy margins, one norm bound per triple, and,
for the sum-abs norm, per-coordinate deviation variables.  All constraints
are linear; the euclidean norm keeps second-order terms on the side and is
handled by cutting planes in the backend.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .objective import NormChoice
from .spaces import feature_label_split


@dataclass
class SecondOrderTerm:
    """One euclidean discrepancy bound: ||matrix @ q - shift||_2 <= s."""

    matrix: np.ndarray
    shift: np.ndarray
    bound_col: int
    triple_index: int


@dataclass
class ConvexProgram:
    """Sparse program data in standard linprog form."""

    c: np.ndarray
    a_ub: sparse.csr_matrix
    b_ub: np.ndarray
    a_eq: sparse.csr_matrix
    b_eq: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    blocks: dict
    variable_names: list
    ub_labels: list
    eq_labels: list
    norm: NormChoice
    second_order: list = field(default_factory=list)

    @property
    def n_variables(self) -> int:
        return int(self.c.shape[0])

    def bounds(self) -> list:
        out = []
        for lo, hi in zip(self.lower, self.upper):
            out.append(
                (None if np.isneginf(lo) else float(lo),
                 None if np.isposinf(hi) else float(hi))
            )
        return out


class _Builder:
    """Accumulates sparse rows for one constraint matrix."""

    def __init__(self, n_vars: int):
        self.n_vars = n_vars
        self.rows = []
        self.cols = []
        self.vals = []
        self.rhs = []
        self.labels = []
        self.count = 0

    def add(self, cols, vals, rhs: float, label: str) -> None:
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=float)
        keep = vals != 0.0
        self.rows.append(np.full(int(keep.sum()), self.count, dtype=np.int64))
        self.cols.append(cols[keep])
        self.vals.append(vals[keep])
        self.rhs.append(rhs)
        self.labels.append(label)
        self.count += 1

    def add_block(self, row_idx, col_idx, values, rhs, labels) -> None:
        """Add several rows at once; row_idx is relative to this block."""
        row_idx = np.asarray(row_idx, dtype=np.int64)
        values = np.asarray(values, dtype=float)
        keep = values != 0.0
        self.rows.append(row_idx[keep] + self.count)
        self.cols.append(np.asarray(col_idx, dtype=np.int64)[keep])
        self.vals.append(values[keep])
        self.rhs.extend(float(r) for r in rhs)
        self.labels.extend(labels)
        self.count += len(labels)

    def build(self) -> tuple[sparse.csr_matrix, np.ndarray, list]:
        if self.rows:
            rows = np.concatenate(self.rows)
            cols = np.concatenate(self.cols)
            vals = np.concatenate(self.vals)
        else:
            rows = cols = vals = np.zeros(0)
        matrix = sparse.coo_matrix(
            (vals, (rows, cols)), shape=(self.count, self.n_vars)
        ).tocsr()
        return matrix, np.asarray(self.rhs, dtype=float), self.labels


def assemble_program(problem) -> ConvexProgram:
    """Build the sparse epigraph program for a robust risk problem."""
    scheme = problem.scheme
    test_space = scheme.test_space
    feature_space, label_space = feature_label_split(test_space)
    nx, ny, nz = len(feature_space), len(label_space), len(test_space)
    triples = scheme.triples
    m = len(triples)
    stats = problem.resolved_statistics()
    loss = scheme.loss
    norm = problem.norm

    # Per-triple data: A_i q compares against b_i in statistic coordinates.
    mats = []
    shifts = []
    for triple, stat in zip(triples, stats):
        k_test = triple.test_to_bridge.kernel
        k_train = triple.train_to_bridge.kernel
        mats.append((k_test @ stat.values).T)
        shifts.append(stat.values.T @ (k_train.T @ triple.empirical.mass))

    blocks: dict = {}
    names: list = []
    offset = 0

    def block(key: str, size: int, prefix: str) -> slice:
        nonlocal offset
        sl = slice(offset, offset + size)
        blocks[key] = sl
        names.extend(f"{prefix}{j}" for j in range(size))
        offset += size
        return sl

    q_sl = block("q", nz, "q_")
    witness_sl = [
        block(f"witness{i}", len(t.training_space), f"w{i}_") for i, t in enumerate(triples)
    ]
    margin_sl = block("margin", nx, "m_")
    bound_sl = block("bound", m, "s_")
    dev_sl = []
    if norm is NormChoice.SUM_ABS:
        dev_sl = [block(f"dev{i}", a.shape[0], f"u{i}_") for i, a in enumerate(mats)]

    n_vars = offset
    lower = np.zeros(n_vars)
    lower[margin_sl] = -np.inf
    upper = np.full(n_vars, np.inf)

    c = np.zeros(n_vars)
    c[margin_sl] = problem.lam
    for i, t in enumerate(triples):
        c[bound_sl.start + i] = t.weight

    eq = _Builder(n_vars)
    ub = _Builder(n_vars)

    q_cols = np.arange(q_sl.start, q_sl.stop)
    eq.add(q_cols, np.ones(nz), 1.0, "q_simplex")
    for i, sl in enumerate(witness_sl):
        eq.add(np.arange(sl.start, sl.stop), np.ones(sl.stop - sl.start), 1.0, f"w{i}_simplex")

    # Bridge coupling: the pushed test joint equals the pushed witness.
    for i, triple in enumerate(triples):
        kt = triple.test_to_bridge.kernel
        kw = triple.train_to_bridge.kernel
        nb = kt.shape[1]
        zt, bt = np.nonzero(kt)
        zw, bw = np.nonzero(kw)
        row_idx = np.concatenate([bt, bw])
        col_idx = np.concatenate([q_sl.start + zt, witness_sl[i].start + zw])
        values = np.concatenate([kt[zt, bt], -kw[zw, bw]])
        eq.add_block(
            row_idx,
            col_idx,
            values,
            np.zeros(nb),
            [f"bridge{i}_{j}" for j in range(nb)],
        )

    if problem.marginal_pin is not None:
        pin = problem.marginal_pin
        for ix in range(nx):
            cols = q_sl.start + ix * ny + np.arange(ny)
            eq.add(cols, np.ones(ny), float(pin.mass[ix]), f"pin_{ix}")

    if norm is NormChoice.SUM_ABS:
        for i, sl in enumerate(dev_sl):
            k = sl.stop - sl.start
            cols = np.concatenate([[bound_sl.start + i], np.arange(sl.start, sl.stop)])
            vals = np.concatenate([[1.0], -np.ones(k)])
            eq.add(cols, vals, 0.0, f"link{i}")

    # Entropy margins: m_x >= -sum_y L(a, y) q(x, y) for every prediction a.
    n_pred = len(loss.predicted_space)
    for a in range(n_pred):
        row_idx = np.concatenate(
            [np.repeat(np.arange(nx), ny), np.arange(nx)]
        )
        col_idx = np.concatenate(
            [q_sl.start + np.arange(nz), margin_sl.start + np.arange(nx)]
        )
        values = np.concatenate([np.tile(-loss.values[a], nx), -np.ones(nx)])
        ub.add_block(
            row_idx,
            col_idx,
            values,
            np.zeros(nx),
            [f"ent{ix}_{a}" for ix in range(nx)],
        )

    # Norm epigraphs.  For euclidean these double as initial outer cuts.
    for i, (a_mat, b_vec) in enumerate(zip(mats, shifts)):
        k = a_mat.shape[0]
        s_col = bound_sl.start + i
        if norm is NormChoice.SUM_ABS:
            aux_cols = np.arange(dev_sl[i].start, dev_sl[i].stop)
        else:
            aux_cols = np.full(k, s_col)
        stacked = np.vstack([a_mat, -a_mat])
        row_idx = np.concatenate(
            [np.repeat(np.arange(2 * k), nz), np.arange(2 * k)]
        )
        col_idx = np.concatenate(
            [np.tile(q_cols, 2 * k), np.tile(aux_cols, 2)]
        )
        values = np.concatenate([stacked.ravel(), -np.ones(2 * k)])
        rhs = np.concatenate([b_vec, -b_vec])
        labels = [f"norm{i}_{j}_hi" for j in range(k)] + [
            f"norm{i}_{j}_lo" for j in range(k)
        ]
        ub.add_block(row_idx, col_idx, values, rhs, labels)

    a_ub, b_ub, ub_labels = ub.build()
    a_eq, b_eq, eq_labels = eq.build()

    second_order = []
    if norm is NormChoice.EUCLIDEAN:
        second_order = [
            SecondOrderTerm(a_mat, b_vec, bound_sl.start + i, i)
            for i, (a_mat, b_vec) in enumerate(zip(mats, shifts))
        ]

    return ConvexProgram(
        c=c,
        a_ub=a_ub,
        b_ub=b_ub,
        a_eq=a_eq,
        b_eq=b_eq,
        lower=lower,
        upper=upper,
        blocks=blocks,
        variable_names=names,
        ub_labels=ub_labels,
        eq_labels=eq_labels,
        norm=norm,
        second_order=second_order,
    )


def _terms(names, cols, vals) -> str:
    parts = []
    for col, val in zip(cols, vals):
        sign = "-" if val < 0 else "+"
        parts.append(f"{sign} {abs(val):.12g} {names[col]}")
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def dump_lp(program: ConvexProgram) -> str:
    """Render the linear part in LP text format, for inspection and export.

    Euclidean second-order terms are noted in comments; the rows shown for
    them are the initial outer approximation.
    """
    names = program.variable_names
    lines = ["\\ robust risk minimization program"]
    for term in program.second_order:
        lines.append(
            f"\\ second-order: ||A{term.triple_index} q - b{term.triple_index}||_2 "
            f"<= {names[term.bound_col]}"
        )
    lines.append("Minimize")
    cols = np.nonzero(program.c)[0]
    lines.append(" obj: " + _terms(names, cols, program.c[cols]))
    lines.append("Subject To")
    a_eq = program.a_eq.tocsr()
    for r in range(a_eq.shape[0]):
        sl = slice(a_eq.indptr[r], a_eq.indptr[r + 1])
        lines.append(
            f" {program.eq_labels[r]}: "
            + _terms(names, a_eq.indices[sl], a_eq.data[sl])
            + f" = {program.b_eq[r]:.12g}"
        )
    a_ub = program.a_ub.tocsr()
    for r in range(a_ub.shape[0]):
        sl = slice(a_ub.indptr[r], a_ub.indptr[r + 1])
        lines.append(
            f" {program.ub_labels[r]}: "
            + _terms(names, a_ub.indices[sl], a_ub.data[sl])
            + f" <= {program.b_ub[r]:.12g}"
        )
    lines.append("Bounds")
    for j, name in enumerate(names):
        lo, hi = program.lower[j], program.upper[j]
        if np.isneginf(lo) and np.isposinf(hi):
            lines.append(f" {name} free")
        elif np.isposinf(hi):
            if lo != 0.0:
                lines.append(f" {name} >= {lo:.12g}")
        else:
            lines.append(f" {lo:.12g} <= {name} <= {hi:.12g}")
    lines.append("End")
    return "\n".join(lines) + "\n"
