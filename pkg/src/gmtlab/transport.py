"""Transportation simplex for the dual of the ball-Lipschitz program.

The potential program

    max  sum_i c_i f_i,   |f_i - f_j| <= d_ij,   |f_i| <= cap_i

has as its LP dual a min-cost transshipment with node divergences c_i, metric
arc costs d_ij between sites, and arcs of cost cap_i to a boundary node.
Because the costs are a metric and the caps are 1-Lipschitz, every flow path
can be shortcut to a direct arc, so the dual collapses to a dense
transportation problem between the positive-mass sites (plus a boundary
source) and the negative-mass sites (plus a boundary sink).  Its optimum
equals the potential optimum by strong duality.

This module implements the classic transportation simplex on the dense cost
matrix: spanning-tree basis, potentials by tree traversal, vectorized reduced
costs, deterministic entering/leaving rules with a Bland-style fallback after
degenerate stalls.  Everything is fixed-order, so results are reproducible
bit for bit.
"""

from __future__ import annotations

import numpy as np

from .errors import ContractError

_TOL_RC = 1e-9
_STALL_SWITCH = 200


def _least_cost_start(cost, supply, demand):
    """Deterministic cost-aware initial basis (p + q - 1 cells).

    The classic least-cost method: repeatedly allocate as much as possible to
    the cheapest open cell, closing exactly one row or column per allocation
    (the final allocation closes both).  Yields a spanning-tree basic
    solution, typically far closer to optimal than a northwest-corner start.
    """
    p, q = cost.shape
    s = supply.copy()
    d = demand.copy()
    work = cost.copy()
    open_rows = p
    open_cols = q
    cells = []
    flows = []
    for _ in range(p + q - 1):
        flat = int(np.argmin(work))
        a, b = flat // q, flat % q
        move = min(s[a], d[b])
        cells.append((a, b))
        flows.append(move)
        s[a] -= move
        d[b] -= move
        if open_rows == 1 and open_cols == 1:
            break
        if open_rows == 1:
            close_row = False
        elif open_cols == 1:
            close_row = True
        else:
            close_row = s[a] <= d[b]
        if close_row:
            work[a, :] = np.inf
            open_rows -= 1
        else:
            work[:, b] = np.inf
            open_cols -= 1
    return cells, flows


def _potentials(adj, p, q, cost):
    """Dual potentials (alpha, beta) with alpha[0] = 0 from the basis tree."""
    pot = np.full(p + q, np.nan)
    pot[0] = 0.0
    stack = [0]
    seen = 1
    while stack:
        u = stack.pop()
        pu = pot[u]
        row = u < p
        for v in adj[u]:
            if np.isnan(pot[v]):
                # alpha + beta = cost on basic cells.
                pot[v] = (cost[u, v - p] - pu) if row else (cost[v, u - p] - pu)
                seen += 1
                stack.append(v)
    if seen != p + q:
        raise ContractError("transportation basis is not a spanning tree")
    return pot[:p], pot[p:]


def _tree_path(adj, start, goal):
    """Unique tree path start -> goal as the list of cell indices along it."""
    parent = {start: (None, None)}
    stack = [start]
    while stack:
        u = stack.pop()
        if u == goal:
            break
        for v, idx in adj[u].items():
            if v not in parent:
                parent[v] = (u, idx)
                stack.append(v)
    if goal not in parent:
        raise ContractError("entering cell is disconnected from the basis tree")
    path = []
    node = goal
    while parent[node][0] is not None:
        node, idx = parent[node]
        path.append(idx)
    path.reverse()
    return path


def _component(adj, start, stop_node=None):
    """Nodes reachable from start; aborts returning None upon hitting stop_node."""
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        if u == stop_node:
            return None
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def transport_simplex(cost, supply, demand, tol=_TOL_RC, max_iter=None):
    """Minimum cost of a balanced dense transportation problem.

    Returns ``(value, alpha, beta)`` where the potentials satisfy
    ``alpha[a] + beta[b] <= cost[a, b] + tol`` everywhere (dual feasibility,
    i.e. the optimality certificate) and ``alpha[0] = 0``.
    """
    cost = np.asarray(cost, dtype=float)
    supply = np.asarray(supply, dtype=float).copy()
    demand = np.asarray(demand, dtype=float).copy()
    p, q = cost.shape
    if supply.shape != (p,) or demand.shape != (q,):
        raise ContractError("supply/demand shapes do not match the cost matrix")
    if supply.min(initial=0.0) < 0 or demand.min(initial=0.0) < 0:
        raise ContractError("supplies and demands must be nonnegative")
    total = supply.sum()
    if abs(total - demand.sum()) > 1e-9 * (1.0 + total):
        raise ContractError("transportation problem must be balanced")

    cells, flows = _least_cost_start(cost, supply, demand)
    if max_iter is None:
        max_iter = 400 * (p + q) + 2000

    # Basis tree adjacency (row node a, col node p + b) with incremental
    # updates; potentials are delta-shifted on the detached subtree at each
    # pivot and recomputed from scratch only for the final certificate.
    adj = [dict() for _ in range(p + q)]
    for idx, (a, b) in enumerate(cells):
        adj[a][p + b] = idx
        adj[p + b][a] = idx
    alpha, beta = _potentials(adj, p, q, cost)

    stall = 0
    for it in range(max_iter):
        if it and it % 512 == 0:
            # Cancel accumulated float drift in the delta-shifted potentials.
            alpha, beta = _potentials(adj, p, q, cost)
        reduced = cost - alpha[:, None] - beta[None, :]
        if stall >= _STALL_SWITCH:
            # Bland-style: first improving cell in row-major order.
            flat = np.flatnonzero(reduced.ravel() < -tol)
            if flat.size == 0:
                break
            enter_flat = int(flat[0])
        else:
            enter_flat = int(np.argmin(reduced.ravel()))
            if reduced.ravel()[enter_flat] >= -tol:
                break
        ea, eb = enter_flat // q, enter_flat % q
        rc = float(reduced[ea, eb])

        path = _tree_path(adj, ea, p + eb)
        # Walking the path from the entering row node, even steps are the
        # cells whose flow decreases when the entering cell increases.
        minus = path[0::2]
        theta = min(flows[idx] for idx in minus)
        leave_pos = min(
            (idx for idx in minus if flows[idx] <= theta),
            key=lambda idx: cells[idx],
        )
        for k, idx in enumerate(path):
            flows[idx] += -theta if k % 2 == 0 else theta

        la, lb = cells[leave_pos]
        del adj[la][p + lb]
        del adj[p + lb][la]
        # Shift potentials on the component cut off by the leaving edge: rows
        # by +delta and columns by -delta keep basic equations intact, with
        # delta fixed by the entering cell's equation.
        comp = _component(adj, ea, stop_node=0)
        if comp is None:
            comp = _component(adj, p + eb)
            delta = -rc
        else:
            delta = rc
        for node in comp:
            if node < p:
                alpha[node] += delta
            else:
                beta[node - p] -= delta
        cells[leave_pos] = (ea, eb)
        flows[leave_pos] = theta
        adj[ea][p + eb] = leave_pos
        adj[p + eb][ea] = leave_pos
        stall = stall + 1 if theta <= tol else 0
    else:
        raise ContractError(
            f"transportation simplex exceeded {max_iter} iterations"
        )

    # Fresh potentials for the optimality certificate (no accumulated drift).
    alpha, beta = _potentials(adj, p, q, cost)
    return _finish(cost, cells, flows, alpha, beta)


def _finish(cost, cells, flows, alpha, beta):
    value = 0.0
    for (a, b), fl in zip(cells, flows):
        value += cost[a, b] * fl
    return float(value), alpha, beta


def lipschitz_dual_value(sites, signed_mass, caps, tol=_TOL_RC):
    """Optimal F_r value via the boundary transportation problem.

    ``signed_mass`` must contain both signs (one-signed instances have a
    closed form and never reach this routine).
    """
    pos = np.flatnonzero(signed_mass > 0)
    neg = np.flatnonzero(signed_mass < 0)
    if pos.size == 0 or neg.size == 0:
        raise ContractError("transportation route needs both mass signs")
    sp = sites[pos]
    sn = sites[neg]
    diff = sp[:, None, :] - sn[None, :, :]
    dmat = np.sqrt(np.sum(diff * diff, axis=-1))
    p, q = pos.size, neg.size

    cost = np.zeros((p + 1, q + 1))
    cost[:p, :q] = dmat
    cost[:p, q] = caps[pos]
    cost[p, :q] = caps[neg]
    supply = np.concatenate([signed_mass[pos], [-signed_mass[neg].sum()]])
    demand = np.concatenate([-signed_mass[neg], [signed_mass[pos].sum()]])

    value, alpha, beta = transport_simplex(cost, supply, demand, tol=tol)
    # Dual feasibility audit: the certificate that `value` is optimal.
    slack = cost - alpha[:, None] - beta[None, :]
    if slack.min() < -1e-7 * (1.0 + float(np.abs(cost).max())):
        raise ContractError("transportation duals failed the optimality audit")
    return value
