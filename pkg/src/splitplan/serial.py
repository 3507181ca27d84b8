"""Serial-processing allocation policies.

When the server runs one job at a time at full speed, total delay is the
completion of the last queue position. Policies here either shape bandwidth
so all payloads arrive together (queue order becomes irrelevant) or run the
gap-elimination heuristic: move spectrum from the device just before the
first arrival gap to the device at the last gap, shrinking the completion
tail without disturbing earlier sub-queues.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .delay import AllocationPlan, NetworkInstance, QueueState, serial_total_delay
from .errors import NoExcess, NonConvergence, StalledBreak
from .parallel import CutTable, SolverSettings, _rate_scalar, bandwidth_for_rate


@dataclass(frozen=True)
class BreakReallocation:
    """One bandwidth transfer across the queue.

    ``donor``/``receiver`` are queue positions in the pre-transfer order;
    the donor's bandwidth drops to ``donor_new_bandwidth_hz`` and the freed
    ``moved_bandwidth_hz`` goes to the receiver.
    """

    donor: int
    receiver: int
    donor_new_bandwidth_hz: float
    moved_bandwidth_hz: float


def _serial_eval(table: CutTable, cuts, bandwidth):
    view = table.view(cuts)
    arrivals = view.local_s.copy()
    for i in range(table.num_devices):
        if view.bits[i] > 0:
            r = _rate_scalar(table.snr[i], bandwidth[i])
            arrivals[i] += view.bits[i] / r if r > 0 else math.inf
    objective, state = serial_total_delay(arrivals, view.resid,
                                          table.net.server_flops)
    return objective, state, arrivals, view


def _serial_plan(policy, table, cuts, bandwidth, iterations, history):
    objective, state, arrivals, view = _serial_eval(table, cuts, bandwidth)
    f_max = table.net.server_flops
    delays = list(arrivals)
    for pos, dev in enumerate(state.order):
        delays[dev] = state.completions[pos]
    return AllocationPlan(
        policy=policy,
        mode="serial",
        cuts=tuple(int(c) for c in cuts),
        bandwidth_hz=tuple(float(b) for b in bandwidth),
        server_flops=tuple(f_max if r > 0 else 0.0 for r in view.resid),
        arrivals=tuple(float(a) for a in arrivals),
        residuals=tuple(float(r) for r in view.resid),
        delays=tuple(float(d) for d in delays),
        objective=float(objective),
        iterations=iterations,
        objective_history=tuple(history),
    )


# ---------------------------------------------------------------------------
# simultaneous arrival

def _common_arrival_bandwidth(table: CutTable, cuts, settings: SolverSettings):
    """Smallest common arrival time T and the bandwidth split achieving it.

    Bisects T; a target is feasible when the summed per-device bandwidth
    requirements fit the budget. Devices that transmit nothing only pin the
    lower bound on T.
    """
    view = table.view(cuts)
    links = [d.link for d in table.net.devices]
    budget = table.net.total_bandwidth_hz
    k = table.num_devices
    talk = [i for i in range(k) if view.bits[i] > 0]
    t_floor = float(np.max(view.local_s))

    def requirement(t):
        need = np.zeros(k)
        for i in talk:
            room = t - view.local_s[i]
            if room <= 0:
                return None
            rate = view.bits[i] / room
            if rate >= view.rate_limit[i] * (1.0 - 1e-12):
                return None
            need[i] = bandwidth_for_rate(links[i], rate, settings.bisect_rel_tol)
        return need

    if not talk:
        return t_floor, np.full(k, budget / k)

    t_hi = t_floor if t_floor > 0 else 1e-9
    need_hi = None
    for _ in range(200):
        t_hi *= 2.0
        need_hi = requirement(t_hi)
        if need_hi is not None and need_hi.sum() <= budget:
            break
    else:
        raise NonConvergence("no common arrival target is feasible")

    lo, hi = t_floor, t_hi
    best = need_hi
    while hi - lo > settings.bisect_rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        need = requirement(mid)
        if need is not None and need.sum() <= budget:
            hi, best = mid, need
        else:
            lo = mid
    bw = best
    used = bw.sum()
    if used > 0:
        bw = bw * (budget / used)  # hand spare spectrum out pro rata
    else:
        bw = np.full(k, budget / k)
    return hi, bw


def _reselect_serial(table: CutTable, cuts, bandwidth, settings: SolverSettings):
    """Coordinate pass over devices: re-pick each cut at fixed bandwidth.

    ``full`` minimizes the simultaneous-arrival objective
    max(arrival) + sum(residual)/f_max exactly; ``c-only`` minimizes the
    device's own arrival time.
    """
    f_max = table.net.server_flops
    k = table.num_devices
    rates = [_rate_scalar(table.snr[i], bandwidth[i]) for i in range(k)]
    arr = np.empty(k)
    res = np.empty(k)
    cand_arr = []
    cand_res = []
    for i in range(k):
        bits = table.bits[i]
        with np.errstate(divide="ignore"):
            tx = np.where(bits > 0, bits / rates[i] if rates[i] > 0 else math.inf, 0.0)
        a = table.local_s[i] + tx
        cand_arr.append(a)
        cand_res.append(table.resid[i])
        arr[i] = a[cuts[i]]
        res[i] = table.resid[i][cuts[i]]
    new_cuts = list(cuts)
    for i in range(k):
        if settings.p3_layer_rule == "c-only":
            best = int(np.argmin(cand_arr[i]))
        else:
            others_max = max((arr[j] for j in range(k) if j != i), default=-math.inf)
            others_res = res.sum() - res[i]
            score = np.maximum(cand_arr[i], others_max) + (others_res + cand_res[i]) / f_max
            best = int(np.argmin(score))
        new_cuts[i] = best
        arr[i] = cand_arr[i][best]
        res[i] = cand_res[i][best]
    return tuple(new_cuts)


def solve_p3(net: NetworkInstance, settings: SolverSettings | None = None) -> AllocationPlan:
    """Simultaneous-arrival policy: alternate bandwidth shaping with cut
    re-selection; the reported objective is the exact queue total of the
    returned allocation."""
    settings = settings or SolverSettings()
    table = CutTable(net)
    cuts = table.initial_cuts(settings)
    best = None
    history = []
    iterations = 0
    for _ in range(settings.max_alternations):
        iterations += 1
        _, bw = _common_arrival_bandwidth(table, cuts, settings)
        obj, _, _, _ = _serial_eval(table, cuts, bw)
        if best is None or obj < best[0]:
            best = (obj, cuts, bw)
        history.append(best[0])
        new_cuts = _reselect_serial(table, cuts, bw, settings)
        if new_cuts == cuts:
            break
        cuts = new_cuts
    _, cuts, bw = best
    return _serial_plan("p3", table, cuts, bw, iterations, history)


def queue_first_layer_policy(net: NetworkInstance,
                             settings: SolverSettings | None = None) -> AllocationPlan:
    """Raw-input cuts with simultaneous-arrival bandwidth shaping."""
    settings = settings or SolverSettings()
    table = CutTable(net)
    cuts = tuple(0 for _ in range(table.num_devices))
    _, bw = _common_arrival_bandwidth(table, cuts, settings)
    plan = _serial_plan("queue-first-layer", table, cuts, bw, 1, [])
    return plan


# ---------------------------------------------------------------------------
# gap-elimination heuristic

def reallocate_once(table: CutTable, cuts, bandwidth, state: QueueState,
                    settings: SolverSettings | None = None,
                    donor_break: int = 0):
    """Move spectrum from one sub-queue tail to the last-gap device.

    The donor (device just before break ``donor_break``) slows its upload so
    it finishes arriving exactly when the server frees up, which closes that
    gap; the freed bandwidth accelerates the device at the last gap, whose
    arrival sets the queue total. Requires at least two gaps so donor and
    receiver are distinct.

    Returns ``(BreakReallocation, new_bandwidth, new_state)``.
    """
    settings = settings or SolverSettings()
    breaks = state.breaks
    if len(breaks) < 2:
        raise ValueError("needs a queue with at least two gaps")
    if not 0 <= donor_break < len(breaks) - 1:
        raise ValueError("donor break must come before the last gap")
    f_max = table.net.server_flops
    b_pos = breaks[donor_break]
    donor_pos = b_pos - 1
    recv_pos = breaks[-1]
    donor = state.order[donor_pos]
    receiver = state.order[recv_pos]

    target = state.arrivals[b_pos] - state.residuals[donor_pos] / f_max
    view = table.view(cuts)
    budget_s = target - view.local_s[donor]
    bits = view.bits[donor]
    if bits <= 0:
        new_bw = 0.0  # nothing in flight: any spectrum is excess
    elif budget_s <= 0:
        raise StalledBreak(
            f"donor {donor} cannot delay its arrival to {target:.6g}s")
    else:
        link = table.net.devices[donor].link
        new_bw = bandwidth_for_rate(link, bits / budget_s, settings.bisect_rel_tol)
    moved = bandwidth[donor] - new_bw
    if moved <= 0:
        raise NoExcess(f"donor {donor} has no spare bandwidth to give")

    new_bandwidth = np.asarray(bandwidth, dtype=float).copy()
    new_bandwidth[donor] = new_bw
    new_bandwidth[receiver] += moved
    _, new_state, _, _ = _serial_eval(table, cuts, new_bandwidth)
    realloc = BreakReallocation(
        donor=donor_pos,
        receiver=recv_pos,
        donor_new_bandwidth_hz=float(new_bw),
        moved_bandwidth_hz=float(moved),
    )
    return realloc, new_bandwidth, new_state


def queue_heuristic(net: NetworkInstance, settings: SolverSettings | None = None,
                    iters: int | None = None) -> AllocationPlan:
    """Outer loop: equal bandwidth, close queue gaps by reallocation, then
    re-pick cuts; keep the best allocation seen anywhere."""
    settings = settings or SolverSettings()
    table = CutTable(net)
    k = table.num_devices
    cuts = table.initial_cuts(settings)
    outer = settings.outer_iters if iters is None else int(iters)
    min_gaps = 1 if settings.strict_breaks else 2
    best = None
    history = []

    def consider(obj, cuts_now, bw_now):
        nonlocal best
        if best is None or obj < best[0]:
            best = (obj, tuple(cuts_now), np.array(bw_now))

    for _ in range(outer):
        bw = np.full(k, net.total_bandwidth_hz / k)
        obj, state, arrivals, view = _serial_eval(table, cuts, bw)
        consider(obj, cuts, bw)
        # spectrum only moves between queued devices, so the fully-local
        # devices' arrivals are fixed for the whole reallocation loop
        idle = view.resid <= 0
        idle_max = float(np.max(arrivals[idle])) if idle.any() else -math.inf
        guard = max(2 * k, 16)
        while len(state.breaks) > min_gaps and guard > 0:
            guard -= 1
            moved = False
            for donor_break in range(len(state.breaks) - 1):
                try:
                    _, bw, state = reallocate_once(
                        table, cuts, bw, state, settings, donor_break=donor_break)
                    moved = True
                    break
                except (StalledBreak, NoExcess):
                    continue  # try the next sub-queue tail as donor
            if not moved:
                break
            consider(max(state.total_delay, idle_max), cuts, bw)
        cuts = _reselect_serial(table, cuts, bw, settings)
        obj, state, _, _ = _serial_eval(table, cuts, bw)
        consider(obj, cuts, bw)
        history.append(best[0])

    _, cuts, bw = best
    return _serial_plan("queue-heuristic", table, cuts, bw, outer, history)
