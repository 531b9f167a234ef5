"""Power and MCS allocation across receivers.

All schemes choose at most one tuple from every receiver's policy table under
a total power budget:

- :func:`maxmin_allocate` maximizes the smallest gain above the minimum
  utilities by progressive filling, after :func:`find_min_policies` has
  secured every receiver's minimum;
- :func:`epa_allocate` splits the budget equally;
- :func:`max_utility_allocate` maximizes the total utility (multiple-choice
  knapsack over a quantized budget);
- :func:`brute_force_maxmin` enumerates every combination (test oracle).
"""

__all__ = ['AllocationResult', 'find_min_policies', 'maxmin_allocate',
           'brute_force_maxmin', 'epa_allocate', 'max_utility_allocate',
           'budget_resolution', 'infeasible_result', 'same_gain_vector',
           'within_budget', 'SCHEMES', 'PACINGS', 'BRUTE_FORCE_LIMIT',
           'MAX_BUDGET_CELLS']

import numpy as np
import pandas as pd
import logging
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from .errors import (StarvationError, InfeasibleBudgetError,
                     InstanceTooLargeError, ResolutionError,
                     InvalidArgumentError)
from .policy import PolicyTable

SCHEMES = ('proposed', 'epa', 'maxutil')
PACINGS = ('current', 'prospective')
BRUTE_FORCE_LIMIT = 10**6
MAX_BUDGET_CELLS = 10**7

# relative slack on the power budget for float round-off
BUDGET_RTOL = 1e-12


def within_budget(power: float, total_power: float) -> bool:
    return power <= total_power*(1 + BUDGET_RTOL)


@dataclass(frozen=True)
class AllocationResult:
    """Policies selected for all receivers by one scheme.

    Attributes
    ----------
    scheme : str
        label of the scheme ('proposed', 'epa', 'maxutil', 'bruteforce').
    selection : tuple
        selected :class:`PolicyTuple` per receiver, None if the receiver
        gets nothing.
    gains : np.ndarray
        utility minus minimum utility per receiver (``-u_min`` for a null
        selection, NaN when no allocation exists).
    u_min : tuple
        minimum utility of every receiver.
    total_power : float
        power used in watts.
    budget : float
        power budget in watts.
    feasible : bool
        budget respected and every gain nonnegative.
    iterations : int
        number of tuple advancements (progressive filling only).
    note : str
        reason of infeasibility, if any.
    """
    scheme: str
    selection: tuple
    gains: np.ndarray
    u_min: tuple
    total_power: float
    budget: float
    feasible: bool
    iterations: int = 0
    note: str = field(default='', compare=False)

    @property
    def receivers(self) -> int:
        return len(self.selection)

    @property
    def utilities(self) -> np.ndarray:
        return np.array([np.nan if np.isnan(g)
                         else (0. if s is None else s.utility)
                         for s, g in zip(self.selection, self.gains)])

    @property
    def min_gain(self) -> float:
        return float(np.min(self.gains))

    @property
    def total_utility(self) -> float:
        return float(np.sum(self.utilities))

    def as_dict(self) -> dict:
        return {
            'scheme': self.scheme,
            'feasible': bool(self.feasible),
            'total_power': float(self.total_power),
            'budget': float(self.budget),
            'iterations': int(self.iterations),
            'note': self.note,
            'receivers': self.to_frame().to_dict(orient='records'),
        }

    def to_frame(self) -> pd.DataFrame:
        """One row per receiver: receiver, power, mcs, fer, utility, gain,
        u_min; power/mcs/fer are NaN for null selections.
        """
        rows = []
        for r, (s, g, u) in enumerate(zip(self.selection, self.gains,
                                          self.u_min)):
            if s is None:
                rows.append((r, np.nan, np.nan, np.nan,
                             np.nan if np.isnan(g) else 0., g, u))
            else:
                rows.append((r, s.power, s.mcs_index, s.fer_eff, s.utility,
                             g, u))
        return pd.DataFrame(rows, columns=['receiver', 'power', 'mcs', 'fer',
                                           'utility', 'gain', 'u_min'])


def _result(scheme, selection, u_min, total_power, iterations=0):
    selection = tuple(selection)
    gains = np.array([(0. if s is None else s.utility) - u
                      for s, u in zip(selection, u_min)])
    used = float(sum(s.power for s in selection if s is not None))
    feasible = within_budget(used, total_power) and bool(np.all(gains >= 0))
    return AllocationResult(scheme, selection, gains, tuple(u_min), used,
                            float(total_power), feasible, iterations)


def infeasible_result(scheme: str, u_min, total_power: float,
                      note: str) -> AllocationResult:
    """Placeholder result of a scheme that found no allocation."""
    n = len(u_min)
    return AllocationResult(scheme, (None,)*n, np.full(n, np.nan),
                            tuple(float(u) for u in u_min), 0.,
                            float(total_power), False, 0, note)


def _u_min(tables, u_min):
    if u_min is None:
        return [t.u_min for t in tables]
    u_min = list(np.broadcast_to(np.asarray(u_min, dtype=float),
                                 (len(tables),)))
    return [float(u) for u in u_min]


def find_min_policies(tables, u_min=None, total_power: float = np.inf):
    """Secure the minimum utility of every receiver at least cost.

    For every receiver, tuples below its minimum utility are dropped; the
    cheapest remaining tuple becomes the minimum policy, and the table is
    restricted to it followed by the tuples of strictly larger utility.

    Arguments
    ---------
    tables : list
        :class:`PolicyTable` per receiver.
    u_min : list, float, None
        minimum utilities (default: the tables' own).
    total_power : float
        power budget in watts.

    Returns
    -------
    filtered : list
        restricted :class:`PolicyTable` per receiver, headed by its minimum
        policy.
    minima : list
        minimum policy per receiver.
    """
    if not tables:
        raise InvalidArgumentError("no policy tables")
    u_min = _u_min(tables, u_min)
    filtered, minima = [], []
    for table, u in zip(tables, u_min):
        ok = [t for t in table if t.utility >= u]
        if not ok:
            raise StarvationError(table.receiver, u)
        head = ok[0]
        rest = [t for t in ok[1:] if t.utility > head.utility]
        filtered.append(PolicyTable(table.receiver, (head, *rest), u))
        minima.append(head)
    required = sum(m.power for m in minima)
    if not within_budget(required, total_power):
        raise InfeasibleBudgetError(required, total_power)
    return filtered, minima


def maxmin_allocate(filtered, minima, total_power: float,
                    pacing: str = 'current') -> AllocationResult:
    """Utility max-min fair allocation by progressive filling.

    Starting from the minimum policies (all gains nonnegative), the receiver
    with the smallest gain is repeatedly moved to its next tuple while the
    budget allows. A receiver is frozen once its table ends or its next
    tuple would breach the budget; filling stops when all are frozen. Ties
    go to the lowest receiver index.

    Arguments
    ---------
    filtered : list
        restricted tables from :func:`find_min_policies`.
    minima : list
        minimum policies from :func:`find_min_policies`.
    total_power : float
        power budget in watts.
    pacing : str
        'current' orders receivers by their current gain, which maximizes
        the minimum gain; 'prospective' orders them by the gain they would
        reach after upgrading.

    Returns
    -------
    result : AllocationResult
        scheme 'proposed'; `iterations` counts tuple advancements.
    """
    if pacing not in PACINGS:
        raise InvalidArgumentError(f"unknown pacing {pacing!r}; choose from "
                                   f"{PACINGS}")
    n = len(filtered)
    for table, m in zip(filtered, minima):
        if not table.tuples or table[0] != m:
            raise InvalidArgumentError("tables must be headed by their "
                                       "minimum policies")
    u_min = [t.u_min for t in filtered]
    index = [0]*n
    frozen = [False]*n
    used = sum(m.power for m in minima)
    iterations = 0

    def gain(r, i):
        return filtered[r][i].utility - u_min[r]

    while not all(frozen):
        if pacing == 'current':
            keys = [(gain(r, index[r]), r) for r in range(n) if not frozen[r]]
        else:
            keys = [(gain(r, index[r] + 1) if index[r] + 1 < len(filtered[r])
                     else -np.inf, r) for r in range(n) if not frozen[r]]
        _, r = min(keys)
        nxt = index[r] + 1
        if nxt >= len(filtered[r]):
            frozen[r] = True
            continue
        cost = filtered[r][nxt].power - filtered[r][index[r]].power
        if not within_budget(used + cost, total_power):
            frozen[r] = True
            continue
        index[r] = nxt
        used += cost
        iterations += 1

    selection = [filtered[r][index[r]] for r in range(n)]
    return _result('proposed', selection, u_min, total_power, iterations)


def brute_force_maxmin(filtered, minima, total_power: float,
                       limit: int = BRUTE_FORCE_LIMIT) -> AllocationResult:
    """Exhaustive max-min allocation over the restricted tables.

    Among combinations within the budget with nonnegative gains, returns the
    one whose ascending-sorted gain vector is lexicographically largest;
    ties go to the lower total power, then to the lexicographically smallest
    tuple indices.
    """
    sizes = [len(t) for t in filtered]
    if math.prod(sizes) > limit:
        raise InstanceTooLargeError(f"{math.prod(sizes)} combinations exceed "
                                    f"the limit of {limit}")
    u_min = [t.u_min for t in filtered]
    combos = np.array(list(itertools.product(*[range(s) for s in sizes])),
                      dtype=int).reshape(-1, len(sizes))
    gains = np.stack([filtered[r].gains[combos[:, r]]
                      for r in range(len(sizes))], axis=1)
    powers = np.sum([filtered[r].powers[combos[:, r]]
                     for r in range(len(sizes))], axis=0)
    ok = (powers <= total_power*(1 + BUDGET_RTOL)) & np.all(gains >= 0,
                                                            axis=1)
    if not ok.any():
        raise InfeasibleBudgetError(float(np.min(powers)), total_power)
    combos, gains, powers = combos[ok], gains[ok], powers[ok]
    ranked = np.sort(gains, axis=1)
    # np.lexsort: last key is primary
    keys = [combos[:, r] for r in reversed(range(len(sizes)))]
    keys.append(powers)
    keys += [-ranked[:, r] for r in reversed(range(len(sizes)))]
    best = combos[np.lexsort(keys)[0]]
    selection = [filtered[r][i] for r, i in enumerate(best)]
    return _result('bruteforce', selection, u_min, total_power)


def same_gain_vector(result: AllocationResult, oracle: AllocationResult,
                     atol: float = 1e-12) -> bool:
    """Compare sorted gain vectors of two allocations, logging any
    difference beyond the minimum gain.
    """
    a, b = np.sort(result.gains), np.sort(oracle.gains)
    same = bool(np.allclose(a, b, rtol=0, atol=atol))
    if not same:
        logging.warning(f"{result.scheme} gains {a.tolist()} differ from "
                        f"{oracle.scheme} gains {b.tolist()}")
    return same


def epa_allocate(tables, total_power: float) -> AllocationResult:
    """Equal power allocation: every receiver takes its highest-utility
    tuple costing at most ``total_power/R``, or nothing.
    """
    if not tables:
        raise InvalidArgumentError("no policy tables")
    share = total_power/len(tables)
    selection = []
    for table in tables:
        affordable = [t for t in table if within_budget(t.power, share)]
        if not affordable:
            selection.append(None)
            continue
        best = max(t.utility for t in affordable)
        selection.append(next(t for t in affordable if t.utility == best))
    return _result('epa', selection, [t.u_min for t in tables], total_power)


def budget_resolution(powers, total_power: float, tol: float = 1e-9,
                      max_denominator: int = 10**6) -> Fraction:
    """Largest step dividing every power and the budget.

    Every value is approximated by a fraction with denominator at most
    `max_denominator` (within ``tol*total_power``); the step is the gcd of
    the numerators over the lcm of the denominators.
    """
    fracs = []
    for x in list(powers) + [total_power]:
        f = Fraction(float(x)).limit_denominator(max_denominator)
        if abs(float(f) - x) > tol*total_power:
            raise ResolutionError(f"power {x} W is not commensurate with the "
                                  "budget; use a power lattice")
        if f > 0:
            fracs.append(f)
    num = math.gcd(*[f.numerator for f in fracs])
    den = math.lcm(*[f.denominator for f in fracs])
    return Fraction(num, den)


def max_utility_allocate(tables, total_power: float,
                         max_cells: int = MAX_BUDGET_CELLS
                         ) -> AllocationResult:
    """Maximize the total utility with at most one tuple per receiver.

    Solved exactly as a multiple-choice knapsack by dynamic programming over
    the budget quantized with :func:`budget_resolution`. Each receiver may
    also select nothing (utility 0).
    """
    if not tables:
        raise InvalidArgumentError("no policy tables")
    if not total_power > 0:
        raise InvalidArgumentError("total power must be positive")
    powers = [p for t in tables for p in t.powers]
    step = budget_resolution(powers, total_power)
    cells = round(Fraction(float(total_power)).limit_denominator(10**6)/step)
    if cells*len(tables) > max_cells:
        raise ResolutionError(f"budget grid of {cells} cells per receiver is "
                              "too fine; use coarser powers")
    step = float(step)

    best = np.zeros(cells + 1)
    choices = []
    for table in tables:
        new = best.copy()
        choice = np.full(cells + 1, -1, dtype=int)
        for i, t in enumerate(table):
            w = int(round(t.power/step))
            if w > cells:
                break
            cand = np.full(cells + 1, -np.inf)
            cand[w:] = best[:cells + 1 - w] + t.utility
            better = cand > new
            new[better] = cand[better]
            choice[better] = i
        choices.append(choice)
        best = new

    selection = [None]*len(tables)
    c = cells
    for r in reversed(range(len(tables))):
        i = choices[r][c]
        if i >= 0:
            selection[r] = tables[r][i]
            c -= int(round(selection[r].power/step))
    return _result('maxutil', selection, [t.u_min for t in tables],
                   total_power)
