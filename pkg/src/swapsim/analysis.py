"""Statistics over trial logs.

Normalized correlation functions with propagated Poissonian errors,
fidelities either from three-basis correlations or from exact conditional
states, witness values, and the standard reports: per-basis correlations
of photons 1 and 4 split by the analyzer outcome class, the four-row
fidelity/witness table, and the pooled Bell-outcome control analysis.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import states
from .bisa import BisaOutcome, BisaSetting
from .experiment import KEPT_OUTCOMES, conditional_state, sort_subensembles

LOW_STATISTICS_TOTAL = 20

BELL_TARGETS = ("phi-", "phi+", "psi-", "psi+")


@dataclass(frozen=True)
class CoincidenceCounts:
    """The four coincidence counts of one correlation setting.

    ``j`` denotes the +1 eigenvalue outcome of the basis for both parties,
    ``p`` the orthogonal (-1) outcome; c_jp counts (Alice +1, Bob -1).
    """

    basis: str
    c_jj: int
    c_pp: int
    c_jp: int
    c_pj: int

    def __post_init__(self):
        for name in ("c_jj", "c_pp", "c_jp", "c_pj"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def total(self) -> int:
        return self.c_jj + self.c_pp + self.c_jp + self.c_pj


@dataclass(frozen=True)
class CorrelationResult:
    basis: str
    value: float
    sigma: float
    total: int
    low_statistics: bool = False


def correlation(counts: CoincidenceCounts) -> CorrelationResult:
    """Normalized correlation E = (c_jj + c_pp - c_jp - c_pj) / total.

    The value is computed in exact rational arithmetic (it is invariant
    under uniform scaling of the counts).  The uncertainty is first-order
    propagation of sigma_C = sqrt(C): with A = c_jj + c_pp and
    B = c_jp + c_pj, sigma = 2 sqrt(A B / (A + B)) / (A + B); a zero cell
    contributes zero variance.
    """
    total = counts.total
    if total == 0:
        raise ValueError("correlation is undefined for zero total counts")
    a = counts.c_jj + counts.c_pp
    b = counts.c_jp + counts.c_pj
    value = Fraction(a - b, total)
    sigma = 2.0 * np.sqrt(a * b / total) / total
    return CorrelationResult(
        counts.basis, float(value), float(sigma), total, total < LOW_STATISTICS_TOTAL
    )


def fidelity_from_correlations(e_zz: float, e_xx: float, e_yy: float, target: str) -> float:
    """Bell-state fidelity from the three mutually unbiased correlations.

    phi-: (1 + e_zz + e_yy - e_xx)/4     phi+: (1 + e_zz - e_yy + e_xx)/4
    psi-: (1 - e_zz - e_yy - e_xx)/4     psi+: (1 - e_zz + e_yy + e_xx)/4
    """
    for name, e in (("e_zz", e_zz), ("e_xx", e_xx), ("e_yy", e_yy)):
        if not -1.0 <= e <= 1.0:
            raise ValueError(f"{name} outside [-1, 1]: {e}")
    signs = {
        "phi-": (1.0, -1.0, 1.0),
        "phi+": (1.0, 1.0, -1.0),
        "psi-": (-1.0, -1.0, -1.0),
        "psi+": (-1.0, 1.0, 1.0),
    }
    try:
        sz, sx, sy = signs[target]
    except KeyError:
        raise ValueError(f"unknown target Bell state {target!r}") from None
    return 0.25 * (1.0 + sz * e_zz + sx * e_xx + sy * e_yy)


def witness_from_fidelity(fidelity: float) -> float:
    return 0.5 - fidelity


def counts_from_records(records, basis: str) -> CoincidenceCounts:
    """Coincidence counts of photons 1 and 4 in a shared basis.

    Only records where both parties measured the requested basis and both
    registered a definite outcome contribute.
    """
    c = {(+1, +1): 0, (-1, -1): 0, (+1, -1): 0, (-1, +1): 0}
    for rec in records:
        if rec.alice_basis != basis or rec.bob_basis != basis:
            continue
        if rec.alice_outcome is None or rec.bob_outcome is None:
            continue
        c[(rec.alice_outcome, rec.bob_outcome)] += 1
    return CoincidenceCounts(basis, c[(+1, +1)], c[(-1, -1)], c[(+1, -1)], c[(-1, +1)])


def correlations_by_basis(records, bases=states.PAULI_AXES) -> dict[str, CorrelationResult]:
    return {b: correlation(counts_from_records(records, b)) for b in bases}


def report_fig3(records) -> dict[str, dict[str, CorrelationResult]]:
    """Per-basis correlations of photons 1 and 4, split by outcome class.

    Bell-measurement trials are reported separately for the phi- and phi+
    outcomes; separable-measurement trials pool the HH and VV outcomes.
    """
    subs = sort_subensembles(records)
    groups = {
        "bsm_phi_minus": subs.phi_minus,
        "bsm_phi_plus": subs.phi_plus,
        "ssm_pooled": subs.hh + subs.vv,
    }
    report = {}
    for label, recs in groups.items():
        if not recs:
            raise ValueError(f"subensemble {label} is empty")
        report[label] = correlations_by_basis(recs)
    return report


def pooled_bsm_analysis(records) -> dict[str, CorrelationResult]:
    """Correlations without discriminating between the two Bell outcomes.

    Pooling phi- with phi+ destroys the swapped entanglement signature:
    only the H/V correlation survives, the +/- and R/L correlations
    average to zero.
    """
    subs = sort_subensembles(records)
    pooled = subs.phi_minus + subs.phi_plus
    if not pooled:
        raise ValueError("no Bell-measurement records to pool")
    return correlations_by_basis(pooled)


def absolute_sum(results: dict[str, CorrelationResult]) -> float:
    """Entanglement signature: sum of |E| over the three bases exceeds 1
    only for states that are entangled (given MUB settings)."""
    return float(sum(abs(r.value) for r in results.values()))


@dataclass(frozen=True)
class Table1Row:
    pair: tuple[int, int]
    target: str
    choice: str  # "BSM" or "SSM"
    fidelity: float
    witness: float
    source: str  # "count-derived" or "state-derived"
    total: int  # contributing coincidences (0 for state-derived rows)
    low_statistics: bool = False


_TABLE1_PAIRS = (((2, 3), "phi-"), ((1, 4), "phi-"), ((1, 2), "psi-"), ((3, 4), "psi-"))

_TARGET_STATES = {k: states.bell_state(k) for k in BELL_TARGETS}


def _state_row(pair, target, choice: BisaSetting, outcome) -> tuple[float, float]:
    rho = conditional_state(choice, outcome, pair)
    f = states.fidelity(rho, _TARGET_STATES[target])
    return f, witness_from_fidelity(f)


def report_table1(records) -> list[Table1Row]:
    """Fidelity and witness of the four photon pairs under both choices.

    The (1,4) rows come from the logged coincidence counts.  The other
    pairs are not directly measured by the logged apparatus, so their
    rows are computed from the exact conditional states and flagged
    "state-derived".
    """
    subs = sort_subensembles(records)
    rows = []
    for pair, target in _TABLE1_PAIRS:
        for choice, outcome in (
            (BisaSetting.BSM, BisaOutcome.PHI_MINUS_23),
            (BisaSetting.SSM, None),
        ):
            if pair == (1, 4):
                recs = (
                    subs.phi_minus if choice is BisaSetting.BSM else subs.hh + subs.vv
                )
                if not recs:
                    raise ValueError(f"no records for the {choice.value} column")
                corr = correlations_by_basis(recs)
                f = fidelity_from_correlations(
                    corr["z"].value, corr["x"].value, corr["y"].value, target
                )
                total = sum(r.total for r in corr.values())
                rows.append(
                    Table1Row(
                        pair, target, choice.value, f, witness_from_fidelity(f),
                        "count-derived", total, any(r.low_statistics for r in corr.values()),
                    )
                )
            else:
                f, w = _state_row(pair, target, choice, outcome if choice is BisaSetting.BSM else None)
                rows.append(Table1Row(pair, target, choice.value, f, w, "state-derived", 0))
    return rows


def rows_to_csv(rows: list[Table1Row]) -> str:
    lines = ["pair,target,choice,fidelity,witness,source,total,low_statistics"]
    for r in rows:
        lines.append(
            f"{r.pair[0]}&{r.pair[1]},{r.target},{r.choice},{r.fidelity:.6f},"
            f"{r.witness:.6f},{r.source},{r.total},{int(r.low_statistics)}"
        )
    return "\n".join(lines) + "\n"


def correlations_to_csv(report: dict) -> str:
    """Flatten a fig3-style (or single pooled) correlation report to CSV."""
    lines = ["group,basis,value,sigma,total,low_statistics"]
    flat = report
    if report and isinstance(next(iter(report.values())), CorrelationResult):
        flat = {"pooled_bsm": report}
    for group, by_basis in flat.items():
        for basis, r in by_basis.items():
            lines.append(
                f"{group},{basis},{r.value:.6f},{r.sigma:.6f},{r.total},{int(r.low_statistics)}"
            )
    return "\n".join(lines) + "\n"


def correlation_results_from_counts(counts_map: dict) -> dict[str, dict[str, CorrelationResult]]:
    """Correlation report from the aggregate-count fast path.

    ``counts_map`` is keyed (setting, outcome, basis, alice, bob) as
    produced by the experiment module's count-level simulator.
    """
    groups = {
        "bsm_phi_minus": (BisaSetting.BSM, {BisaOutcome.PHI_MINUS_23}),
        "bsm_phi_plus": (BisaSetting.BSM, {BisaOutcome.PHI_PLUS_23}),
        "bsm_pooled": (BisaSetting.BSM, set(KEPT_OUTCOMES[BisaSetting.BSM])),
        "ssm_pooled": (BisaSetting.SSM, set(KEPT_OUTCOMES[BisaSetting.SSM])),
    }
    report = {}
    for label, (setting, outcomes) in groups.items():
        by_basis = {}
        for basis in states.PAULI_AXES:
            cells = {(+1, +1): 0, (-1, -1): 0, (+1, -1): 0, (-1, +1): 0}
            for (s, o, b, a_out, b_out), n in counts_map.items():
                if s is setting and o in outcomes and b == basis:
                    cells[(a_out, b_out)] += n
            by_basis[basis] = correlation(
                CoincidenceCounts(
                    basis, cells[(+1, +1)], cells[(-1, -1)], cells[(+1, -1)], cells[(-1, +1)]
                )
            )
        report[label] = by_basis
    return report
