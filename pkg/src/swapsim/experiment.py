"""Protocol orchestrator for the delayed-choice entanglement swapping runs.

Two engines drive the per-trial sampling:

* ideal mode: the four-photon state psi-(1,2) x psi-(3,4) as an exact
  4-qubit vector; Alice/Bob projective measurements, Victor's projections
  onto the Bell or separable outcome sets.
* fock mode: two truncated SPDC sources at the bosonic-mode level, fiber
  depolarization, input loss, the analyzer at finite visibility, and
  threshold detector patterns.

Each trial draws from a counter-derived substream seed(master_seed, i),
so runs are bitwise reproducible independent of the worker count.
"""

from __future__ import annotations

import json
import multiprocessing
from dataclasses import dataclass, field, asdict

import numpy as np

from . import states
from .bisa import (
    BisaOutcome,
    BisaSetting,
    DETECTOR_BANK,
    DETECTOR_BANK_TAGGED,
    bisa_apply,
    bisa_apply_distinguishable,
    classify,
)
from .fock import (
    FockVector,
    attenuate_ensemble,
    detector_counts,
    polarization_rotation,
    spdc_source,
    _expand_pattern,
)
from .qrng import QrngConfig, QrngSimulator
from .timeline import DelayBudget, EventTimes, check_delayed_choice, event_times

AXES = ("z", "x", "y")

KEPT_OUTCOMES = {
    BisaSetting.BSM: (BisaOutcome.PHI_PLUS_23, BisaOutcome.PHI_MINUS_23),
    BisaSetting.SSM: (BisaOutcome.HH_23, BisaOutcome.VV_23),
}

VICTOR_DETECTORS = ("b2H", "b2V", "c2H", "c2V")


@dataclass
class ExperimentConfig:
    mode: str = "ideal"  # "ideal" or "fock"
    trials: int = 10_000
    master_seed: int = 20120501
    alice_bases: tuple[str, ...] = AXES
    bob_bases: tuple[str, ...] = AXES
    duty_cycle: float = 0.6
    qrng_source: str = "deterministic"  # or "physical"
    # Fock-mode noise budget.
    tau: float = 0.5
    spdc_order: int = 2
    n_max: int = 3
    input_transmission: float = 0.21
    detector_efficiency: float = 0.25
    mzi_visibility: float = 0.95
    switching_fidelity: float = 0.99
    fiber_polarization_fidelity: float = 0.99
    gvm_overlap: float = 0.964
    budget: DelayBudget = field(default_factory=DelayBudget)

    def __post_init__(self):
        if self.mode not in ("ideal", "fock"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.trials < 0:
            raise ValueError("trials must be non-negative")
        if self.qrng_source not in ("deterministic", "physical"):
            raise ValueError(f"unknown qrng source {self.qrng_source!r}")
        for name in (
            "duty_cycle",
            "input_transmission",
            "detector_efficiency",
            "mzi_visibility",
            "switching_fidelity",
            "fiber_polarization_fidelity",
            "gvm_overlap",
        ):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.tau < 0:
            raise ValueError("tau must be non-negative")
        bad = [b for b in (*self.alice_bases, *self.bob_bases) if b not in AXES]
        if bad:
            raise ValueError(f"unknown measurement bases {bad}")

    @property
    def visibility(self) -> float:
        """Net two-photon interference visibility in the analyzer."""
        return self.mzi_visibility * self.gvm_overlap


@dataclass
class TrialRecord:
    trial_index: int
    alice_basis: str | None
    alice_outcome: int | None
    bob_basis: str | None
    bob_outcome: int | None
    victor_choice: str | None
    victor_outcome: str | None
    event_times: EventTimes
    kept: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["event_times"] = asdict(self.event_times)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrialRecord":
        d = dict(d)
        d["event_times"] = EventTimes(**d["event_times"])
        return cls(**d)


@dataclass
class TrialLog:
    config: ExperimentConfig
    records: list[TrialRecord]


@dataclass
class SubensembleSet:
    """Kept trials keyed by Victor's outcome class; discards are excluded."""

    phi_plus: list[TrialRecord]
    phi_minus: list[TrialRecord]
    hh: list[TrialRecord]
    vv: list[TrialRecord]

    def by_outcome(self, outcome: BisaOutcome) -> list[TrialRecord]:
        return {
            BisaOutcome.PHI_PLUS_23: self.phi_plus,
            BisaOutcome.PHI_MINUS_23: self.phi_minus,
            BisaOutcome.HH_23: self.hh,
            BisaOutcome.VV_23: self.vv,
        }[outcome]


def axis_eigenvectors(axis: str):
    return states.AXIS_EIGENVECTORS[axis]


def _axis_rotation(axis: str) -> np.ndarray:
    """Jones matrix mapping the +1/-1 eigenvectors of ``axis`` to H/V."""
    plus, minus = states.AXIS_EIGENVECTORS[axis]
    return np.array([plus.conj(), minus.conj()])


def _victor_projections(setting: BisaSetting):
    if setting is BisaSetting.BSM:
        return (
            (BisaOutcome.PHI_PLUS_23, states.bell_state("phi+")),
            (BisaOutcome.PHI_MINUS_23, states.bell_state("phi-")),
            (BisaOutcome.DISCARD, states.bell_state("psi+")),
            (BisaOutcome.DISCARD, states.bell_state("psi-")),
        )
    return (
        (BisaOutcome.HH_23, states.ket("HH")),
        (BisaOutcome.VV_23, states.ket("VV")),
        (BisaOutcome.DISCARD, states.ket("HV")),
        (BisaOutcome.DISCARD, states.ket("VH")),
    )


class IdealEngine:
    """Exact 4-qubit outcome distributions; every trial is fourfold-detected."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        psi = states.source_state().amplitudes
        self._dist = {}
        for setting in BisaSetting:
            projections = _victor_projections(setting)
            for ab in config.alice_bases:
                ea = states.AXIS_EIGENVECTORS[ab]
                for bb in config.bob_bases:
                    eb = states.AXIS_EIGENVECTORS[bb]
                    cats, probs = [], []
                    for ia, a_out in ((0, +1), (1, -1)):
                        for ib, b_out in ((0, +1), (1, -1)):
                            for outcome, vec in projections:
                                bra = np.kron(
                                    ea[ia], np.kron(vec.amplitudes, eb[ib])
                                ).conj()
                                p = abs(bra @ psi) ** 2
                                cats.append((a_out, b_out, outcome))
                                probs.append(p)
                    probs = np.array(probs)
                    self._dist[(ab, bb, setting)] = (cats, np.cumsum(probs / probs.sum()))

    def sample(self, ab: str, bb: str, commanded: BisaSetting, actual: BisaSetting,
               rng: np.random.Generator):
        cats, cum = self._dist[(ab, bb, actual)]
        a_out, b_out, outcome = cats[int(np.searchsorted(cum, rng.random()))]
        return a_out, b_out, outcome


class FockEngine:
    """Noise-budget engine: per-config joint detector-pattern distributions.

    The category space is (alice outcome, bob outcome, victor click
    pattern); classification into outcome classes happens at sampling
    time with the commanded setting, since a switching error applies the
    opposite optical setting while the sorting logic keeps the command.
    """

    def __init__(self, config: ExperimentConfig):
        self.config = config
        branches = self._noisy_input_ensemble()
        v = config.visibility
        self._dist: dict = {}
        per_setting = {}
        for setting in BisaSetting:
            coherent = [bisa_apply(b, setting) for b in branches]
            incoherent = (
                [bisa_apply_distinguishable(b, setting) for b in branches]
                if v < 1.0
                else []
            )
            per_setting[setting] = (coherent, incoherent)
        for setting in BisaSetting:
            coherent, incoherent = per_setting[setting]
            for ab in config.alice_bases:
                for bb in config.bob_bases:
                    cat = self._category_distribution(coherent, incoherent, ab, bb)
                    keys = sorted(cat)
                    probs = np.array([cat[k] for k in keys])
                    self._dist[(ab, bb, setting)] = (keys, probs, np.cumsum(probs / probs.sum()))

    def _noisy_input_ensemble(self) -> list[FockVector]:
        cfg = self.config
        src1 = spdc_source(cfg.tau, cfg.spdc_order, ("1", "b"), cfg.n_max)
        src2 = spdc_source(cfg.tau, cfg.spdc_order, ("c", "4"), cfg.n_max)
        branches = [src1.tensor(src2)]
        # Fiber polarization misalignment on Victor's two delay fibers,
        # as a depolarizing channel with the configured transmission fidelity.
        p = 1.0 - cfg.fiber_polarization_fidelity
        if p > 0.0:
            for spatial in ("b", "c"):
                nxt = []
                for b in branches:
                    nxt.append(b.scaled(np.sqrt(1.0 - p)))
                    for pauli in ("x", "y", "z"):
                        nxt.append(
                            polarization_rotation(b, spatial, states.PAULI[pauli]).scaled(
                                np.sqrt(p / 3.0)
                            )
                        )
                branches = nxt
        for mode in (("b", "H"), ("b", "V"), ("c", "H"), ("c", "V")):
            branches = attenuate_ensemble(branches, mode, cfg.input_transmission)
        return [b for b in branches if b.norm_sq() > 1e-18]

    def _bank(self, tagged: bool):
        bank = {
            "aliceP": (("1", "H"),),
            "aliceM": (("1", "V"),),
            "bobP": (("4", "H"),),
            "bobM": (("4", "V"),),
        }
        bank.update(DETECTOR_BANK_TAGGED if tagged else DETECTOR_BANK)
        return bank

    def _category_distribution(self, coherent, incoherent, ab: str, bb: str) -> dict:
        cfg = self.config
        v = cfg.visibility
        rot_a = _axis_rotation(ab)
        rot_b = _axis_rotation(bb)
        cat: dict = {}
        for group, weight, tagged in ((coherent, v, False), (incoherent, 1.0 - v, True)):
            if not group or weight == 0.0:
                continue
            bank = self._bank(tagged)
            names = list(bank)
            etas = [cfg.detector_efficiency] * len(names)
            counts: dict[tuple[int, ...], float] = {}
            for branch in group:
                branch = polarization_rotation(branch, "1", rot_a)
                branch = polarization_rotation(branch, "4", rot_b)
                for vec, w in detector_counts(branch, bank).items():
                    counts[vec] = counts.get(vec, 0.0) + w
            patterns: dict[frozenset, float] = {}
            for vec, w in counts.items():
                _expand_pattern(vec, w * weight, names, etas, patterns)
            for patt, p in patterns.items():
                key = self._category(patt)
                cat[key] = cat.get(key, 0.0) + p
        return cat

    @staticmethod
    def _category(pattern: frozenset):
        a_clicks = pattern & {"aliceP", "aliceM"}
        b_clicks = pattern & {"bobP", "bobM"}
        a_out = {frozenset({"aliceP"}): +1, frozenset({"aliceM"}): -1}.get(frozenset(a_clicks), 0)
        b_out = {frozenset({"bobP"}): +1, frozenset({"bobM"}): -1}.get(frozenset(b_clicks), 0)
        victor = tuple(sorted(d for d in pattern if d in VICTOR_DETECTORS))
        return (a_out, b_out, victor)

    def sample(self, ab: str, bb: str, commanded: BisaSetting, actual: BisaSetting,
               rng: np.random.Generator):
        keys, _, cum = self._dist[(ab, bb, actual)]
        a_out, b_out, victor = keys[int(np.searchsorted(cum, rng.random()))]
        outcome = classify(victor, commanded)
        # Zero means the party registered no click; not a fourfold event.
        return a_out or None, b_out or None, outcome

    def joint_distribution(self, ab: str, bb: str, commanded: BisaSetting):
        """Category distribution with the switching error folded in."""
        flip = 1.0 - self.config.switching_fidelity
        other = BisaSetting.SSM if commanded is BisaSetting.BSM else BisaSetting.BSM
        combined: dict = {}
        for setting, w in ((commanded, 1.0 - flip), (other, flip)):
            keys, probs, _ = self._dist[(ab, bb, setting)]
            for key, p in zip(keys, probs):
                combined[key] = combined.get(key, 0.0) + w * p
        return combined

    def expected_correlation(self, commanded: BisaSetting, outcomes, basis: str) -> float:
        """Exact conditional correlation E(basis) for fourfold events whose
        commanded-setting classification lands in ``outcomes``."""
        outcomes = set(outcomes)
        num = den = 0.0
        for (a, b, victor), p in self.joint_distribution(basis, basis, commanded).items():
            if a == 0 or b == 0:
                continue
            if classify(victor, commanded) not in outcomes:
                continue
            num += a * b * p
            den += p
        if den == 0.0:
            raise ValueError("no fourfold events in the requested subensemble")
        return num / den


def build_engine(config: ExperimentConfig):
    return IdealEngine(config) if config.mode == "ideal" else FockEngine(config)


def _trial_rng(config: ExperimentConfig, index: int) -> np.random.Generator:
    return np.random.default_rng([config.master_seed, index])


def _choice_bit(config: ExperimentConfig, index: int, rng: np.random.Generator) -> int:
    if config.qrng_source == "physical":
        # A fresh telegraph simulator per trial, on its own substream.
        seed = np.random.SeedSequence([config.master_seed, index, 0x51])
        sim = QrngSimulator(QrngConfig(seed=seed))
        return sim.next_bit().bit
    return int(rng.integers(0, 2))


def simulate_trial(engine, config: ExperimentConfig, index: int,
                   times: EventTimes) -> TrialRecord:
    rng = _trial_rng(config, index)
    ab = config.alice_bases[int(rng.integers(len(config.alice_bases)))]
    bb = config.bob_bases[int(rng.integers(len(config.bob_bases)))]
    commanded = BisaSetting.from_bit(_choice_bit(config, index, rng))
    duty_pass = rng.random() < config.duty_cycle
    if config.mode == "fock" and rng.random() >= config.switching_fidelity:
        actual = BisaSetting.SSM if commanded is BisaSetting.BSM else BisaSetting.BSM
    else:
        actual = commanded
    a_out, b_out, outcome = engine.sample(ab, bb, commanded, actual, rng)
    if not duty_pass:
        # Analyzer not settled: Alice and Bob measured, Victor's stage is void.
        return TrialRecord(index, ab, a_out, bb, b_out, commanded.value, None, times, False)
    kept = a_out is not None and b_out is not None and a_out != 0 and b_out != 0 \
        and outcome is not BisaOutcome.DISCARD
    return TrialRecord(
        index, ab, a_out, bb, b_out, commanded.value,
        outcome.value if outcome is not None else None, times, kept,
    )


_WORKER_STATE: dict = {}


def _init_worker(config: ExperimentConfig):
    _WORKER_STATE["config"] = config
    _WORKER_STATE["engine"] = build_engine(config)
    _WORKER_STATE["times"] = event_times(config.budget)


def _run_chunk(bounds: tuple[int, int]) -> list[TrialRecord]:
    config = _WORKER_STATE["config"]
    engine = _WORKER_STATE["engine"]
    times = _WORKER_STATE["times"]
    return [simulate_trial(engine, config, i, times) for i in range(*bounds)]


def run_trials(config: ExperimentConfig, workers: int = 1) -> TrialLog:
    """Simulate the configured number of trials, reproducibly.

    ``workers > 1`` distributes contiguous index chunks over processes;
    because every trial has its own counter-derived substream, the log is
    identical for any worker count.
    """
    if config.trials <= 0:
        raise ValueError("trials must be positive")
    times = event_times(config.budget)
    if workers <= 1:
        engine = build_engine(config)
        records = [simulate_trial(engine, config, i, times) for i in range(config.trials)]
        return TrialLog(config, records)
    chunk = (config.trials + workers - 1) // workers
    bounds = [(lo, min(lo + chunk, config.trials)) for lo in range(0, config.trials, chunk)]
    with multiprocessing.Pool(workers, initializer=_init_worker, initargs=(config,)) as pool:
        parts = pool.map(_run_chunk, bounds)
    records = [rec for part in parts for rec in part]
    return TrialLog(config, records)


def sort_subensembles(records) -> SubensembleSet:
    subs = SubensembleSet([], [], [], [])
    mapping = {
        BisaOutcome.PHI_PLUS_23.value: subs.phi_plus,
        BisaOutcome.PHI_MINUS_23.value: subs.phi_minus,
        BisaOutcome.HH_23.value: subs.hh,
        BisaOutcome.VV_23.value: subs.vv,
    }
    for rec in records:
        if rec.kept and rec.victor_outcome in mapping:
            mapping[rec.victor_outcome].append(rec)
    return subs


_PAIR_INDICES = {(1, 4): (0, 3), (2, 3): (1, 2), (1, 2): (0, 1), (3, 4): (2, 3)}

_OUTCOME_PROJECTORS = {
    BisaOutcome.PHI_PLUS_23: ("phi+", None),
    BisaOutcome.PHI_MINUS_23: ("phi-", None),
    BisaOutcome.HH_23: (None, "HH"),
    BisaOutcome.VV_23: (None, "VV"),
}


def _outcome_vector(outcome: BisaOutcome) -> states.QubitRegisterState:
    bell, prod = _OUTCOME_PROJECTORS[outcome]
    return states.bell_state(bell) if bell else states.ket(prod)


def conditional_state(choice: BisaSetting, outcome: BisaOutcome | None,
                      pair: tuple[int, int]) -> states.DensityMatrix:
    """Exact conditional state of a photon pair under ideal-mode semantics.

    For pairs (1,4) and (2,3): the post-projection state given Victor's
    outcome, or the equal mixture over his two kept outcomes when the
    outcome is None.  For pairs (1,2) and (3,4): under BSM the reduced
    state conditioned on the Bell outcome; under SSM the reduced state of
    the pair with no conditioning on Victor's outcome (his separable
    measurement adds no usable cross-pair information).
    """
    if pair not in _PAIR_INDICES:
        raise ValueError(f"unsupported pair {pair}")
    if outcome is not None:
        kept = KEPT_OUTCOMES[choice]
        if outcome not in kept:
            raise ValueError(f"outcome {outcome} inconsistent with choice {choice}")
    psi = states.source_state()
    idx = _PAIR_INDICES[pair]

    if pair in ((1, 4), (2, 3)):
        outcomes = [outcome] if outcome is not None else list(KEPT_OUTCOMES[choice])
        mats, weights = [], []
        for o in outcomes:
            vec = _outcome_vector(o)
            remaining, prob = states.project(psi, (1, 2), vec)
            if prob == 0.0:
                continue
            if pair == (1, 4):
                mats.append(remaining.density_matrix().matrix)
            else:
                mats.append(vec.density_matrix().matrix)
            weights.append(prob)
        total = sum(weights)
        mixed = sum(w / total * m for w, m in zip(weights, mats))
        return states.DensityMatrix(mixed)

    # Pairs (1,2) and (3,4).
    if choice is BisaSetting.SSM:
        return states.partial_trace(psi.density_matrix(), idx)
    outcomes = [outcome] if outcome is not None else list(KEPT_OUTCOMES[choice])
    mats, weights = [], []
    for o in outcomes:
        vec = _outcome_vector(o)
        remaining, prob = states.project(psi, (1, 2), vec)
        if prob == 0.0:
            continue
        # Rebuild the full post-measurement 4-qubit state: the remaining
        # state lives on photons (1,4), the projector on photons (2,3).
        rem = remaining.amplitudes.reshape(2, 2)
        v23 = vec.amplitudes.reshape(2, 2)
        full = np.einsum("ad,bc->abcd", rem, v23).reshape(-1)
        mats.append(
            states.partial_trace(
                states.QubitRegisterState(full).density_matrix(), idx
            ).matrix
        )
        weights.append(prob)
    total = sum(weights)
    mixed = sum(w / total * m for w, m in zip(weights, mats))
    return states.DensityMatrix(mixed)


@dataclass(frozen=True)
class RateBudget:
    fraction: float
    fourfold_rate: float
    factors: dict


def rate_budget(config: ExperimentConfig, base_rate: float = 4.9) -> RateBudget:
    """Analytic count-rate budget for one measurement choice.

    transmission^2 (both analyzer inputs) x 1/4 (probabilistic Bell
    projection) x 1/2 (random choice split) x duty cycle.
    """
    if base_rate <= 0:
        raise ValueError("base rate must be positive")
    factors = {
        "input_transmission_squared": config.input_transmission**2,
        "bell_projection": 0.25,
        "choice_split": 0.5,
        "duty_cycle": config.duty_cycle,
    }
    fraction = float(np.prod(list(factors.values())))
    return RateBudget(fraction, base_rate * fraction, factors)


def imperfection_product(factors) -> float:
    factors = list(factors)
    for f in factors:
        if not 0.0 <= f <= 1.0:
            raise ValueError(f"imperfection factor {f} outside [0, 1]")
    return float(np.prod(factors)) if factors else 1.0


def spdc_pair_ratio(tau: float, n_max: int = 3) -> float:
    """P(2 pairs) / P(1 pair) of the truncated source."""
    state = spdc_source(tau, order=min(2, n_max), n_max=n_max, normalize=False)
    p = {1: 0.0, 2: 0.0}
    for occ, a in state.amp.items():
        pairs = sum(occ) // 2
        if pairs in p:
            p[pairs] += abs(a) ** 2
    if p[1] == 0.0:
        raise ValueError("no single-pair component; tau too small")
    return p[2] / p[1]


def calibrate_tau(pair_ratio: float, n_max: int = 3) -> float:
    """Squeezing parameter whose 2-pair/1-pair emission ratio matches the
    supplied 4-fold/2-fold count ratio."""
    if pair_ratio <= 0:
        raise ValueError("pair ratio must be positive")
    lo, hi = 1e-4, 1.5
    if not spdc_pair_ratio(lo, n_max) < pair_ratio < spdc_pair_ratio(hi, n_max):
        raise ValueError("pair ratio outside the calibrated range")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if spdc_pair_ratio(mid, n_max) < pair_ratio:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ordering_joint(ab: str, bb: str, setting: BisaSetting, order: str) -> dict:
    """Joint outcome distribution with an explicit measurement ordering.

    ``order`` is "alice_bob_first" or "victor_first"; quantum mechanics
    predicts the two agree element-wise.
    """
    psi = states.source_state()
    ea = states.AXIS_EIGENVECTORS[ab]
    eb = states.AXIS_EIGENVECTORS[bb]
    projections = _victor_projections(setting)
    joint: dict = {}
    if order == "alice_bob_first":
        for ia, a_out in ((0, +1), (1, -1)):
            after_a, pa = states.project(psi, (0,), states.QubitRegisterState(ea[ia]))
            if after_a is None:
                continue
            for ib, b_out in ((0, +1), (1, -1)):
                # Remaining order after removing photon 1: (2, 3, 4).
                after_b, pb = states.project(after_a, (2,), states.QubitRegisterState(eb[ib]))
                if after_b is None:
                    continue
                for label, (outcome, vec) in enumerate(projections):
                    _, pv = states.project(after_b, (0, 1), vec)
                    joint[(a_out, b_out, label)] = pa * pb * pv
    elif order == "victor_first":
        for label, (outcome, vec) in enumerate(projections):
            after_v, pv = states.project(psi, (1, 2), vec)
            if after_v is None:
                continue
            for ia, a_out in ((0, +1), (1, -1)):
                after_a, pa = states.project(after_v, (0,), states.QubitRegisterState(ea[ia]))
                if after_a is None:
                    for ib, b_out in ((0, +1), (1, -1)):
                        joint[(a_out, b_out, label)] = 0.0
                    continue
                for ib, b_out in ((0, +1), (1, -1)):
                    _, pb = states.project(after_a, (0,), states.QubitRegisterState(eb[ib]))
                    joint[(a_out, b_out, label)] = pv * pa * pb
    else:
        raise ValueError(f"unknown ordering {order!r}")
    return joint


def simulate_counts(config: ExperimentConfig, trials: int, seed: int | None = None) -> dict:
    """Fast multinomial path for noise-budget statistics.

    Draws the per-category counts for ``trials`` iid trials directly from
    the fock-mode category distribution instead of looping.  Returns
    counts keyed (commanded setting, victor outcome class, basis, alice
    outcome, bob outcome) for basis-matched fourfold events.
    """
    engine = build_engine(config)
    if not isinstance(engine, FockEngine):
        raise ValueError("simulate_counts requires fock mode")
    rng = np.random.default_rng(config.master_seed if seed is None else seed)
    n_basis = len(config.alice_bases) * len(config.bob_bases)
    counts: dict = {}
    for commanded in BisaSetting:
        for ab in config.alice_bases:
            for bb in config.bob_bases:
                dist = engine.joint_distribution(ab, bb, commanded)
                keys = sorted(dist)
                probs = np.array([dist[k] for k in keys])
                probs = probs / probs.sum()
                share = trials * config.duty_cycle * 0.5 / n_basis
                draw = rng.multinomial(rng.poisson(share), probs)
                if ab != bb:
                    continue
                for key, n in zip(keys, draw):
                    if n == 0:
                        continue
                    a, b, victor = key
                    if a == 0 or b == 0:
                        continue
                    outcome = classify(victor, commanded)
                    if outcome is BisaOutcome.DISCARD:
                        continue
                    ck = (commanded, outcome, ab, a, b)
                    counts[ck] = counts.get(ck, 0) + int(n)
    return counts


# --- trial log persistence -------------------------------------------------


def write_log(path, log: TrialLog) -> None:
    """Line-delimited JSON: a header object, then one object per trial."""
    header = {"kind": "swapsim-trial-log", "version": 1, "config": config_to_dict(log.config)}
    with open(path, "w") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for rec in log.records:
            fh.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")


def read_log(path) -> TrialLog:
    with open(path) as fh:
        header = json.loads(fh.readline())
        if header.get("kind") != "swapsim-trial-log":
            raise ValueError("not a swapsim trial log")
        config = config_from_dict(header["config"])
        records = [TrialRecord.from_dict(json.loads(line)) for line in fh if line.strip()]
    return TrialLog(config, records)


def config_to_dict(config: ExperimentConfig) -> dict:
    d = asdict(config)
    d["alice_bases"] = list(config.alice_bases)
    d["bob_bases"] = list(config.bob_bases)
    return d


def config_from_dict(d: dict) -> ExperimentConfig:
    d = dict(d)
    d["alice_bases"] = tuple(d.get("alice_bases", AXES))
    d["bob_bases"] = tuple(d.get("bob_bases", AXES))
    if isinstance(d.get("budget"), dict):
        d["budget"] = DelayBudget(**d["budget"])
    return ExperimentConfig(**d)


def run_summary(config: ExperimentConfig, log: TrialLog | None = None) -> dict:
    times = event_times(config.budget)
    report = check_delayed_choice(times)
    budget = rate_budget(config)
    summary = {
        "timeline": {
            "event_times": asdict(times),
            "satisfied": report.satisfied,
            "choice_margin_ns": list(report.choice_margin),
            "measurement_margin_ns": report.measurement_margin,
        },
        "rate_budget": {
            "fraction": budget.fraction,
            "fourfold_rate_hz": budget.fourfold_rate,
            "factors": budget.factors,
        },
    }
    if log is not None:
        subs = sort_subensembles(log.records)
        summary["counts"] = {
            "trials": len(log.records),
            "kept": sum(r.kept for r in log.records),
            "phi_plus": len(subs.phi_plus),
            "phi_minus": len(subs.phi_minus),
            "hh": len(subs.hh),
            "vv": len(subs.vv),
        }
    return summary
