import numpy as np
import pytest

from swapsim import experiment as ex
from swapsim import states
from swapsim.bisa import BisaOutcome, BisaSetting


def small_config(**kw):
    base = dict(mode="ideal", trials=4000, master_seed=101, duty_cycle=1.0)
    base.update(kw)
    return ex.ExperimentConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        ex.ExperimentConfig(mode="nope")
    with pytest.raises(ValueError):
        ex.ExperimentConfig(duty_cycle=1.5)
    with pytest.raises(ValueError):
        ex.ExperimentConfig(alice_bases=("z", "q"))
    with pytest.raises(ValueError):
        ex.ExperimentConfig(tau=-0.1)


def test_run_trials_positive():
    with pytest.raises(ValueError):
        ex.run_trials(ex.ExperimentConfig(trials=0))


def test_kept_fractions_ideal():
    # Half of the Bell-measurement trials land on psi+- and are discarded;
    # half of the separable-measurement trials land on HV/VH. Either way the
    # kept fraction is 1/2 at full duty cycle.
    log = ex.run_trials(small_config(trials=20_000))
    bsm = [r for r in log.records if r.victor_choice == "BSM"]
    ssm = [r for r in log.records if r.victor_choice == "SSM"]
    for group in (bsm, ssm):
        n = len(group)
        kept = sum(r.kept for r in group)
        sigma = np.sqrt(n * 0.25)
        assert abs(kept - 0.5 * n) < 5 * sigma


def test_duty_cycle_drops_victor_stage():
    log = ex.run_trials(small_config(duty_cycle=0.4, trials=10_000))
    dropped = [r for r in log.records if r.victor_outcome is None]
    n = len(log.records)
    sigma = np.sqrt(n * 0.4 * 0.6)
    assert abs(len(dropped) - 0.6 * n) < 5 * sigma
    # Alice and Bob still measured on dropped trials.
    assert all(r.alice_outcome in (-1, 1) and r.bob_outcome in (-1, 1) for r in dropped)
    assert all(not r.kept for r in dropped)


def test_determinism_across_workers():
    cfg = small_config(trials=2000)
    serial = ex.run_trials(cfg, workers=1)
    parallel = ex.run_trials(cfg, workers=4)
    assert [r.to_dict() for r in serial.records] == [r.to_dict() for r in parallel.records]


def test_physical_qrng_choice_source():
    log = ex.run_trials(small_config(trials=2000, qrng_source="physical"))
    n_bsm = sum(r.victor_choice == "BSM" for r in log.records)
    sigma = np.sqrt(len(log.records) * 0.25)
    assert abs(n_bsm - 0.5 * len(log.records)) < 5 * sigma


def test_sort_subensembles():
    log = ex.run_trials(small_config(trials=5000))
    subs = ex.sort_subensembles(log.records)
    groups = [subs.phi_plus, subs.phi_minus, subs.hh, subs.vv]
    total = sum(len(g) for g in groups)
    assert total == sum(r.kept for r in log.records)
    ids = [r.trial_index for g in groups for r in g]
    assert len(ids) == len(set(ids))


def test_conditional_states_bsm():
    rho = ex.conditional_state(BisaSetting.BSM, BisaOutcome.PHI_MINUS_23, (1, 4))
    assert abs(states.fidelity(rho, states.bell_state("phi-")) - 1.0) < 1e-12
    rho = ex.conditional_state(BisaSetting.BSM, BisaOutcome.PHI_PLUS_23, (1, 4))
    assert abs(states.fidelity(rho, states.bell_state("phi+")) - 1.0) < 1e-12
    rho = ex.conditional_state(BisaSetting.BSM, BisaOutcome.PHI_MINUS_23, (1, 2))
    assert np.allclose(rho.matrix, np.eye(4) / 4, atol=1e-12)
    assert abs(states.fidelity(rho, states.bell_state("psi-")) - 0.25) < 1e-12


def test_conditional_states_ssm():
    rho = ex.conditional_state(BisaSetting.SSM, BisaOutcome.HH_23, (1, 4))
    assert abs(states.fidelity(rho, states.ket("VV")) - 1.0) < 1e-12
    rho = ex.conditional_state(BisaSetting.SSM, None, (1, 2))
    assert abs(states.fidelity(rho, states.bell_state("psi-")) - 1.0) < 1e-12
    rho = ex.conditional_state(BisaSetting.SSM, None, (3, 4))
    assert abs(states.fidelity(rho, states.bell_state("psi-")) - 1.0) < 1e-12
    # Pooled separable outcomes on (1,4): the HH/VV mixture.
    rho = ex.conditional_state(BisaSetting.SSM, None, (1, 4))
    mix = 0.5 * (
        states.ket("HH").density_matrix().matrix + states.ket("VV").density_matrix().matrix
    )
    assert np.allclose(rho.matrix, mix, atol=1e-12)


def test_conditional_state_errors():
    with pytest.raises(ValueError):
        ex.conditional_state(BisaSetting.BSM, BisaOutcome.HH_23, (1, 4))
    with pytest.raises(ValueError):
        ex.conditional_state(BisaSetting.SSM, BisaOutcome.PHI_MINUS_23, (1, 2))
    with pytest.raises(ValueError):
        ex.conditional_state(BisaSetting.BSM, None, (2, 4))


def test_ordering_indifference():
    for setting in BisaSetting:
        for ab in ("z", "x", "y"):
            for bb in ("z", "y"):
                j1 = ex.ordering_joint(ab, bb, setting, "alice_bob_first")
                j2 = ex.ordering_joint(ab, bb, setting, "victor_first")
                keys = set(j1) | set(j2)
                for k in keys:
                    assert abs(j1.get(k, 0.0) - j2.get(k, 0.0)) < 1e-12
                assert abs(sum(j1.values()) - 1.0) < 1e-12


def test_rate_budget():
    budget = ex.rate_budget(ex.ExperimentConfig())
    assert budget.fraction == pytest.approx(0.21**2 * 0.25 * 0.5 * 0.6)
    assert abs(budget.fraction - 0.0033) < 1e-4
    assert abs(budget.fourfold_rate - 0.016) < 1e-3
    with pytest.raises(ValueError):
        ex.rate_budget(ex.ExperimentConfig(), base_rate=0.0)


def test_rate_budget_degenerate_factors():
    cfg = ex.ExperimentConfig(input_transmission=1.0, duty_cycle=1.0)
    assert ex.rate_budget(cfg).fraction == pytest.approx(0.125)
    cfg = ex.ExperimentConfig(input_transmission=0.0)
    assert ex.rate_budget(cfg).fourfold_rate == 0.0


def test_imperfection_product():
    assert abs(ex.imperfection_product((0.674, 0.964, 0.94, 0.99)) - 0.605) < 1e-3
    assert abs(ex.imperfection_product((0.95, 0.99)) - 0.94) < 1e-3
    assert ex.imperfection_product(()) == 1.0
    with pytest.raises(ValueError):
        ex.imperfection_product((1.2,))


def test_calibrate_tau_roundtrip():
    tau = 0.35
    ratio = ex.spdc_pair_ratio(tau)
    back = ex.calibrate_tau(ratio)
    assert abs(back - tau) < 1e-6
    with pytest.raises(ValueError):
        ex.calibrate_tau(-0.1)


def test_log_roundtrip(tmp_path):
    cfg = small_config(trials=300)
    log = ex.run_trials(cfg)
    path = tmp_path / "log.jsonl"
    ex.write_log(path, log)
    back = ex.read_log(path)
    assert back.config == cfg
    assert [r.to_dict() for r in back.records] == [r.to_dict() for r in log.records]


def test_run_summary_contents():
    cfg = small_config(trials=500)
    log = ex.run_trials(cfg)
    summary = ex.run_summary(cfg, log)
    assert summary["timeline"]["satisfied"]
    assert summary["counts"]["trials"] == 500
    assert summary["rate_budget"]["fraction"] > 0


@pytest.fixture(scope="module")
def clean_fock_engine():
    # Fock engine with no imperfections: should reproduce the ideal physics.
    cfg = ex.ExperimentConfig(
        mode="fock", tau=0.05, input_transmission=1.0, detector_efficiency=1.0,
        mzi_visibility=1.0, gvm_overlap=1.0, switching_fidelity=1.0,
        fiber_polarization_fidelity=1.0,
    )
    return ex.build_engine(cfg)


def test_fock_engine_matches_ideal_in_clean_limit(clean_fock_engine):
    eng = clean_fock_engine
    e_z = eng.expected_correlation(BisaSetting.BSM, [BisaOutcome.PHI_MINUS_23], "z")
    e_x = eng.expected_correlation(BisaSetting.BSM, [BisaOutcome.PHI_MINUS_23], "x")
    e_y = eng.expected_correlation(BisaSetting.BSM, [BisaOutcome.PHI_MINUS_23], "y")
    # Residual deviation is the tau^2 double-pair contamination.
    assert abs(e_z - 1.0) < 0.01
    assert abs(e_x + 1.0) < 0.01
    assert abs(e_y - 1.0) < 0.01
    pooled = [
        eng.expected_correlation(BisaSetting.SSM, list(ex.KEPT_OUTCOMES[BisaSetting.SSM]), b)
        for b in ("z", "x", "y")
    ]
    assert abs(pooled[0] - 1.0) < 0.01
    assert abs(pooled[1]) < 0.01
    assert abs(pooled[2]) < 0.01


def test_fock_trial_sampler_consistent_with_distribution():
    # tau large enough that a few thousand trials contain many fourfolds.
    cfg = ex.ExperimentConfig(
        mode="fock", trials=4000, master_seed=77, duty_cycle=1.0, tau=0.5,
        input_transmission=1.0, detector_efficiency=1.0, mzi_visibility=1.0,
        gvm_overlap=1.0, switching_fidelity=1.0, fiber_polarization_fidelity=1.0,
        alice_bases=("z",), bob_bases=("z",),
    )
    engine = ex.build_engine(cfg)
    times = ex.event_times(cfg.budget)
    recs = [ex.simulate_trial(engine, cfg, i, times) for i in range(cfg.trials)]
    kept = [r for r in recs if r.kept]
    # Conditioned on the phi- outcome, photons 1 and 4 agree in the z basis.
    bsm = [r for r in kept if r.victor_outcome == "phi-23"]
    agree = sum(r.alice_outcome == r.bob_outcome for r in bsm)
    assert len(bsm) > 20
    assert agree / len(bsm) > 0.97


def test_simulate_counts_fast_path():
    cfg = ex.ExperimentConfig(mode="fock", trials=200_000, master_seed=5,
                              tau=0.5, input_transmission=1.0,
                              detector_efficiency=1.0, mzi_visibility=1.0,
                              gvm_overlap=1.0, switching_fidelity=1.0,
                              fiber_polarization_fidelity=1.0)
    counts = ex.simulate_counts(cfg, trials=2_000_000, seed=9)
    zz = {
        k: v for k, v in counts.items()
        if k[0] is BisaSetting.BSM and k[1] is BisaOutcome.PHI_MINUS_23 and k[2] == "z"
    }
    same = sum(v for k, v in zz.items() if k[3] == k[4])
    diff = sum(v for k, v in zz.items() if k[3] != k[4])
    assert same + diff > 100
    assert same / (same + diff) > 0.97


def test_spdc_pair_ratio_small_tau():
    tau = 0.05
    assert ex.spdc_pair_ratio(tau) == pytest.approx(3 * tau**2 / 4, rel=1e-3)
