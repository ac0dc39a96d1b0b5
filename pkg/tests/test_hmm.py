import pytest

from sigauto import (
    Clusterer,
    ConfigError,
    DUMMY_EVENT,
    DUMMY_STATE,
    EmaGridClassifier,
    Kernel,
    PluginParams,
    Signal,
    StalenessError,
    StatFn,
    UnknownStateError,
    build_isa,
    init_isa,
    isa_to_hmm,
    isa_to_hmm_continuous,
    next_hmm,
    next_hmm_continuous,
    next_isa,
    rho_fn,
    sigma_fn,
    transition_row,
)

from conftest import E1, build_plain, random_walk


def fold_pipeline(values, params, emission="discrete", kernel=None):
    """Incremental construction, one next_isa/next_hmm per observation."""
    sig = Signal()
    classifier = EmaGridClassifier(params)
    clusterer = Clusterer(params.grid_width)
    sigma, rho = sigma_fn(params), rho_fn(params)
    isa = hmm = None
    for value in values:
        sig.append(value)
        if isa is None:
            isa = init_isa(sig[0], classifier)
            if emission == "discrete":
                hmm = isa_to_hmm(isa, sig, sigma, rho, clusterer)
            else:
                hmm = isa_to_hmm_continuous(isa, sig, sigma, kernel)
        else:
            next_isa(isa, sig, classifier)
            if emission == "discrete":
                next_hmm(hmm, isa, sig, sigma, rho, clusterer)
            else:
                next_hmm_continuous(hmm, isa, sig, sigma, kernel)
    return sig, isa, hmm


class TestIsaToHmm:
    def test_e1_count_statistics(self, e1_signal, count_params):
        _, hmm = build_plain(e1_signal, count_params)
        assert hmm.transition_row("1") == {
            "1": pytest.approx(1 / 3, abs=1e-15),
            "5": pytest.approx(2 / 3, abs=1e-15),
        }
        assert hmm.transition_row("5") == {"1": 1.0}
        assert hmm.transition_row(DUMMY_STATE) == {DUMMY_STATE: 1.0}
        assert hmm.emission_row("1") == {"1": 1.0}
        assert hmm.emission_row("5") == {"5": 1.0}
        assert hmm.alpha() == {"5": 1.0}
        assert not hmm.current_is_new

    def test_single_observation(self, count_params):
        sig = Signal([1.0])
        _, hmm = build_plain(sig, count_params)
        assert set(hmm.states) == {"1", DUMMY_STATE}
        assert hmm.transition_row("1") == {DUMMY_STATE: 1.0}
        assert hmm.emission_row("1") == {"1": 1.0}
        assert hmm.current_is_new

    def test_e1_discounted(self, e1_signal):
        params = PluginParams(delta=0.5, stat_variant="discounted_sum")
        _, hmm = build_plain(e1_signal, params)
        denominator = 0.5**3 + 0.5**2 + 1.0
        assert hmm.transition_row("1")["1"] == pytest.approx(0.125 / denominator, rel=1e-12)
        assert hmm.transition_row("1")["5"] == pytest.approx(1.25 / denominator, rel=1e-12)
        assert hmm.transition_row("1")["1"] == pytest.approx(0.0909, abs=1e-4)
        assert hmm.transition_row("1")["5"] == pytest.approx(0.9091, abs=1e-4)

    def test_instant_zero_counts_toward_first_emission(self, count_params):
        # the pre-initial cell {0} contributes instant 0 to the first state's
        # incoming set even though that state has no transition row from it
        sig = Signal([1.0, 5.0, 1.0])
        _, hmm = build_plain(sig, count_params)
        assert hmm._edenom["1"].raw_count == 2  # instants {0, 2}
        assert hmm.emission_row("1") == {"1": 1.0}

    def test_rho_must_be_additive(self, e1_signal, count_params):
        classifier = EmaGridClassifier(count_params)
        isa = build_isa(e1_signal, classifier)
        latest = StatFn("latest_occurrence")
        with pytest.raises(ConfigError):
            isa_to_hmm(isa, e1_signal, sigma_fn(count_params), latest, Clusterer(1.0))

    def test_tau_mismatch(self, e1_signal, count_params):
        other = PluginParams(delta=0.5, stat_variant="discounted_sum")
        isa = build_isa(e1_signal, EmaGridClassifier(count_params))
        with pytest.raises(ConfigError):
            isa_to_hmm(isa, e1_signal, sigma_fn(count_params), rho_fn(other),
                       Clusterer(1.0))


class TestNextHmm:
    def test_step_3_to_4_renormalizes_one_row(self, count_params):
        _, _, hmm = fold_pipeline(E1[:4], count_params)
        assert hmm.transition_row("1") == {"1": 0.5, "5": 0.5}
        assert hmm.alpha() == {"1": 1.0}
        _, _, hmm2 = fold_pipeline(E1, count_params)
        assert hmm2.transition_row("1") == {
            "1": pytest.approx(1 / 3, abs=1e-15),
            "5": pytest.approx(2 / 3, abs=1e-15),
        }
        assert hmm2.alpha() == {"5": 1.0}

    def test_new_state_step(self, count_params):
        _, isa, hmm = fold_pipeline((1.0, 1.0, 5.0), count_params)
        assert hmm.current == "5"
        assert hmm.current_is_new
        assert hmm.transition_row("5") == {DUMMY_STATE: 1.0}
        assert hmm.alpha() == {"5": 1.0}

    def test_staleness(self, count_params):
        sig, isa, hmm = fold_pipeline(E1, count_params)
        with pytest.raises(StalenessError):
            next_hmm(hmm, isa, sig, sigma_fn(count_params), rho_fn(count_params),
                     Clusterer(1.0))

    def test_plugin_mismatch_detected(self, count_params):
        sig, isa, hmm = fold_pipeline(E1, count_params)
        sig.append(9.0)
        classifier = EmaGridClassifier(count_params)
        for obs in sig[:-1]:
            classifier.step(obs)
        next_isa(isa, sig, classifier)
        other = PluginParams(delta=0.9, stat_variant="discounted_sum")
        with pytest.raises(ConfigError):
            next_hmm(hmm, isa, sig, sigma_fn(other), rho_fn(other), Clusterer(1.0))


def assert_models_equal(incremental, scratch, exact):
    tol = 0.0 if exact else 1e-9
    ti, ts = incremental.transition_matrix(), scratch.transition_matrix()
    assert ti.sparsity() == ts.sparsity()
    for p, q in ti.sparsity():
        assert abs(ti.weight(p, q) - ts.weight(p, q)) <= tol or (
            ti.weight(p, q) == pytest.approx(ts.weight(p, q), rel=1e-9)
        )
    if incremental.emission_kind == "discrete":
        ei, es = incremental.emission_matrix(), scratch.emission_matrix()
        assert ei.sparsity() == es.sparsity()
        for p, q in ei.sparsity():
            assert ei.weight(p, q) == pytest.approx(es.weight(p, q), rel=1e-9, abs=tol)
    assert incremental.current == scratch.current
    assert incremental.current_is_new == scratch.current_is_new


@pytest.mark.parametrize("variant,delta", [("count", 0.0), ("discounted_sum", 0.9)])
@pytest.mark.parametrize("lam", [1.0, 0.5])
def test_incremental_equals_scratch_random_walks(variant, delta, lam):
    params = PluginParams(lam=lam, delta=delta, stat_variant=variant)
    for seed in range(3):
        walk = random_walk(400, seed=seed)
        sig, isa, hmm = fold_pipeline(walk, params)
        scratch_isa, scratch_hmm = build_plain(sig, params)
        assert isa == scratch_isa
        assert_models_equal(hmm, scratch_hmm, exact=(variant == "count"))


def test_row_stochasticity_after_every_update(count_params):
    params = PluginParams(delta=0.7, stat_variant="discounted_sum")
    sig = Signal()
    classifier = EmaGridClassifier(params)
    clusterer = Clusterer(params.grid_width)
    sigma, rho = sigma_fn(params), rho_fn(params)
    isa = hmm = None
    for value in random_walk(250, seed=5):
        sig.append(value)
        if isa is None:
            isa = init_isa(sig[0], classifier)
            hmm = isa_to_hmm(isa, sig, sigma, rho, clusterer)
        else:
            next_isa(isa, sig, classifier)
            next_hmm(hmm, isa, sig, sigma, rho, clusterer)
        for state in hmm.states:
            assert sum(hmm.transition_row(state).values()) == pytest.approx(1.0, abs=1e-9)
            assert sum(hmm.emission_row(state).values()) == pytest.approx(1.0, abs=1e-9)


def test_dummy_row_exact(count_params):
    _, _, hmm = fold_pipeline((1.0, 1.0, 5.0), count_params)
    dangling = [s for s in hmm.state_order if hmm.transition_row(s) == {DUMMY_STATE: 1.0}]
    assert dangling == ["5"]
    assert hmm.transition_row(DUMMY_STATE) == {DUMMY_STATE: 1.0}
    assert hmm.emission_row(DUMMY_STATE) == {DUMMY_EVENT: 1.0}


def test_zero_denominator_row_falls_back_to_dummy():
    # region statistics can zero a row even when outgoing instants exist
    params = PluginParams(stat_variant="region_count", region=[[100.0, 200.0]])
    _, _, hmm = fold_pipeline(E1, params)
    assert hmm.transition_row("1") == {DUMMY_STATE: 1.0}


def test_emission_support(count_params):
    _, _, hmm = fold_pipeline(E1, count_params)
    for state in ("1", "5"):
        for cluster, weight in hmm.emission_row(state).items():
            assert weight > 0
            assert cluster in hmm.clusterer.observed


class TestTransitionRowView:
    def test_e1_row(self, e1_signal, count_params):
        _, hmm = build_plain(e1_signal, count_params)
        assert transition_row(hmm, "5") == {"1": 1.0}

    def test_dummy_absorbing(self, e1_signal, count_params):
        _, hmm = build_plain(e1_signal, count_params)
        assert transition_row(hmm, DUMMY_STATE) == {DUMMY_STATE: 1.0}

    def test_unknown_state(self, e1_signal, count_params):
        _, hmm = build_plain(e1_signal, count_params)
        with pytest.raises(UnknownStateError):
            transition_row(hmm, "no-such-state")


class TestContinuous:
    def test_e1_mixtures(self, e1_signal, count_params):
        classifier = EmaGridClassifier(count_params)
        isa = build_isa(e1_signal, classifier)
        hmm = isa_to_hmm_continuous(isa, e1_signal, sigma_fn(count_params),
                                    Kernel([[1.0]]))
        centers, weight = hmm.mixture("5")
        assert centers == (2, 4)
        assert weight == 0.5
        assert hmm.mixture("1") == ((0, 1, 3), pytest.approx(1 / 3))

    def test_single_observation(self, count_params):
        sig = Signal([1.0])
        isa = build_isa(sig, EmaGridClassifier(count_params))
        hmm = isa_to_hmm_continuous(isa, sig, sigma_fn(count_params), Kernel([[1.0]]))
        assert hmm.mixture("1") == ((0,), 1.0)

    def test_density_collapses_to_single_kernel(self, e1_signal, count_params):
        # state "1" has centers 1.0, 1.0, 1.0: density(x) = phi(x - 1)
        isa = build_isa(e1_signal, EmaGridClassifier(count_params))
        hmm = isa_to_hmm_continuous(isa, e1_signal, sigma_fn(count_params),
                                    Kernel([[1.0]]))
        phi = Kernel([[1.0]])
        for x in (0.0, 1.0, 2.5):
            assert hmm.density("1", (x,)) == pytest.approx(phi((x - 1.0,)), rel=1e-12)

    def test_dimension_mismatch(self, count_params):
        sig = Signal([(1.0, 2.0)])
        isa = build_isa(sig, EmaGridClassifier(count_params))
        with pytest.raises(ConfigError):
            isa_to_hmm_continuous(isa, sig, sigma_fn(count_params), Kernel([[1.0]]))

    def test_incremental_equals_scratch(self, count_params):
        kernel = Kernel([[1.0]])
        for seed in range(3):
            walk = random_walk(300, seed=seed + 20)
            sig, isa, hmm = fold_pipeline(walk, count_params, emission="continuous",
                                          kernel=kernel)
            scratch_isa = build_isa(sig, EmaGridClassifier(count_params))
            scratch = isa_to_hmm_continuous(scratch_isa, sig, sigma_fn(count_params),
                                            kernel)
            assert isa == scratch_isa
            assert hmm.mixtures == scratch.mixtures
            assert_models_equal(hmm, scratch, exact=True)

    def test_updated_state_weights_sum_to_one(self, count_params):
        _, _, hmm = fold_pipeline(E1, count_params, emission="continuous",
                                  kernel=Kernel([[1.0]]))
        centers, weight = hmm.mixture("5")
        assert len(centers) * weight == pytest.approx(1.0, abs=0)
