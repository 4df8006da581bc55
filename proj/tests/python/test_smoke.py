import math

import pytest

import pthmm


@pytest.fixture(scope="module")
def spec():
    return pthmm.ModelSpec(2, ["poisson", "gamma"], 0)


def test_coord_names(spec):
    names = pthmm.coord_names(spec)
    assert names[0] == "delta1"
    assert "lambda1_1" in names
    assert "mu2_2" in names and "sigma2_2" in names


def test_prior_and_likelihood_round_trip(spec):
    x = pthmm.sample_prior(spec, seed=3)
    assert len(x) == len(pthmm.coord_names(spec))
    lp = pthmm.log_prior(spec, x)
    assert math.isfinite(lp)

    data = pthmm.simulate(spec, x, [40], seed=7)
    assert len(data) == 1
    assert len(data[0]["values"]) == 40
    ll = pthmm.log_likelihood(spec, x, data)
    assert math.isfinite(ll)


def test_transition_matrix_rows_sum_to_one(spec):
    x = pthmm.sample_prior(spec, seed=11)
    gamma = pthmm.transition_matrix(spec, x)
    assert len(gamma) == 2
    for row in gamma:
        assert abs(sum(row) - 1.0) < 1e-12
        assert all(p > 0.0 for p in row)


def test_pt_sample_runs_and_is_deterministic(spec):
    truth = pthmm.sample_prior(spec, seed=19)
    data = pthmm.simulate(spec, truth, [60], seed=23)
    ladder = pthmm.geometric_ladder(0.25, 2)
    assert ladder == pytest.approx([1.0, 0.5, 0.25])

    kwargs = dict(betas=ladder, n_iters=800, burn_in=200, seed=29)
    a = pthmm.pt_sample(spec, data, **kwargs)
    b = pthmm.pt_sample(spec, data, **kwargs)
    assert a["names"] == pthmm.coord_names(spec)
    assert len(a["draws"]) == 600
    assert a["draws"] == b["draws"]
    assert len(a["swap_rates"]) == 2

    chain = [row[a["names"].index("lambda1_1")] for row in a["draws"]]
    rhat = pthmm.split_rhat([chain])
    ess = pthmm.ess_basic([chain])
    assert math.isfinite(rhat)
    assert 0.0 < ess <= 1.25 * len(chain)


def test_relabel_orders_the_constraint(spec):
    names = pthmm.coord_names(spec)
    store = {
        "names": names,
        "draws": [pthmm.sample_prior(spec, seed=100 + i) for i in range(50)],
    }
    out = pthmm.relabel_by_ordering(spec, store, ["mu2_1", "mu2_2"])
    i1, i2 = names.index("mu2_1"), names.index("mu2_2")
    for row in out["draws"]:
        assert row[i1] <= row[i2]


def test_tempered_prior_demo_shifts_mass():
    cold = pthmm.tempered_prior_demo(1.0, 3, 20000, 5)
    hot = pthmm.tempered_prior_demo(0.25, 3, 20000, 5)
    assert abs(cold - 11.0 / 18.0) < 0.02
    assert hot > cold


def test_errors_surface_as_value_error(spec):
    with pytest.raises(ValueError):
        pthmm.geometric_ladder(1.5, 2)
    with pytest.raises(ValueError):
        pthmm.sample_prior(pthmm.ModelSpec(0, ["poisson"], 0), seed=1)
