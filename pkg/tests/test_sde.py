import numpy as np
import pytest
from scipy import stats

from errors import PreconditionError
from fields.base import ConstantField
from fields.coefficients import constant_coefficients, example_coefficients
from fields.example import ExampleParams
from sde.euler import euler_maruyama
from sde.exits import exit_and_hitting
from sde.flow import derivative_flow
from sde.storage import load_batch, persist_batch
from sde.streams import CHUNK_SIZE, chunk_layout, path_keys
from sde.types import SimConfig
from worker import WorkerPool

ORIGIN = [0.0, 0.0, 0.0]


@pytest.mark.parametrize(
    "kwargs",
    [
        {"dt": 0.0, "T": 1.0, "n_paths": 1},
        {"dt": 0.1, "T": -1.0, "n_paths": 1},
        {"dt": 2.0, "T": 1.0, "n_paths": 1},
        {"dt": 0.1, "T": 1.0, "n_paths": 0},
        {"dt": 0.1, "T": 1.0, "n_paths": 1, "record_every": 0},
        {"dt": 0.1, "T": 1.0, "n_paths": 1, "master_seed": -1},
    ],
)
def test_sim_config_rejects_bad_values(kwargs):
    with pytest.raises(PreconditionError):
        SimConfig(**kwargs)


def test_record_steps_always_include_the_horizon():
    config = SimConfig(dt=0.1, T=1.0, n_paths=1, record_every=3)
    assert config.n_steps == 10
    assert config.record_steps.tolist() == [0, 3, 6, 9, 10]
    assert config.times[-1] == pytest.approx(1.0)


def test_chunk_layout_covers_every_path():
    layout = chunk_layout(600)
    assert layout == [(0, CHUNK_SIZE), (1, CHUNK_SIZE), (2, 600 - 2 * CHUNK_SIZE)]
    keys = path_keys(600)
    assert keys[CHUNK_SIZE].tolist() == [1, 0]


def test_results_do_not_depend_on_worker_count():
    coeffs = constant_coefficients()
    config = SimConfig(dt=0.01, T=0.2, n_paths=600, master_seed=11, store_paths=False)
    serial = euler_maruyama(coeffs, ORIGIN, config, radii=[0.5], pool=WorkerPool(1))
    parallel = euler_maruyama(coeffs, ORIGIN, config, radii=[0.5], pool=WorkerPool(2))
    np.testing.assert_array_equal(serial.terminal, parallel.terminal)
    np.testing.assert_array_equal(serial.exits.tau, parallel.exits.tau)


def test_a_path_keeps_its_noise_when_the_ensemble_grows():
    coeffs = constant_coefficients()
    small = euler_maruyama(coeffs, ORIGIN, SimConfig(dt=0.01, T=0.1, n_paths=300, master_seed=3, store_paths=False))
    large = euler_maruyama(coeffs, ORIGIN, SimConfig(dt=0.01, T=0.1, n_paths=600, master_seed=3, store_paths=False))
    np.testing.assert_array_equal(small.terminal, large.terminal[:300])


def test_seeds_change_the_noise():
    coeffs = constant_coefficients()
    a = euler_maruyama(coeffs, ORIGIN, SimConfig(dt=0.01, T=0.1, n_paths=8, master_seed=1))
    b = euler_maruyama(coeffs, ORIGIN, SimConfig(dt=0.01, T=0.1, n_paths=8, master_seed=2))
    assert not np.array_equal(a.terminal, b.terminal)


def test_start_dimension_is_checked():
    with pytest.raises(ValueError):
        euler_maruyama(constant_coefficients(), [0.0, 0.0], SimConfig(dt=0.1, T=1.0, n_paths=1))


def test_brownian_exit_time_from_the_unit_ball():
    coeffs = constant_coefficients()
    config = SimConfig(dt=1e-3, T=2.0, n_paths=2048, master_seed=7, store_paths=False)
    batch = euler_maruyama(coeffs, ORIGIN, config, radii=[1.0])
    tau = batch.exits.tau[:, 0]
    assert not np.isnan(tau).any()
    assert tau.mean() == pytest.approx(1.0 / 3.0, abs=0.035)


def test_stored_paths_reproduce_online_exit_records():
    coeffs = constant_coefficients()
    config = SimConfig(dt=0.01, T=1.0, n_paths=64, master_seed=5)
    batch = euler_maruyama(coeffs, ORIGIN, config, radii=[0.3, 0.6])
    offline = exit_and_hitting(batch, [0.3, 0.6])
    np.testing.assert_allclose(offline.tau, batch.exits.tau, equal_nan=True)
    assert batch.exits.column(0.6) == 1
    with pytest.raises(PreconditionError):
        batch.exits.column(0.45)


def test_exit_records_need_stored_paths():
    batch = euler_maruyama(
        constant_coefficients(), ORIGIN, SimConfig(dt=0.1, T=1.0, n_paths=4, store_paths=False)
    )
    with pytest.raises(PreconditionError):
        exit_and_hitting(batch, [1.0])


def test_tau_prime_caps_at_radius_squared():
    coeffs = constant_coefficients()
    batch = euler_maruyama(coeffs, ORIGIN, SimConfig(dt=0.01, T=0.5, n_paths=128, master_seed=9), radii=[2.0])
    capped = batch.exits.tau_prime[:, 0]
    assert np.all(capped[~np.isnan(capped)] <= 4.0)


def test_persisted_batch_loads_back(tmp_path):
    coeffs = constant_coefficients()
    batch = euler_maruyama(
        coeffs, ORIGIN, SimConfig(dt=0.05, T=0.5, n_paths=10, master_seed=4, record_every=2), radii=[0.4]
    )
    written = persist_batch(batch, tmp_path / "batch")
    assert written["data"].suffix == ".bin"
    loaded = load_batch(tmp_path / "batch")
    np.testing.assert_array_equal(loaded.terminal, batch.terminal)
    np.testing.assert_array_equal(loaded.paths, batch.paths)
    np.testing.assert_array_equal(loaded.exits.tau, batch.exits.tau)
    assert loaded.config == batch.config


def test_load_rejects_foreign_files(tmp_path):
    batch = euler_maruyama(constant_coefficients(), ORIGIN, SimConfig(dt=0.1, T=0.2, n_paths=2))
    persist_batch(batch, tmp_path / "batch")
    data = tmp_path / "batch.bin"
    raw = bytearray(data.read_bytes())
    raw[:4] = b"XXXX"
    data.write_bytes(bytes(raw))
    with pytest.raises(PreconditionError):
        load_batch(tmp_path / "batch")


def test_derivative_flow_shares_the_simulation_noise():
    coeffs = constant_coefficients()
    config = SimConfig(dt=0.01, T=0.2, n_paths=20, master_seed=13, store_paths=False)
    plain = euler_maruyama(coeffs, ORIGIN, config)
    flow = derivative_flow(coeffs, ORIGIN, np.eye(3), config, k0_field=ConstantField(0.0, 3))
    np.testing.assert_array_equal(flow.terminal, plain.terminal)
    # constant coefficients and K0 = 0 leave eta untouched
    for i in range(3):
        np.testing.assert_allclose(flow.eta(i), np.tile(np.eye(3)[i], (20, 1)))


def test_derivative_flow_is_affine_in_the_initial_direction():
    coeffs = example_coefficients(ExampleParams()).mollified(4)
    config = SimConfig(dt=0.01, T=0.1, n_paths=200, master_seed=29, store_paths=False)
    etas = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 2.0, 0.0]]
    flow = derivative_flow(coeffs, [0.3, 0.1, 0.0], etas, config)
    assert flow.dead_count == 0
    # K0 = 1 adds a direction-free term, so eta is affine rather than linear
    combined = flow.eta(1) + 2.0 * flow.eta(2) - 2.0 * flow.eta(0)
    np.testing.assert_allclose(flow.eta(3), combined, rtol=1e-9, atol=1e-9)
    assert not np.allclose(flow.eta(0), 0.0)


def _scaled_exit_times(radius, seed):
    config = SimConfig(dt=0.004 * radius ** 2, T=4.0 * radius ** 2, n_paths=2000, master_seed=seed, store_paths=False)
    batch = euler_maruyama(constant_coefficients(), ORIGIN, config, radii=[radius])
    return batch.exits.tau[:, 0] / radius ** 2


def test_exit_times_are_invariant_under_brownian_scaling():
    unit = _scaled_exit_times(1.0, seed=41)
    assert not np.isnan(unit).any()
    # shared noise: the half-radius run is the unit run scaled by one half
    np.testing.assert_allclose(_scaled_exit_times(0.5, seed=41), unit, rtol=1e-9)
    result = stats.ks_2samp(_scaled_exit_times(0.5, seed=43), unit)
    assert result.pvalue > 1e-3


def test_taming_leaves_bounded_drift_functionals_unchanged():
    coeffs = constant_coefficients(drift=[1.0, 0.0, 0.0])
    plain_config = SimConfig(dt=0.01, T=1.0, n_paths=4000, master_seed=7, store_paths=False)
    tamed_config = SimConfig(dt=0.01, T=1.0, n_paths=4000, master_seed=7, store_paths=False, taming=True)
    plain = euler_maruyama(coeffs, ORIGIN, plain_config).terminal
    tamed = euler_maruyama(coeffs, ORIGIN, tamed_config).terminal
    se = plain[:, 0].std(ddof=1) / np.sqrt(plain.shape[0])
    assert abs(plain[:, 0].mean() - 1.0) <= 4.0 * se
    assert abs(tamed[:, 0].mean() - plain[:, 0].mean()) <= 3.0 * se
    np.testing.assert_allclose(tamed[:, 1:], plain[:, 1:])
    second = np.sum(plain ** 2, axis=1)
    assert abs(np.sum(tamed ** 2, axis=1).mean() - second.mean()) <= 3.0 * second.std(ddof=1) / np.sqrt(second.size)
