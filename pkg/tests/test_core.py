import numpy as np
import pytest
from numpy import testing
from pydantic import ValidationError

from wetsim.core.interpolation import affine_grid_values, embed_caglad, interpolate_lattice
from wetsim.core.models import InterpolatedPath, LatticeField, PathKind, SeedSpec, SpectralVector, TimeGrid
from wetsim.core.random import random_stream
from wetsim.core.serialization import field_from_csv, field_to_csv, read_rows, write_rows
from wetsim.core.spectral import negative_sobolev_norm, sine_coefficients, sine_coefficients_array
from wetsim.exceptions import GridMismatchException, InvalidFieldException
from wetsim.utils.parallel import ReplicaExecutor
from wetsim.utils.utility import config_digest, split_evenly


def test_lattice_field_shape_is_checked():
    with pytest.raises(ValidationError):
        LatticeField(n=3, values=[1.0, 2.0])


def test_lattice_field_is_read_only():
    field = LatticeField.from_values([1.0, 2.0])
    with pytest.raises(ValueError):
        field.values[0] = 5.0


def test_negative_field_rejected():
    with pytest.raises(InvalidFieldException):
        LatticeField.from_values([1.0, -0.5]).check_nonnegative()


def test_affine_interpolation_refines_between_sites():
    path = interpolate_lattice(LatticeField.from_values([1.0, 2.0]), 4)
    testing.assert_allclose(path.values, np.array([0.0, 0.5, 1.0, 1.5, 2.0]) / np.sqrt(2.0))
    assert path.kind == PathKind.AFFINE


def test_caglad_embedding_is_left_continuous():
    path = embed_caglad(LatticeField.from_values([1.0, 2.0]), 4)
    testing.assert_allclose(path.values, np.array([0.0, 1.0, 1.0, 2.0, 2.0]) / np.sqrt(2.0))
    testing.assert_allclose(path.evaluate(0.5), 1.0 / np.sqrt(2.0))


def test_resolution_must_be_a_multiple_of_n():
    with pytest.raises(GridMismatchException):
        affine_grid_values(np.ones(2), 3)


def test_sine_coefficients_of_linear_path_are_exact():
    resolution = 16
    path = InterpolatedPath(resolution=resolution, values=np.linspace(0.0, 1.0, resolution + 1))
    n = np.arange(1, 9)
    expected = np.sqrt(2.0) * (-1.0) ** (n + 1) / (n * np.pi)
    testing.assert_allclose(sine_coefficients(path, cutoff=8).coeffs, expected, atol=1e-12)


def test_sine_coefficients_kernel_matches_single_path(rng):
    values = np.abs(rng.standard_normal((3, 9)))
    stacked = sine_coefficients_array(values, 8, 5)
    single = sine_coefficients(InterpolatedPath(resolution=8, values=values[1]), cutoff=5)
    testing.assert_allclose(stacked[1], single.coeffs)


def test_negative_sobolev_norm():
    vector = SpectralVector(coeffs=[3.0, 4.0])
    assert negative_sobolev_norm(vector, 0.0) == pytest.approx(5.0)
    assert negative_sobolev_norm(vector, 1.0) == pytest.approx(np.sqrt(13.0))


def test_time_grid():
    grid = TimeGrid(t0=0.0, t1=2.0, steps=4)
    assert grid.dt == pytest.approx(0.5)
    assert grid.index_of(1.1) == 2
    with pytest.raises(ValidationError):
        TimeGrid(t0=1.0, t1=1.0, steps=4)


def test_seed_rejects_values_outside_u64():
    with pytest.raises(ValidationError):
        SeedSpec(master_seed=2 ** 64)


def test_streams_are_reproducible_and_separated(seed):
    first = random_stream(seed).normal(5)
    testing.assert_array_equal(first, random_stream(seed).normal(5))
    assert not np.array_equal(first, random_stream(seed.derive(stream_label="other")).normal(5))
    assert not np.array_equal(first, random_stream(seed.derive(replica_index=1)).normal(5))


def test_field_csv_is_bit_exact():
    field = LatticeField.from_values([0.1, 1.0 / 3.0, 2.0 ** -40])
    testing.assert_array_equal(field_from_csv(field_to_csv(field)).values, field.values)


def test_write_rows_comment_line():
    text = write_rows(["a", "b"], [(1, 0.5)], comment="digest=abc")
    assert text.splitlines()[0] == "# digest=abc"
    assert read_rows(text) == [["1", "0.5"]]


def test_config_digest_ignores_key_order():
    assert config_digest({"a": 1, "b": [1, 2]}) == config_digest({"b": [1, 2], "a": 1})
    assert config_digest({"a": 1}) != config_digest({"a": 2})


def test_split_evenly():
    assert split_evenly(10, 4) == [3, 3, 2, 2]
    assert split_evenly(2, 4) == [1, 1]


@pytest.mark.parametrize("threads", [1, 3])
def test_chunk_results_do_not_depend_on_threads(seed, threads):
    def task(size, chunk_seed):
        return random_stream(chunk_seed).normal(size)

    reference = np.concatenate(ReplicaExecutor(threads=1, chunks=5).map_chunks(task, 23, seed))
    result = np.concatenate(ReplicaExecutor(threads=threads, chunks=5).map_chunks(task, 23, seed))
    testing.assert_array_equal(result, reference)
