"""
Module contains the shared value types: lattice fields, interpolated paths, spectral vectors, time grids and seeds.
All models are immutable after construction; array fields are stored read-only.
"""
import enum
from typing import Any

import numpy as np
from pydantic import BaseModel, validator, root_validator

from wetsim.exceptions import InvalidFieldException


def _readonly_array(value: Any) -> np.ndarray:
    array = np.array(value, dtype=float)
    array.setflags(write=False)
    return array


class FrozenModel(BaseModel):
    """Base for immutable numeric models holding numpy arrays"""

    class Config:
        """pydantic model configuration"""
        arbitrary_types_allowed = True
        allow_mutation = False


class PathKind(str, enum.Enum):
    """Interpolation flavour of an InterpolatedPath"""
    AFFINE = "affine"
    CAGLAD = "caglad-constant"


class LatticeField(FrozenModel):
    """Configuration of the discrete interface, heights phi_1..phi_N with phi_0 = 0 implicit"""
    n: int
    """number of sites N"""
    values: np.ndarray
    """heights phi_1..phi_N"""

    @validator("values", pre=True)
    def to_array(cls, value):
        return _readonly_array(value)

    @root_validator(skip_on_failure=True)
    def check_shape(cls, fields):
        if fields["n"] < 1:
            raise ValueError("n must be at least 1")
        if fields["values"].shape != (fields["n"],):
            raise ValueError(f"expected {fields['n']} values, got shape {fields['values'].shape}")
        return fields

    @classmethod
    def from_values(cls, values) -> "LatticeField":
        """
        Builds a field sized by its values

        :param values: heights phi_1..phi_N
        :return: lattice field
        """
        array = np.asarray(values, dtype=float).ravel()
        return cls(n=array.size, values=array)

    def check_nonnegative(self) -> "LatticeField":
        """
        Raises when the field has a negative height (samples of every wetting measure live in R_+^N)

        :return: the field itself
        """
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise InvalidFieldException(f"negative or non-finite height at sites {np.flatnonzero(~(self.values >= 0))}")
        return self


class InterpolatedPath(FrozenModel):
    """Element of H = L^2(0,1) given by its values on the uniform grid y = j / resolution"""
    resolution: int
    """number of grid cells M"""
    values: np.ndarray
    """M + 1 values at y = j / M"""
    kind: PathKind = PathKind.AFFINE

    @validator("values", pre=True)
    def to_array(cls, value):
        return _readonly_array(value)

    @root_validator(skip_on_failure=True)
    def check_shape(cls, fields):
        if fields["resolution"] < 1:
            raise ValueError("resolution must be positive")
        if fields["values"].shape != (fields["resolution"] + 1,):
            raise ValueError("path needs resolution + 1 values")
        return fields

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.resolution + 1)

    def evaluate(self, y) -> np.ndarray:
        """
        Evaluates the path at points of [0, 1].

        :param y: scalar or array of points
        :return: path values, affine interpolation or left-continuous constant pieces depending on ``kind``
        """
        y = np.asarray(y, dtype=float)
        if self.kind == PathKind.AFFINE:
            return np.interp(y, self.grid, self.values)
        index = np.clip(np.ceil(y * self.resolution - 1e-12).astype(int), 0, self.resolution)
        return self.values[index]


class SpectralVector(FrozenModel):
    """Sine coefficients <f, e_n>, n = 1..K, with e_n(x) = sqrt(2) sin(n pi x)"""
    coeffs: np.ndarray

    @validator("coeffs", pre=True)
    def to_array(cls, coeffs):
        array = _readonly_array(coeffs)
        if array.ndim != 1 or array.size < 1:
            raise ValueError("coeffs must be a nonempty vector")
        return array

    @property
    def cutoff(self) -> int:
        return self.coeffs.size


class TimeGrid(FrozenModel):
    """Uniform time grid on [t0, t1]"""
    t0: float = 0.0
    t1: float = 1.0
    steps: int

    @root_validator(skip_on_failure=True)
    def check_increasing(cls, fields):
        if fields["steps"] < 1:
            raise ValueError("steps must be positive")
        if not fields["t1"] > fields["t0"]:
            raise ValueError("t1 must exceed t0")
        return fields

    @property
    def dt(self) -> float:
        return (self.t1 - self.t0) / self.steps

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.steps + 1)

    def index_of(self, t: float) -> int:
        """
        Grid index nearest to time t

        :param t: time inside [t0, t1]
        :return: index in 0..steps
        """
        return int(np.clip(round((t - self.t0) / self.dt), 0, self.steps))


class SeedSpec(BaseModel):
    """Coordinates of one reproducible random stream"""
    master_seed: int
    """64-bit master seed of the run"""
    replica_index: int = 0
    """replica or chunk index"""
    stream_label: str = "main"
    """short label separating independent consumers within a replica"""

    class Config:
        """pydantic model configuration"""
        allow_mutation = False

    @validator("master_seed")
    def check_u64(cls, master_seed):
        if not 0 <= master_seed < 2 ** 64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        return master_seed

    @validator("replica_index")
    def check_replica(cls, replica_index):
        if replica_index < 0:
            raise ValueError("replica_index must be nonnegative")
        return replica_index

    @validator("stream_label")
    def cleanup_label(cls, stream_label):
        return stream_label.replace("\n", "").replace("\r", "")

    def derive(self, replica_index: int = None, stream_label: str = None) -> "SeedSpec":
        """
        Returns a sibling seed with another replica index and/or label

        :param replica_index: new replica index, defaults to the current one
        :param stream_label: new label, defaults to the current one
        :return: seed spec
        """
        return SeedSpec(
            master_seed=self.master_seed,
            replica_index=self.replica_index if replica_index is None else replica_index,
            stream_label=self.stream_label if stream_label is None else stream_label,
        )
