"""Module contains the run configuration models of the command line"""
import enum
from typing import Any, Dict, List, Optional, Type

from pydantic import BaseModel, Field, ValidationError, validator

from wetsim.config import settings
from wetsim.exceptions import ConfigurationException, UnknownConfigKeyException
from wetsim.static_models.models import PotentialShape, ReferenceKind


class Command(str, enum.Enum):
    """Pipelines of the command line"""
    SAMPLE_STATIC = "sample-static"
    SIMULATE_LATTICE = "simulate-lattice"
    SIMULATE_CONTINUUM = "simulate-continuum"
    SIMULATE_SPDE = "simulate-spde"
    VERIFY = "verify"
    REPORT = "report"


def _split_list(value):
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


class CommandKeys(BaseModel):
    """Documented keys of one command; anything else is rejected"""

    class Config:
        """pydantic model configuration"""
        extra = "forbid"
        allow_mutation = False


class StaticKeys(CommandKeys):
    """Keys of sample-static"""
    model: str = "strip"
    """strip, pinning or reference"""
    n: int = Field(8, ge=1)
    a: float = Field(0.5, gt=0)
    beta: float = 1.0
    weight: Optional[float] = Field(None, gt=0)
    """when set, beta = log(weight / a)"""
    shape: PotentialShape = PotentialShape.SMOOTH_BUMP
    chains: int = Field(16, ge=1)
    kept: int = Field(1000, ge=1)
    burn_in: Optional[int] = Field(None, ge=0)
    thin: Optional[int] = Field(None, ge=1)
    reference_kind: ReferenceKind = ReferenceKind.BESSEL3
    reference_start: float = Field(0.0, ge=0)
    steps: int = Field(1000, ge=1)
    replicas: int = Field(10000, ge=1)

    @validator("model")
    def check_model(cls, model):
        if model not in ("strip", "pinning", "reference"):
            raise ValueError("model must be strip, pinning or reference")
        return model


class LatticeKeys(CommandKeys):
    """Keys of simulate-lattice"""
    n: int = Field(8, ge=1)
    a: float = Field(0.5, gt=0)
    beta: float = 1.0
    weight: Optional[float] = Field(None, gt=0)
    T: float = Field(1.0, gt=0)
    obs_times: List[float] = [0.0, 0.25, 0.5, 1.0]
    dt_micro: Optional[float] = Field(None, gt=0)
    """integration step in macroscopic time, defaults to 1e-3 / n^2"""
    replicas: int = Field(100, ge=1)
    cutoff: int = Field(128, ge=1)

    _split = validator("obs_times", pre=True, allow_reuse=True)(_split_list)


class ContinuumKeys(CommandKeys):
    """Keys of simulate-continuum"""
    law: str = "truncated"
    """truncated, bessel3, coupled or squared"""
    a: float = Field(0.0, ge=0)
    eta: float = Field(0.05, ge=0)
    etas: List[float] = [0.1, 0.5]
    eps: Optional[float] = Field(None, gt=0)
    T: float = Field(1.0, gt=0)
    steps: int = Field(10000, ge=1)
    replicas: int = Field(10000, ge=1)
    obs_times: List[float] = []
    kernel_eps: Optional[float] = Field(None, gt=0)

    _split = validator("obs_times", "etas", pre=True, allow_reuse=True)(_split_list)

    @validator("law")
    def check_law(cls, law):
        if law not in ("truncated", "bessel3", "coupled", "squared"):
            raise ValueError("law must be truncated, bessel3, coupled or squared")
        return law


class SpdeKeys(CommandKeys):
    """Keys of simulate-spde"""
    n_space: int = Field(64, ge=2)
    dt: Optional[float] = Field(None, gt=0)
    """defaults to dx^2 / 8"""
    eta: float = Field(0.5, gt=0)
    eps: float = Field(0.1, gt=0)
    a: float = Field(0.0, ge=0)
    attraction: bool = True
    endpoint_tilt: bool = True
    replicas: int = Field(1000, ge=1)
    burn_in: float = Field(1.0, ge=0)
    duration: float = Field(4.0, gt=0)
    sample_every: float = Field(0.25, gt=0)
    init: str = "oracle"
    scheme: str = "euler"
    oracle_replicas: int = Field(20000, ge=1)


class VerifyKeys(CommandKeys):
    """Keys of verify"""
    criteria: List[int] = [1, 2, 3, 4, 5, 6, 7, 8, 9]
    scale: float = Field(1.0, gt=0)
    """multiplies every replica and sample count"""

    _split = validator("criteria", pre=True, allow_reuse=True)(_split_list)

    @validator("criteria", each_item=True)
    def check_criterion(cls, criterion):
        if not 1 <= criterion <= 9:
            raise ValueError("criteria are numbered 1..9")
        return criterion


class ReportKeys(CommandKeys):
    """Keys of report"""
    reports: List[str] = ["eta-sweep", "beta-scan", "lattice-h1", "spde-localization"]
    scale: float = Field(0.1, gt=0)

    _split = validator("reports", pre=True, allow_reuse=True)(_split_list)


COMMAND_KEYS: Dict[Command, Type[CommandKeys]] = {
    Command.SAMPLE_STATIC: StaticKeys,
    Command.SIMULATE_LATTICE: LatticeKeys,
    Command.SIMULATE_CONTINUUM: ContinuumKeys,
    Command.SIMULATE_SPDE: SpdeKeys,
    Command.VERIFY: VerifyKeys,
    Command.REPORT: ReportKeys,
}


class RunConfig(BaseModel):
    """Resolved run: command, seed, output directory, parallel layout and the command keys"""
    command: Command
    seed: int = 0
    out_dir: str = settings.defaults.out_dir
    threads: int = Field(settings.defaults.threads, ge=1)
    chunks: int = Field(settings.defaults.chunks, ge=1)
    parameters: Dict[str, Any] = {}

    class Config:
        """pydantic model configuration"""
        allow_mutation = False

    @validator("seed")
    def check_u64(cls, seed):
        if not 0 <= seed < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        return seed

    @validator("out_dir")
    def cleanup_out_dir(cls, out_dir):
        return out_dir.replace("\n", "").replace("\r", "")

    def keys(self) -> CommandKeys:
        """
        Validates the parameters against the command's key table.

        :return: command keys with defaults filled in
        """
        try:
            return COMMAND_KEYS[self.command](**self.parameters)
        except ValidationError as error:
            for detail in error.errors():
                if detail["type"] == "value_error.extra":
                    raise UnknownConfigKeyException(str(detail["loc"][0]), self.command.value)
            first = error.errors()[0]
            raise ConfigurationException(f"{'.'.join(map(str, first['loc']))}: {first['msg']}")

    def resolved(self) -> Dict[str, Any]:
        """
        Everything that determines the outputs; thread count and output directory are left out.

        :return: JSON-serializable dict
        """
        return {
            "command": self.command.value,
            "seed": self.seed,
            "chunks": self.chunks,
            "parameters": self.keys().dict(),
        }
