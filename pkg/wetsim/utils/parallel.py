"""
Module contains the replica executor. Ensembles are split into a fixed number of chunks, each chunk gets its own
SeedSpec, chunks run on a thread pool and results come back in chunk order, so outputs do not depend on the
number of threads.
"""
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, TypeVar

from wetsim.config import settings
from wetsim.core.models import SeedSpec
from wetsim.log import Loggers
from wetsim.utils.utility import split_evenly

logger = Loggers.get_named_logger("WETSIM_PARALLEL")

_ResultTypeVar = TypeVar("_ResultTypeVar")


class ReplicaExecutor:
    """
    Singleton executor of independent replica chunks.
    """
    _instance: Optional["ReplicaExecutor"] = None

    def __init__(self, threads: int = None, chunks: int = None):
        """
        Executor initializer

        :param threads: worker threads, defaults to settings.defaults.threads
        :param chunks: chunk count, defaults to settings.defaults.chunks
        """
        self.threads = threads or settings.defaults.threads
        self.chunks = chunks or settings.defaults.chunks

    @classmethod
    def get_instance(cls) -> "ReplicaExecutor":
        """
        Singleton method, returns existing ReplicaExecutor instance, or creates it first if instance do not exist.

        :return: executor instance
        """
        if not ReplicaExecutor._instance:
            ReplicaExecutor._instance = ReplicaExecutor()
        return ReplicaExecutor._instance

    @classmethod
    def configure(cls, threads: int, chunks: int = None) -> "ReplicaExecutor":
        """
        Replaces the singleton with an executor of the given degree.

        :param threads: worker threads
        :param chunks: chunk count of every ensemble
        :return: executor instance
        """
        ReplicaExecutor._instance = ReplicaExecutor(threads=threads, chunks=chunks)
        return ReplicaExecutor._instance

    def map_chunks(
            self,
            task: Callable[[int, SeedSpec], _ResultTypeVar],
            total: int,
            seed: SeedSpec,
            chunks: int = None,
    ) -> List[_ResultTypeVar]:
        """
        Runs ``task(chunk_size, chunk_seed)`` for every chunk of ``total`` replicas.

        :param task: chunk worker, receives the chunk size and its seed
        :param total: number of replicas
        :param seed: master seed; chunk i uses replica_index = i with the same label
        :param chunks: chunk count, defaults to the executor's
        :return: chunk results in chunk order
        """
        sizes = split_evenly(total, chunks or self.chunks)
        seeds = [seed.derive(replica_index=index) for index in range(len(sizes))]
        logger.debug(f"{total} replicas in {len(sizes)} chunks on {self.threads} threads ({seed.stream_label})")
        if self.threads == 1 or len(sizes) == 1:
            return [task(size, chunk_seed) for size, chunk_seed in zip(sizes, seeds)]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(task, sizes, seeds))
