"""A collection of helper functions used across different modules (hashing, seeding, validation)."""

import hashlib
import multiprocessing as mp
import re
from pathlib import Path
from typing import Callable, List, Sequence, Union

import numpy as np
from pathos.multiprocessing import ProcessPool as Pool

RNG_NAME = "numpy.PCG64/SeedSequence"


def generate_content_hash(content: Union[str, bytes]) -> str:
    """Generate a hash for a content using SHA-256.

    Parameters
    ----------
    content: str or bytes
        The content, e.g. the text of a data file or a serialized configuration.

    Returns
    -------
    str
        The SHA-256 hash of the content.

    Examples
    --------
    >>> generate_content_hash("0.05")[:12]
    '0602d7c813c1'
    """
    if isinstance(content, str):
        content = content.encode("utf-8")
    return hashlib.sha256(content).hexdigest()


def file_hash(path: Union[str, Path]) -> str:
    """SHA-256 hash of a file content."""
    return generate_content_hash(Path(path).read_bytes())


def is_sha256(string: str) -> bool:
    """Check if a string is a valid SHA-256 hash.

    Parameters
    ----------
    string: str
        The string to check.

    Returns
    -------
    bool
        True if the string is a valid SHA-256 hash, False otherwise.
    """
    return bool(re.fullmatch(r"[a-fA-F0-9]{64}", string))


def derive_rng(master_seed: int, *keys: int) -> np.random.Generator:
    """Create an independent random stream for a work unit.

    The stream depends only on the master seed and the work-unit keys (e.g. the Monte Carlo
    repetition and the bootstrap replicate index), never on the order in which the work units run.

    Parameters
    ----------
    master_seed: int
        The master seed of the run.
    *keys: int
        Non-negative integers identifying the work unit.

    Returns
    -------
    numpy.random.Generator
        A PCG64 generator.

    Examples
    --------
    >>> a = derive_rng(1, 3, 7).standard_normal()
    >>> b = derive_rng(1, 3, 7).standard_normal()
    >>> a == b
    True
    >>> a == derive_rng(1, 7, 3).standard_normal()
    False
    """
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(seq))


def parallel_map(func: Callable, tasks: Sequence, workers: int = 1) -> List:
    """Apply a function to every task, in a process pool when `workers` is not 1.

    Results come back in task order. `workers=-1` uses every core.

    Parameters
    ----------
    func: Callable
        Function of one task.
    tasks: Sequence
        Work units.
    workers: int, optional, default is 1
        Number of processes.

    Returns
    -------
    list
        func(task) for every task.
    """
    if workers == -1:
        workers = mp.cpu_count()
    if workers <= 1 or len(tasks) <= 1:
        return [func(task) for task in tasks]
    pool = Pool(min(workers, len(tasks)))
    try:
        pool.restart()
    except AssertionError:
        pass
    try:
        results = pool.map(func, tasks)
    finally:
        pool.close()
        pool.join()
    return list(results)
