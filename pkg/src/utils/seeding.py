import numpy as np


def derive_stream(master_seed: int, *path: int) -> np.random.Generator:
    """Independent generator for the task at ``path`` under ``master_seed``.

    The stream depends only on the seed and the path, never on which worker
    runs the task or in what order.
    """
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), *(int(p) for p in path)]))


def derive_seed(master_seed: int, *path: int) -> int:
    """Integer seed for APIs that take a plain seed rather than a generator."""
    return int(np.random.SeedSequence([int(master_seed), *(int(p) for p in path)]).generate_state(1)[0])

