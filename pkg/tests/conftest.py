import math

import numpy as np
import pytest

from sparsett import SparseTensor
from sparsett.tensor import delinearize


def rand_sparse(rng: np.random.Generator, shape, density: float) -> SparseTensor:
    """Random test tensor with distinct coordinates and nonzero values."""
    size = math.prod(shape)
    nnz = int(density * size)
    lin = np.sort(rng.permutation(size)[:nnz].astype(np.int64))
    vals = rng.uniform(-1.0, 1.0, nnz)
    vals[vals == 0.0] = 0.5
    return SparseTensor(shape, delinearize(shape, lin), vals)


def rand_tt(rng: np.random.Generator, dims, ranks):
    """Random dense-core train with the given interior ranks."""
    from sparsett import TTTensor

    full = (1,) + tuple(ranks) + (1,)
    cores = [
        rng.standard_normal((full[k], n, full[k + 1]))
        for k, n in enumerate(dims)
    ]
    return TTTensor(cores)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1729)
