"""Complete, incomplete and distributed two-sample U-statistics.

Subpackages are plain modules:

* :mod:`tuplewise.kernels`, :mod:`tuplewise.data`, :mod:`tuplewise.hoeffding`
  define kernels, samples and variance components;
* :mod:`tuplewise.sampling` partitions data over workers;
* :mod:`tuplewise.estimators` and :mod:`tuplewise.cluster` compute estimates;
* :mod:`tuplewise.variance` holds the closed-form variances;
* :mod:`tuplewise.sgd` trains linear scorers by repartitioned pairwise SGD;
* :mod:`tuplewise.checks` and :mod:`tuplewise.cli` drive the experiments.
"""

from .data import DiscreteAUCDistribution, TwoSampleDataset
from .hoeffding import VarianceComponents
from .kernels import AUCKernel, Kernel
from .sampling import SchemeKind, SeedProtocol
from .variance import Strategy, closed_form_variance

__version__ = "0.1.0"

__all__ = [
    "AUCKernel",
    "DiscreteAUCDistribution",
    "Kernel",
    "SchemeKind",
    "SeedProtocol",
    "Strategy",
    "TwoSampleDataset",
    "VarianceComponents",
    "closed_form_variance",
]
