"""fedtsad: anomaly-detection benchmarking across centralized, federated,
and hierarchical-federated training on cyclic industrial time series."""

__version__ = "0.1.0"
