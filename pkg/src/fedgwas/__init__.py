"""Federated secure GWAS over Paillier aggregation and a simulated enclave."""

__version__ = "0.1.0"
