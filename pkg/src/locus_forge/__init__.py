"""Relative multipartite structure of finite-dimensional quantum and classical systems.

Operator algebras, tensor product structures, separability tests and the
recovery of subsystem loci from a set of available states.
"""

__version__ = "0.1.0"

from .algebra import OperatorAlgebra, commutant, double_commutant, generate, intersect
from .classical import CpsCandidate, SampleSet, eloccom_defect, pca_factor_count, recover_cps
from .mps import (Mps, MpsCatalog, coarser, is_valid_mps, join, mps_report, pi_over_catalog,
                  recover_loci, separability_relation)
from .partitions import Partition, enumerate_partitions, maximal_members, pi_of_state, refines
from .states import (State, StateSet, classical_embed, decompose_separable, is_sigma_product,
                     is_sigma_separable)
from .tps import TpsSpec, bell_unitary, factorizations, reconstruct_qubits, svozil_partitions, twist

__all__ = [
    "OperatorAlgebra", "commutant", "double_commutant", "generate", "intersect",
    "CpsCandidate", "SampleSet", "eloccom_defect", "pca_factor_count", "recover_cps",
    "Mps", "MpsCatalog", "coarser", "is_valid_mps", "join", "mps_report", "pi_over_catalog",
    "recover_loci", "separability_relation",
    "Partition", "enumerate_partitions", "maximal_members", "pi_of_state", "refines",
    "State", "StateSet", "classical_embed", "decompose_separable", "is_sigma_product",
    "is_sigma_separable",
    "TpsSpec", "bell_unitary", "factorizations", "reconstruct_qubits", "svozil_partitions", "twist",
]
