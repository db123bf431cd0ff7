"""Exact simultaneous diagonalization of filtrations and valuatively independent bases."""

from __future__ import annotations

from .arith import LaurentPoly, TruncatedSeries, ord_t
from .errors import Obstruction, ReesDiagError
from .lindvr import DvrFiltration, Submodule, diagonalize_dvr, dvr_graded_table, lift_chain
from .linfield import FieldFiltration, diagonalize_field, graded_table
from .skeleton import SkeletonComplex, point_valuation, refine, subdivision_vertices
from .theta import check_independence, construct_basis, extend_basis, tropicalize
from .valuation import DivisorData, MonomialValuation, SectionSpace, eval_valuation, induced_filtration

__version__ = "0.1.0"

__all__ = [
    "DivisorData", "DvrFiltration", "FieldFiltration", "LaurentPoly", "MonomialValuation", "Obstruction",
    "ReesDiagError", "SectionSpace", "SkeletonComplex", "Submodule", "TruncatedSeries", "check_independence",
    "construct_basis", "diagonalize_dvr", "diagonalize_field", "dvr_graded_table", "eval_valuation",
    "extend_basis", "graded_table", "induced_filtration", "lift_chain", "ord_t", "point_valuation", "refine",
    "subdivision_vertices", "tropicalize",
]
