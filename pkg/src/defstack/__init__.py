"""Deformation functors and stacks over Artin rings, computed exactly at small scale.

Modules: ``artin`` (local algebras and their maps), ``defun`` (deformation
problems, Schlessinger hypotheses, tangent and automorphism spaces),
``probmod`` (module and quotient problems), ``site`` (finite spaces and sheaf
cohomology), ``gdstack`` (local systems on finite spaces) and ``cli``.
"""
from .field import GF, QQ, Field
from .errors import BudgetError, DefstackError, EnumerationBudgetExceeded
from .artin import (
    AlgebraHom, LocalAlgebra, Square, classify_extension, factor_into_tiny, fiber_product, hom_from_images,
    is_schlessinger_square, k_of_V, make_algebra, monomial_quotient, pushforward_square, residue_field,
    residue_map, sigma, tensor_over, tensor_product,
)
from .defun import (
    ObstructionTheory, ProRep, aut_space, budget_scope, check_h1, check_h2, check_h4, dim_bounds_report,
    h4_via_aut, lift_torsor, obstruction_evaluate, tangent_space, tensor_decomposition_check,
)
from .probmod import BaseAlgebra, ModuleProblem, QuotientProblem, module_problem, quotient_problem
from .site import (
    Cover2, FiniteSpace, VectorSheaf, cech_h, circle, constant_sheaf, godement_cohomology, hyper_h2,
    minimal_open_cover2, point_space, sphere,
)
from .gdstack import (
    LocalSystemProblem, exact_sequence_check, gd_report, obstruction_ladder, sheaf_A, sheaf_T,
    very_short_sequence,
)

__version__ = "0.1.0"
