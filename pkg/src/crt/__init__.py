"""Formal power series workbench for generic submanifolds and CR transversality."""

from .errors import *  # noqa: F401,F403
from .gaussian import GaussianRational, I, ONE, ZERO, gr
from .jets import (
    DEFAULT_ORDER,
    Jet,
    VarSpace,
    bar,
    compose,
    derive,
    evaluate,
    implicit_solve,
    invert_map,
    invert_unit,
    jet_arith,
)
from .matrix import JetMatrix, RankResult, det, det_adj, generic_rank
from .manifold import (
    GenericManifold,
    SegreMap,
    SegreTower,
    VectorField,
    finite_type,
    from_complex_defining,
    holo_nondeg,
    incidence_check,
    segre,
    validate,
)
from .mapping import (
    FormalMap,
    MapOnM,
    a_matrix,
    check_sends,
    compose_maps,
    cr_transversal,
    kernel_field,
    kernel_report,
    propagation_diagnostic,
    tangency_check,
    verify_lemma31,
)
from .report import SCHEMA, Report

__version__ = "0.1.0"
