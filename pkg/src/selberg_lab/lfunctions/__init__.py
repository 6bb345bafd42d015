"""Degree-1 members of the Selberg class and coefficient providers."""
from .characters import (
    DirichletCharacter,
    is_fundamental_discriminant,
    kronecker_character,
    kronecker_symbol,
    make_characters,
)
from .coefficients import (
    CharacterCoefficients,
    CoefficientProvider,
    FileCoefficients,
    KroneckerZetaCoefficients,
    TauCoefficients,
    eta24_coefficients,
    load_coefficient_file,
    naive_eta24,
    ramanujan_bound_ok,
    ramanujan_tau,
    tau_coefficients,
    write_coefficient_file,
)
from .evaluate import dedekind_quadratic, dirichlet_l, dirichlet_l_many, dirichlet_l_vertical
from .hurwitz import hurwitz_zeta, remainder_bound
from .specs import (
    LFunctionSpec,
    auto_kmax,
    dedekind_spec,
    dirichlet_spec,
    file_spec,
    local_log_term,
    local_log_terms,
    tau_spec,
    zeta_spec,
)

__all__ = [name for name in dir() if not name.startswith("_")]
