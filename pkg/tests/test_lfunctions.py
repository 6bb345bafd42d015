import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selberg_lab.errors import ConfigError, CoverageError, DomainError, ParseError, PoleError, ResourceLimitError
from selberg_lab.lfunctions import (
    LFunctionSpec,
    dedekind_quadratic,
    dedekind_spec,
    dirichlet_l,
    dirichlet_l_vertical,
    dirichlet_spec,
    eta24_coefficients,
    hurwitz_zeta,
    is_fundamental_discriminant,
    kronecker_character,
    kronecker_symbol,
    load_coefficient_file,
    local_log_term,
    local_log_terms,
    make_characters,
    naive_eta24,
    ramanujan_bound_ok,
    ramanujan_tau,
    tau_coefficients,
    write_coefficient_file,
    zeta_spec,
)
from selberg_lab.primes import PrimeRange, prime_sum, primes_in


def catalan_alternating(n_terms: int = 2_000_000):
    """Catalan's constant from sum (-1)^n/(2n+1)^2 with its alternating-series error bound."""
    n = np.arange(n_terms, dtype=float)
    terms = np.where(n % 2 == 0, 1.0, -1.0) / (2 * n + 1) ** 2
    return math.fsum(terms.tolist()), 1.0 / (2 * n_terms + 1) ** 2


def chi_mod4():
    return make_characters(4)[1]


# -------------------------------------------------------------- characters

def test_trivial_modulus():
    (chi,) = make_characters(1)
    assert chi.principal and complex(chi(7)) == 1


def test_mod4_character():
    chars = make_characters(4)
    assert len(chars) == 2
    assert complex(chars[1](3)) == -1 and complex(chars[1](2)) == 0


def test_mod5_orthogonality_matrix():
    chars = make_characters(5)
    M = np.array([[np.sum(a.values * np.conj(b.values)) for b in chars] for a in chars])
    assert np.allclose(M, 4 * np.eye(4), atol=1e-13)


@pytest.mark.parametrize("q", range(1, 51))
def test_orthogonality_all_small_moduli(q):
    chars = make_characters(q)
    phi = sum(1 for a in range(q) if math.gcd(a, q) == 1)
    assert len(chars) == phi
    V = np.array([c.values for c in chars])
    assert np.max(np.abs(V @ V.conj().T - phi * np.eye(phi))) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 200), st.data())
def test_character_axioms(q, data):
    chars = make_characters(q)
    chi = chars[data.draw(st.integers(0, len(chars) - 1))]
    a, b = data.draw(st.integers(0, 5 * q)), data.draw(st.integers(0, 5 * q))
    assert abs(complex(chi(a * b)) - complex(chi(a)) * complex(chi(b))) < 1e-12
    assert (complex(chi(a)) == 0) == (math.gcd(a, q) > 1)
    assert complex(chi(1)) == 1
    phi = len(chars)
    units = [n for n in range(q) if math.gcd(n, q) == 1]
    assert np.allclose(np.abs(chi.values[units]), 1, atol=1e-14)
    assert np.allclose(chi.values[units] ** phi, 1, atol=1e-9)


def test_characters_distinct_and_labelled_reproducibly():
    a, b = make_characters(36), make_characters(36)
    assert len({tuple(np.round(c.values, 12)) for c in a}) == len(a)
    assert all(np.array_equal(x.values, y.values) for x, y in zip(a, b))


def test_modulus_errors():
    with pytest.raises(DomainError):
        make_characters(0)
    with pytest.raises(DomainError):
        make_characters(10 ** 4 + 1)


def test_kronecker_symbol_matches_sympy_jacobi():
    from sympy import jacobi_symbol

    for d in (-4, -3, 5, -7, 8, 12, -23):
        assert kronecker_symbol(d, 1) == 1
        for n in range(3, 200, 2):
            assert kronecker_symbol(d, n) == jacobi_symbol(d % n, n)


def test_fundamental_discriminants():
    assert is_fundamental_discriminant(-4) and is_fundamental_discriminant(5)
    assert not is_fundamental_discriminant(-16) and not is_fundamental_discriminant(12 * 9)
    with pytest.raises(DomainError):
        kronecker_character(-16)


# --------------------------------------------------------------- Hurwitz

def test_hurwitz_identities():
    assert abs(hurwitz_zeta(2, 1) - math.pi ** 2 / 6) < 1e-12
    assert abs(hurwitz_zeta(3, 0.5) - 7 * float(mpmath.zeta(3))) < 1e-12


def test_hurwitz_depth_self_consistency():
    s = 0.6 + 14j
    n = 200
    a, b = hurwitz_zeta(s, 0.2, n), hurwitz_zeta(s, 0.2, 2 * n)
    assert abs(a - b) < 1e-10
    assert abs(hurwitz_zeta(s, 0.2) - complex(mpmath.zeta(s, 0.2))) < 1e-10


def test_hurwitz_errors():
    with pytest.raises(PoleError):
        hurwitz_zeta(1, 0.5)
    with pytest.raises(DomainError):
        hurwitz_zeta(-2.5, 0.5)
    with pytest.raises(DomainError):
        hurwitz_zeta(2, 1.5)


@settings(max_examples=30, deadline=None)
@given(st.floats(-1.5, 3), st.floats(-60, 60), st.floats(0.05, 1.0))
def test_hurwitz_against_mpmath(sigma, t, a):
    s = complex(sigma, t)
    if abs(s - 1) < 1e-3:
        return
    ref = complex(mpmath.zeta(s, a))
    assert abs(hurwitz_zeta(s, a) - ref) <= 1e-10 * (1 + abs(ref))


# ------------------------------------------------------------- Dirichlet L

def test_l_principal_mod1_is_zeta2():
    assert abs(dirichlet_l(2, make_characters(1)[0]) - math.pi ** 2 / 6) < 1e-12


def test_l_mod4_is_catalan():
    cat, err = catalan_alternating()
    assert err < 1e-12
    assert abs(dirichlet_l(2, chi_mod4()) - cat) < 1e-10


@pytest.mark.parametrize("q", [3, 4, 6, 10, 12, 30])
def test_principal_euler_factor(q):
    ref = math.pi ** 2 / 6 * math.prod(1 - p ** -2.0 for p in range(2, q + 1)
                                       if q % p == 0 and all(p % r for r in range(2, p)))
    assert abs(dirichlet_l(2, make_characters(q)[0]) - ref) < 1e-12


def test_l_pole():
    with pytest.raises(PoleError):
        dirichlet_l(1, make_characters(5)[0])
    assert np.isfinite(dirichlet_l(1, make_characters(5)[1]))


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 30), st.data(), st.floats(2.0, 4.0), st.floats(-30, 30))
def test_dirichlet_series_consistency(q, data, sigma, t):
    chars = make_characters(q)
    chi = chars[data.draw(st.integers(0, len(chars) - 1))]
    N = 4000
    n = np.arange(1, N + 1)
    s = complex(sigma, t)
    direct = np.sum(chi(n) * np.exp(-s * np.log(n)))
    tail = N ** (1 - sigma) / (sigma - 1)
    assert abs(dirichlet_l(s, chi) - direct) <= tail + 1e-12


def test_l_against_mpmath_in_strip():
    chi = make_characters(5)[1]
    for s in (0.6 + 3j, 0.75 + 40j, 0.9 - 120j):
        ref = complex(mpmath.dirichlet(s, [complex(v) for v in chi.values]))
        assert abs(dirichlet_l(s, chi) - ref) < 1e-10 * (1 + abs(ref))


def test_vertical_scan_matches_pointwise():
    chi = make_characters(5)[2]
    pts = np.array([0.7 + 0.1j, 0.8 - 0.2j])
    vals = dirichlet_l_vertical(pts, chi, 100.0, 0.02, 600)
    for k in (0, 255, 256, 599):
        for j, p in enumerate(pts):
            ref = dirichlet_l(p + 1j * (100 + 0.02 * k), chi)
            assert abs(vals[k, j] - ref) < 1e-10 * (1 + abs(ref))


def test_vertical_scan_independent_of_split():
    chi = make_characters(1)[0]
    pts = np.array([0.75 + 0j])
    full = dirichlet_l_vertical(pts, chi, 0.0, 0.02, 1024)
    assert np.array_equal(full[:512], dirichlet_l_vertical(pts, chi, 0.0, 0.02, 512))


# -------------------------------------------------------------- local terms

def test_local_log_leading_term():
    spec = dirichlet_spec(make_characters(5)[1])
    s = 0.7 + 2j
    assert local_log_term(spec, 7, s, 1.0, kmax=1) == pytest.approx(spec.coefficients.a(7) * 7 ** -s, abs=1e-15)


def test_local_log_ramified_prime():
    spec = dirichlet_spec(chi_mod4())
    assert local_log_term(spec, 2, 0.75, 1.0, kmax=40) == 0


def test_local_log_is_log_of_euler_factor():
    spec = dirichlet_spec(make_characters(7)[3])
    s, w = 0.65 - 1j, np.exp(0.4j)
    chi_p = spec.coefficients.a(11)
    assert abs(local_log_term(spec, 11, s, w) + np.log(1 - chi_p * w * 11 ** -s)) < 1e-14


def test_euler_product_converges():
    chi = chi_mod4()
    spec = dirichlet_spec(chi)
    ref = dirichlet_l(2, chi)
    errs = []
    for P in (10 ** 3, 10 ** 4, 10 ** 5):
        ps = primes_in(2, P)
        errs.append(abs(np.exp(math.fsum(local_log_terms(spec, ps, 2.0).real.tolist())) - ref))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-4


def test_local_terms_vector_matches_scalar():
    spec = tau_spec_small()
    ps = primes_in(2, 200)
    vec = local_log_terms(spec, ps, 0.8 + 1j, np.exp(0.3j))
    ref = [local_log_term(spec, int(p), 0.8 + 1j, np.exp(0.3j)) for p in ps]
    assert np.allclose(vec, ref, atol=1e-15)


def tau_spec_small():
    return LFunctionSpec("tau", tau_coefficients(1000), 2.0, 0, 0.5)


# ----------------------------------------------------------------- Dedekind

def test_dedekind_minus4_at_2():
    cat, _ = catalan_alternating()
    assert abs(dedekind_quadratic(2, -4) - math.pi ** 2 / 6 * cat) < 1e-9


def test_dedekind_coefficients():
    spec = dedekind_spec(-4)
    assert spec.coefficients.a(5) == 2      # 5 = 1 mod 4 splits
    assert spec.coefficients.a(7) == 0      # inert
    assert spec.coefficients.a(2) == 1      # ramified


def test_dedekind_rejects_non_fundamental():
    with pytest.raises(DomainError):
        dedekind_quadratic(2, -8 * 9)


def test_dedekind_square_sum_bounded():
    spec = dedekind_spec(-4)
    xs = [1e4, 1e5, 1e6]
    term = lambda p: np.abs(spec.coefficients.a_many(p)) ** 2 / p - 2.0 / p
    s = prime_sum(PrimeRange(2, 10 ** 6), term, xs)
    assert all(abs(v.real) <= 2 for v in s.values)


# ---------------------------------------------------------------------- tau

def test_tau_first_values_against_naive_convolution():
    naive = naive_eta24(60)
    assert eta24_coefficients(60) == naive
    tau = ramanujan_tau(60)
    assert tau[1] == 1
    assert tau[2] == naive[1] == -24


def test_tau_long_prefix_against_naive():
    assert eta24_coefficients(400) == naive_eta24(400)


def test_tau_multiplicativity():
    tau = ramanujan_tau(2000)
    for m, n in [(2, 3), (5, 7), (11, 13), (3, 41)]:
        assert tau[m * n] == tau[m] * tau[n]
    for p in (2, 3, 5, 7):
        assert tau[p * p] == tau[p] ** 2 - p ** 11


def test_tau_deligne_bound(tau_1e6):
    ps = primes_in(2, 10 ** 5)
    assert np.max(np.abs(tau_1e6.a_many(ps))) <= 2


def test_tau_cap():
    with pytest.raises(ResourceLimitError):
        tau_coefficients(10 ** 8)


def test_axiom_surrogates_all_providers(tau_1e6):
    ps = primes_in(2, 10 ** 5)
    providers = [zeta_spec().coefficients, dedekind_spec(-4).coefficients, tau_1e6]
    providers += [dirichlet_spec(c).coefficients for c in make_characters(5)]
    providers += [dirichlet_spec(kronecker_character(-23)).coefficients]
    for prov in providers:
        assert ramanujan_bound_ok(prov, ps, kmax=30)


def test_rankin_selberg_identity(tau_1e6):
    from selberg_lab.orthonormality import pair_sum

    rep = pair_sum(tau_1e6, tau_1e6, 10 ** 5, [10 ** 5])
    lam = tau_1e6.a_many(primes_in(2, 10 ** 5)).real
    assert rep.raw[-1].imag == 0
    assert abs(rep.raw[-1].real - math.fsum((lam ** 2).tolist())) < 1e-9


# ------------------------------------------------------------ coefficient files

def test_coefficient_file_readback(tmp_path):
    f = tmp_path / "c.txt"
    f.write_text("# test\n2 -0.8307\n3 0.5 0.25\n\n5 1  # trailing comment\n")
    prov = load_coefficient_file(f)
    assert prov.a(2) == -0.8307 and prov.a(3) == 0.5 + 0.25j and prov.a(5) == 1
    assert prov.b(3, 1) == prov.a(3) and prov.b(3, 2) == 0


def test_coefficient_file_roundtrip(tmp_path):
    tau = tau_coefficients(5000)
    f = tmp_path / "tau.txt"
    write_coefficient_file(f, tau)
    back = load_coefficient_file(f)
    assert np.array_equal(back.primes, tau.primes)
    assert np.array_equal(back.a_many(tau.primes), tau.a_many(tau.primes).astype(complex))


def test_coefficient_file_coverage(tmp_path):
    ps = [p for p in primes_in(2, 120).tolist() if p != 97]
    f = tmp_path / "gap.txt"
    f.write_text("".join(f"{p} 1\n" for p in ps))
    prov = load_coefficient_file(f)
    with pytest.raises(CoverageError):
        prov.a(97)


@pytest.mark.parametrize("body,line", [("2 1\n3 x\n", 2), ("2 1\n# c\n2 1\n", 3), ("2\n", 1),
                                       ("2 1 2 3\n", 1)])
def test_coefficient_file_parse_errors(tmp_path, body, line):
    f = tmp_path / "bad.txt"
    f.write_text(body)
    with pytest.raises(ParseError) as exc:
        load_coefficient_file(f)
    assert exc.value.line == line and f"line {line}" in str(exc.value)


# ---------------------------------------------------------------- specs

def test_spec_invariants():
    with pytest.raises(ConfigError):
        LFunctionSpec("x", zeta_spec().coefficients, 1.0, 0, 1.0)
    with pytest.raises(ConfigError):
        LFunctionSpec("x", zeta_spec().coefficients, 1.0, 0, 0.6)
    with pytest.raises(ConfigError):
        LFunctionSpec("x", zeta_spec().coefficients, 1.0, 2, 0.5)
    assert zeta_spec().pole_order == 1 and dirichlet_spec(chi_mod4()).pole_order == 0
    assert dedekind_spec(-4).degree == 2


def test_coefficient_only_spec_not_evaluable():
    spec = tau_spec_small()
    assert not spec.evaluable
    with pytest.raises(DomainError):
        spec(0.75)
