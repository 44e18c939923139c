import numpy as np
import pytest

from apmlab.curvature import (
    curvature_like_residuals,
    is_p_tensor,
    p_invariance_residual,
    pi_tensors,
    psi1,
    psi2,
)
from apmlab.germs import (
    ChartGerm,
    ConnectionParams,
    conformal_flat_product_germ,
    contorsion,
    d_scalar,
    default_base_point,
    flat_product_germ,
    one_form_exterior_fd,
    torsion_from_params,
)
from apmlab.structure import classify_f, f_symmetry_residuals
from apmlab.tensors import frob

from fd_oracle import curvature_fd, f_tensor_fd, lee_form_fd


@pytest.fixture(scope="module")
def separable():
    return conformal_flat_product_germ(2, "x1^2 + x3^2")


@pytest.fixture(scope="module")
def mixed():
    return conformal_flat_product_germ(2, "x1*x3")


def random_params(seed):
    rng = np.random.default_rng(seed)
    return ConnectionParams(*rng.uniform(-1.5, 1.5, size=2))


def test_flat_product_is_trivial():
    germ = flat_product_germ(2)
    fr = germ.frame()
    assert frob(fr.christoffel.values) == 0.0
    assert frob(fr.curvature.values) == 0.0
    assert frob(fr.f_tensor.values) == 0.0
    assert classify_f(fr.structure, fr.f_tensor.values).label == "W0"


def test_flat_product_6d():
    fr = flat_product_germ(3).frame()
    assert frob(fr.curvature.values) == 0.0
    assert max(flat_product_germ(3).validate().values()) < 1e-12


def test_default_base_point_offsets():
    assert np.allclose(default_base_point(4), [0.1, 0.2, 0.3, 0.4])


def test_conformal_christoffel_pattern():
    germ = conformal_flat_product_germ(2, "x1")
    gamma = germ.frame().christoffel.values
    assert abs(gamma[0, 0, 0] - 1.0) < 1e-14
    assert abs(gamma[0, 1, 1] + 1.0) < 1e-14
    assert abs(gamma[1, 0, 1] - 1.0) < 1e-14


def test_conformal_metric_parallel_and_torsion_free(separable):
    rng = np.random.default_rng(0)
    for _ in range(10):
        pt = np.asarray(separable.base_point) + rng.uniform(-0.2, 0.2, 4)
        fr = separable.frame(pt, order=2)
        gamma = fr.christoffel.values
        assert frob(gamma - gamma.transpose(0, 2, 1)) < 1e-10
        dg = fr.g.partial().values
        nabla_g = (
            np.einsum("ijk->kij", dg)
            - np.einsum("mki,mj->kij", gamma, fr.g.values)
            - np.einsum("mkj,im->kij", gamma, fr.g.values)
        )
        assert frob(nabla_g) < 1e-10


def test_f_tensor_against_fd_oracle(separable):
    pt = np.asarray(separable.base_point)
    fr = separable.frame(pt)
    f_fd = f_tensor_fd(separable, pt)
    assert frob(fr.f_tensor.values - f_fd) < 1e-6 * max(1, frob(f_fd))
    theta_fd = lee_form_fd(separable, pt)
    assert frob(fr.theta.values - theta_fd) < 1e-6 * max(1, frob(theta_fd))


def test_f_tensor_symmetries_on_germs(separable, mixed):
    for germ in (separable, mixed):
        fr = germ.frame()
        res = f_symmetry_residuals(fr.structure, fr.f_tensor.values)
        assert max(res.values()) < 1e-9


def test_lee_form_matches_conformal_formula(separable):
    # theta = 2n * du o P for the conformal generator
    pt = np.asarray(separable.base_point)
    fr = separable.frame()
    du = np.array([2 * pt[0], 0.0, 2 * pt[2], 0.0])
    expected = 4.0 * du @ fr.p.values
    assert frob(fr.theta.values - expected) < 1e-12


def test_curvature_against_fd_oracle(separable):
    pt = np.asarray(separable.base_point)
    r = separable.frame(pt).curvature.values
    r_fd = curvature_fd(separable, pt)
    assert frob(r - r_fd) < 1e-4 * max(1.0, frob(r))


def test_curvature_properties_on_conformal_germ():
    germ = conformal_flat_product_germ(2, "x1^2")
    r = germ.frame().curvature.values
    assert frob(r) > 0.1
    assert max(curvature_like_residuals(r).values()) < 1e-9
    assert frob(r - np.einsum("klij->ijkl", r)) < 1e-10


def test_sphere_block_curvature():
    germ = ChartGerm.from_strings(
        4,
        [["1", "0", "0", "0"], ["0", "sin(x1)^2", "0", "0"],
         ["0", "0", "1", "0"], ["0", "0", "0", "1"]],
        [["1", "0", "0", "0"], ["0", "1", "0", "0"],
         ["0", "0", "-1", "0"], ["0", "0", "0", "-1"]],
        base_point=[0.7, 0.2, 0.3, 0.4],
        name="sphere_block",
    )
    pt = np.asarray(germ.base_point)
    fr = germ.frame()
    # unit sphere block: R(e1,e2,e1,e2) = -g11 g22 = -sin(x1)^2
    assert abs(fr.curvature.values[0, 1, 0, 1] + np.sin(pt[0]) ** 2) < 1e-12
    assert frob(fr.curvature.values - curvature_fd(germ, pt)) < 1e-4
    assert frob(fr.f_tensor.values) < 1e-12  # local product structure


def test_germ_classifications():
    cases = [
        ("0", "W0"),
        ("x1", "W6bar"),
        ("x1 + x2^2", "W6bar"),
        ("x3 + x4^2", "W3bar"),
        ("x1^2 + x3^2", "W1"),
        ("x1*x3", "W1"),
    ]
    for u, expected in cases:
        germ = conformal_flat_product_germ(2, u)
        fr = germ.frame()
        assert classify_f(fr.structure, fr.f_tensor.values).label == expected, u


def test_closedness_profiles():
    separable = conformal_flat_product_germ(2, "x1^2 + x3^2").frame().closedness()
    assert separable == {"theta_closed": True, "theta_p_closed": True}
    mixed = conformal_flat_product_germ(2, "x1*x3").frame().closedness()
    assert mixed == {"theta_closed": False, "theta_p_closed": True}


def test_torsion_matches_pointwise_builder(separable):
    fr = separable.frame()
    for seed in range(5):
        cp = random_params(seed)
        cf = fr.connection(cp)
        t_pointwise = torsion_from_params(fr.structure, fr.theta.values, cp)
        assert frob(cf.torsion.values - t_pointwise) < 1e-12


def test_torsion_reduces_to_base_term_at_zero_params(separable):
    fr = separable.frame()
    ps = fr.structure
    theta = fr.theta.values
    t = torsion_from_params(ps, theta, ConnectionParams.d())
    theta_p = ps.apply_p_form(theta)
    expected = (
        np.einsum("jk,i->ijk", ps.g, theta_p) - np.einsum("ik,j->ijk", ps.g, theta_p)
    ) / 4
    assert frob(t - expected) < 1e-14


def test_torsion_zero_when_theta_zero():
    fr = flat_product_germ(2).frame()
    t = torsion_from_params(fr.structure, fr.theta.values, ConnectionParams(0.7, -0.3))
    assert frob(t) == 0.0


def test_torsion_antisymmetry_and_p_identity(separable):
    fr = separable.frame()
    eye = np.eye(4)
    for seed in range(5):
        cp = random_params(seed + 10)
        cf = fr.connection(cp)
        t = cf.torsion.values
        assert frob(t + t.transpose(1, 0, 2)) < 1e-12
        tm = cf.torsion_mixed
        lhs = tm - np.einsum("ma,abj,bi->mij", fr.p.values, tm, fr.p.values)
        rhs = (
            np.einsum("i,mj->mij", fr.theta_p.values, eye)
            - np.einsum("i,mj->mij", fr.theta.values, fr.p.values)
        ) / 4
        assert frob(lhs - rhs) < 1e-12


def test_contorsion_antisymmetry(separable):
    fr = separable.frame()
    for seed in range(5):
        k = fr.connection(random_params(seed + 20)).contorsion.values
        assert frob(k + k.transpose(0, 2, 1)) < 1e-12


def test_natural_connection_parallelism(separable):
    fr = separable.frame()
    for seed in range(5):
        cf = fr.connection(random_params(seed + 30))
        assert cf.torsion_residual() < 1e-12
        assert cf.metric_parallel_residual() < 1e-10
        assert cf.structure_parallel_residual() < 1e-8


def test_d_preset_matches_explicit_formula(separable):
    fr = separable.frame()
    cf = fr.connection(ConnectionParams.d())
    p_omega = fr.p.values @ fr.omega.values
    expected = fr.christoffel.values + (
        np.einsum("ij,k->kij", fr.g.values, p_omega)
        - np.einsum("j,ki->kij", fr.theta_p.values, np.eye(4))
    ) / 4
    assert frob(cf.gamma.values - expected) < 1e-10


def test_d_tilde_contorsion_is_transposed_torsion(separable):
    # For the second preset the difference tensor satisfies K(x,y,z) = T(z,y,x).
    fr = separable.frame()
    cf = fr.connection(ConnectionParams.d_tilde(2))
    t = cf.torsion.values
    assert frob(cf.contorsion.values - np.einsum("kji->ijk", t)) < 1e-13


def test_flat_connection_is_levi_civita():
    fr = flat_product_germ(2).frame()
    cf = fr.connection(ConnectionParams(0.9, 0.4))
    assert frob(cf.gamma.values - fr.christoffel.values) == 0.0


def test_curvature_relation_for_random_params(separable, mixed):
    for germ in (separable, mixed):
        fr = germ.frame()
        ps = fr.structure
        pi1, pi2, pi3 = pi_tensors(ps)
        r = fr.curvature.values
        for seed in range(5):
            cf = fr.connection(random_params(seed + 40))
            tr = cf.transfer
            rebuilt = (
                cf.curvature.values
                - tr["g_pp"] * pi1
                - tr["g_qq"] * pi2
                - tr["g_pq"] * pi3
                - psi1(ps, tr["s_prime"])
                - psi2(ps, tr["s_dprime"])
            )
            assert frob(r - rebuilt) < 1e-7


def test_transfer_components_for_presets(separable):
    fr = separable.frame()
    theta_omega = float(fr.theta.values @ fr.omega.values)
    tr_d = fr.connection(ConnectionParams.d()).transfer
    assert abs(tr_d["g_pp"] - theta_omega / 16) < 1e-12
    assert tr_d["g_qq"] == 0.0 and tr_d["g_pq"] == 0.0
    assert frob(tr_d["s_dprime"]) == 0.0
    tr_t = fr.connection(ConnectionParams.d_tilde(2)).transfer
    assert abs(tr_t["g_qq"] - theta_omega / 16) < 1e-12
    assert tr_t["g_pp"] == 0.0 and tr_t["g_pq"] == 0.0
    assert frob(tr_t["s_prime"] - np.outer(fr.theta.values, fr.theta.values) / 16) < 1e-12


def test_r_prime_p_tensor_on_separable_case_iii(separable):
    fr = separable.frame()
    cf = fr.connection(ConnectionParams(1.0, 0.0))
    assert ConnectionParams(1.0, 0.0).case(2) == "generic"
    report = is_p_tensor(fr.structure, cf.curvature.values, tol=1e-7)
    assert report.passed
    assert frob(cf.curvature.values) > 1.0


def test_r_prime_not_p_tensor_on_mixed_case_iii(mixed):
    fr = mixed.frame()
    cf = fr.connection(ConnectionParams(1.0, 0.0))
    res = curvature_like_residuals(cf.curvature.values)
    res["p_invariance"] = p_invariance_residual(fr.structure, cf.curvature.values)
    assert max(res.values()) > 1e-3


def test_r_prime_of_d_vanishes_on_conformal_family(separable, mixed):
    # D is conformally invariant over the flat product, hence flat here.
    for germ in (separable, mixed):
        cf = germ.frame().connection(ConnectionParams.d())
        assert frob(cf.curvature.values) < 1e-12


def test_second_bianchi_identity(separable):
    fr = separable.frame()
    for cp in [ConnectionParams.d(), ConnectionParams.d_tilde(2), ConnectionParams(1.0, 0.0)]:
        cf = fr.connection(cp)
        nr = cf.nabla_curvature
        b = nr + np.einsum("ami,ajkl->mijkl", cf.torsion_mixed, cf.curvature.values)
        cyc = b + np.einsum("ijmkl->mijkl", b) + np.einsum("jmikl->mijkl", b)
        assert frob(cyc) < 1e-6


def test_nabla_curvature_against_fd(separable):
    # exact-jet covariant derivative of R' vs central differences of the pipeline
    cp = ConnectionParams(1.0, 0.0)
    pt = np.asarray(separable.base_point)
    cf = separable.frame(pt).connection(cp)
    gamma = cf.gamma.values

    def r_prime(q):
        return separable.frame(q, order=2).connection(cp).curvature.values

    h = 1e-5
    for m in range(4):
        e = np.zeros(4)
        e[m] = h
        dr_fd = (r_prime(pt + e) - r_prime(pt - e)) / (2 * h)
        rv = cf.curvature.values
        # assemble the covariant derivative from the FD partial
        corr = (
            np.einsum("ai,ajkl->ijkl", gamma[:, m, :], rv)
            + np.einsum("aj,iakl->ijkl", gamma[:, m, :], rv)
            + np.einsum("ak,ijal->ijkl", gamma[:, m, :], rv)
            + np.einsum("al,ijka->ijkl", gamma[:, m, :], rv)
        )
        nabla_fd = dr_fd - corr
        assert frob(cf.nabla_curvature[m] - nabla_fd) < 1e-5 * max(1, frob(nabla_fd))


def test_d_scalar_matches_jet_gradient(separable):
    cp = ConnectionParams(1.0, 0.0)
    pt = np.asarray(separable.base_point)

    def tau_star_pipeline(q):
        return float(separable.frame(q, order=2).connection(cp).tau_star.values)

    grad_fd, err = d_scalar(tau_star_pipeline, pt, step=1e-4)
    exact = separable.frame(pt).connection(cp).tau_star.data[1]
    assert frob(grad_fd - exact) < 1e-6 * max(1.0, frob(exact))
    assert np.all(err < 1e-4 * max(1.0, frob(exact)))


def test_d_scalar_trivial_cases():
    grad, err = d_scalar(lambda pt: 3.5, np.zeros(4))
    assert frob(grad) == 0.0 and frob(err) == 0.0
    grad, _ = d_scalar(lambda pt: pt[0] ** 2, np.array([1.5, 0, 0, 0]))
    assert abs(grad[0] - 3.0) < 1e-9


def test_one_form_exterior_fd_on_gradient_field():
    # d of an exact form vanishes
    def form(pt):
        return np.array([2 * pt[0] * pt[2], 0.0, pt[0] ** 2, 0.0])

    d = one_form_exterior_fd(form, np.array([0.4, 0.1, 0.6, 0.2]), step=1e-4)
    assert frob(d) < 1e-8

    def nonclosed(pt):
        return np.array([pt[2], 0.0, 0.0, 0.0])

    d2 = one_form_exterior_fd(nonclosed, np.array([0.4, 0.1, 0.6, 0.2]), step=1e-4)
    assert abs(d2[0, 2] + 1.0) < 1e-8


def test_contorsion_helper_matches_frame(separable):
    fr = separable.frame()
    cp = ConnectionParams(0.3, -0.6)
    t = torsion_from_params(fr.structure, fr.theta.values, cp)
    assert frob(contorsion(t) - fr.connection(cp).contorsion.values) < 1e-13


def test_germ_validation_detects_incompatibility():
    bad = ChartGerm.from_strings(
        4,
        [["1", "0", "0", "0"], ["0", "1", "0", "0"],
         ["0", "0", "1", "0"], ["0", "0", "0", "1"]],
        [["1", "0", "0", "0"], ["0", "1", "0", "0"],
         ["0", "0", "1", "0"], ["0", "0", "0", "-1"]],
        name="bad_trace",
    )
    assert bad.validate()["trace_p"] == 2.0


def test_christoffel_coordinate_permutation_equivariance():
    # Relabeling the two h-coordinates permutes the Christoffel indices.
    germ_a = conformal_flat_product_germ(2, "x1^2 + x2")
    germ_b = conformal_flat_product_germ(2, "x2^2 + x1")
    pt = np.array([0.3, 0.7, 0.2, 0.5])
    swapped = pt[[1, 0, 2, 3]]
    gamma_a = germ_a.frame(pt, order=2).christoffel.values
    gamma_b = germ_b.frame(swapped, order=2).christoffel.values
    perm = [1, 0, 2, 3]
    assert frob(gamma_a - gamma_b[np.ix_(perm, perm, perm)]) < 1e-13


def test_flat_r_prime_vanishes():
    fr = flat_product_germ(2).frame()
    cf = fr.connection(ConnectionParams(0.4, -0.2))
    assert frob(cf.curvature.values) == 0.0
    tr = cf.transfer
    assert tr["g_pp"] == tr["g_qq"] == tr["g_pq"] == 0.0
    assert frob(tr["s_prime"]) == 0.0 and frob(tr["s_dprime"]) == 0.0


def test_six_dimensional_conformal_germ():
    germ = conformal_flat_product_germ(3, "x1^2 + x4^2")
    fr = germ.frame()
    assert classify_f(fr.structure, fr.f_tensor.values).label == "W1"
    cf = fr.connection(ConnectionParams(1.0, 0.0))
    assert cf.metric_parallel_residual() < 1e-10
    assert cf.structure_parallel_residual() < 1e-8
    assert is_p_tensor(fr.structure, cf.curvature.values, tol=1e-7).passed
