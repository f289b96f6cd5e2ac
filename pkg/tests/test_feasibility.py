"""Feasibility norms, the GP covariance family, and the cone diagram."""

import numpy as np
import pytest
from scipy.special import erf

from impsamp import (
    GPFamily,
    LinearSSM,
    GaussianDensity,
    ModelProblem,
    RngStream,
    analyze_feasibility,
    collapse_matrices,
    cone_diagram,
    effective_dimension,
    frobenius_norm,
    gp_covariance_matrix,
    gp_operator_norms,
    jacobi_eigen,
    riccati_steady_state,
    run_filter,
    simulate_truth,
)
from impsamp.feasibility import classify_region, write_cone_csv
from impsamp.problems import model_problem_ssm


def operator_frobenius_squared(L: float) -> float:
    """Closed form of the double integral of k^2 over the unit square."""
    return float(erf(1.0 / L) + (L / np.sqrt(np.pi)) * (np.exp(-1.0 / L**2) - 1.0))


class TestEffectiveDimension:
    def test_four_equal_eigenvalues(self):
        assert effective_dimension(np.array([1.0, 1.0, 1.0, 1.0]), 0.05) == 4

    def test_dominant_eigenvalue(self):
        assert effective_dimension(np.array([10.0, 1.0]), 0.05) == 1

    def test_matches_brute_force_on_gp_spectrum(self):
        fam = GPFamily(L=0.1, m=128)
        spec = jacobi_eigen(gp_covariance_matrix(fam))
        got = effective_dimension(spec, 0.05)
        sq = spec.eigenvalues**2
        total = sq.sum()
        ell = None
        for l in range(1, 129):
            if sq[:l].sum() >= 0.95 * total:
                ell = l
                break
        assert got == ell

    def test_all_zero_spectrum_raises(self):
        with pytest.raises(ValueError):
            effective_dimension(np.zeros(5), 0.05)

    def test_eps_bounds(self):
        with pytest.raises(ValueError):
            effective_dimension(np.ones(3), 0.0)


class TestGPFamily:
    def test_diagonal_value(self):
        fam = GPFamily(L=0.2, m=16)
        P = gp_covariance_matrix(fam)
        expected = np.pi ** (-0.25) * 0.2 ** (-0.5)
        np.testing.assert_allclose(np.diag(P), expected, rtol=1e-14)

    def test_distant_entries_vanish(self):
        fam = GPFamily(L=0.02, m=64)
        P = gp_covariance_matrix(fam)
        assert abs(P[0, 40]) < 1e-100

    def test_energy_is_one_for_all_lengths(self):
        for L in (0.001, 0.05, 0.3):
            assert GPFamily(L=L, m=4).energy() == pytest.approx(1.0, abs=1e-10)

    def test_mesh_independence_of_scaled_frobenius(self):
        n128 = gp_operator_norms(GPFamily(L=0.1, m=128)).frob_discrete
        n512 = gp_operator_norms(GPFamily(L=0.1, m=512)).frob_discrete
        assert abs(n128 - n512) / n512 < 0.01

    def test_quadrature_matches_closed_form(self):
        for L in (0.01, 0.1, 0.3):
            norms = gp_operator_norms(GPFamily(L=L, m=32))
            assert norms.frob_operator**2 == pytest.approx(
                operator_frobenius_squared(L), abs=1e-10
            )

    def test_discrete_tracks_operator_at_fine_mesh(self):
        norms = gp_operator_norms(GPFamily(L=0.1, m=256))
        assert 0.99 < norms.frob_discrete / norms.frob_operator < 1.01

    def test_small_length_norm_flat_but_dimension_grows(self):
        Ls = [0.001, 0.002, 0.005, 0.01]
        ops = [np.sqrt(operator_frobenius_squared(L)) for L in Ls]
        assert (max(ops) - min(ops)) / min(ops) < 0.02
        dims = [
            gp_operator_norms(GPFamily(L=L, m=128)).eff_dim for L in (0.005, 0.02, 0.1)
        ]
        assert dims[0] > dims[1] > dims[2]


class TestCollapseMatrices:
    def test_perfect_model(self):
        # q = 0 is allowed in the matrices even though the optimal filter
        # itself would reject the singular Q
        eye = np.eye(3)
        ssm = LinearSSM(A=eye, H=eye, Q=0.0 * eye, R=eye,
                        x0=GaussianDensity(np.zeros(3), eye))
        P = riccati_steady_state(ssm.A, ssm.H, ssm.Q, ssm.R)
        sir, opt = collapse_matrices(ssm, P)
        np.testing.assert_allclose(sir, np.zeros((3, 3)), atol=1e-12)
        np.testing.assert_allclose(opt, np.zeros((3, 3)), atol=1e-12)

    @pytest.mark.parametrize("m", [1, 5])
    def test_model_problem_closed_forms(self, m):
        ssm = model_problem_ssm(m, 1.0, 1.0)
        P = riccati_steady_state(ssm.A, ssm.H, ssm.Q, ssm.R)
        sir, opt = collapse_matrices(ssm, P)
        phi = (np.sqrt(5) + 1) / 2
        np.testing.assert_allclose(sir, phi * np.eye(m), atol=1e-10)
        np.testing.assert_allclose(opt, ((np.sqrt(5) - 1) / 2 / 2) * np.eye(m), atol=1e-10)

    def test_generic_matrices_match_independent_assembly(self):
        rng = np.random.default_rng(4)
        A = 0.8 * np.linalg.qr(rng.standard_normal((4, 4)))[0]
        H = rng.standard_normal((3, 4))
        Qh = rng.standard_normal((4, 4))
        Q = 0.5 * (Qh @ Qh.T) / 4 + 0.05 * np.eye(4)
        Q = 0.5 * (Q + Q.T)
        R = np.diag([0.5, 1.0, 2.0])
        ssm = LinearSSM(A=A, H=H, Q=Q, R=R, x0=GaussianDensity(np.zeros(4), np.eye(4)))
        P = riccati_steady_state(A, H, Q, R)
        sir, opt = collapse_matrices(ssm, P)
        sir_direct = H @ (Q + A @ P @ A.T) @ H.T @ np.linalg.inv(R)
        opt_direct = H @ A @ P @ A.T @ H.T @ np.linalg.inv(H @ Q @ H.T + R)
        np.testing.assert_allclose(sir, sir_direct, atol=1e-10)
        np.testing.assert_allclose(opt, opt_direct, atol=1e-10)


class TestConeDiagram:
    def test_golden_ratio_point(self):
        mp = ModelProblem(m=1, q=1.0, r=1.0)
        assert mp.feasibility_scalar() == pytest.approx(0.6180339887, abs=1e-10)
        assert mp.opt_scalar() == pytest.approx(0.3090169944, abs=1e-10)
        assert mp.sir_scalar() == pytest.approx(1.6180339887, abs=1e-10)
        assert classify_region(
            mp.feasibility_scalar(), mp.sir_scalar(), mp.opt_scalar()
        ) == "optimal_ok"

    def test_perfect_model_axis(self):
        mp = ModelProblem(m=1, q=0.0, r=2.0)
        assert mp.feasibility_scalar() == 0.0
        assert mp.sir_scalar() == 0.0
        assert mp.opt_scalar() == 0.0
        assert classify_region(0.0, 0.0, 0.0) == "sir_ok"

    def test_accurate_data_limit(self):
        mp = ModelProblem(m=1, q=2.0, r=1e-9)
        assert mp.feasibility_scalar() == pytest.approx(0.0, abs=1e-8)
        assert mp.sir_scalar() > 1e8
        assert mp.opt_scalar() < 1.0
        points = cone_diagram([2.0], [1e-9])
        assert points[0].region == "optimal_ok"

    def test_region_containment_on_grid(self):
        qs = np.geomspace(0.01, 10, 30)
        rs = np.geomspace(0.01, 10, 30)
        points = cone_diagram(qs, rs)
        for p in points:
            assert p.opt_scalar <= p.sir_scalar + 1e-14
            if p.region == "sir_ok":
                assert p.opt_scalar <= 1.0 and p.feas_scalar <= 1.0
            if p.region == "optimal_ok":
                assert p.feas_scalar <= 1.0

    def test_closed_form_consistency_grid(self):
        """Riccati + collapse matrices agree with the scalar closed forms."""
        qs = np.geomspace(0.01, 10.0, 12)
        rs = np.geomspace(0.01, 10.0, 12)
        for q in qs:
            for r in rs:
                mp = ModelProblem(m=2, q=float(q), r=float(r))
                ssm = mp.to_ssm()
                P = riccati_steady_state(ssm.A, ssm.H, ssm.Q, ssm.R)
                sir, opt = collapse_matrices(ssm, P)
                np.testing.assert_allclose(P, mp.p_scalar() * np.eye(2), atol=1e-10)
                np.testing.assert_allclose(sir, mp.sir_scalar() * np.eye(2), atol=1e-10)
                np.testing.assert_allclose(opt, mp.opt_scalar() * np.eye(2), atol=1e-10)

    def test_cone_csv(self, tmp_path):
        path = tmp_path / "cones.csv"
        write_cone_csv(path, cone_diagram([0.1, 1.0], [0.5]))
        lines = path.read_text().splitlines()
        assert lines[0] == "q,r,feas_scalar,sir_scalar,opt_scalar,region"
        assert len(lines) == 3


class TestFeasibilityReport:
    def test_verdicts_consistent_with_norms(self):
        report = analyze_feasibility(model_problem_ssm(4, 0.05, 1.0))
        assert report.feasible_in_principle == (report.p_frobenius <= report.threshold)
        assert report.sir_ok == (report.sigma_sir_norm <= report.threshold)
        assert report.opt_ok == (report.sigma_opt_norm <= report.threshold)
        assert 1 <= report.eff_dim <= 4

    def test_scalar_model_problem_report(self):
        report = analyze_feasibility(model_problem_ssm(1, 1.0, 1.0))
        assert report.p_frobenius == pytest.approx(0.618034, abs=1e-5)
        assert not report.sir_ok and report.opt_ok and report.feasible_in_principle


class TestEmpiricalCollapseOrdering:
    def test_filters_order_and_collapse_across_cones(self):
        """Qualitative collapse picture at desk scale: the SIR filter
        degenerates inside its infeasible cone, the optimal filter holds
        more effective particles everywhere, and less model noise helps.

        The per-component cone thresholds themselves do not predict the
        m=100 collapse boundary (the relevant statistic grows with sqrt(m));
        the quantitative per-threshold claim lives in the acceptance suite.
        """
        med = {}
        for q, r in ((1.0, 1.0), (0.01, 1.0)):
            ssm = model_problem_ssm(100, q, r)
            for method in ("sir", "optimal"):
                vals = []
                for seed in range(2):
                    rng = RngStream(300 + seed)
                    _, data = simulate_truth(ssm, 60, rng.substream(0))
                    res = run_filter(method, ssm, data, 100, rng.substream(1))
                    vals.append(np.median(res.ess))
                med[(q, r, method)] = np.median(vals)
        # hard collapse inside the SIR-infeasible cone
        assert med[(1.0, 1.0, "sir")] < 3.0
        # the optimal proposal dominates SIR at both points
        assert med[(1.0, 1.0, "optimal")] > med[(1.0, 1.0, "sir")]
        assert med[(0.01, 1.0, "optimal")] > med[(0.01, 1.0, "sir")]
        # shrinking the model noise moves both filters toward health
        assert med[(0.01, 1.0, "sir")] > 3 * med[(1.0, 1.0, "sir")]
