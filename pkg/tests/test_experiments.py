"""Study machinery: references, slope fitting, failed rows, CSV schema."""
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from partexp.experiments import (
    CSV_FIELDS,
    ConvergenceStudy,
    ReferenceUnavailable,
    StudyRow,
    asymptotic_segment,
    convergence_study,
    emit_csv,
    fit_slope,
    parse_csv,
    reference_solution,
    work_precision_study,
)
from partexp.integrators import PartitionedIvp
from partexp.operators import CallableOperator, DenseOperator, zero_operator
from partexp.problems import (
    gray_scott,
    lorenz96,
    semilinear_exact,
    semilinear_parabolic,
)
from partexp.tableaus import builtin as builtin_tableau

from dataclasses import replace


# ----------------------------------------------------------------------
# Shared toy problems


def pendulum_ivp():
    def f1(y):
        return np.array([y[1], 0.0])

    def f2(y):
        return np.array([0.0, -math.sin(y[0]) - 0.1 * y[1]])

    def W1(y):
        return DenseOperator(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def W2(y):
        return DenseOperator(np.array([[0.0, 0.0], [-math.cos(y[0]), -0.1]]))

    return PartitionedIvp(y0=np.array([0.8, 0.3]), t0=0.0, tf=1.0,
                          f=(f1, f2), W=(W1, W2), name="pendulum")


def scalar_linear_ivp(lam1=-0.7, lam2=0.4):
    f1 = lambda y: lam1 * y
    f2 = lambda y: lam2 * y
    return PartitionedIvp(
        y0=np.array([1.3]), t0=0.0, tf=1.0, f=(f1, f2),
        W=(DenseOperator(np.array([[lam1]])),
           DenseOperator(np.array([[lam2]]))),
        name="scalar")


def krylov_cap_ivp(n=256, speed=5e3):
    """Oscillatory stiff linear problem whose phi Krylov cannot converge
    within the subspace cap: 2x2 rotation blocks with 128 distinct
    frequencies around speed, so the spectrum is imaginary, spread, and
    needs a polynomial degree far above the cap at every step size."""
    A = np.zeros((n, n))
    for j in range(n // 2):
        w = speed * (0.5 + (j + 1) / n)
        A[2 * j, 2 * j + 1] = w
        A[2 * j + 1, 2 * j] = -w
    op = DenseOperator(A)
    f1 = lambda y: A @ y
    return PartitionedIvp(
        y0=np.ones(n), t0=0.0, tf=1.0,
        f=(f1, lambda y: np.zeros(n)),
        W=(op, zero_operator(n)), name="cap")


# ----------------------------------------------------------------------
# Slope fitting


class TestSlopeFitting:
    def test_fit_recovers_exact_power_law(self):
        hs = [0.2 / 2**k for k in range(6)]
        errs = [5.0 * h**3 for h in hs]
        assert fit_slope(hs, errs) == pytest.approx(3.0, abs=1e-10)

    def test_segment_skips_preasymptotic_head(self):
        hs = [0.2 / 2**k for k in range(7)]
        errs = [40.0] + [5.0 * h**2 for h in hs[1:]]
        slope, seg = asymptotic_segment(hs, errs)
        assert seg == (1, 6)
        assert slope == pytest.approx(2.0, abs=1e-8)

    def test_segment_skips_rounding_floor_tail(self):
        hs = [0.2 / 2**k for k in range(8)]
        errs = [5.0 * h**2 for h in hs[:6]] + [3e-14, 2.9e-14]
        slope, seg = asymptotic_segment(hs, errs)
        assert seg == (0, 5)
        assert slope == pytest.approx(2.0, abs=1e-8)

    def test_failures_break_candidate_runs(self):
        hs = [0.2 / 2**k for k in range(6)]
        errs = [5.0 * h**2 for h in hs]
        errs[2] = None
        slope, seg = asymptotic_segment(hs, errs)
        assert slope is None and seg is None

    def test_non_finite_and_non_positive_points_are_unusable(self):
        hs = [0.2 / 2**k for k in range(5)]
        errs = [float("nan"), float("inf"), 0.0, -1.0, 1e-3]
        assert asymptotic_segment(hs, errs) == (None, None)

    def test_prefers_longer_window(self):
        hs = [0.2 / 2**k for k in range(9)]
        errs = [5.0 * h**1 for h in hs[:4]] + [5.0 * h**3 for h in hs[4:]]
        slope, seg = asymptotic_segment(hs, errs)
        assert seg == (4, 8)
        assert slope == pytest.approx(3.0, abs=0.05)


# ----------------------------------------------------------------------
# References


class TestReferenceSolution:
    def test_scalar_linear_closed_form(self):
        ivp = scalar_linear_ivp()
        ref = reference_solution(ivp)
        exact = 1.3 * math.exp(-0.3)
        assert abs(ref[0] - exact) / abs(exact) < 1e-12

    def test_semilinear_reference_agrees_with_manufactured_solution(self):
        ivp = semilinear_parabolic(40)
        ref = reference_solution(ivp)
        exact = semilinear_exact(40, ivp.tf)
        assert np.linalg.norm(ref - exact) / np.linalg.norm(exact) < 1e-10

    def test_lorenz_reference_self_consistency(self):
        ref = reference_solution(lorenz96(10))
        assert np.all(np.isfinite(ref))

    def test_unattainable_consistency_raises(self):
        with pytest.raises(ReferenceUnavailable):
            reference_solution(lorenz96(8), consistency=0.0)


# ----------------------------------------------------------------------
# Studies


class TestConvergenceStudy:
    def test_pendulum_third_order_slope(self):
        tab = builtin_tableau("pexpw3a")
        hs = [0.1 / 2**k for k in range(5)]
        study = convergence_study(tab, pendulum_ivp(), hs)
        assert study.slope is not None
        assert 2.7 < study.slope < 3.3
        assert all(r.status == "ok" for r in study.rows)
        assert [r.h for r in study.rows] == hs
        assert all(r.mode == "fixed" and r.tol is None for r in study.rows)
        assert all(r.steps > 0 and r.krylov_dim_total > 0
                   for r in study.rows)

    def test_rows_record_method_problem_and_seed(self):
        tab = builtin_tableau("pexpw3a")
        hs = [0.1 / 2**k for k in range(5)]
        study = convergence_study(tab, pendulum_ivp(), hs, seed=7)
        row = study.rows[0]
        assert row.method == "pexpw3a"
        assert row.problem == "pendulum"
        assert row.seed == 7

    def test_krylov_cap_produces_failed_rows_not_exceptions(self):
        tab = builtin_tableau("pexpw3a")
        ivp = krylov_cap_ivp()
        hs = [1.0 / 2**k for k in range(5)]
        study = convergence_study(tab, ivp, hs,
                                  reference=np.ones(256))
        assert all(r.status == "failed" for r in study.rows)
        assert all(r.error is None for r in study.rows)
        assert study.slope is None
        assert "usable" in study.diagnostics

    def test_serial_and_threaded_runs_agree_on_everything_but_timing(self):
        tab = builtin_tableau("pepirkw3a")
        hs = [0.1 / 2**k for k in range(5)]
        ref = reference_solution(pendulum_ivp())
        a = convergence_study(tab, pendulum_ivp(), hs, reference=ref)
        b = convergence_study(tab, pendulum_ivp(), hs, reference=ref,
                              workers=2)
        for ra, rb in zip(a.rows, b.rows):
            for name in CSV_FIELDS:
                if name == "cpu_seconds":
                    continue
                assert getattr(ra, name) == getattr(rb, name), name
        assert a.slope == pytest.approx(b.slope, rel=1e-12)

    def test_h_list_validation(self):
        tab = builtin_tableau("pexpw3a")
        ivp = pendulum_ivp()
        ref = np.ones(2)
        with pytest.raises(ValueError):
            convergence_study(tab, ivp, [0.1, 0.05, 0.025, 0.0125],
                              reference=ref)
        with pytest.raises(ValueError):
            convergence_study(tab, ivp, [0.0125, 0.025, 0.05, 0.1, 0.2],
                              reference=ref)
        with pytest.raises(ValueError):
            convergence_study(tab, ivp, [0.1, 0.05, 0.03, 0.015, 0.0075],
                              reference=ref)


class TestWorkPrecisionStudy:
    def test_error_tracks_tolerance(self):
        tab = builtin_tableau("pexpw3a")
        tols = [1e-4, 1e-6, 1e-8]
        rows = work_precision_study(tab, pendulum_ivp(), tols)
        assert [r.tol for r in rows] == tols
        assert all(r.status == "ok" for r in rows)
        assert all(r.mode == "adaptive" and r.h is None for r in rows)
        errs = [r.error for r in rows]
        assert errs[2] < errs[0]
        assert errs[2] < 1e-6
        steps = [r.steps for r in rows]
        assert steps[0] <= steps[1] <= steps[2]

    def test_tol_list_validation(self):
        tab = builtin_tableau("pexpw3a")
        ivp = pendulum_ivp()
        with pytest.raises(ValueError):
            work_precision_study(tab, ivp, [], reference=np.ones(2))
        with pytest.raises(ValueError):
            work_precision_study(tab, ivp, [1e-6, 1e-4],
                                 reference=np.ones(2))


class TestPermutationInvariance:
    def test_error_column_invariant_under_plain_reaction_jacobian(self):
        # same study with the reaction Jacobian exposed once as the
        # permuted block operator and once as an equivalent plain handle
        tab = builtin_tableau("pexpw3a")
        base = gray_scott(8)
        short = replace(base, tf=0.05)
        w2 = base.W[1]

        def plain_w2(y):
            inner = w2(y)
            return CallableOperator(
                inner.dim, inner.apply,
                norm_hint=inner.norm_estimate(), symmetric=False)

        variant = replace(short, W=(short.W[0], plain_w2))
        hs = [0.01 / 2**k for k in range(5)]
        ref = reference_solution(short, rtol=1e-11, atol=1e-11,
                                 consistency=1e-8)
        a = convergence_study(tab, short, hs, reference=ref)
        b = convergence_study(tab, variant, hs, reference=ref)
        for ra, rb in zip(a.rows, b.rows):
            assert ra.status == rb.status == "ok"
            assert abs(ra.error - rb.error) <= 1e-10 * max(1.0, ra.error)


# ----------------------------------------------------------------------
# CSV schema


ROW_STRATEGY = st.builds(
    StudyRow,
    method=st.sampled_from(["pexpw3a", "pexpw3b", "pepirkw3a", "psepirkb"]),
    problem=st.sampled_from(["lorenz96", "semilinear", "gray-scott"]),
    mode=st.sampled_from(["fixed", "adaptive"]),
    h=st.one_of(st.none(), st.floats(1e-12, 1e3, allow_nan=False)),
    tol=st.one_of(st.none(), st.floats(1e-14, 1e-1, allow_nan=False)),
    error=st.one_of(st.none(), st.floats(1e-300, 1e300, allow_nan=False)),
    cpu_seconds=st.floats(0.0, 1e6, allow_nan=False),
    steps=st.integers(0, 10**9),
    rejects=st.integers(0, 10**6),
    krylov_dim_total=st.integers(0, 10**9),
    status=st.sampled_from(["ok", "failed"]),
    seed=st.integers(0, 2**31 - 1),
)


class TestCsvSchema:
    def test_header_row_matches_schema(self):
        buf = io.StringIO()
        emit_csv([], buf)
        assert buf.getvalue().strip() == ",".join(CSV_FIELDS)

    def test_none_fields_serialize_as_empty(self):
        row = StudyRow("m", "p", "fixed", 0.5, None, None, 0.1, 3, 0, 10,
                       "failed", 42)
        buf = io.StringIO()
        emit_csv([row], buf)
        line = buf.getvalue().splitlines()[1]
        assert line == "m,p,fixed,0.5,,,0.1,3,0,10,failed,42"

    @given(st.lists(ROW_STRATEGY, max_size=8))
    @settings(max_examples=60, deadline=None)
    def test_round_trip_identity(self, rows):
        buf = io.StringIO()
        emit_csv(rows, buf)
        buf.seek(0)
        assert parse_csv(buf) == rows

    def test_file_round_trip(self, tmp_path):
        rows = [StudyRow("pexpw3a", "lorenz96", "fixed", 0.06, None,
                         1.2e-7, 0.4, 5, 0, 150, "ok", 42)]
        path = str(tmp_path / "study.csv")
        emit_csv(rows, path)
        assert parse_csv(path) == rows

    def test_wrong_header_rejected(self):
        buf = io.StringIO("a,b,c\n1,2,3\n")
        with pytest.raises(ValueError):
            parse_csv(buf)

    def test_short_row_rejected(self):
        buf = io.StringIO(",".join(CSV_FIELDS) + "\nm,p,fixed,0.5\n")
        with pytest.raises(ValueError):
            parse_csv(buf)
