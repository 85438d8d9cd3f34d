from __future__ import annotations

import pytest

from metasecure.bench import (
    BENCH_PASSWORD,
    COMBINED_LABEL,
    FACE_LABEL,
    PASSWORD_LABEL,
    PASSWORDLESS_LABEL,
    TimingRow,
    calibrate_password_cost,
    comparison_csv,
    emit_report,
    hash_password,
    render_comparison_table,
    render_trial_table,
    time_face_auth,
    time_fido_auth,
    time_password_auth,
    trial_table_csv,
    verify_password,
)
from metasecure.errors import CalibrationError, ValidationError


class TestPasswordHashing:
    def test_benchmark_password_has_49_characters(self):
        assert len(BENCH_PASSWORD) == 49

    def test_iterated_hash_verifies(self):
        stored = hash_password(BENCH_PASSWORD, 1000)
        assert verify_password(BENCH_PASSWORD, 1000, stored) is True
        assert verify_password("wrong" * 10, 1000, stored) is False

    def test_iteration_count_changes_digest(self):
        assert hash_password(BENCH_PASSWORD, 10) != hash_password(BENCH_PASSWORD, 11)


class TestCalibration:
    def test_target_zero_rejected(self):
        with pytest.raises(CalibrationError):
            calibrate_password_cost(0)

    def test_negative_target_rejected(self):
        with pytest.raises(CalibrationError):
            calibrate_password_cost(-5)

    def test_unreachably_small_target(self):
        with pytest.raises(CalibrationError):
            calibrate_password_cost(1e-6)

    @pytest.mark.parametrize("target_ms", [1.0, 40.0])
    def test_calibrated_cost_lands_in_tolerance(self, target_ms):
        iterations = calibrate_password_cost(target_ms)
        stored = hash_password(BENCH_PASSWORD, iterations)
        import time

        start = time.perf_counter_ns()
        verify_password(BENCH_PASSWORD, iterations, stored)
        measured_ms = (time.perf_counter_ns() - start) / 1e6
        assert target_ms * 0.80 <= measured_ms <= target_ms * 1.25  # slack over the ±15% goal


class TestTimingRows:
    def test_fido_row_shape_and_additivity(self):
        row = time_fido_auth(trials=5)
        assert row.label == PASSWORDLESS_LABEL
        assert len(row.trial_times_ms) == 5
        assert len(row.trial_create_ms) == 5
        assert len(row.trial_verify_ms) == 5
        for create, verify, total in zip(
            row.trial_create_ms, row.trial_verify_ms, row.trial_times_ms
        ):
            assert total == pytest.approx(create + verify, abs=0.5)
        assert row.total_ms == pytest.approx(row.create_ms + row.verify_ms, abs=0.5)
        # desk-scale means must stay far under a second
        assert row.total_ms < 1000

    def test_trials_floor(self):
        with pytest.raises(ValidationError):
            time_fido_auth(trials=4)
        with pytest.raises(ValidationError):
            time_password_auth(trials=2, iterations=1)
        with pytest.raises(ValidationError):
            time_face_auth(trials=1)

    def test_single_iteration_password_is_far_below_fido(self):
        password_row = time_password_auth(trials=5, iterations=1)
        fido_row = time_fido_auth(trials=5)
        assert password_row.label == PASSWORD_LABEL
        assert password_row.total_ms < fido_row.total_ms

    def test_face_row(self):
        row = time_face_auth(trials=5, seed=3)
        assert row.label == FACE_LABEL
        assert row.total_ms > 0
        assert row.create_ms is None and row.verify_ms is None


class TestReport:
    @staticmethod
    def fixed_rows():
        password = TimingRow(label=PASSWORD_LABEL, trial_times_ms=[50.0, 52.0, 48.0, 51.0, 49.0])
        face = TimingRow(label=FACE_LABEL, trial_times_ms=[0.4, 0.5, 0.6, 0.5, 0.5])
        fido = TimingRow(
            label=PASSWORDLESS_LABEL,
            trial_times_ms=[3.0, 3.2, 2.8, 3.1, 2.9],
            trial_create_ms=[1.0, 1.1, 0.9, 1.05, 0.95],
            trial_verify_ms=[2.0, 2.1, 1.9, 2.05, 1.95],
        )
        return password, face, fido

    def test_empty_rows_rejected(self):
        with pytest.raises(ValidationError):
            emit_report([])

    def test_single_row_report_is_valid(self):
        password, _, _ = self.fixed_rows()
        report = emit_report([password])
        assert report.combined is None
        table = render_comparison_table(report)
        assert PASSWORD_LABEL in table

    def test_combined_row_is_exact_sum(self):
        password, face, fido = self.fixed_rows()
        report = emit_report([password, face, fido])
        assert report.combined is not None
        assert report.combined.total_ms == face.total_ms + fido.total_ms

    def test_comparison_table_row_set_and_ratings(self):
        password, face, fido = self.fixed_rows()
        table = render_comparison_table(emit_report([password, face, fido]))
        for label in (PASSWORD_LABEL, FACE_LABEL, PASSWORDLESS_LABEL, COMBINED_LABEL):
            assert label in table
        for rating in ("Low", "Medium", "High", "Extremely high"):
            assert rating in table
        assert "+" in table and "=" in table  # the combined row shows its sum

    def test_trial_table_headers_and_average_row(self):
        _, _, fido = self.fixed_rows()
        table = render_trial_table(fido)
        assert "Time taken to create challenge" in table
        assert "Time taken to verify challenge and authenticate user" in table
        assert "Total time for processing" in table
        assert "Average" in table
        assert table.count("ms") >= 18  # 5 trials x 3 columns + averages

    def test_rendering_is_deterministic(self):
        password, face, fido = self.fixed_rows()
        report = emit_report([password, face, fido])
        assert render_comparison_table(report) == render_comparison_table(report)
        assert render_trial_table(fido) == render_trial_table(fido)
        assert comparison_csv(report) == comparison_csv(report)
        assert trial_table_csv(fido) == trial_table_csv(fido)

    def test_ordering_with_calibrated_password_cost(self):
        # Scaled-down version of the comparison ordering: password cost is
        # calibrated well above the other two models.
        iterations = calibrate_password_cost(40.0)
        password = time_password_auth(trials=5, iterations=iterations)
        face = time_face_auth(trials=5)
        fido = time_fido_auth(trials=5)
        report = emit_report([password, face, fido])
        assert password.total_ms > report.combined.total_ms > fido.total_ms


class TestFigures:
    def test_figures_render_to_files(self, tmp_path):
        from metasecure.figures import save_comparison_figure, save_trials_figure

        password, face, fido = TestReport.fixed_rows()
        report = emit_report([password, face, fido])
        comparison_path = tmp_path / "comparison.png"
        trials_path = tmp_path / "trials.png"
        save_comparison_figure(report, comparison_path)
        save_trials_figure(fido, trials_path)
        assert comparison_path.stat().st_size > 0
        assert trials_path.stat().st_size > 0

    def test_confusion_figure(self, tmp_path):
        import numpy as np

        from metasecure.face_identity import evaluate_pad, planted_pad_dataset
        from metasecure.figures import save_confusion_figure

        matrix = evaluate_pad(planted_pad_dataset(np.random.default_rng(0), 50, 50))
        path = tmp_path / "confusion.png"
        save_confusion_figure(matrix, path)
        assert path.stat().st_size > 0
