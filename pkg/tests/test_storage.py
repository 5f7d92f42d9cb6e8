"""Tests for matrix files, ground-truth sidecars and the result database."""

import numpy as np
import pytest

from hybridsub.core.exceptions import DataFormatError
from hybridsub.storage import ResultStorage, TrialRow
from hybridsub.storage.matrix_files import (
    load_instance,
    read_matrix_csv,
    save_instance,
    sidecar_path,
    write_matrix_csv,
    write_table_csv,
)
from hybridsub.storage.result_storage import cell_key


class TestMatrixFiles:

    def test_write_read_is_exact(self, tmp_path, rng):
        m = rng.normal(size=(5, 4)) * 10.0 ** rng.integers(-8, 8, size=(5, 4))
        path = write_matrix_csv(tmp_path / "m.csv", m)
        np.testing.assert_array_equal(read_matrix_csv(path), m)

    def test_vector_written_as_column(self, tmp_path):
        path = write_matrix_csv(tmp_path / "b.csv", np.array([1.0, 2.0, 3.0]))
        assert read_matrix_csv(path).shape == (3, 1)

    def test_header_row(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("a,b\n1,2\n3,4\n")
        np.testing.assert_array_equal(read_matrix_csv(path, header=True), [[1.0, 2.0], [3.0, 4.0]])
        with pytest.raises(DataFormatError):
            read_matrix_csv(path)

    def test_blank_lines_are_skipped(self, tmp_path):
        path = tmp_path / "blank.csv"
        path.write_text("1,2\n\n3,4\n")
        assert read_matrix_csv(path).shape == (2, 2)

    @pytest.mark.parametrize("content,line,column", [
        ("1,2\n3,x\n", 2, 2),
        ("1,2\n3,4,5\n", 2, None),
        ("1,nan\n", 1, 2),
        ("inf,1\n", 1, 1),
    ])
    def test_errors_are_positioned(self, tmp_path, content, line, column):
        path = tmp_path / "bad.csv"
        path.write_text(content)
        with pytest.raises(DataFormatError) as excinfo:
            read_matrix_csv(path)
        assert excinfo.value.line == line
        assert excinfo.value.column == column
        assert str(excinfo.value).startswith(str(path))

    def test_missing_and_empty_files(self, tmp_path):
        with pytest.raises(DataFormatError):
            read_matrix_csv(tmp_path / "absent.csv")
        empty = tmp_path / "empty.csv"
        empty.write_text("\n")
        with pytest.raises(DataFormatError):
            read_matrix_csv(empty)

    def test_table_csv(self, tmp_path):
        path = write_table_csv(tmp_path / "t.csv", ["a", "b"], [["1", "x"], ["2", "y"]])
        assert path.read_text() == "a,b\n1,x\n2,y\n"

    def test_instance_round_trip(self, tmp_path, small_instance):
        csv_path, truth_path = save_instance(small_instance, tmp_path / "data.csv")
        assert truth_path == sidecar_path(csv_path) == tmp_path / "data.truth.json"
        X, loaded = load_instance(csv_path)
        np.testing.assert_array_equal(X, small_instance.X)
        np.testing.assert_array_equal(loaded.true_A, small_instance.true_A)
        np.testing.assert_array_equal(loaded.support_highd, small_instance.support_highd)
        np.testing.assert_array_equal(loaded.true_basis(), small_instance.true_basis())
        assert loaded.spec == small_instance.spec

    def test_load_without_sidecar(self, tmp_path, rng):
        path = write_matrix_csv(tmp_path / "plain.csv", rng.normal(size=(3, 2)))
        X, instance = load_instance(path)
        assert X.shape == (3, 2) and instance is None

    def test_malformed_sidecar(self, tmp_path, small_instance):
        csv_path, truth_path = save_instance(small_instance, tmp_path / "data.csv")
        truth_path.write_text('{"Z": [}')
        with pytest.raises(DataFormatError):
            load_instance(csv_path)
        truth_path.write_text('{"Z": []}')
        with pytest.raises(DataFormatError):
            load_instance(csv_path)


def _rows():
    return [
        TrialRow(cell={"sigma2": 0.5}, method=method, trial=trial,
                 metrics={"subspace_error": 0.1 * trial, "f1": float("nan"), "silhouette": 0.25},
                 extra={"converged": True})
        for method in ("pca", "hsl") for trial in range(2)
    ]


class TestResultStorage:

    @pytest.fixture
    def storage(self, tmp_path):
        return ResultStorage(str(tmp_path / "db" / "results.db"))

    def test_run_lifecycle(self, storage):
        run_id = storage.create_run("sweep-noise", master_seed=3, trials=2, config={"hsl": {"k": 3}})
        run = storage.get_run(run_id)
        assert (run.kind, run.status, run.config) == ("sweep-noise", "running", {"hsl": {"k": 3}})
        assert storage.add_trials(run_id, _rows()) == 4
        assert storage.finish_run(run_id)
        run = storage.get_run(run_id)
        assert run.status == "finished" and run.finished_at is not None

    def test_failed_run(self, storage):
        run_id = storage.create_run("fit", 0, 1, {})
        storage.finish_run(run_id, error_message="boom")
        run = storage.get_run(run_id)
        assert run.status == "failed" and run.error_message == "boom"
        assert not storage.finish_run(run_id + 100)

    def test_trials_are_ordered_and_cleaned(self, storage):
        run_id = storage.create_run("sweep-noise", 0, 2, {})
        storage.add_trials(run_id, _rows())
        rows = storage.get_trials(run_id)
        assert [(r.method, r.trial) for r in rows] == [("hsl", 0), ("hsl", 1), ("pca", 0), ("pca", 1)]
        assert rows[1].metrics["subspace_error"] == pytest.approx(0.1)
        assert rows[0].metrics["f1"] is None
        assert rows[0].extra == {"converged": True, "silhouette": 0.25}
        assert rows[0].cell == {"sigma2": 0.5}
        assert len(storage.get_trials(run_id, method="pca")) == 2

    def test_duplicate_rows_rejected(self, storage):
        run_id = storage.create_run("fit", 0, 1, {})
        storage.add_trials(run_id, _rows()[:1])
        with pytest.raises(ValueError):
            storage.add_trials(run_id, _rows()[:1])
        assert len(storage.get_trials(run_id)) == 1

    def test_recent_export_delete(self, storage):
        first = storage.create_run("fit", 0, 1, {})
        second = storage.create_run("compare", 0, 1, {})
        storage.add_trials(second, _rows())
        assert [r.id for r in storage.get_recent_runs(limit=2)] == [second, first]
        exported = storage.export_run(second)
        assert exported["kind"] == "compare" and len(exported["rows"]) == 4
        assert storage.delete_run(second)
        assert storage.get_run(second) is None
        assert storage.get_trials(second) == []
        assert not storage.delete_run(second)
        with pytest.raises(ValueError):
            storage.export_run(second)

    def test_invalid_trial_count(self, storage):
        with pytest.raises(ValueError):
            storage.create_run("fit", 0, 0, {})

    def test_cell_key_is_canonical(self):
        assert cell_key({"k": 2, "s": 4}) == cell_key({"s": 4, "k": 2}) == '{"k":2,"s":4}'
