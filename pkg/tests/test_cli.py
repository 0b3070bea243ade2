import csv
import json
import shutil

import pytest

from answertree.cli import main

GRADED = """question_id,answer,label
q1,alpha one,correct
q1,alpha two,correct
q1,alpha three,correct
q1,wrong one,incorrect
q1,wrong two,incorrect
q1,wrong three,incorrect
q2,beta x,correct
q2,beta y,correct
q2,gamma x,incorrect
q2,gamma y,incorrect
"""

# Large enough for 10-fold cross-validation and perfectly separable.
EVALUATABLE = "question_id,answer,label\n" + "".join(
    f"q1,alpha item{i},correct\n" for i in range(20)
) + "".join(f"q1,wrong item{i},incorrect\n" for i in range(20))


@pytest.fixture()
def reproducible_clock(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1592179200")


def write(path, content):
    path.write_text(content, encoding="utf-8")
    return str(path)


def test_train_writes_one_tree_per_question(tmp_path, capsys, reproducible_clock):
    answers = write(tmp_path / "answers.csv", GRADED)
    out = tmp_path / "trees"
    assert main(["train", "--answers", answers, "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["q1.tree.json", "q2.tree.json"]
    document = json.loads((out / "q1.tree.json").read_text())
    assert document["question_id"] == "q1"
    assert document["trained_at"] == "2020-06-15T00:00:00+00:00"
    stdout = capsys.readouterr().out
    assert "q1: 6 samples (3 correct, 3 incorrect)" in stdout


def test_train_is_byte_identical_across_runs(tmp_path, reproducible_clock):
    answers = write(tmp_path / "answers.csv", GRADED)
    first, second = tmp_path / "run1", tmp_path / "run2"
    assert main(["train", "--answers", answers, "--out", str(first)]) == 0
    assert main(["train", "--answers", answers, "--out", str(second)]) == 0
    assert (first / "q1.tree.json").read_bytes() == (second / "q1.tree.json").read_bytes()
    assert (first / "q2.tree.json").read_bytes() == (second / "q2.tree.json").read_bytes()


def test_train_conflicting_labels_fail_with_exit_1(tmp_path, capsys):
    answers = write(
        tmp_path / "answers.csv",
        "question_id,answer,label\nq1,valve,correct\nq1,valve,incorrect\n",
    )
    assert main(["train", "--answers", answers, "--out", str(tmp_path / "t")]) == 1
    assert "valve" in capsys.readouterr().err


def test_grade_end_to_end(tmp_path, reproducible_clock):
    answers = write(tmp_path / "answers.csv", GRADED)
    trees = tmp_path / "trees"
    assert main(["train", "--answers", answers, "--out", str(trees)]) == 0
    ungraded = write(
        tmp_path / "new.csv",
        "question_id,answer\nq1,alpha something\nq1,totally novel words\nq1,\n",
    )
    out = tmp_path / "graded.csv"
    assert main(
        ["grade", "--trees", str(trees), "--answers", ungraded, "--out", str(out)]
    ) == 0
    with open(out, newline="") as handle:
        rows = list(csv.DictReader(handle))
    assert [r["label"] for r in rows] == ["correct", "incorrect", "incorrect"]
    assert rows[0]["certainty"] == "1.0000"
    assert rows[0]["flagged"] == "false"
    assert rows[0]["critical_word"] == "alpha"
    # Out-of-vocabulary answers are flagged for human audit even at certainty 1.
    assert rows[1]["flagged"] == "true"
    assert rows[1]["critical_word"] == ""
    # Blank answers are graded incorrect without consulting the tree.
    assert rows[2] == {
        "question_id": "q1",
        "answer": "",
        "label": "incorrect",
        "certainty": "1.0000",
        "flagged": "false",
        "critical_word": "",
    }


def test_grade_missing_tree_is_exit_1(tmp_path, capsys):
    trees = tmp_path / "trees"
    trees.mkdir()
    ungraded = write(tmp_path / "new.csv", "question_id,answer\nq9,anything\n")
    out = tmp_path / "graded.csv"
    assert main(
        ["grade", "--trees", str(trees), "--answers", ungraded, "--out", str(out)]
    ) == 1
    assert "q9" in capsys.readouterr().err
    assert not out.exists()


def test_grade_threshold_flagging(tmp_path, example_tree_path):
    trees = tmp_path / "trees"
    trees.mkdir()
    shutil.copy(example_tree_path, trees / "Q52.tree.json")
    ungraded = write(
        tmp_path / "new.csv", "question_id,answer\nQ52,the papillary muscles\n"
    )
    out = tmp_path / "graded.csv"
    assert main(
        [
            "grade", "--trees", str(trees), "--answers", ungraded,
            "--out", str(out), "--threshold", "0.99",
        ]
    ) == 0
    with open(out, newline="") as handle:
        (row,) = list(csv.DictReader(handle))
    assert row["label"] == "correct"
    assert row["certainty"] == "0.9700"
    assert row["flagged"] == "true"


def test_grade_rejects_out_of_range_threshold(tmp_path):
    assert main(
        ["grade", "--trees", "x", "--answers", "y", "--out", "z", "--threshold", "1.5"]
    ) == 2


def test_evaluate_writes_reports(tmp_path, capsys):
    answers = write(tmp_path / "answers.csv", EVALUATABLE)
    out = tmp_path / "report"
    assert main(["evaluate", "--answers", answers, "--out", str(out)]) == 0
    document = json.loads((out / "report.json").read_text())
    assert document["rows"][0]["question_id"] == "q1"
    assert document["rows"][0]["dt_accuracy"] == 1.0
    assert document["summary"]["question_count"] == 1
    lines = (out / "report.csv").read_text().splitlines()
    assert lines[1].startswith("q1,0.500000,1.000000,")
    assert "mean accuracy 1.0000" in capsys.readouterr().out


def test_evaluate_skips_undersized_questions(tmp_path, capsys):
    graded_rows = GRADED.split("\n", 1)[1]  # drop the duplicate header line
    answers = write(tmp_path / "answers.csv", EVALUATABLE + graded_rows)
    out = tmp_path / "report"
    assert main(["evaluate", "--answers", answers, "--out", str(out)]) == 0
    err = capsys.readouterr().err
    assert "skipping q2" in err
    document = json.loads((out / "report.json").read_text())
    assert [r["question_id"] for r in document["rows"]] == ["q1"]


def test_evaluate_all_undersized_is_exit_1(tmp_path, capsys):
    answers = write(tmp_path / "answers.csv", GRADED)
    assert main(["evaluate", "--answers", answers, "--out", str(tmp_path / "r")]) == 1
    assert "no question had enough samples" in capsys.readouterr().err


def test_evaluate_runs_are_byte_identical(tmp_path):
    answers = write(tmp_path / "answers.csv", EVALUATABLE)
    first, second = tmp_path / "r1", tmp_path / "r2"
    assert main(["evaluate", "--answers", answers, "--out", str(first)]) == 0
    assert main(["evaluate", "--answers", answers, "--out", str(second)]) == 0
    assert (first / "report.csv").read_bytes() == (second / "report.csv").read_bytes()
    assert (first / "report.json").read_bytes() == (second / "report.json").read_bytes()


def test_stats_from_fixture(tmp_path, capsys, reference_tables_path):
    out = tmp_path / "stats.json"
    assert main(
        ["stats", "--fixture", str(reference_tables_path), "--out", str(out)]
    ) == 0
    document = json.loads(out.read_text())
    assert document["summary"]["question_count"] == 54
    stdout = capsys.readouterr().out
    assert "accuracy vs unique_all: r = -0.7" in stdout


def test_stats_bad_fixture_is_exit_1(tmp_path, capsys):
    bad = write(tmp_path / "bad.csv", "a,b\n1,2\n")
    assert main(["stats", "--fixture", bad, "--out", str(tmp_path / "o.json")]) == 1
    assert "bad fixture header" in capsys.readouterr().err


def test_explain_prints_the_trace(tmp_path, capsys, example_tree_path):
    assert main(
        ["explain", "--tree", str(example_tree_path), "--answer", "The papillary muscles!"]
    ) == 0
    stdout = capsys.readouterr().out
    assert 'First node "muscles" returns TRUE' in stdout
    assert "answer is correct (97% significance)" in stdout
    assert 'critical decision point: "papillary"' in stdout


def test_custom_stopword_file(tmp_path, capsys, example_tree_path):
    # With "muscles" declared a stopword the example answer loses its first
    # feature and takes the FALSE branches instead.
    stopwords = write(tmp_path / "stop.txt", "muscles\n")
    assert main(
        [
            "explain", "--tree", str(example_tree_path),
            "--answer", "papillary muscles", "--stopwords", stopwords,
        ]
    ) == 0
    assert "answer is incorrect" in capsys.readouterr().out


def test_missing_input_file_is_exit_1(tmp_path, capsys):
    assert main(
        ["train", "--answers", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]
    ) == 1
    assert "nope.csv" in capsys.readouterr().err


def test_usage_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["train"])  # missing required flags
    assert excinfo.value.code == 2
    with pytest.raises(SystemExit) as excinfo:
        main(["frobnicate"])
    assert excinfo.value.code == 2
