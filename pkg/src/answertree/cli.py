"""Command-line batch workflow: train, grade, evaluate, stats, explain.

Exit codes: 0 success, 1 validation/data failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import tempfile
import time
from datetime import datetime, timezone
from pathlib import Path

from . import corpus, dtree, evaluation, textprep

DEFAULT_CERTAINTY_THRESHOLD = 0.70


def _atomic_write(path: Path, content: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(content)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def _file_format(path: Path) -> str:
    return "json" if path.suffix.lower() == ".json" else "csv"


def _load_prep(stopwords_path: str | None) -> textprep.PreprocessConfig:
    if stopwords_path is None:
        return textprep.DEFAULT_CONFIG
    content = Path(stopwords_path).read_text(encoding="utf-8")
    return textprep.PreprocessConfig(stopwords=textprep.parse_stopword_file(content))


def _load_records(path_str: str) -> list[corpus.AnswerRecord]:
    path = Path(path_str)
    return corpus.parse_answer_file(
        path.read_text(encoding="utf-8"), _file_format(path)
    )


def _trained_at() -> str:
    # SOURCE_DATE_EPOCH makes training reproducible byte for byte.
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    stamp = int(epoch) if epoch else int(time.time())
    return datetime.fromtimestamp(stamp, timezone.utc).isoformat()


def _build_datasets(
    records: list[corpus.AnswerRecord], prep: textprep.PreprocessConfig
) -> dict[str, corpus.QuestionDataset]:
    """Validate every question up front; raise after reporting all conflicts."""
    groups = corpus.group_records(records)
    failed = False
    datasets: dict[str, corpus.QuestionDataset] = {}
    for question_id, group in groups.items():
        report = corpus.validate_dataset(group, prep)
        if not report.ok:
            print(report.render(), file=sys.stderr)
            failed = True
            continue
        try:
            datasets[question_id] = corpus.build_question_dataset(
                group, question_id, prep
            )
        except corpus.EmptyDatasetError as exc:
            print(str(exc), file=sys.stderr)
            failed = True
    if failed:
        raise corpus.CorpusError("answer file failed validation")
    return datasets


def cmd_train(args: argparse.Namespace) -> int:
    prep = _load_prep(args.stopwords)
    datasets = _build_datasets(_load_records(args.answers), prep)
    config = dtree.TrainConfig(min_gain=args.min_gain)
    trained_at = _trained_at()
    out_dir = Path(args.out)
    for question_id, dataset in datasets.items():
        tree = dtree.build_tree(dataset, config, trained_at=trained_at)
        _atomic_write(
            out_dir / f"{question_id}.tree.json", dtree.serialize_tree(tree)
        )
        counts = textprep.unique_word_counts(dataset)
        print(
            f"{question_id}: {len(dataset)} samples "
            f"({dataset.correct_count} correct, {dataset.incorrect_count} incorrect), "
            f"vocabulary {counts.all_words}"
        )
    return 0


def _load_trees(trees_dir: str) -> dict[str, dtree.DecisionTree]:
    trees = {}
    for path in sorted(Path(trees_dir).glob("*.tree.json")):
        tree = dtree.deserialize_tree(path.read_text(encoding="utf-8"))
        trees[tree.question_id] = tree
    return trees


def cmd_grade(args: argparse.Namespace) -> int:
    prep = _load_prep(args.stopwords)
    trees = _load_trees(args.trees)
    path = Path(args.answers)
    pairs = corpus.parse_ungraded_file(
        path.read_text(encoding="utf-8"), _file_format(path)
    )
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(
        ["question_id", "answer", "label", "certainty", "flagged", "critical_word"]
    )
    for question_id, answer in pairs:
        tree = trees.get(question_id)
        if tree is None:
            print(f"no trained tree for question {question_id!r}", file=sys.stderr)
            return 1
        if not answer.strip():
            # A blank exam answer earns zero; blanks never reach the trees.
            writer.writerow([question_id, answer, "incorrect", "1.0000", "false", ""])
            continue
        result = dtree.classify(tree, textprep.preprocess(answer, prep))
        flagged = result.certainty < args.threshold or result.out_of_vocabulary
        writer.writerow(
            [
                question_id,
                answer,
                result.label.value,
                f"{result.certainty:.4f}",
                "true" if flagged else "false",
                result.critical_word or "",
            ]
        )
    _atomic_write(Path(args.out), out.getvalue())
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    prep = _load_prep(args.stopwords)
    datasets = _build_datasets(_load_records(args.answers), prep)
    config = dtree.TrainConfig(min_gain=args.min_gain)
    rows = []
    for question_id, dataset in datasets.items():
        if len(dataset) < args.k:
            print(
                f"skipping {question_id}: {len(dataset)} samples is fewer than "
                f"k={args.k}",
                file=sys.stderr,
            )
            continue
        plan = evaluation.make_stratified_folds(
            [s.label for s in dataset.samples], args.k, args.seed
        )
        accuracy = evaluation.cross_validate(dataset, config, plan)
        rows.append(evaluation.make_row(accuracy, textprep.unique_word_counts(dataset)))
    if not rows:
        print("no question had enough samples to evaluate", file=sys.stderr)
        return 1
    report = evaluation.build_report(rows)
    out_dir = Path(args.out)
    _atomic_write(out_dir / "report.csv", evaluation.report_to_csv(report))
    _atomic_write(out_dir / "report.json", evaluation.report_to_json(report))
    summary = report.summary
    print(
        f"evaluated {summary.question_count} questions: "
        f"mean accuracy {summary.mean_accuracy:.4f}, "
        f"{summary.questions_below_90} below 0.90"
    )
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    content = Path(args.fixture).read_text(encoding="utf-8")
    try:
        rows = evaluation.rows_from_fixture_csv(content)
        report = evaluation.build_report(rows)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    _atomic_write(Path(args.out), evaluation.report_to_json(report))
    for name, result in report.correlations.items():
        if result is not None:
            print(f"accuracy vs {name}: r = {result.r:+.4f}, p = {result.p:.3g}")
    return 0


def cmd_explain(args: argparse.Namespace) -> int:
    prep = _load_prep(args.stopwords)
    tree = dtree.deserialize_tree(Path(args.tree).read_text(encoding="utf-8"))
    result = dtree.classify(tree, textprep.preprocess(args.answer, prep))
    print(dtree.explain(result).render())
    return 0


def _add_stopwords_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--stopwords", metavar="FILE", help="stopword override file, one word per line"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="answertree",
        description="Train per-question decision trees on graded short answers, "
        "grade new answers with certainties and explanations, and evaluate "
        "accuracy with cross-validation and correlation statistics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train one tree per question")
    train.add_argument("--answers", required=True, help="graded answers (CSV or JSON)")
    train.add_argument("--out", required=True, help="output directory for tree files")
    train.add_argument("--min-gain", type=float, default=0.0, dest="min_gain")
    _add_stopwords_flag(train)
    train.set_defaults(func=cmd_train)

    grade = sub.add_parser("grade", help="grade ungraded answers with trained trees")
    grade.add_argument("--trees", required=True, help="directory of *.tree.json files")
    grade.add_argument("--answers", required=True, help="ungraded answers (CSV or JSON)")
    grade.add_argument("--out", required=True, help="graded output CSV")
    grade.add_argument(
        "--threshold",
        type=float,
        default=DEFAULT_CERTAINTY_THRESHOLD,
        help="flag answers below this certainty for human audit",
    )
    _add_stopwords_flag(grade)
    grade.set_defaults(func=cmd_grade)

    evaluate = sub.add_parser("evaluate", help="k-fold cross-validation report")
    evaluate.add_argument("--answers", required=True)
    evaluate.add_argument("--k", type=int, default=10)
    evaluate.add_argument("--seed", type=int, default=0)
    evaluate.add_argument("--out", required=True, help="output directory for reports")
    evaluate.add_argument("--min-gain", type=float, default=0.0, dest="min_gain")
    _add_stopwords_flag(evaluate)
    evaluate.set_defaults(func=cmd_evaluate)

    stats = sub.add_parser(
        "stats", help="correlation statistics over precomputed per-question results"
    )
    stats.add_argument("--fixture", required=True, help="per-question results CSV")
    stats.add_argument("--out", required=True, help="output JSON path")
    stats.set_defaults(func=cmd_stats)

    explain = sub.add_parser("explain", help="show a tree's reasoning for one answer")
    explain.add_argument("--tree", required=True, help="tree document (JSON)")
    explain.add_argument("--answer", required=True, help="answer text to classify")
    _add_stopwords_flag(explain)
    explain.set_defaults(func=cmd_explain)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if not 0.0 <= getattr(args, "threshold", 0.0) <= 1.0:
        print("--threshold must be in [0, 1]", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (
        corpus.CorpusError,
        dtree.TreeFormatError,
        evaluation.FoldError,
        OSError,
    ) as exc:
        print(str(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
