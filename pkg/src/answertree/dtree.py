"""Per-question decision trees: training, classification, explanation, persistence.

Rules are boolean word-presence tests. A node splits its samples into the
subset containing the word and the rest; the word with the greatest
information gain wins, ties going to the lexicographically smallest word so
training is deterministic and independent of corpus order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .corpus import Label, QuestionDataset, Sample

# Gains within this of the threshold count as "no split"; keeps float noise
# from growing the tree past purity.
GAIN_TOLERANCE = 1e-12


class TreeFormatError(Exception):
    """Malformed serialized tree document."""


@dataclass(frozen=True)
class TrainConfig:
    min_gain: float = 0.0
    leaf_tie_label: Label = Label.INCORRECT


@dataclass(frozen=True)
class TreeNode:
    """One tree node. Internal nodes carry a word test; leaves carry none.

    ``count``/``size`` keep the label probability as an exact rational so
    serialization round-trips bit-stably.
    """

    label: Label
    count: int
    size: int
    word: str | None = None
    true_child: "TreeNode | None" = None
    false_child: "TreeNode | None" = None

    def __post_init__(self) -> None:
        if self.size < 1 or not 0 <= self.count <= self.size:
            raise ValueError(f"bad node counts {self.count}/{self.size}")
        has_children = self.true_child is not None and self.false_child is not None
        no_children = self.true_child is None and self.false_child is None
        if self.word is None and not no_children:
            raise ValueError("leaf node must not have children")
        if self.word is not None and not has_children:
            raise ValueError("internal node must have both children")

    @property
    def probability(self) -> float:
        return self.count / self.size

    @property
    def is_leaf(self) -> bool:
        return self.word is None


@dataclass(frozen=True)
class DecisionTree:
    question_id: str
    root: TreeNode
    config: TrainConfig = TrainConfig()
    trained_at: str = ""

    def vocabulary(self) -> frozenset[str]:
        """All words tested anywhere in the tree."""
        words: set[str] = set()
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.word is not None:
                words.add(node.word)
                stack.append(node.true_child)
                stack.append(node.false_child)
        return frozenset(words)


@dataclass(frozen=True)
class SplitEvaluation:
    word: str
    true_size: int
    false_size: int
    true_entropy: float
    false_entropy: float
    split_entropy: float
    gain: float


@dataclass(frozen=True)
class TraceStep:
    word: str
    branch: bool
    label: Label
    probability: float


@dataclass(frozen=True)
class Classification:
    """Result of grading one answer with a trained tree.

    ``trace`` lists the word tests that mattered: every test up to and
    including the last one the answer triggered. Tests after that point all
    returned false (none of the answer's words appeared again), so they are
    omitted, matching how a grader would narrate the decision.
    """

    label: Label
    certainty: float
    trace: tuple[TraceStep, ...]
    critical_word: str | None
    out_of_vocabulary: bool


@dataclass(frozen=True)
class Explanation:
    steps: tuple[TraceStep, ...]
    label: Label
    certainty: float
    critical_word: str | None

    def verdict(self) -> str:
        percent = round(self.certainty * 100)
        return f"answer is {self.label.value} ({percent}% significance)"

    def render(self) -> str:
        lines = []
        for position, step in enumerate(self.steps, start=1):
            outcome = "TRUE" if step.branch else "FALSE"
            lines.append(f'{_ordinal(position)} node "{step.word}" returns {outcome}')
        lines.append(self.verdict())
        if self.critical_word is not None:
            lines.append(f'critical decision point: "{self.critical_word}"')
        else:
            lines.append("critical decision point: terminal node")
        return "\n".join(lines)


_ORDINALS = [
    "First", "Second", "Third", "Fourth", "Fifth",
    "Sixth", "Seventh", "Eighth", "Ninth", "Tenth",
]


def _ordinal(position: int) -> str:
    if position <= len(_ORDINALS):
        return _ORDINALS[position - 1]
    return f"{position}th"


def entropy(correct: int, incorrect: int) -> float:
    """Impurity in bits of a set with the given class counts; 0*log2(0) = 0."""
    total = correct + incorrect
    if correct < 0 or incorrect < 0 or total < 1:
        raise ValueError(f"invalid class counts ({correct}, {incorrect})")
    result = 0.0
    for part in (correct, incorrect):
        if part:
            p = part / total
            result -= p * math.log2(p)
    return result


def _class_counts(samples: list[Sample] | tuple[Sample, ...]) -> tuple[int, int]:
    correct = sum(1 for s in samples if s.label is Label.CORRECT)
    return correct, len(samples) - correct


def evaluate_split(
    samples: list[Sample] | tuple[Sample, ...], word: str, current_entropy: float
) -> SplitEvaluation:
    """Score splitting ``samples`` on presence of ``word``."""
    if not samples:
        raise ValueError("cannot evaluate a split of zero samples")
    true_side = [s for s in samples if word in s.features]
    false_side = [s for s in samples if word not in s.features]
    true_entropy = entropy(*_class_counts(true_side)) if true_side else 0.0
    false_entropy = entropy(*_class_counts(false_side)) if false_side else 0.0
    total = len(samples)
    if not true_side or not false_side:
        # A vacuous split leaves the set intact; keep the gain exactly zero
        # rather than letting the weighted average round off by an ulp.
        split_entropy = current_entropy
    else:
        split_entropy = (
            len(true_side) * true_entropy + len(false_side) * false_entropy
        ) / total
    return SplitEvaluation(
        word=word,
        true_size=len(true_side),
        false_size=len(false_side),
        true_entropy=true_entropy,
        false_entropy=false_entropy,
        split_entropy=split_entropy,
        gain=current_entropy - split_entropy,
    )


def select_best_rule(
    samples: list[Sample] | tuple[Sample, ...],
    candidate_words: frozenset[str] | set[str],
    current_entropy: float,
    min_gain: float = 0.0,
) -> tuple[str, SplitEvaluation] | None:
    """Pick the candidate word with the greatest information gain.

    Returns None when no candidate gains more than ``min_gain``. Iterating in
    sorted order with a strict comparison makes ties resolve to the
    lexicographically smallest word.
    """
    best: SplitEvaluation | None = None
    for word in sorted(candidate_words):
        evaluation = evaluate_split(samples, word, current_entropy)
        if best is None or evaluation.gain > best.gain:
            best = evaluation
    if best is None or best.gain <= min_gain + GAIN_TOLERANCE:
        return None
    return best.word, best


def _majority(correct: int, incorrect: int, config: TrainConfig) -> tuple[Label, int]:
    if correct > incorrect:
        return Label.CORRECT, correct
    if incorrect > correct:
        return Label.INCORRECT, incorrect
    return config.leaf_tie_label, correct


def _grow(
    samples: tuple[Sample, ...], path_words: frozenset[str], config: TrainConfig
) -> TreeNode:
    correct, incorrect = _class_counts(samples)
    label, count = _majority(correct, incorrect, config)
    size = len(samples)
    if correct == 0 or incorrect == 0:
        return TreeNode(label=label, count=count, size=size)
    candidates = frozenset().union(*(s.features for s in samples)) - path_words
    current = entropy(correct, incorrect)
    choice = select_best_rule(samples, candidates, current, config.min_gain)
    if choice is None:
        return TreeNode(label=label, count=count, size=size)
    word, _ = choice
    true_side = tuple(s for s in samples if word in s.features)
    false_side = tuple(s for s in samples if word not in s.features)
    deeper = path_words | {word}
    return TreeNode(
        label=label,
        count=count,
        size=size,
        word=word,
        true_child=_grow(true_side, deeper, config),
        false_child=_grow(false_side, deeper, config),
    )


def build_tree(
    dataset: QuestionDataset, config: TrainConfig = TrainConfig(), trained_at: str = ""
) -> DecisionTree:
    """Train a tree on a question dataset, recursing until purity or no gain."""
    if not dataset.samples:
        raise ValueError(f"question {dataset.question_id!r}: empty dataset")
    root = _grow(dataset.samples, frozenset(), config)
    return DecisionTree(
        question_id=dataset.question_id,
        root=root,
        config=config,
        trained_at=trained_at,
    )


def classify(tree: DecisionTree, features: frozenset[str] | set[str]) -> Classification:
    """Grade one preprocessed answer by walking the tree to a leaf."""
    visited: list[TraceStep] = []
    node = tree.root
    while not node.is_leaf:
        branch = node.word in features
        visited.append(
            TraceStep(
                word=node.word,
                branch=branch,
                label=node.label,
                probability=node.probability,
            )
        )
        node = node.true_child if branch else node.false_child
    # Trailing false tests matched none of the answer's words; drop them from
    # the trace so it reads as the sequence of decisions that mattered.
    end = len(visited)
    while end > 0 and not visited[end - 1].branch:
        end -= 1
    trace = tuple(visited[:end])
    return Classification(
        label=node.label,
        certainty=node.probability,
        trace=trace,
        critical_word=_critical_word(trace),
        out_of_vocabulary=frozenset(features).isdisjoint(tree.vocabulary()),
    )


def _critical_word(trace: tuple[TraceStep, ...]) -> str | None:
    best: TraceStep | None = None
    for step in trace:
        if best is None or step.probability > best.probability:
            best = step
    return best.word if best is not None else None


def explain(classification: Classification) -> Explanation:
    """Render a classification as an importance-annotated step list.

    Importance of a step is the probability at its node; the critical
    decision point is the most important step (earliest on ties), or the
    terminal node itself when no word test fired.
    """
    return Explanation(
        steps=classification.trace,
        label=classification.label,
        certainty=classification.certainty,
        critical_word=classification.critical_word,
    )


def _node_to_obj(node: TreeNode) -> dict:
    obj: dict = {}
    if node.word is not None:
        obj["word"] = node.word
    obj["label"] = node.label.value
    obj["count"] = node.count
    obj["size"] = node.size
    if node.word is not None:
        obj["true"] = _node_to_obj(node.true_child)
        obj["false"] = _node_to_obj(node.false_child)
    return obj


def serialize_tree(tree: DecisionTree) -> str:
    document = {
        "question_id": tree.question_id,
        "trained_at": tree.trained_at,
        "config": {
            "min_gain": tree.config.min_gain,
            "leaf_tie_label": tree.config.leaf_tie_label.value,
        },
        "root": _node_to_obj(tree.root),
    }
    return json.dumps(document, indent=2) + "\n"


def _node_from_obj(obj: object, where: str) -> TreeNode:
    if not isinstance(obj, dict):
        raise TreeFormatError(f"{where}: node must be an object")
    try:
        label = Label(obj["label"])
    except KeyError:
        raise TreeFormatError(f"{where}: missing label") from None
    except ValueError:
        raise TreeFormatError(f"{where}: unknown label {obj['label']!r}") from None
    count = obj.get("count")
    size = obj.get("size")
    if not isinstance(count, int) or not isinstance(size, int):
        raise TreeFormatError(f"{where}: count and size must be integers")
    word = obj.get("word")
    has_true = "true" in obj
    has_false = "false" in obj
    if word is None:
        if has_true or has_false:
            raise TreeFormatError(f"{where}: leaf node must not have children")
        children: dict = {}
    else:
        if not isinstance(word, str):
            raise TreeFormatError(f"{where}: word must be a string")
        if not (has_true and has_false):
            raise TreeFormatError(f"{where}: internal node needs both children")
        children = {
            "true_child": _node_from_obj(obj["true"], f"{where}.true"),
            "false_child": _node_from_obj(obj["false"], f"{where}.false"),
        }
    try:
        return TreeNode(label=label, count=count, size=size, word=word, **children)
    except ValueError as exc:
        raise TreeFormatError(f"{where}: {exc}") from exc


def deserialize_tree(text: str) -> DecisionTree:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TreeFormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(document, dict) or "root" not in document:
        raise TreeFormatError("tree document must be an object with a root")
    config_obj = document.get("config", {})
    if not isinstance(config_obj, dict):
        raise TreeFormatError("config must be an object")
    try:
        tie_label = Label(config_obj.get("leaf_tie_label", "incorrect"))
    except ValueError:
        raise TreeFormatError(
            f"unknown leaf_tie_label {config_obj.get('leaf_tie_label')!r}"
        ) from None
    config = TrainConfig(
        min_gain=float(config_obj.get("min_gain", 0.0)),
        leaf_tie_label=tie_label,
    )
    return DecisionTree(
        question_id=str(document.get("question_id", "")),
        root=_node_from_obj(document["root"], "root"),
        config=config,
        trained_at=str(document.get("trained_at", "")),
    )
