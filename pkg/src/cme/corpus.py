"""Data model and ingestion for users, tweets, interactions, and labels.

Canonical on-disk layout (see SCHEMA.md at the repo root):

- ``users.jsonl``        one JSON object per line:
                         user_id, name, screen_name, description,
                         profile_image_ref (optional)
- ``tweets.jsonl``       one JSON object per line:
                         tweet_id, author_id, raw_text, retweet_of (optional)
- ``interactions.tsv``   source TAB target TAB kind TAB count
                         (kind is "mention" or "retweet"; replies count
                         as mentions upstream of this file)
- ``labels.tsv``         user_id TAB {P|I|R}

Labels live in their own file so unlabeled corpora can still be ingested
for embedding training. Interaction targets do not have to appear in
users.jsonl; they are retained as bare ids.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Optional


class CorpusError(Exception):
    """Base class for ingestion failures."""


class ParseError(CorpusError):
    """A line could not be parsed; carries the offending line number."""

    def __init__(self, path, line_no: int, message: str):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{path}:{line_no}: {message}")


class ValidationError(CorpusError):
    """Parsed records violate a dataset invariant."""


class ClassLabel(Enum):
    """The three account types."""

    PERSONAL = "P"
    INFORMED_AGENCY = "I"
    RETAIL = "R"

    @classmethod
    def parse(cls, text: str) -> "ClassLabel":
        t = text.strip()
        for label in cls:
            if t == label.value or t.upper() == label.name:
                return label
        raise ValueError(f"unknown class label {text!r} (expected one of P, I, R)")


class InteractionKind(Enum):
    MENTION = "mention"
    RETWEET = "retweet"


@dataclass(frozen=True)
class UserRecord:
    user_id: str
    name: str = ""
    screen_name: str = ""
    description: str = ""
    profile_image_ref: Optional[str] = None
    label: Optional[ClassLabel] = None


@dataclass(frozen=True)
class TweetRecord:
    tweet_id: str
    author_id: str
    raw_text: str
    retweet_of: Optional[str] = None


@dataclass(frozen=True)
class InteractionRecord:
    source: str
    target: str
    kind: InteractionKind
    count: int


@dataclass
class LabeledDataset:
    """Immutable-after-assembly container shared by every downstream stage."""

    users: list[UserRecord]
    tweets_by_author: dict[str, list[TweetRecord]]
    interactions: list[InteractionRecord]
    class_counts: dict[ClassLabel, int] = field(default_factory=dict)

    @property
    def tweets(self) -> list[TweetRecord]:
        return [t for group in self.tweets_by_author.values() for t in group]

    def labels(self) -> dict[str, ClassLabel]:
        return {u.user_id: u.label for u in self.users if u.label is not None}

    def user(self, user_id: str) -> UserRecord:
        for u in self.users:
            if u.user_id == user_id:
                return u
        raise KeyError(user_id)

    def recount_labels(self) -> dict[ClassLabel, int]:
        """Independent recount, used to assert the class_counts invariant."""
        counts = Counter(u.label for u in self.users if u.label is not None)
        return {label: counts.get(label, 0) for label in ClassLabel}


def _iter_lines(path) -> Iterable[tuple[int, str]]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"cannot read {path}: {exc}") from exc
    for line_no, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            yield line_no, line


def load_users(path) -> list[UserRecord]:
    """Load users.jsonl. Returns records in file order."""
    users = []
    seen = set()
    for line_no, line in _iter_lines(path):
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(path, line_no, f"invalid JSON: {exc.msg}") from exc
        if not isinstance(raw, dict):
            raise ParseError(path, line_no, "expected a JSON object")
        user_id = raw.get("user_id")
        if not user_id or not isinstance(user_id, str):
            raise ParseError(path, line_no, "missing or empty user_id")
        if user_id in seen:
            raise ValidationError(f"{path}:{line_no}: duplicate user_id {user_id!r}")
        seen.add(user_id)
        users.append(
            UserRecord(
                user_id=user_id,
                name=raw.get("name", "") or "",
                screen_name=raw.get("screen_name", "") or "",
                description=raw.get("description", "") or "",
                profile_image_ref=raw.get("profile_image_ref"),
            )
        )
    return users


def load_tweets(path) -> list[TweetRecord]:
    """Load tweets.jsonl. retweet_of is set when the raw record marks a retweet."""
    tweets = []
    seen = set()
    for line_no, line in _iter_lines(path):
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(path, line_no, f"invalid JSON: {exc.msg}") from exc
        if not isinstance(raw, dict):
            raise ParseError(path, line_no, "expected a JSON object")
        tweet_id = raw.get("tweet_id")
        if not tweet_id or not isinstance(tweet_id, str):
            raise ParseError(path, line_no, "missing or empty tweet_id")
        author_id = raw.get("author_id")
        if not author_id or not isinstance(author_id, str):
            raise ParseError(path, line_no, "missing or empty author_id")
        if tweet_id in seen:
            raise ValidationError(f"{path}:{line_no}: duplicate tweet_id {tweet_id!r}")
        seen.add(tweet_id)
        tweets.append(
            TweetRecord(
                tweet_id=tweet_id,
                author_id=author_id,
                raw_text=raw.get("raw_text", "") or "",
                retweet_of=raw.get("retweet_of"),
            )
        )
    return tweets


def load_interactions(path) -> list[InteractionRecord]:
    """Load interactions.tsv (source TAB target TAB kind TAB count)."""
    records = []
    for line_no, line in _iter_lines(path):
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 4:
            raise ParseError(path, line_no, f"expected 4 tab-separated fields, got {len(parts)}")
        source, target, kind_text, count_text = parts
        if not source or not target:
            raise ParseError(path, line_no, "empty source or target user id")
        try:
            kind = InteractionKind(kind_text.strip().lower())
        except ValueError as exc:
            raise ParseError(path, line_no, f"unknown interaction kind {kind_text!r}") from exc
        try:
            count = int(count_text)
        except ValueError as exc:
            raise ParseError(path, line_no, f"count is not an integer: {count_text!r}") from exc
        if count < 1:
            raise ParseError(path, line_no, f"count must be >= 1, got {count}")
        records.append(InteractionRecord(source=source, target=target, kind=kind, count=count))
    return records


def load_labels(path) -> dict[str, ClassLabel]:
    """Load labels.tsv (user_id TAB {P|I|R})."""
    labels: dict[str, ClassLabel] = {}
    for line_no, line in _iter_lines(path):
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 2:
            raise ParseError(path, line_no, f"expected 2 tab-separated fields, got {len(parts)}")
        user_id, label_text = parts
        try:
            label = ClassLabel.parse(label_text)
        except ValueError as exc:
            raise ParseError(path, line_no, str(exc)) from exc
        if user_id in labels:
            raise ValidationError(f"{path}:{line_no}: duplicate label for user {user_id!r}")
        labels[user_id] = label
    return labels


def assemble_dataset(
    users: list[UserRecord],
    tweets: list[TweetRecord],
    interactions: list[InteractionRecord],
    labels: Mapping[str, ClassLabel],
) -> LabeledDataset:
    """Join the four record streams into one dataset.

    Labels must refer to loaded users. Tweets are grouped by author in file
    order; authors absent from the user list still get a tweet group (they
    may be interaction-only accounts).
    """
    known = {u.user_id for u in users}
    unknown = sorted(set(labels) - known)
    if unknown:
        raise ValidationError(f"labels refer to unknown users: {', '.join(unknown[:5])}")

    labeled_users = [
        UserRecord(
            user_id=u.user_id,
            name=u.name,
            screen_name=u.screen_name,
            description=u.description,
            profile_image_ref=u.profile_image_ref,
            label=labels.get(u.user_id),
        )
        for u in users
    ]

    tweets_by_author: dict[str, list[TweetRecord]] = {}
    for tweet in tweets:
        tweets_by_author.setdefault(tweet.author_id, []).append(tweet)

    counts = Counter(label for label in labels.values())
    class_counts = {label: counts.get(label, 0) for label in ClassLabel}
    return LabeledDataset(
        users=labeled_users,
        tweets_by_author=tweets_by_author,
        interactions=list(interactions),
        class_counts=class_counts,
    )


def load_dataset(directory) -> LabeledDataset:
    """Load the four canonical files from a directory and assemble them."""
    directory = Path(directory)
    users = load_users(directory / "users.jsonl")
    tweets = load_tweets(directory / "tweets.jsonl")
    interactions_path = directory / "interactions.tsv"
    interactions = load_interactions(interactions_path) if interactions_path.exists() else []
    labels_path = directory / "labels.tsv"
    labels = load_labels(labels_path) if labels_path.exists() else {}
    return assemble_dataset(users, tweets, interactions, labels)


def save_dataset(dataset: LabeledDataset, directory) -> None:
    """Write the dataset back out in the canonical four-file layout."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    with open(directory / "users.jsonl", "w", encoding="utf-8") as fh:
        for u in dataset.users:
            record = {
                "user_id": u.user_id,
                "name": u.name,
                "screen_name": u.screen_name,
                "description": u.description,
            }
            if u.profile_image_ref is not None:
                record["profile_image_ref"] = u.profile_image_ref
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")

    with open(directory / "tweets.jsonl", "w", encoding="utf-8") as fh:
        for u in dataset.users:
            for t in dataset.tweets_by_author.get(u.user_id, []):
                record = {"tweet_id": t.tweet_id, "author_id": t.author_id, "raw_text": t.raw_text}
                if t.retweet_of is not None:
                    record["retweet_of"] = t.retweet_of
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
        # tweet groups whose author is not a listed user come last, in group order
        listed = {u.user_id for u in dataset.users}
        for author_id, group in dataset.tweets_by_author.items():
            if author_id not in listed:
                for t in group:
                    record = {"tweet_id": t.tweet_id, "author_id": t.author_id, "raw_text": t.raw_text}
                    if t.retweet_of is not None:
                        record["retweet_of"] = t.retweet_of
                    fh.write(json.dumps(record, ensure_ascii=False) + "\n")

    with open(directory / "interactions.tsv", "w", encoding="utf-8") as fh:
        for rec in dataset.interactions:
            fh.write(f"{rec.source}\t{rec.target}\t{rec.kind.value}\t{rec.count}\n")

    with open(directory / "labels.tsv", "w", encoding="utf-8") as fh:
        for u in dataset.users:
            if u.label is not None:
                fh.write(f"{u.user_id}\t{u.label.value}\n")
