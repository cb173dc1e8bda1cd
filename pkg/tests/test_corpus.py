import json

import pytest

from cme.corpus import (
    ClassLabel,
    InteractionKind,
    InteractionRecord,
    ParseError,
    TweetRecord,
    UserRecord,
    ValidationError,
    assemble_dataset,
    load_dataset,
    load_interactions,
    load_labels,
    load_tweets,
    load_users,
    save_dataset,
)


def _write(path, lines):
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    return path


class TestLoadUsers:
    def test_empty_file_gives_empty_list(self, tmp_path):
        path = _write(tmp_path / "users.jsonl", [])
        assert load_users(path) == []

    def test_records_returned_in_file_order(self, tmp_path):
        lines = [
            json.dumps({"user_id": f"u{i}", "name": f"User {i}", "screen_name": f"u{i}"})
            for i in range(3)
        ]
        users = load_users(_write(tmp_path / "users.jsonl", lines))
        assert [u.user_id for u in users] == ["u0", "u1", "u2"]

    def test_missing_user_id_cites_line_number(self, tmp_path):
        lines = [
            json.dumps({"user_id": "u0"}),
            json.dumps({"name": "nobody"}),
            json.dumps({"user_id": "u2"}),
        ]
        with pytest.raises(ParseError) as err:
            load_users(_write(tmp_path / "users.jsonl", lines))
        assert err.value.line_no == 2

    def test_bad_json_cites_line_number(self, tmp_path):
        with pytest.raises(ParseError) as err:
            load_users(_write(tmp_path / "users.jsonl", ['{"user_id": "a"}', "{broken"]))
        assert err.value.line_no == 2

    def test_duplicate_user_id_rejected(self, tmp_path):
        lines = [json.dumps({"user_id": "u0"}), json.dumps({"user_id": "u0"})]
        with pytest.raises(ValidationError):
            load_users(_write(tmp_path / "users.jsonl", lines))

    def test_unreadable_file_raises(self, tmp_path):
        with pytest.raises(Exception):
            load_users(tmp_path / "missing.jsonl")


class TestLoadTweets:
    def test_empty_file(self, tmp_path):
        assert load_tweets(_write(tmp_path / "tweets.jsonl", [])) == []

    def test_retweet_marker_populates_retweet_of(self, tmp_path):
        lines = [
            json.dumps({"tweet_id": "t1", "author_id": "u1", "raw_text": "hi"}),
            json.dumps(
                {"tweet_id": "t2", "author_id": "u1", "raw_text": "RT", "retweet_of": "u9"}
            ),
        ]
        tweets = load_tweets(_write(tmp_path / "tweets.jsonl", lines))
        assert tweets[0].retweet_of is None
        assert tweets[1].retweet_of == "u9"

    def test_duplicate_tweet_id_rejected(self, tmp_path):
        lines = [
            json.dumps({"tweet_id": "t1", "author_id": "u1", "raw_text": "a"}),
            json.dumps({"tweet_id": "t1", "author_id": "u2", "raw_text": "b"}),
        ]
        with pytest.raises(ValidationError):
            load_tweets(_write(tmp_path / "tweets.jsonl", lines))


class TestLoadInteractionsAndLabels:
    def test_interactions_roundtrip_fields(self, tmp_path):
        path = _write(tmp_path / "x.tsv", ["u1\tu2\tmention\t3", "u2\tu1\tretweet\t1"])
        records = load_interactions(path)
        assert records[0] == InteractionRecord("u1", "u2", InteractionKind.MENTION, 3)
        assert records[1].kind is InteractionKind.RETWEET

    def test_zero_count_rejected(self, tmp_path):
        with pytest.raises(ParseError):
            load_interactions(_write(tmp_path / "x.tsv", ["u1\tu2\tmention\t0"]))

    def test_unknown_kind_rejected(self, tmp_path):
        with pytest.raises(ParseError):
            load_interactions(_write(tmp_path / "x.tsv", ["u1\tu2\tfollow\t1"]))

    def test_labels_parse_codes_and_names(self, tmp_path):
        path = _write(tmp_path / "labels.tsv", ["u1\tP", "u2\tI", "u3\tR"])
        labels = load_labels(path)
        assert labels == {
            "u1": ClassLabel.PERSONAL,
            "u2": ClassLabel.INFORMED_AGENCY,
            "u3": ClassLabel.RETAIL,
        }

    def test_unknown_label_rejected(self, tmp_path):
        with pytest.raises(ParseError):
            load_labels(_write(tmp_path / "labels.tsv", ["u1\tX"]))


def _three_users():
    return [UserRecord(user_id=f"u{i}", name=f"U{i}") for i in range(3)]


class TestAssemble:
    def test_one_user_per_class_counts(self):
        labels = {
            "u0": ClassLabel.PERSONAL,
            "u1": ClassLabel.INFORMED_AGENCY,
            "u2": ClassLabel.RETAIL,
        }
        ds = assemble_dataset(_three_users(), [], [], labels)
        assert ds.class_counts == {c: 1 for c in ClassLabel}
        assert ds.class_counts == ds.recount_labels()

    def test_no_labels_is_valid(self):
        ds = assemble_dataset(_three_users(), [], [], {})
        assert ds.class_counts == {c: 0 for c in ClassLabel}

    def test_label_for_absent_user_rejected(self):
        with pytest.raises(ValidationError, match="x9"):
            assemble_dataset(_three_users(), [], [], {"x9": ClassLabel.PERSONAL})

    def test_grouping_preserves_tweet_multiplicity(self):
        tweets = [
            TweetRecord(f"t{i}", f"u{i % 2}", f"text {i}") for i in range(7)
        ]
        ds = assemble_dataset(_three_users(), tweets, [], {})
        assert sum(len(g) for g in ds.tweets_by_author.values()) == 7
        assert len(ds.tweets_by_author["u0"]) == 4
        assert len(ds.tweets_by_author["u1"]) == 3


class TestRoundTrip:
    def test_save_then_load_yields_equal_dataset(self, tmp_path):
        users = [
            UserRecord("u0", name="Ann Smith", screen_name="ann", description="hi 🌿"),
            UserRecord("u1", name="Shop", description="deals", profile_image_ref="img://u1"),
            UserRecord("u2"),
        ]
        tweets = [
            TweetRecord("t0", "u0", "hello world"),
            TweetRecord("t1", "u0", "RT @shop: sale", retweet_of="u1"),
            TweetRecord("t2", "u1", "buy now"),
        ]
        interactions = [
            InteractionRecord("u0", "u1", InteractionKind.RETWEET, 2),
            InteractionRecord("u1", "hub_x", InteractionKind.MENTION, 1),
        ]
        labels = {"u0": ClassLabel.PERSONAL, "u1": ClassLabel.RETAIL}
        ds = assemble_dataset(users, tweets, interactions, labels)
        save_dataset(ds, tmp_path)
        reloaded = load_dataset(tmp_path)
        assert reloaded == ds

    def test_interaction_only_targets_survive(self, tmp_path):
        # targets absent from users.jsonl are retained as bare ids
        ds = assemble_dataset(
            _three_users(),
            [],
            [InteractionRecord("u0", "someone_else", InteractionKind.MENTION, 4)],
            {},
        )
        save_dataset(ds, tmp_path)
        reloaded = load_dataset(tmp_path)
        assert reloaded.interactions[0].target == "someone_else"
