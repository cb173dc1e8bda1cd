"""End-to-end glue: preprocessing, view construction, and experiments.

This module turns a LabeledDataset into per-view embedding sets and runs
the two experiment suites: suite A evaluates text/emoji compositions over
every labeled user, suite B adds the network view on the subset of users
that actually interact, comparing against the best suite-A setting.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import classify, compose, netembed
from .corpus import ClassLabel, LabeledDataset
from .emoji import EmojiSenseEntry, emoji_embedding
from .imagetags import ImageTagClient, profile_image_embedding
from .preprocess import clean_tokens, extract_entities, lemmatize
from .wemodel import TrainingConfig, WEModel, train_skipgram, view_embedding


@dataclass
class PreparedUser:
    """Cleaned per-user text split by source."""

    user_id: str
    tweet_tokens: list[str] = field(default_factory=list)
    tweet_sentences: list[list[str]] = field(default_factory=list)
    tweet_emoji: list[str] = field(default_factory=list)
    desc_tokens: list[str] = field(default_factory=list)
    desc_emoji: list[str] = field(default_factory=list)


def prepare_users(
    dataset: LabeledDataset,
    stopwords: set[str],
    lemma_table: dict[str, str],
    keep_hashtag_body: bool = True,
) -> dict[str, PreparedUser]:
    """Extract entities and clean tokens for every user's text."""
    prepared: dict[str, PreparedUser] = {}
    for user in dataset.users:
        rec = PreparedUser(user_id=user.user_id)
        entities, residual = extract_entities(user.description)
        rec.desc_tokens = lemmatize(
            clean_tokens(residual, stopwords, keep_hashtag_body), lemma_table
        )
        rec.desc_emoji = entities.emoji
        for tweet in dataset.tweets_by_author.get(user.user_id, []):
            t_entities, t_residual = extract_entities(tweet.raw_text)
            tokens = lemmatize(
                clean_tokens(t_residual, stopwords, keep_hashtag_body), lemma_table
            )
            if tokens:
                rec.tweet_sentences.append(tokens)
            rec.tweet_tokens.extend(tokens)
            rec.tweet_emoji.extend(t_entities.emoji)
        prepared[user.user_id] = rec
    return prepared


def train_view_models(
    prepared: dict[str, PreparedUser],
    config: Optional[TrainingConfig] = None,
) -> tuple[WEModel, WEModel]:
    """Train the two embedding models: content (tweets) and people (descriptions)."""
    config = config or TrainingConfig()
    tweet_sentences = [s for rec in prepared.values() for s in rec.tweet_sentences]
    desc_sentences = [rec.desc_tokens for rec in prepared.values() if rec.desc_tokens]
    content = train_skipgram(tweet_sentences, config)
    people = train_skipgram(desc_sentences, config)
    return content, people


def build_text_views(
    prepared: dict[str, PreparedUser],
    content_model: WEModel,
    people_model: WEModel,
    emoji_lexicon: dict[str, EmojiSenseEntry],
    emoji_background: Optional[WEModel] = None,
) -> dict[str, compose.ViewEmbeddingSet]:
    """Tweet, Description, TweetEmoji, and DescriptionEmoji views.

    The emoji background model defaults to the content model when no
    external pre-trained model is supplied.
    """
    background = emoji_background or content_model
    tweet, desc, tweet_emoji, desc_emoji = {}, {}, {}, {}
    for uid, rec in prepared.items():
        tweet[uid] = view_embedding(rec.tweet_tokens, content_model)
        desc[uid] = view_embedding(rec.desc_tokens, people_model)
        tweet_emoji[uid] = emoji_embedding(rec.tweet_emoji, emoji_lexicon, background)
        desc_emoji[uid] = emoji_embedding(rec.desc_emoji, emoji_lexicon, background)
    return {
        "Tweet": compose.ViewEmbeddingSet("Tweet", tweet),
        "Description": compose.ViewEmbeddingSet("Description", desc),
        "TweetEmoji": compose.ViewEmbeddingSet("TweetEmoji", tweet_emoji),
        "DescriptionEmoji": compose.ViewEmbeddingSet("DescriptionEmoji", desc_emoji),
    }


def build_image_view(
    dataset: LabeledDataset,
    people_model: WEModel,
    client: ImageTagClient,
) -> compose.ViewEmbeddingSet:
    """ProfileImage view: service tags embedded through the people model."""
    refs = {u.user_id: u.profile_image_ref for u in dataset.users if u.profile_image_ref}
    results = client.tag_images(sorted(set(refs.values())))
    vectors = {}
    for user in dataset.users:
        ref = user.profile_image_ref
        if ref is None:
            vectors[user.user_id] = None
            continue
        vectors[user.user_id] = profile_image_embedding(results[ref].tags, people_model)
    return compose.ViewEmbeddingSet("ProfileImage", vectors)


def build_network_view(
    dataset: LabeledDataset,
    dimension: int,
    mode: str = "paper",
    normalize_before_cosine: bool = True,
    k: Optional[int] = None,
) -> tuple[compose.ViewEmbeddingSet, netembed.NetworkEmbedding]:
    """Network view over users with outgoing interactions.

    Rows are labeled users that act as interaction sources; columns are
    every distinct target. k defaults to min(dimension, rows); in "paper"
    mode near-zero singular values are dropped before the division so the
    fold-back stays finite. Rows shorter than the composition dimension
    are zero-padded so the view composes with the text views.
    """
    sources = sorted({rec.source for rec in dataset.interactions})
    user_ids = {u.user_id for u in dataset.users}
    rows = [uid for uid in sources if uid in user_ids]
    cols = sorted({rec.target for rec in dataset.interactions})
    if not rows or not cols:
        empty = compose.ViewEmbeddingSet("Network", {u.user_id: None for u in dataset.users})
        return empty, netembed.NetworkEmbedding(
            matrix=np.zeros((0, dimension)), row_ids=[], mode=mode
        )

    adjacency = netembed.build_adjacency(dataset.interactions, rows, cols)
    if normalize_before_cosine:
        adjacency = netembed.row_normalize(adjacency)
    cosine = netembed.cosine_similarity_matrix(adjacency)
    want = k if k is not None else min(dimension, len(rows))
    factors = netembed.truncated_svd(cosine, want)
    if mode == "paper":
        # retain only well-conditioned components; division by ~0 blows up
        keep = factors.sigma > max(1e-10, 1e-10 * float(factors.sigma.max()))
        factors = netembed.SVDFactors(u=factors.u[:, keep], sigma=factors.sigma[keep])
    embedding = netembed.network_embedding(
        factors, mode=mode, row_ids=rows, zero_rows=cosine.zero_rows
    )

    vectors: dict[str, Optional[np.ndarray]] = {u.user_id: None for u in dataset.users}
    width = embedding.matrix.shape[1]
    for idx, uid in enumerate(rows):
        vec = embedding.matrix[idx]
        if width < dimension:
            vec = np.concatenate([vec, np.zeros(dimension - width)])
        elif width > dimension:
            vec = vec[:dimension]
        vectors[uid] = vec
    return compose.ViewEmbeddingSet("Network", vectors), embedding


def _standardize(train: np.ndarray, test: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = train.mean(axis=0)
    std = train.std(axis=0)
    std[std == 0] = 1.0
    return (train - mean) / std, (test - mean) / std


@dataclass
class ExperimentResult:
    tag: str
    report: classify.EvaluationReport
    n_train: int
    n_test: int
    zero_filled: int


def run_experiment(
    feature_view: compose.ViewEmbeddingSet,
    labels_by_user: dict[str, ClassLabel],
    users: Sequence[str],
    split_ratio: float = 0.8,
    seed: int = 0,
    smote_config: Optional[classify.SMOTEConfig] = None,
    classifier_config: Optional[classify.ClassifierConfig] = None,
    standardize: bool = True,
) -> ExperimentResult:
    """Split, oversample the training fold, train, and evaluate one setting."""
    users = [u for u in users if u in labels_by_user]
    matrix = classify.feature_matrix_from_view(feature_view, users)
    y = [labels_by_user[u] for u in matrix.user_ids]

    train_idx, test_idx = classify.stratified_split(y, ratio=split_ratio, seed=seed)
    x_train, x_test = matrix.features[train_idx], matrix.features[test_idx]
    y_train = [y[i] for i in train_idx]
    y_test = [y[i] for i in test_idx]

    smote_config = smote_config or classify.SMOTEConfig(seed=seed)
    x_train, y_train = classify.smote(x_train, y_train, smote_config)

    if standardize:
        x_train, x_test = _standardize(x_train, x_test)

    classifier_config = classifier_config or classify.ClassifierConfig(seed=seed)
    model = classify.train_classifier(x_train, y_train, classifier_config)
    predicted = classify.predict(model, x_test)
    report = classify.evaluate(predicted, y_test, classes=model.classes)
    return ExperimentResult(
        tag=feature_view.name,
        report=report,
        n_train=len(y_train),
        n_test=len(y_test),
        zero_filled=len(matrix.zero_filled),
    )


@dataclass
class SuiteResults:
    suite_a: dict[str, ExperimentResult]
    suite_b: dict[str, ExperimentResult]
    best_a_tag: str
    connected_users: list[str]


def run_suites(
    cme_sets: dict[str, compose.ViewEmbeddingSet],
    dataset: LabeledDataset,
    suite_a_tags: Sequence[str] = ("T+D", "T+E", "D+E"),
    suite_b_tags: Sequence[str] = ("N+T+E",),
    split_ratio: float = 0.8,
    seed: int = 0,
    smote_config: Optional[classify.SMOTEConfig] = None,
    classifier_config: Optional[classify.ClassifierConfig] = None,
) -> SuiteResults:
    """The two experiment suites over pre-composed embedding sets.

    Suite A runs text/emoji compositions over all labeled users. Suite B
    runs network compositions over the interaction-connected subset, using
    the best suite-A setting (re-run on that subset) as its baseline.
    """
    labels = dataset.labels()
    all_users = sorted(labels)
    missing = [t for t in list(suite_a_tags) + list(suite_b_tags) if t not in cme_sets]
    if missing:
        raise compose.CompositionError(f"suites reference unbuilt compositions: {missing}")

    suite_a: dict[str, ExperimentResult] = {}
    for tag in suite_a_tags:
        suite_a[tag] = run_experiment(
            cme_sets[tag], labels, all_users, split_ratio, seed, smote_config, classifier_config
        )
    best_a_tag = max(suite_a, key=lambda t: suite_a[t].report.macro_f1)

    connected = sorted(
        {rec.source for rec in dataset.interactions} & set(all_users)
    )
    suite_b: dict[str, ExperimentResult] = {}
    if connected and suite_b_tags:
        baseline = run_experiment(
            cme_sets[best_a_tag], labels, connected, split_ratio, seed,
            smote_config, classifier_config,
        )
        suite_b[best_a_tag] = baseline
        for tag in suite_b_tags:
            result = run_experiment(
                cme_sets[tag], labels, connected, split_ratio, seed,
                smote_config, classifier_config,
            )
            classify.compare_to_baseline(
                result.report, baseline.report, f"{best_a_tag} (connected subset)"
            )
            suite_b[tag] = result
    return SuiteResults(
        suite_a=suite_a,
        suite_b=suite_b,
        best_a_tag=best_a_tag,
        connected_users=connected,
    )
