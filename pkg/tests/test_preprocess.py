import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cme.preprocess import (
    clean_tokens,
    extract_entities,
    lemmatize,
    load_lemma_table,
    load_name_lexicon,
    load_stopwords,
    match_person_name,
)


class TestExtractEntities:
    def test_retweet_url_emoji(self):
        entities, residual = extract_entities("RT @acme: buy now https://a.b 🌿")
        assert entities.retweet_source == "acme"
        assert entities.urls == ["https://a.b"]
        assert entities.emoji == ["🌿"]
        assert residual == "buy now"

    def test_plain_text_passes_through(self):
        entities, residual = extract_entities("hello world")
        assert entities.is_empty()
        assert residual == "hello world"

    def test_email_and_phone(self):
        entities, residual = extract_entities("mail me a@b.co or call 555-123-4567")
        assert entities.contacts.emails == ["a@b.co"]
        assert entities.contacts.phones == ["555-123-4567"]
        assert "a@b.co" not in residual and "555" not in residual

    def test_mentions_extracted_without_at(self):
        entities, residual = extract_entities("hey @friend and @other_1")
        assert entities.mentions == ["friend", "other_1"]
        assert residual == "hey and"

    def test_web_address_in_contacts(self):
        entities, _ = extract_entities("visit www.green-leaf.example/shop today")
        assert entities.contacts.web_addresses == ["www.green-leaf.example/shop"]

    def test_zwj_sequence_is_one_emoji(self):
        entities, residual = extract_entities("family 👩‍👩‍👧 time")
        assert entities.emoji == ["👩‍👩‍👧"]
        assert residual == "family time"

    def test_skin_tone_stays_attached(self):
        entities, _ = extract_entities("wave 👋🏽")
        assert entities.emoji == ["👋🏽"]

    def test_flag_pair_is_one_emoji(self):
        entities, _ = extract_entities("go 🇺🇸 go")
        assert entities.emoji == ["🇺🇸"]

    def test_idempotent_on_residual(self):
        text = "RT @a: see https://x.y mail z@q.io call 555-123-4567 @b 🌿 plain"
        entities, residual = extract_entities(text)
        assert not entities.is_empty()
        second, residual2 = extract_entities(residual)
        assert second.is_empty()
        assert residual2 == residual

    @settings(max_examples=80, deadline=None)
    @given(st.text(min_size=0, max_size=120))
    def test_idempotence_property(self, text):
        _, residual = extract_entities(text)
        second, residual2 = extract_entities(residual)
        assert second.is_empty()
        assert residual2 == residual


class TestCleanTokens:
    def test_stopwords_and_punctuation_removed(self):
        assert clean_tokens("The Quick dog!!", {"the"}) == ["quick", "dog"]

    def test_empty_text(self):
        assert clean_tokens("", {"the"}) == []

    def test_tokens_with_digits_removed(self):
        # the digit-removal reading of alphanumeric cleanup
        assert clean_tokens("sale420 weed", set()) == ["weed"]

    def test_hashtag_body_kept_by_default(self):
        assert clean_tokens("#weed rocks", set()) == ["weed", "rocks"]

    def test_hashtag_dropped_when_configured(self):
        assert clean_tokens("#weed rocks", set(), keep_hashtag_body=False) == ["rocks"]

    def test_rescan_invariant(self):
        stop = load_stopwords()
        tokens = clean_tokens("The thing!! cost $50, call 555-0199 -- maybe läter", stop)
        for tok in tokens:
            assert tok not in stop
            assert not any(c.isdigit() for c in tok)
            assert any(c.isalpha() for c in tok)

    def test_punctuation_only_tokens_removed(self):
        assert clean_tokens("!! -- ... ??", set()) == []


class TestLemmatize:
    def test_table_entry_applied(self):
        assert lemmatize(["dogs"], {"dogs": "dog"}) == ["dog"]

    def test_identity_when_no_entry(self):
        assert lemmatize(["dog"], {"dogs": "dog"}) == ["dog"]

    def test_multiple_forms_to_one_lemma(self):
        assert lemmatize(["running", "ran"], {"running": "run", "ran": "run"}) == ["run", "run"]

    def test_idempotent_when_lemmas_map_to_themselves(self):
        table = {"running": "run", "run": "run"}
        once = lemmatize(["running", "run", "walk"], table)
        assert lemmatize(once, table) == once


class TestMatchPersonName:
    def test_component_hit(self):
        assert match_person_name("John Smith", {"john"}) is True

    def test_business_name_misses(self):
        lexicon = load_name_lexicon()
        assert match_person_name("GreenLeaf Dispensary", lexicon) is False

    def test_empty_name(self):
        assert match_person_name("", {"john"}) is False

    def test_case_folding_and_punctuation(self):
        assert match_person_name("SMITH, Jane", {"smith"}) is True


class TestDataFiles:
    def test_default_stopwords_load(self):
        stop = load_stopwords()
        assert "the" in stop and len(stop) > 100

    def test_default_lemma_table_loads(self):
        table = load_lemma_table()
        assert table["dogs"] == "dog"

    def test_default_name_lexicon_loads(self):
        lexicon = load_name_lexicon()
        assert "john" in lexicon and "smith" in lexicon
