"""Text cleanup and entity extraction for tweets and profile descriptions.

Splits raw text into (entities, residual): URLs, @-mentions, a leading
retweet marker, contact info, and emoji are pulled out first, then the
residual is tokenized, filtered, and lemmatized.

Two reading notes that differ from naive expectations:

- "alphanumeric removal" is implemented as dropping tokens that contain a
  digit (codes, prices, handles). Dropping every alphanumeric character
  would delete the corpus.
- hashtags keep their body as a plain token by default ("#weed" -> "weed");
  pass keep_hashtag_body=False to drop them instead.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Optional

_RT_RE = re.compile(r"^\s*RT\s+@(\w+):?\s*", re.IGNORECASE)
_URL_RE = re.compile(r"\bhttps?://[^\s]+", re.IGNORECASE)
_EMAIL_RE = re.compile(r"\b[A-Za-z0-9._%+-]+@[A-Za-z0-9-]+(?:\.[A-Za-z0-9-]+)+\b")
_WEB_RE = re.compile(r"\bwww\.[A-Za-z0-9-]+(?:\.[A-Za-z0-9-]+)+(?:/[^\s]*)?", re.IGNORECASE)
# North-American style numbers; deliberately narrow to avoid eating dates
_PHONE_RE = re.compile(r"(?:\+\d{1,3}[ .-]?)?(?:\(\d{3}\)\s?|\b\d{3}[ .-])\d{3}[ .-]\d{4}\b")
_MENTION_RE = re.compile(r"@(\w+)")

_ZWJ = 0x200D
_VARIATION_SELECTORS = (0xFE0E, 0xFE0F)
_SKIN_TONES = range(0x1F3FB, 0x1F3FF + 1)
_REGIONAL_INDICATORS = range(0x1F1E6, 0x1F1FF + 1)
_KEYCAP = 0x20E3
_KEYCAP_BASES = set("#*0123456789")

# edge punctuation stripped from tokens; includes common unicode quotes/dashes
_EDGE_PUNCT = string.punctuation + "‘’“”…«»–—"


@dataclass
class ContactInfo:
    phones: list[str] = field(default_factory=list)
    emails: list[str] = field(default_factory=list)
    web_addresses: list[str] = field(default_factory=list)

    def is_empty(self) -> bool:
        return not (self.phones or self.emails or self.web_addresses)


@dataclass
class ExtractedEntities:
    urls: list[str] = field(default_factory=list)
    mentions: list[str] = field(default_factory=list)
    retweet_source: Optional[str] = None
    emoji: list[str] = field(default_factory=list)
    contacts: ContactInfo = field(default_factory=ContactInfo)

    def is_empty(self) -> bool:
        return (
            not self.urls
            and not self.mentions
            and self.retweet_source is None
            and not self.emoji
            and self.contacts.is_empty()
        )


def _data_path(name: str) -> Path:
    return Path(str(resources.files("cme").joinpath("data") / name))


def _read_word_lines(path) -> list[str]:
    words = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.append(line)
    return words


def load_stopwords(path=None) -> set[str]:
    """Stopword set, case-folded. Defaults to the packaged English list."""
    path = path or _data_path("stopwords.txt")
    return {w.casefold() for w in _read_word_lines(path)}


def load_lemma_table(path=None) -> dict[str, str]:
    """token TAB lemma lookup table. Defaults to the packaged table."""
    path = path or _data_path("lemmas.tsv")
    table = {}
    for line in _read_word_lines(path):
        parts = line.split("\t")
        if len(parts) == 2:
            table[parts[0].casefold()] = parts[1].casefold()
    return table


def load_name_lexicon(path=None) -> set[str]:
    """Person first/last name set, case-folded."""
    path = path or _data_path("name_lexicon.txt")
    return {w.casefold() for w in _read_word_lines(path)}


def _load_emoji_ranges() -> list[tuple[int, int]]:
    ranges = []
    for line in _read_word_lines(_data_path("emoji_ranges.tsv")):
        parts = line.split("\t")
        ranges.append((int(parts[0], 16), int(parts[1], 16)))
    ranges.sort()
    return ranges


_EMOJI_RANGES = _load_emoji_ranges()


def _is_emoji_codepoint(cp: int) -> bool:
    for lo, hi in _EMOJI_RANGES:
        if lo <= cp <= hi:
            return True
        if cp < lo:
            return False
    return False


def _extract_emoji(text: str) -> tuple[list[str], str]:
    """Pull emoji sequences out of text.

    ZWJ sequences, variation selectors, skin tones, keycaps, and regional
    indicator pairs stay attached to their base so each emoji is one unit.
    Removed emoji leave a space so the surrounding fragments never merge
    into a new extractable pattern.
    """
    found: list[str] = []
    kept: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        cp = ord(text[i])
        is_base = _is_emoji_codepoint(cp)
        is_keycap = (
            text[i] in _KEYCAP_BASES
            and i + 1 < n
            and (ord(text[i + 1]) == _KEYCAP or (ord(text[i + 1]) in _VARIATION_SELECTORS
                                                 and i + 2 < n and ord(text[i + 2]) == _KEYCAP))
        )
        if not (is_base or is_keycap):
            kept.append(text[i])
            i += 1
            continue

        start = i
        i += 1
        while i < n:
            cp2 = ord(text[i])
            if cp2 in _VARIATION_SELECTORS or cp2 in _SKIN_TONES or cp2 == _KEYCAP:
                i += 1
            elif cp2 == _ZWJ and i + 1 < n and _is_emoji_codepoint(ord(text[i + 1])):
                i += 2
            elif (
                cp in _REGIONAL_INDICATORS
                and cp2 in _REGIONAL_INDICATORS
                and i == start + 1
            ):
                i += 1  # flag = exactly two regional indicators
            else:
                break
        found.append(text[start:i])
        kept.append(" ")
    return found, "".join(kept)


def _squash_whitespace(text: str) -> str:
    return " ".join(text.split())


def extract_entities(raw_text: str) -> tuple[ExtractedEntities, str]:
    """Split raw text into extracted entities and residual text.

    Extraction is pattern-exhaustive and idempotent on its own residual:
    running it again on the residual finds nothing and changes nothing.
    """
    entities = ExtractedEntities()
    text = raw_text or ""

    match = _RT_RE.match(text)
    if match:
        entities.retweet_source = match.group(1)
        text = text[match.end():]

    entities.urls = _URL_RE.findall(text)
    text = _URL_RE.sub(" ", text)

    entities.contacts.emails = _EMAIL_RE.findall(text)
    text = _EMAIL_RE.sub(" ", text)

    entities.contacts.web_addresses = _WEB_RE.findall(text)
    text = _WEB_RE.sub(" ", text)

    entities.contacts.phones = [m.strip() for m in _PHONE_RE.findall(text)]
    text = _PHONE_RE.sub(" ", text)

    entities.mentions = _MENTION_RE.findall(text)
    text = _MENTION_RE.sub(" ", text)

    entities.emoji, text = _extract_emoji(text)

    return entities, _squash_whitespace(text)


def clean_tokens(
    residual_text: str,
    stopwords: Iterable[str],
    keep_hashtag_body: bool = True,
) -> list[str]:
    """Lowercase and tokenize residual text, dropping noise tokens.

    Dropped: stopwords, tokens with no letters, and tokens containing any
    digit. Edge punctuation is stripped; internal apostrophes survive.
    """
    stopset = stopwords if isinstance(stopwords, (set, frozenset)) else set(stopwords)
    tokens = []
    for raw in (residual_text or "").casefold().split():
        if raw.startswith("#") and not keep_hashtag_body:
            continue
        tok = raw.strip(_EDGE_PUNCT)
        if not tok:
            continue
        if not any(c.isalpha() for c in tok):
            continue
        if any(c.isdigit() for c in tok):
            continue
        if tok in stopset:
            continue
        tokens.append(tok)
    return tokens


def lemmatize(tokens: list[str], lemma_table: Mapping[str, str]) -> list[str]:
    """Replace each token by its lemma when the table has one."""
    return [lemma_table.get(tok, tok) for tok in tokens]


def match_person_name(name: str, lexicon: Iterable[str]) -> bool:
    """True iff any whitespace-separated component of name is in the lexicon."""
    lexset = lexicon if isinstance(lexicon, (set, frozenset)) else set(lexicon)
    for part in (name or "").split():
        if part.strip(_EDGE_PUNCT).casefold() in lexset:
            return True
    return False
