"""Offline extraction of literary items from stored HTML pages.

Input tree::

    <root>/<genre>/<collection>/<item title>/page-01.html
                                             page-02.html ...

Each item's pages are read in name order, stripped of markup, concatenated,
and cleaned with a :class:`CleaningRuleSet`. Items can be written as a CSV
(``item_name,collection,genre,content``) or as one aggregated TXT.
"""
from __future__ import annotations

import csv
import enum
import re
from dataclasses import dataclass
from html.parser import HTMLParser
from pathlib import Path
from typing import Iterable, Sequence

CSV_HEADER = ("item_name", "collection", "genre", "content")
TITLE_PLACEHOLDER = "{title}"
DEFAULT_SYMBOLS = "[]*"


class ExtractionError(ValueError):
    pass


class Genre(str, enum.Enum):
    NOVEL = "novel"
    POEM = "poem"
    SONG = "song"
    STORY = "story"
    ESSAY = "essay"
    DRAMA = "drama"
    MISCELLANEOUS = "miscellaneous"

    @classmethod
    def parse(cls, value) -> "Genre":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown genre {value!r}; expected one of "
                             f"{', '.join(g.value for g in cls)}") from None


@dataclass(frozen=True)
class CorpusItem:
    title: str
    collection: str
    genre: Genre
    content: str

    def __post_init__(self):
        object.__setattr__(self, "genre", Genre.parse(self.genre))


# ---------------------------------------------------------------- cleaning

@dataclass(frozen=True)
class CleaningRule:
    pattern: str
    replacement: str
    compiled: re.Pattern

    def bind(self, title: str | None) -> re.Pattern:
        if TITLE_PLACEHOLDER not in self.pattern:
            return self.compiled
        if title is None:
            return None
        return re.compile(self.pattern.replace(TITLE_PLACEHOLDER, re.escape(title)))


class CleaningRuleSet:
    """Ordered regex substitutions.

    A pattern may contain the literal token ``{title}``; it is replaced by
    the escaped item title when cleaning, and such a rule is skipped when no
    title is known. Patterns are compiled here, so a bad one fails before
    any text is processed.
    """

    def __init__(self, rules: Iterable[tuple[str, str]] = (), defaults: bool = False):
        self.defaults = defaults
        self.rules: list[CleaningRule] = []
        for n, (pattern, replacement) in enumerate(rules):
            try:
                compiled = re.compile(pattern.replace(TITLE_PLACEHOLDER, "x"))
                compiled.sub(replacement, "")
            except re.error as exc:
                raise ValueError(f"invalid cleaning rule {n} {pattern!r}: {exc}") from None
            self.rules.append(CleaningRule(pattern, replacement, compiled))

    def __len__(self):
        return len(self.rules)

    @classmethod
    def default(cls, symbols: str = DEFAULT_SYMBOLS) -> "CleaningRuleSet":
        rules = []
        if symbols:
            rules.append(("[" + "".join(re.escape(s) for s in symbols) + "]", ""))
        rules += [
            # page numbers: lines of ASCII or Bengali digits only
            (r"(?m)^[ \t]*[0-9০-৯]+[ \t]*(?:\n|\Z)", ""),
            (r"\A[ \t]*" + TITLE_PLACEHOLDER + r"[ \t]*(?:\n|\Z)", ""),
            (r"\n{3,}", "\n\n"),
            (r"\A\s+|\s+\Z", ""),
        ]
        return cls(rules, defaults=True)

    @classmethod
    def from_file(cls, path) -> "CleaningRuleSet":
        """One ``pattern<TAB>replacement`` per line; ``#`` lines and blank lines are ignored."""
        rules = []
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            pattern, sep, replacement = line.partition("\t")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected pattern<TAB>replacement")
            rules.append((pattern, replacement))
        return cls(rules)


def clean_text(raw: str, rules: CleaningRuleSet, title: str | None = None) -> str:
    text = raw
    for rule in rules.rules:
        pattern = rule.bind(title)
        if pattern is not None:
            text = pattern.sub(rule.replacement, text)
    return text


# ---------------------------------------------------------------- html

_BLOCK_TAGS = frozenset(
    "address article aside blockquote dd div dl dt figcaption figure footer form h1 h2 h3 h4 "
    "h5 h6 header hr li main nav ol p pre section table tbody td tfoot th thead tr ul".split())
_SKIP_TAGS = frozenset(["script", "style", "head", "title", "noscript"])
_SPACE = re.compile(r"[ \t\r\n\f\v]+")


class _TextExtractor(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.parts: list[str] = []
        self.skip = 0
        self.saw_tag = False

    def _soft_break(self):
        if self.parts and not self.parts[-1].endswith("\n"):
            self.parts.append("\n")

    def handle_starttag(self, tag, attrs):
        self.saw_tag = True
        if tag in _SKIP_TAGS:
            self.skip += 1
        elif tag == "br":
            self.parts.append("\n")
        elif tag in _BLOCK_TAGS:
            self._soft_break()

    def handle_startendtag(self, tag, attrs):
        self.saw_tag = True
        if tag == "br":
            self.parts.append("\n")
        elif tag in _BLOCK_TAGS:
            self._soft_break()

    def handle_endtag(self, tag):
        if tag in _SKIP_TAGS:
            self.skip = max(0, self.skip - 1)
        elif tag in _BLOCK_TAGS:
            self._soft_break()

    def handle_data(self, data):
        if self.skip:
            return
        data = _SPACE.sub(" ", data)
        if self.parts and self.parts[-1].endswith("\n"):
            data = data.lstrip(" ")
        if data:
            self.parts.append(data)

    def text(self) -> str:
        lines = "".join(self.parts).split("\n")
        return "\n".join(line.strip(" ") for line in lines).strip("\n")


def html_to_text(document: str, page_index: int = 0) -> str:
    """Visible text of one page; block elements end lines, ``<br>`` inserts one."""
    if not document or not document.strip():
        raise ExtractionError(f"page {page_index}: empty document")
    parser = _TextExtractor()
    parser.feed(document)
    if parser.rawdata.lstrip().startswith("<"):
        raise ExtractionError(f"page {page_index}: malformed HTML, unterminated markup "
                              f"{parser.rawdata[:40]!r}")
    parser.close()
    text = parser.text()
    if not text.strip():
        raise ExtractionError(f"page {page_index}: no text content")
    return text


def extract_item(html_pages: Sequence[str], title: str, collection: str, genre,
                 rules: CleaningRuleSet | None = None) -> CorpusItem:
    genre = Genre.parse(genre)
    if not html_pages:
        raise ExtractionError(f"item {title!r} has no pages")
    raw = "\n".join(html_to_text(page, i) for i, page in enumerate(html_pages))
    rules = CleaningRuleSet.default() if rules is None else rules
    return CorpusItem(title, collection, genre, clean_text(raw, rules, title=title))


def _dirs(path: Path) -> list[Path]:
    return sorted(p for p in path.iterdir() if p.is_dir() and not p.name.startswith("."))


def extract_tree(root, rules: CleaningRuleSet | None = None) -> list[CorpusItem]:
    """Walk ``genre/collection/item/page-*.html`` in sorted order."""
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"fixture directory not found: {root}")
    items = []
    for genre_dir in _dirs(root):
        genre = Genre.parse(genre_dir.name)
        for coll_dir in _dirs(genre_dir):
            for item_dir in _dirs(coll_dir):
                pages = sorted(item_dir.glob("*.html"))
                if not pages:
                    continue
                docs = [p.read_text(encoding="utf-8") for p in pages]
                try:
                    items.append(extract_item(docs, item_dir.name, coll_dir.name, genre, rules))
                except ExtractionError as exc:
                    raise ExtractionError(f"{item_dir}: {exc}") from None
    return items


# ---------------------------------------------------------------- emitters

def emit_csv(items: Sequence[CorpusItem], destination) -> None:
    if not items:
        raise ValueError("empty corpus")
    with open(destination, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
        writer.writerow(CSV_HEADER)
        for item in items:
            writer.writerow((item.title, item.collection, item.genre.value, item.content))


def read_csv(source) -> list[CorpusItem]:
    with open(source, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError(f"{source}: missing header {','.join(CSV_HEADER)}")
    return [CorpusItem(*row) for row in rows[1:]]


def emit_txt(items: Sequence[CorpusItem], destination, separator: str = "\n") -> None:
    if not items:
        raise ValueError("empty corpus")
    with open(destination, "w", encoding="utf-8", newline="") as fh:
        fh.write(separator.join(item.content for item in items))
