# %% [markdown]
# # Building a corpus from stored HTML pages
#
# The shipped fixture tree mirrors a literary site: `genre/collection/item/page-NN.html`.
# Each item is extracted page by page, stripped of markup and cleaned of page
# numbers, repeated titles and stray symbols.

# %%
import tempfile
from pathlib import Path

from charlm.corpus import CleaningRuleSet, clean_text, emit_csv, emit_txt, extract_tree

root = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "site"
items = extract_tree(root)
for item in items:
    print(f"{item.genre.value:6} | {item.collection} | {item.title} | {len(item.content)} chars")

# %% [markdown]
# The default rules keep every Bengali letter, vowel sign and the danda.

# %%
raw = "আমার মাথা নত করে দাও\n[সকল] অহংকার।\n১২\n\n\n\nশেষ"
print(repr(clean_text(raw, CleaningRuleSet.default(), title="আমার মাথা নত করে দাও")))

# %% [markdown]
# The CSV keeps one row per item for exploration; the TXT concatenates everything
# for training.

# %%
out = Path(tempfile.mkdtemp())
emit_csv(items, out / "corpus.csv")
emit_txt(items, out / "corpus.txt")
print((out / "corpus.csv").read_text(encoding="utf-8")[:300])
print("TXT length:", len((out / "corpus.txt").read_text(encoding="utf-8")))
