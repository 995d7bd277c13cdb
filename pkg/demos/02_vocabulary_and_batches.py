# %% [markdown]
# # Vocabulary, windows and batches
#
# Characters map to indices in code-point order. The corpus is cut into
# non-overlapping windows of `seq_len + 1`; each window gives one input/target
# pair shifted by a single character.

# %%
import numpy as np

from charlm.text import BatchPlan, build_vocabulary, decode, encode, make_batches, make_examples

text = "আজি আমার প্রাণের 'পরে (কে) বাজায়, বাঁশি; কেন?\n" * 40
vocab = build_vocabulary(text)
print("vocabulary size:", len(vocab))
for i, ch in enumerate(vocab.chars[:12]):
    print(f"  {ch!r:>6} : {i:3d},")

# %%
ids = encode(text, vocab)
assert decode(ids, vocab) == text
examples = make_examples(ids, seq_len=20)
first = examples[0]
print("windows:", len(examples), "=", len(ids), "//", 21)
print("input :", repr(decode(first.input_ids, vocab)))
print("target:", repr(decode(first.target_ids, vocab)))

# %% [markdown]
# At full scale: 733,280 characters and 101-character windows give
# 7,260 examples; batches of 64 give 113 full batches and 28 leftovers.

# %%
n = 733_280 // 101
print(n, n // 64, n - 64 * (n // 64))
batches = make_batches(examples, BatchPlan(batch_size=8, shuffle_seed=1))
print("batches:", len(batches), "shape:", batches[0][0].shape)
print("same seed, same order:",
      np.array_equal(batches[0][0], make_batches(examples, BatchPlan(8, 1))[0][0]))
