# %% [markdown]
# # Training and sampling
#
# A tiny model memorises a three-letter cycle, then generates with different
# temperatures. Higher temperature flattens the next-character distribution.

# %%
import tempfile

from charlm.generate import GenerationRequest, run_generation
from charlm.train import TrainConfig, evaluate_loss, train

corpus = "abc" * 100
config = TrainConfig(output_dir=tempfile.mkdtemp(), epochs=34, embed_dim=8, hidden_size=16,
                     num_layers=1, seq_len=10, batch_size=4, lr=1e-2, base_seed=3, max_steps=200)
report, ckpt = train(config, corpus_text=corpus)
print("loss on corpus:", round(evaluate_loss(ckpt, corpus), 4))

# %%
print(run_generation(ckpt, GenerationRequest("a", 60, greedy=True)).text)
for T in (0.5, 1.0, 1.5, 3.0):
    res = run_generation(ckpt, GenerationRequest("a", 60, temperature=T, rng_seed=7))
    print(f"T={T}: mean entropy {res.mean_entropy:.3f}  {res.text}")
