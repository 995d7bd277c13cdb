# %% [markdown]
# # One LSTM layer versus three
#
# The architecture differs only in `num_layers`. Stacking multiplies the
# recurrent work, which shows up directly in the per-epoch wall-clock.

# %%
import tempfile

from charlm import nn
from charlm.train import TrainConfig, train

text = ("আজি আমার প্রাণের মাঝে বাজিছে বাঁশি। " * 30)
for layers in (1, 3):
    config = TrainConfig(output_dir=tempfile.mkdtemp(), epochs=3, embed_dim=16, hidden_size=32,
                         num_layers=layers, seq_len=25, batch_size=8, lr=5e-3)
    report, ckpt = train(config, corpus_text=text, echo=False)
    per_epoch = sum(e.elapsed_s for e in report.epochs) / len(report.epochs)
    print(f"{layers} layer(s): {nn.num_parameters(ckpt.config):6d} parameters, "
          f"loss {report.epochs[0].loss:.3f} -> {report.final_loss:.3f}, {per_epoch * 1e3:.1f} ms/epoch")

# %% [markdown]
# At full size (V=100, E=256, H=1024, three layers) the model has
# 22,160,484 parameters.

# %%
print(nn.num_parameters(nn.ModelConfig(100, 256, 1024, 3, 100)))
