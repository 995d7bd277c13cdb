# %% [markdown]
# # Checking backpropagation through time
#
# Analytic gradients of the mean cross-entropy are compared with central finite
# differences. The finite differences evaluate the network in `np.longdouble`
# so that round-off does not swamp the smallest gradients.

# %%
import numpy as np

from charlm import nn
from charlm.rng import PortableRNG

config = nn.ModelConfig(vocab_size=5, embed_dim=4, hidden_size=6, num_layers=2, seq_len=3)
params = nn.init_params(config, PortableRNG(0))
rng = PortableRNG(1)
ids = np.array([[rng.below(5) for _ in range(3)] for _ in range(2)])
targets = np.array([[rng.below(5) for _ in range(3)] for _ in range(2)])
loss, grads = nn.loss_and_grads(ids, targets, params, config)
print("loss:", loss)


# %%
def extended_loss(p):
    wide = {k: v.astype(np.longdouble) for k, v in p.items()}
    logits = nn.forward(ids, wide, config)[0]
    return -np.take_along_axis(nn.log_softmax(logits), targets[..., None], -1).mean()


h = 1e-5
for name, a in params.items():
    worst = 0.0
    for idx in np.ndindex(a.shape):
        old = a[idx]
        a[idx] = old + h
        up = extended_loss(params)
        a[idx] = old - h
        down = extended_loss(params)
        a[idx] = old
        num = float((up - down) / (2 * np.longdouble(h)))
        an = grads[name][idx]
        worst = max(worst, abs(an - num) / max(abs(an), abs(num), 1e-8))
    print(f"{name:10} max relative error {worst:.2e}")
