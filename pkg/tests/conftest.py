import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from charlm import nn  # noqa: E402
from charlm.rng import PortableRNG  # noqa: E402
from charlm.train import TrainConfig, train  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"
ABC_CORPUS = "abc" * 100

ACCEPTANCE_LINES: list[str] = []


def overfit_config(output_dir, **kw) -> TrainConfig:
    base = dict(output_dir=str(output_dir), epochs=34, embed_dim=8, hidden_size=16,
                num_layers=1, seq_len=10, batch_size=4, lr=1e-2, base_seed=3, max_steps=200)
    base.update(kw)
    return TrainConfig(**base)


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def overfit_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("overfit")
    report, ckpt = train(overfit_config(out), corpus_text=ABC_CORPUS, echo=False)
    return report, ckpt, out


@pytest.fixture
def tiny():
    config = nn.ModelConfig(vocab_size=5, embed_dim=4, hidden_size=6, num_layers=2, seq_len=3)
    rng = PortableRNG(11)
    params = nn.init_params(config, rng)
    ids = np.array([[rng.below(5) for _ in range(3)] for _ in range(2)])
    targets = np.array([[rng.below(5) for _ in range(3)] for _ in range(2)])
    return config, params, ids, targets


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
