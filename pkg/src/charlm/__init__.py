"""Character-level language modelling with a from-scratch stacked LSTM."""
from .checkpoint import Checkpoint
from .corpus import CleaningRuleSet, CorpusItem, Genre, clean_text, emit_csv, emit_txt, extract_item
from .generate import GenerationRequest, generate, sample_index
from .nn import ModelConfig, RecurrentState, backward, cross_entropy, forward, init_params
from .optim import AdamState, adam_step
from .rng import PortableRNG
from .text import BatchPlan, Vocabulary, build_vocabulary, decode, encode, make_batches, make_examples
from .train import TrainConfig, TrainReport, evaluate_loss, train

__version__ = "0.1.0"
