"""Exit criteria, one test per criterion, at the stated tolerances.

Each test appends a PASS/FAIL line to the terminal summary.
"""
import math
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from charlm import nn
from charlm.checkpoint import Checkpoint
from charlm.corpus import emit_csv, emit_txt, extract_tree
from charlm.generate import GenerationRequest, entropy, generate, sample_index, temperature_probs
from charlm.optim import AdamState
from charlm.rng import PortableRNG
from charlm.text import BatchPlan, build_vocabulary, decode, encode, make_batches, make_examples
from charlm.train import evaluate_loss, train
from conftest import ABC_CORPUS, ACCEPTANCE_LINES, overfit_config
from oracles import central_differences, extended_loss, max_relative_error


def record(number, title, ok, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {number}. {title}: {detail}")
    assert ok, detail


def synthetic_corpus(n_chars, n_unique):
    alphabet = [chr(c) for c in range(0x0985, 0x0985 + n_unique)]
    rng = PortableRNG(2024)
    idx = np.floor(rng.uniform(n_chars) * n_unique).astype(int)
    idx[:n_unique] = np.arange(n_unique)
    return "".join(alphabet[i] for i in idx)


def test_1_sequence_count():
    t0 = time.perf_counter()
    text = synthetic_corpus(733_280, 100)
    vocab = build_vocabulary(text)
    examples = make_examples(encode(text, vocab), 100)
    batches = make_batches(examples, BatchPlan(64, 0, drop_last=True))
    dt = time.perf_counter() - t0
    ok = len(text) == 733_280 and len(examples) == 7260 and len(batches) == 113 and dt < 5
    record(1, "sequence count", ok,
           f"{len(examples)} examples (want 7260), {len(batches)} batches (want 113), {dt:.2f}s (< 5s)")


def test_2_gradient_correctness():
    t0 = time.perf_counter()
    config = nn.ModelConfig(vocab_size=5, embed_dim=4, hidden_size=6, num_layers=2, seq_len=3)
    params = nn.init_params(config, PortableRNG(0))
    rng = PortableRNG(77)
    ids = np.array([[rng.below(5) for _ in range(3)] for _ in range(2)])
    targets = np.array([[rng.below(5) for _ in range(3)] for _ in range(2)])
    _, grads = nn.loss_and_grads(ids, targets, params, config)
    numeric = central_differences(lambda p: extended_loss(nn.forward, p, ids, targets, config),
                                  params, step=1e-5)
    err, where = max_relative_error(grads, numeric)
    dt = time.perf_counter() - t0
    n = nn.num_parameters(config)
    record(2, "gradient correctness", err < 1e-5 and dt < 60,
           f"max relative error {err:.2e} over {n} parameters at {where[0]} (< 1e-5), {dt:.1f}s (< 60s)")


def test_3_initial_loss():
    t0 = time.perf_counter()
    text = synthetic_corpus(101 * 8, 100)
    vocab = build_vocabulary(text)
    config = nn.ModelConfig(len(vocab), embed_dim=256, hidden_size=1024, num_layers=3, seq_len=100)
    params = nn.init_params(config, PortableRNG(0))
    ckpt = Checkpoint(config, vocab, params, AdamState.fresh(params), PortableRNG(0).state)
    loss = evaluate_loss(ckpt, text)
    rel = abs(loss - math.log(100)) / math.log(100)
    dt = time.perf_counter() - t0
    record(3, "initial loss", rel < 0.05 and dt < 10,
           f"loss {loss:.5f} vs ln(100)={math.log(100):.5f}, relative gap {rel:.2%} (< 5%), {dt:.1f}s (< 10s)")


def test_4_overfit_oracle(tmp_path):
    t0 = time.perf_counter()
    report, ckpt = train(overfit_config(tmp_path), corpus_text=ABC_CORPUS, echo=False)
    loss = evaluate_loss(ckpt, ABC_CORPUS)
    text = generate(ckpt, GenerationRequest("a", 60, greedy=True))
    matched = next((i for i, (a, b) in enumerate(zip(text, "abc" * 30)) if a != b), len(text)) - 1
    dt = time.perf_counter() - t0
    ok = ckpt.step == 200 and loss < 0.1 and matched >= 50 and dt < 120
    record(4, "overfit oracle", ok,
           f"{ckpt.step} steps, loss {loss:.4f} (< 0.1), greedy continuation exact for {matched} chars "
           f"(>= 50), {dt:.1f}s (< 120s)")


bengali_or_any = st.text(alphabet=st.one_of(
    st.characters(min_codepoint=0x0980, max_codepoint=0x09FF),
    st.characters(blacklist_categories=("Cs",))), min_size=1, max_size=200)


def test_5_vocabulary_bijection():
    t0 = time.perf_counter()
    failures = []

    @given(bengali_or_any)
    @settings(max_examples=300, deadline=None)
    def prop(s):
        v = build_vocabulary(s)
        assert decode(encode(s, v), v) == s
        assert sorted(v.lookup.values()) == list(range(len(v)))
        assert [ord(c) for c in v.chars] == sorted(ord(c) for c in v.chars)

    try:
        prop()
    except AssertionError as exc:
        failures.append(str(exc))
    v = build_vocabulary("\n !'(),-.:;?[]আমি")
    listing = {c: v.lookup[c] for c in "'(),"}
    ok = not failures and listing == {"'": 3, "(": 4, ")": 5, ",": 6}
    dt = time.perf_counter() - t0
    record(5, "vocabulary bijection", ok and dt < 10,
           f"property held on 300 strings, listing {listing}, {dt:.1f}s (< 10s)")


def test_6_temperature_semantics():
    t0 = time.perf_counter()
    logits = np.array([2.0, 1.0, 0.0])
    pvals = {}
    for T in (1.0, 1.5):
        rng = PortableRNG(int(T * 10))
        counts = np.bincount([sample_index(logits, T, rng) for _ in range(100_000)], minlength=3)
        pvals[T] = stats.chisquare(counts, temperature_probs(logits, T) * 100_000).pvalue
    h1, h15 = entropy(temperature_probs(logits, 1.0)), entropy(temperature_probs(logits, 1.5))
    rng = PortableRNG(1)
    greedy_hits = sum(sample_index([1.0, 0.0, -3.0], 1.0, rng, greedy=True) == 0 for _ in range(10_000))
    dt = time.perf_counter() - t0
    ok = min(pvals.values()) > 0.001 and h15 > h1 and greedy_hits == 10_000 and dt < 30
    record(6, "temperature semantics", ok,
           f"chi-square p={pvals[1.0]:.3f} (T=1.0), p={pvals[1.5]:.3f} (T=1.5) (> 0.001); "
           f"entropy {h1:.4f} -> {h15:.4f}; greedy {greedy_hits}/10000; {dt:.1f}s (< 30s)")


def test_7_checkpoint_determinism(tmp_path):
    t0 = time.perf_counter()
    kw = dict(max_steps=None)
    _, full = train(overfit_config(tmp_path / "full", epochs=6, **kw), corpus_text=ABC_CORPUS, echo=False)
    _, first = train(overfit_config(tmp_path / "split", epochs=3, **kw), corpus_text=ABC_CORPUS, echo=False)
    saved = first.save(tmp_path / "mid.ckpt")
    _, resumed = train(overfit_config(tmp_path / "split", epochs=6, **kw), corpus_text=ABC_CORPUS,
                       resume=Checkpoint.load(saved), echo=False)
    same = all(full.params[k].tobytes() == resumed.params[k].tobytes() for k in full.params)
    req = GenerationRequest("a", 100, temperature=1.5, rng_seed=123)
    reloaded = Checkpoint.load(resumed.save(tmp_path / "end.ckpt"))
    same_text = generate(resumed, req) == generate(reloaded, req)
    dt = time.perf_counter() - t0
    record(7, "checkpoint determinism", same and same_text and dt < 180,
           f"parameters bit-identical: {same}; generation identical: {same_text}; {dt:.1f}s (< 180s)")


def test_8_extraction_golden(fixtures_dir, tmp_path):
    t0 = time.perf_counter()
    items = extract_tree(fixtures_dir / "site")
    emit_csv(items, tmp_path / "out.csv")
    emit_txt(items, tmp_path / "out.txt")
    csv_ok = (tmp_path / "out.csv").read_bytes() == (fixtures_dir / "golden" / "corpus.csv").read_bytes()
    txt_ok = (tmp_path / "out.txt").read_bytes() == (fixtures_dir / "golden" / "corpus.txt").read_bytes()
    dt = time.perf_counter() - t0
    record(8, "extraction golden files", csv_ok and txt_ok and len(items) == 3 and dt < 5,
           f"{len(items)} items, CSV identical: {csv_ok}, TXT identical: {txt_ok}, {dt:.2f}s (< 5s)")


def test_9_architecture_parity(tmp_path):
    t0 = time.perf_counter()
    results = {}
    for layers in (1, 3):
        report, ckpt = train(overfit_config(tmp_path / str(layers), epochs=10, num_layers=layers,
                                            max_steps=None), corpus_text=ABC_CORPUS, echo=False)
        per_epoch = float(np.median([e.elapsed_s for e in report.epochs]))
        results[layers] = (report.epochs[0].loss, report.final_loss, per_epoch)
    trained = all(final < first for first, final, _ in results.values())
    faster = results[1][2] < results[3][2]
    dt = time.perf_counter() - t0
    record(9, "architecture parity", trained and faster and dt < 300,
           f"1 layer: loss {results[1][0]:.3f}->{results[1][1]:.3f}, {results[1][2] * 1e3:.1f} ms/epoch; "
           f"3 layers: loss {results[3][0]:.3f}->{results[3][1]:.3f}, {results[3][2] * 1e3:.1f} ms/epoch; "
           f"ratio {results[3][2] / results[1][2]:.2f}x; {dt:.1f}s (< 300s)")
