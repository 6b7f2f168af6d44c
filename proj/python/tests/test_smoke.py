import numpy as np
import pytest

import wersig


def test_alignment_counts():
    c = wersig.align_and_count(["a", "b", "c"], ["a", "x", "c", "d"])
    assert (c.substitutions, c.insertions, c.deletions) == (1, 1, 0)
    assert c.total_errors == 2
    assert wersig.tokenize("  hello   world ") == ["hello", "world"]


def test_wer_summary():
    d = wersig.EvalDataset(
        [wersig.EvalRecord("u1", "s1", 10, 1, 2), wersig.EvalRecord("u2", "s1", 10, 3, 1)]
    )
    s = wersig.compute_wer_summary(d)
    assert s.wer_a == pytest.approx(0.2)
    assert s.wer_b == pytest.approx(0.15)
    assert s.delta_rel == pytest.approx(-0.25)


def test_invalid_dataset_raises_value_error():
    with pytest.raises(ValueError):
        wersig.EvalDataset([wersig.EvalRecord("u1", "s1", -1, 0, 0)])


def test_glasso_at_zero_penalty_inverts():
    s = np.array([[1.0, 0.5, 0.2], [0.5, 1.0, 0.3], [0.2, 0.3, 1.0]])
    est = wersig.solve_glasso(s, 0.0)
    assert est.converged
    np.testing.assert_allclose(est.theta, np.linalg.inv(s), atol=1e-6)
    assert wersig.lambda_max(s) == pytest.approx(0.5)


def test_simulate_infer_analyze():
    spec = wersig.SyntheticSpec()
    spec.n_speakers = 2
    spec.embedding_dim = 500
    spec.rng_seed = 3
    data = wersig.generate(spec)
    assert len(data.dataset) == 48
    assert data.embeddings.values.shape == (48, 500)

    cfg = wersig.GlassoConfig()
    cfg.rng_seed = 3
    inf = wersig.infer_blocks(data.dataset, data.embeddings, cfg)
    assert wersig.pairwise_agreement(inf.partition, data.truth, 48) > 0.9

    boot = wersig.BootstrapConfig()
    boot.n_replicates = 500
    boot.rng_seed = 1
    res = wersig.run_analysis(data.dataset, inf.partition, boot)
    wer_a = res.intervals[0]
    assert wer_a.statistic == "wer_a"
    assert wer_a.lower <= wer_a.point <= wer_a.upper
    assert res.k_blocks == len(inf.partition)


def test_replicates_are_deterministic():
    d = wersig.EvalDataset([wersig.EvalRecord(f"u{i}", "s", 10, i % 3, 1) for i in range(6)])
    cfg = wersig.BootstrapConfig()
    cfg.n_replicates = 200
    cfg.rng_seed = 9
    a = wersig.bootstrap_replicates(d, wersig.singleton_partition(6), cfg)
    cfg.workers = 4
    b = wersig.bootstrap_replicates(d, wersig.singleton_partition(6), cfg)
    assert a.shape == (200, 4)
    np.testing.assert_array_equal(a, b)
