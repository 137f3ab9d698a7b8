import numpy as np
import pytest
from scipy.io import wavfile
from scipy.stats import chisquare

from wavegen.audio import Waveform, dequantize, save_wav
from wavegen.exceptions import ConfigurationError, ShapeError
from wavegen.models import build_network
from wavegen.synthesis import GenerationSpec, generate, sample_next, write_generation


def test_argmax_unique_max():
    z = np.random.default_rng(0).normal(size=256)
    z[37] = 10.0
    assert all(sample_next(z, None) == 37 for _ in range(5))


def test_argmax_ties_go_low():
    z = np.zeros(256)
    z[[9, 200, 40]] = 3.0
    assert sample_next(z, None) == 9


def test_uniform_draws_pass_chi_square():
    rng = np.random.default_rng(123)
    draws = np.array([sample_next(np.zeros(256), 1.0, rng) for _ in range(100_000)])
    counts = np.bincount(draws, minlength=256)
    assert chisquare(counts).pvalue > 0.01


def test_frequencies_follow_tempered_softmax():
    rng = np.random.default_rng(7)
    z = rng.normal(size=256) * 2
    T = 0.7
    p = np.exp(z / T - np.max(z / T))
    p /= p.sum()
    draws = np.array([sample_next(z, T, rng) for _ in range(50_000)])
    counts = np.bincount(draws, minlength=256)
    keep = p * len(draws) >= 5  # chi-square validity; pool the tail
    obs = np.append(counts[keep], counts[~keep].sum())
    exp = np.append(p[keep], p[~keep].sum()) * len(draws)
    assert chisquare(obs, exp).pvalue > 0.01


def test_low_temperature_concentrates():
    z = np.full(256, -1e4)
    z[0], z[1] = 0.0, 1.0
    rng = np.random.default_rng(0)
    draws = np.array([sample_next(z, 0.01, rng) for _ in range(10_000)])
    assert np.mean(draws == 1) > 0.999


@pytest.mark.parametrize("t", [0.0, -1.0])
def test_non_positive_temperature(t):
    with pytest.raises(ConfigurationError):
        sample_next(np.zeros(256), t, np.random.default_rng(0))
    with pytest.raises(ConfigurationError):
        GenerationSpec(10, temperature=t)


def test_bad_logits():
    with pytest.raises(ShapeError):
        sample_next(np.zeros(10), None)
    z = np.zeros(256)
    z[3] = np.nan
    with pytest.raises(ValueError):
        sample_next(z, 1.0, np.random.default_rng(0))


class Recorder:
    """Stand-in network: always predicts last level + 1 and logs what it saw."""

    scheme = "linear"

    def __init__(self, context, past_len=0):
        self.context, self.past_len = context, past_len
        self.calls = []

    def logits(self, window, past=None):
        self.calls.append((np.array(window), None if past is None else np.array(past)))
        z = np.zeros((len(window), 256))
        z[-1, (int(window[-1]) + 1) % 256] = 5.0
        return z


def test_window_padding_and_sliding_past():
    net = Recorder(context=4, past_len=3)
    seed = np.array([10, 11], dtype=np.uint8)
    gen = generate(net, GenerationSpec(6, seed, temperature=None))
    np.testing.assert_array_equal(gen.levels, [10, 11, 12, 13, 14, 15, 16, 17])
    w0, p0 = net.calls[0]
    np.testing.assert_array_equal(w0, [128, 128, 10, 11])
    np.testing.assert_array_equal(p0, [128, 128, 128])
    w5, p5 = net.calls[5]
    np.testing.assert_array_equal(w5, [13, 14, 15, 16])
    np.testing.assert_array_equal(p5, [10, 11, 12])
    w3, p3 = net.calls[3]
    np.testing.assert_array_equal(w3, [11, 12, 13, 14])
    np.testing.assert_array_equal(p3, [128, 128, 10])
    assert all(len(w) == 4 and len(p) == 3 for w, p in net.calls)


def test_zero_samples_returns_seed():
    net = Recorder(context=4)
    seed = np.array([3, 200, 17], dtype=np.uint8)
    gen = generate(net, GenerationSpec(0, seed))
    np.testing.assert_array_equal(gen.levels, seed)
    np.testing.assert_array_equal(gen.waveform.samples, dequantize(seed))
    assert gen.waveform.sample_rate == 16000


def test_lengths_and_range_with_real_model():
    net = build_network("xf-3", seed=0, layers=1, heads=2, embed_dim=8, ff_width=8, context=16)
    gen = generate(net, GenerationSpec(20, "noise", temperature=1.0, rng_seed=4, seed_length=5))
    assert len(gen.levels) == 25 and gen.seed_len == 5
    assert gen.levels.dtype == np.uint8
    only = generate(net, GenerationSpec(20, "noise", temperature=1.0, rng_seed=4, seed_length=5,
                                        include_seed=False))
    np.testing.assert_array_equal(only.levels, gen.levels[5:])


def test_argmax_generation_is_deterministic():
    net = build_network("wavenet-vanilla", seed=1, layers_per_stack=3, filters=8, context=32)
    spec = GenerationSpec(30, "silence", temperature=None, seed_length=8)
    a, b = generate(net, spec), generate(net, spec)
    assert a.levels.tobytes() == b.levels.tobytes()


def test_conditioned_model_generates():
    net = build_network("xf-3-cond", seed=0, layers=1, heads=2, embed_dim=8, ff_width=8, context=8,
                        conv_layers=2, filters=4, latent_dim=4, past_len=12)
    gen = generate(net, GenerationSpec(25, "noise", temperature=0.8, rng_seed=1, seed_length=3))
    assert len(gen.levels) == 28


def test_empty_snippet_rejected():
    with pytest.raises(ShapeError):
        generate(Recorder(4), GenerationSpec(3, np.array([], dtype=np.uint8)))


def test_snippet_from_file_and_outputs(tmp_path):
    t = np.arange(1600) / 16000
    save_wav(tmp_path / "seed.wav", Waveform(0.5 * np.sin(2 * np.pi * 440 * t), 16000))
    gen = generate(Recorder(16), GenerationSpec(10, str(tmp_path / "seed.wav"), temperature=None))
    assert gen.seed_len == 1600 and len(gen.levels) == 1610
    wav, levels = write_generation(gen, tmp_path / "out.wav")
    rate, data = wavfile.read(wav)
    assert rate == 16000 and data.dtype == np.int16 and len(data) == 1610
    assert [int(v) for v in levels.read_text().split()] == gen.levels.tolist()
