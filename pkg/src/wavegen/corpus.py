"""Synthetic corpora for tests, smoke runs and demos."""
from __future__ import annotations

import numpy as np
from scipy.signal import lfilter

from .audio import WORKING_RATE, Waveform


def sine(freq: float, seconds: float, rate: int = WORKING_RATE, amplitude: float = 0.8,
         phase: float = 0.0) -> Waveform:
    t = np.arange(int(round(seconds * rate))) / rate
    return Waveform(amplitude * np.sin(2 * np.pi * freq * t + phase), rate)


def karplus_strong(freq: float, seconds: float, rng: np.random.Generator, rate: int = WORKING_RATE,
                   decay: float = 0.996) -> np.ndarray:
    """Plucked string: a noise burst circulating through an averaging delay line.

    ``y[n] = x[n] + decay/2 * (y[n-N] + y[n-N-1])`` with ``N = rate/freq``.
    """
    n = int(round(seconds * rate))
    N = max(2, int(round(rate / freq)))
    burst = np.zeros(n)
    burst[:min(N, n)] = rng.uniform(-1, 1, size=min(N, n))
    a = np.zeros(N + 2)
    a[0] = 1.0
    a[N] = a[N + 1] = -decay / 2
    return lfilter([1.0], a, burst)


def detuned_chord(freqs, seconds: float, rng: np.random.Generator, rate: int = WORKING_RATE,
                  detune_cents: float = 8.0) -> np.ndarray:
    """Each note as a pair of slightly detuned sines under an exponential decay."""
    t = np.arange(int(round(seconds * rate))) / rate
    out = np.zeros_like(t)
    for f in freqs:
        for cents in (-detune_cents, detune_cents):
            fc = f * 2 ** (cents / 1200)
            out += np.sin(2 * np.pi * fc * t + rng.uniform(0, 2 * np.pi))
    return out * np.exp(-t * rng.uniform(0.5, 3.0))


def _note_freq(rng: np.random.Generator) -> float:
    # piano-ish range, A2..A5
    return 110.0 * 2 ** (rng.integers(0, 37) / 12)


def polyphonic_corpus(minutes: float, rng: np.random.Generator, n_tracks: int = 4,
                      rate: int = WORKING_RATE) -> list[Waveform]:
    """Tracks of overlapping detuned-sine chords and plucked strings."""
    per_track = int(round(minutes * 60 * rate / n_tracks))
    tracks = []
    for _ in range(n_tracks):
        x = np.zeros(per_track)
        pos = 0
        while pos < per_track:
            dur = rng.uniform(0.4, 1.5)
            if rng.random() < 0.5:
                chord = [_note_freq(rng) for _ in range(int(rng.integers(1, 4)))]
                note = detuned_chord(chord, dur, rng, rate)
            else:
                note = karplus_strong(_note_freq(rng), dur, rng, rate)
            end = min(per_track, pos + len(note))
            x[pos:end] += note[:end - pos]
            pos += int(len(note) * rng.uniform(0.3, 1.0))
        tracks.append(Waveform(0.9 * x / max(np.max(np.abs(x)), 1e-12), rate))
    return tracks


def two_regime(seconds: float, segment: float = 0.5, freqs=(220.0, 660.0), rate: int = WORKING_RATE,
               amplitude: float = 0.8) -> Waveform:
    """Alternating fixed-length segments of two pure tones, phase-continuous."""
    n = int(round(seconds * rate))
    seg = int(round(segment * rate))
    f = np.where((np.arange(n) // seg) % 2 == 0, freqs[0], freqs[1])
    phase = 2 * np.pi * np.cumsum(f) / rate
    return Waveform(amplitude * np.sin(phase), rate)
