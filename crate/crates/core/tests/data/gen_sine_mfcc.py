"""Reference MFCCs for a 1 kHz sine with a linear amplitude ramp (so the
deltas are not all zero), computed with numpy/scipy.

Writes sine_1khz_mfcc.tsv: one row per frame, 39 columns
(c1..c12, log energy, deltas, delta-deltas).

Conventions: 25 ms Hamming frames every 10 ms, per-frame pre-emphasis 0.97
(first sample reuses itself), 512-point FFT power spectrum, 23 triangular
filters evenly spaced on the 1127 ln(1 + f/700) mel scale from 0 Hz to
Nyquist, orthonormal DCT-II, log energy of the raw frame, regression deltas
over +-2 frames with edge replication.
"""
import numpy as np
from scipy.fft import dct

RATE = 16000
N = 4000
FRAME, SHIFT, NFFT, NFILT = 400, 160, 512, 23
FLOOR = 1e-10


def mel(f):
    return 1127.0 * np.log1p(f / 700.0)


def filterbank():
    edges = np.linspace(mel(0.0), mel(RATE / 2), NFILT + 2)
    bins = mel(np.arange(NFFT // 2 + 1) * RATE / NFFT)
    fb = np.zeros((NFILT, bins.size))
    for m in range(NFILT):
        lo, c, hi = edges[m], edges[m + 1], edges[m + 2]
        rising = (bins > lo) & (bins <= c)
        falling = (bins > c) & (bins < hi)
        fb[m, rising] = (bins[rising] - lo) / (c - lo)
        fb[m, falling] = (hi - bins[falling]) / (hi - c)
    return fb


def deltas(x, w=2):
    padded = np.pad(x, ((w, w), (0, 0)), mode="edge")
    num = sum(n * (padded[w + n:w + n + len(x)] - padded[w - n:w - n + len(x)]) for n in range(1, w + 1))
    return num / (2 * sum(n * n for n in range(1, w + 1)))


def main():
    n = np.arange(N)
    signal = np.round((2000.0 + 10000.0 * n / N) * np.sin(2 * np.pi * 1000.0 * n / RATE))
    frames = np.stack([signal[t:t + FRAME] for t in range(0, N - FRAME + 1, SHIFT)])
    log_e = np.log(np.maximum((frames ** 2).sum(axis=1), FLOOR))
    prev = np.concatenate([frames[:, :1], frames[:, :-1]], axis=1)
    emph = (frames - 0.97 * prev) * np.hamming(FRAME)
    power = np.abs(np.fft.rfft(emph, NFFT)) ** 2
    log_mel = np.log(np.maximum(power @ filterbank().T, FLOOR))
    ceps = dct(log_mel, type=2, norm="ortho", axis=1)[:, 1:13]
    static = np.hstack([ceps, log_e[:, None]])
    d1 = deltas(static)
    d2 = deltas(d1)
    out = np.hstack([static, d1, d2])
    np.savetxt("sine_1khz_mfcc.tsv", out, delimiter="\t", fmt="%.9g")


if __name__ == "__main__":
    main()
