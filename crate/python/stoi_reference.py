"""Prints the STOI reference scores frozen in crates/core/tests/common.

Needs pystoi (pip install pystoi). The signal pairs mirror stoi_pair() in
the Rust test helpers.
"""

import numpy as np
from pystoi import stoi

M = (1 << 64) - 1
def lcg(seed, n):
    s = seed & M
    out = np.empty(n)
    for i in range(n):
        s = (s * 6364136223846793005 + 1442695040888963407) & M
        out[i] = (s >> 11) / float(1 << 53) * 2.0 - 1.0
    return out

def pair(i):
    fs = [8000, 10000, 16000][i % 3]
    n = 3 * fs
    t = np.arange(n) / fs
    x = np.zeros(n)
    for h in range(3):
        f = 300.0 + 450.0 * h + 37.0 * i
        fm = 2.0 + 1.3 * h + 0.2 * i
        x += (1.0 / (h + 1)) * np.abs(np.sin(2 * np.pi * fm * t)) * np.sin(2 * np.pi * f * t + 0.5 * h)
    gap0, gap1 = int(1.2 * fs), int(1.7 * fs)
    x[gap0:gap1] = 0.0
    noise = lcg(1000 + i, n)
    snr_db = -10.0 + 50.0 * i / 19.0
    p = np.mean(x ** 2)
    sigma = np.sqrt(p / 10 ** (snr_db / 10) * 3.0)
    y = x + sigma * noise
    if i % 4 == 1:
        y = np.convolve(y, [0.5, 0.3, 0.2])[:n]
    return x, y, fs

for i in range(20):
    x, y, fs = pair(i)
    print(f"{stoi(x, y, fs):.10f},")
