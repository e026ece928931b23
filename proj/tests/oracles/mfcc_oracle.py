# Copyright 2026 The skws Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#   http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Float64 reference MFCC used to freeze the frontend golden values.

Independent of the C++ code path: numpy FFT, explicit HTK mel triangles and an
orthonormal DCT-II from scipy.
"""

import numpy as np
from scipy.fft import dct

SR = 16000
N_FFT = 1024
HOP = 320
FRAMES = 47
BANDS = 40
COEFFS = 10

def lcg_noise(n):
    """Uniform noise in [-0.5, 0.5) from a 31-bit linear congruential generator."""
    out = np.empty(n)
    state = 12345
    for i in range(n):
        state = (state * 1103515245 + 12345) % (1 << 31)
        out[i] = state / float(1 << 31) - 0.5
    return out

def test_signal():
    n = np.arange(SR, dtype=np.float64)
    x = 0.5 * np.sin(2 * np.pi * (300.0 + 2000.0 * n / SR) * n / SR) + 0.1 * np.sin(
        2 * np.pi * 1234.0 * n / SR
    ) + 0.05 + 0.02 * lcg_noise(SR)
    return x.astype(np.float32)

def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + f / 700.0)

def mel_to_hz(m):
    return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

def mel_matrix():
    edges = mel_to_hz(np.linspace(hz_to_mel(20.0), hz_to_mel(8000.0), BANDS + 2))
    freqs = np.arange(N_FFT // 2 + 1) * SR / N_FFT
    m = np.zeros((BANDS, freqs.size))
    for b in range(BANDS):
        lo, c, hi = edges[b], edges[b + 1], edges[b + 2]
        up = (freqs > lo) & (freqs <= c)
        down = (freqs > c) & (freqs < hi)
        m[b, up] = (freqs[up] - lo) / (c - lo)
        m[b, down] = (hi - freqs[down]) / (hi - c)
    return m

def mfcc(frame):
    x = frame.astype(np.float64)
    x = x - x.mean()
    win = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(N_FFT) / N_FFT)
    mel = mel_matrix()
    out = np.zeros((FRAMES, COEFFS))
    for r in range(FRAMES):
        seg = x[r * HOP : r * HOP + N_FFT] * win
        power = np.abs(np.fft.rfft(seg)) ** 2
        logmel = np.log(np.maximum(mel @ power, 1e-10))
        out[r] = dct(logmel, type=2, norm="ortho")[:COEFFS]
    return out

if __name__ == "__main__":
    m = mfcc(test_signal())
    for r in (0, 23, 46):
        print(f"row {r}: " + ", ".join(f"{v:.6f}" for v in m[r]))
