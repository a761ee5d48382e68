"""Independent reference computations used as test oracles.

These deliberately avoid the library's own code paths: the power expansion
sums explicit cosines, the kNN oracle sorts exhaustive distances, and the
window count enumerates start indices.
"""

import cmath

import numpy as np

from csilab.channel import path_length, static_cfr


def cfr_power_sinusoid_expansion(config, paths, f, t):
    """CFR power as a constant offset plus explicit cosine terms:
    cross terms against the static response, pairwise dynamic cross terms,
    and the per-path power offsets."""
    hs = static_cfr(config, f)
    lam = config.wavelength
    d = [path_length(p, t) for p in paths]
    total = abs(hs) ** 2 + sum(abs(p.attenuation) ** 2 for p in paths)
    for k, p in enumerate(paths):
        total += (
            2.0
            * abs(hs)
            * abs(p.attenuation)
            * np.cos(2 * np.pi * d[k] / lam + cmath.phase(hs) - cmath.phase(p.attenuation))
        )
    for k in range(len(paths)):
        for l in range(k + 1, len(paths)):
            ak, al = paths[k].attenuation, paths[l].attenuation
            total += (
                2.0
                * abs(ak)
                * abs(al)
                * np.cos(
                    2 * np.pi * (d[k] - d[l]) / lam - cmath.phase(ak) + cmath.phase(al)
                )
            )
    return float(total)


def knn_majority_oracle(points, labels, query, k):
    """Exhaustive-distance k-NN with the same tie policy as the library:
    most votes, then smallest mean distance, then lowest label id."""
    dists = [float(np.linalg.norm(p - query)) for p in points]
    nearest = sorted(range(len(points)), key=lambda i: (dists[i], i))[:k]
    by_label = {}
    for i in nearest:
        by_label.setdefault(int(labels[i]), []).append(dists[i])
    return min(by_label, key=lambda lb: (-len(by_label[lb]), np.mean(by_label[lb]), lb))


def window_count_oracle(n, width, stride):
    return len([s for s in range(0, n - width + 1, stride)])


def dominant_nonzero_fft_bin(signal, sample_rate):
    """Frequency of the largest non-DC FFT magnitude of a real signal."""
    spectrum = np.abs(np.fft.rfft(signal - np.mean(signal)))
    spectrum[0] = 0.0
    return np.fft.rfftfreq(len(signal), d=1.0 / sample_rate)[int(np.argmax(spectrum))]
