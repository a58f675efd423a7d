"""Independent reference implementations used as test oracles."""
import numpy as np

from ldanneal.spin_model import SpinGlassInstance


def random_instance(rng, n, density=0.5, bias_scale=0.5, discrete=False):
    """Gaussian (or NAT-7 style when ``discrete``) couplers on a random graph."""
    couplers = {}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < density:
                couplers[(i, j)] = (
                    rng.integers(1, 8) * rng.choice([-1, 1]) / 7 if discrete else rng.normal()
                )
    biases = {}
    if bias_scale:
        for i in range(n):
            if rng.random() < 0.7:
                biases[i] = (
                    rng.integers(1, 8) * rng.choice([-1, 1]) / 7 if discrete else bias_scale * rng.normal()
                )
    return SpinGlassInstance(n, couplers, biases)


def random_state(rng, n):
    return (2 * rng.integers(0, 2, size=n) - 1).astype(np.int8)


def brute_energy(instance, state):
    """Term-by-term reference, written without the package's helpers."""
    s = [int(v) for v in state]
    total = 0.0
    for (i, j), J in sorted(instance.couplers.items()):
        total += J * s[i] * s[j]
    for i, h in sorted(instance.biases.items()):
        total += h * s[i]
    return total


def all_states(n):
    """Every configuration, in basis-index order (site 0 is the low bit)."""
    for idx in range(1 << n):
        yield np.array([1 if (idx >> i) & 1 else -1 for i in range(n)], dtype=np.int8)


def brute_spectrum(instance):
    return [brute_energy(instance, s) for s in all_states(instance.n_sites)]


def brute_q_f(instance, ref, other):
    """Direct transcription of the q_F definition."""
    num = den = 0.0
    for (i, j), J in instance.couplers.items():
        if J * ref[i] * ref[j] < 0:
            den += abs(J)
            if J * other[i] * other[j] < 0 and ref[i] == other[i] and ref[j] == other[j]:
                num += abs(J)
    for i, h in instance.biases.items():
        if h * ref[i] < 0:
            den += abs(h)
            if h * other[i] < 0:
                num += abs(h)
    return 1.0 if den == 0 else num / den
