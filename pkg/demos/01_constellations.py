"""QAM alphabets: unit power, Gray labeling, and the 32-point cross.

Run:  python3 demos/01_constellations.py
"""

import numpy as np

from fiberq import build_alphabet

for order in (16, 32, 64):
    alphabet = build_alphabet(order)
    power = np.mean(np.abs(alphabet.points) ** 2)
    print(f"{order}-QAM: {len(alphabet.points)} points, "
          f"mean |p|^2 = {power:.12f}")

# nearest-neighbor Hamming distances: exactly 1 for square QAM, a few
# 2-bit seams for the folded cross
for order in (16, 32, 64):
    alphabet = build_alphabet(order)
    pts = alphabet.points
    d = np.abs(pts[:, None] - pts[None, :])
    spacing = d[d > 1e-12].min()
    hams = [int(np.sum(alphabet.bit_table[i] != alphabet.bit_table[j]))
            for i in range(order) for j in range(i + 1, order)
            if abs(d[i, j] - spacing) < 1e-9]
    print(f"{order}-QAM nearest-neighbor Hamming: mean {np.mean(hams):.3f}, "
          f"worst {max(hams)}")

print("\n32-QAM labeling table (bits -> grid position, unnormalized):")
alphabet = build_alphabet(32)
scaled = alphabet.points * np.sqrt(20.0)
for c in range(32):
    bits = "".join(str(b) for b in alphabet.bit_table[c])
    print(f"  {bits} -> ({scaled[c].real:+.0f}, {scaled[c].imag:+.0f})")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 3, figsize=(13, 4))
    for ax, order in zip(axes, (16, 32, 64)):
        alphabet = build_alphabet(order)
        ax.scatter(alphabet.points.real, alphabet.points.imag, s=12)
        for c, p in enumerate(alphabet.points):
            ax.annotate(format(c, f"0{alphabet.bits_per_symbol}b"),
                        (p.real, p.imag), fontsize=5, ha="center",
                        va="bottom")
        ax.set_title(f"{order}-QAM")
        ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig("demos/constellations.png", dpi=150)
    print("\nsaved demos/constellations.png")
except ImportError:
    print("\n(matplotlib not installed; skipping the plot)")
