"""One run of the d = 50 experiment.

Training: 20 draws from Dirichlet(5) (+1, concentrated near the simplex
barycenter) and 20 from Dirichlet(0.5) (-1, spread toward the corners).
Testing: 200 fresh -1 draws. A linear rule has to put the barycenter on one
side and most of the spread-out class on the other, which it cannot do when
the -1 class surrounds the +1 class. The sphere can.
"""
import sys

from radialdwd import simulation_one

seeds = range(int(sys.argv[1])) if len(sys.argv) > 1 else range(3)
print("seed   md  ldwd  rdwd     (test points misclassified, out of 200)")
for seed in seeds:
    counts = simulation_one(seed)
    print(f"{seed:4d} {counts['md']:4d} {counts['ldwd']:5d} {counts['rdwd']:5d}")
