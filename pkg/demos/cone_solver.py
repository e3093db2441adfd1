"""The bundled cone solver on a few small problems.

Each problem is ``min c'x  s.t.  Ax = b`` with ``x`` in a product of
nonnegative orthants and second-order cones.
"""
import numpy as np

from radialdwd.socp import ConeSpec, ConicProgram, Nonneg, SecondOrder, dump_program, solve


def show(title, prog):
    sol = solve(prog)
    print(f"{title}\n  status {sol.status.value}, objective {sol.objective_value:.9f}, "
          f"{sol.iterations} iterations\n  x = {np.round(sol.primal, 6)}\n")
    return sol


# Smallest t with (t, 3, 4) in the cone: the Euclidean norm, 5.
norm = ConicProgram([1.0, 0, 0], [[0, 1.0, 0], [0, 0, 1.0]], [3.0, 4.0],
                    ConeSpec([SecondOrder(3)]))
show("norm of (3, 4)", norm)

# A linear program: cheapest mix of three items that sums to one.
show("linear program", ConicProgram([1.0, 2.0, 3.0], [[1.0, 1.0, 1.0]], [1.0],
                                    ConeSpec([Nonneg(3)])))

# Nearest point to (2, 1) on the segment u1 + u2 = 1, u >= 0, written as
# min t  s.t.  (t, w) in the cone, w = u - p. Variables: t, w1, w2, u1, u2.
p = np.array([2.0, 1.0])
A = np.array([[0, 1.0, 0, -1.0, 0], [0, 0, 1.0, 0, -1.0], [0, 0, 0, 1.0, 1.0]])
dist = ConicProgram([1.0, 0, 0, 0, 0], A, [-p[0], -p[1], 1.0],
                    ConeSpec([SecondOrder(3), Nonneg(2)]))
sol = show("distance from (2, 1) to the segment u1 + u2 = 1, u >= 0", dist)
print(f"  exact answer sqrt(2) = {np.sqrt(2):.9f}\n")

# An infeasible program: x >= 0 with x1 + x2 = -1.
show("infeasible program", ConicProgram([1.0, 1.0], [[1.0, 1.0]], [-1.0], ConeSpec([Nonneg(2)])))

print("debug dump of the first program:\n" + dump_program(norm))
