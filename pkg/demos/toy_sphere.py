"""Seven points in the plane: a tight cluster of +1 points surrounded by -1 points.

No line separates the cluster from the negatives on both sides of it, but a
small circle does. The fit returns the circle and a dual certificate, and the
certificate lets us check optimality without trusting the solver.
"""
import numpy as np

from radialdwd import RdwdConfig, TrainingSet, classify, fit, kkt_check, l1_normalize

X = np.array([[0.4, 0.5], [0.6, 0.5], [0.5, 0.4], [0.5, 0.6],   # +1 cluster around (0.5, 0.5)
              [1.0, 0.0], [0.0, 1.0], [0.05, 0.05]])            # -1 points
y = np.array([1, 1, 1, 1, -1, -1, -1])
data = TrainingSet(X, y)

# Penalty C = 10 / (squared distance from the +1 mean to the closest negative).
C = 10.0 / (2 * 0.45 ** 2)
model, cert = fit(data, RdwdConfig(penalty=C, weights=(1.0, 1.0)))

print(f"center  {model.center.round(5)}")
print(f"radius  {model.radius:.5f}")
print(f"outer iterations {model.iterations}, objective {model.objective:.5f}")

report = kkt_check(data, model, cert, tol=1e-4)
print(f"KKT residual {report['max']:.2e}  ->  {'certified' if report['passed'] else 'NOT certified'}")

print("\nsigned distances of the training points:")
for xi, yi, di in zip(X, y, model.score(X)):
    print(f"  {xi}  label {yi:+d}  distance {di:+.4f}")

# New counts are normalized onto the simplex first: [3, 3] becomes (0.5, 0.5), inside the circle.
print("\n", classify(model, l1_normalize([3, 3])))
print("", classify(model, l1_normalize([9, 1])))
