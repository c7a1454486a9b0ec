"""Association costs of one detection against one object, by hand.

lambda = 0 (detection is surely a cell), P^D = 0.9, P^B = 0.1, r = 1 and
the detection density evaluates to n = 1/(2 pi) at the object.
"""
import math

lam, p_d, p_b, r = 0.0, 0.9, 0.1, 1.0
n = 1.0 / (2.0 * math.pi)

# share of the detection explained by the object vs a birth
assoc = (1.0 - lam) * p_d * r * n / (p_b + p_d * r * n)
unassigned = (1.0 - lam) - assoc

print(f"c_assoc = {-math.log(assoc)!r}")
print(f"c_unassigned = {-math.log(unassigned)!r}")
