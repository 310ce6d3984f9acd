"""The finite-q correlation kernel checked against brute force.

For q = 0.2 almost all the mass sits on partitions of volume <= 12, which we
can list exhaustively.  The probability that a few particle positions are
simultaneously occupied is then a finite sum, to be compared with the
determinant of the contour-integral kernel.
"""
from planeparts import FiniteQKernel, LatticePoint, Pattern, correlation, exact_pattern_probability

q = 0.2
kern = FiniteQKernel(q)

for text in ["0:1", "1:0", "0:-1", "0:1,1:0", "-1:2,0:1,1:2", "0:-1,0:1"]:
    m = Pattern.parse(text)
    brute, tail = exact_pattern_probability(q, m)
    det = correlation(kern, list(m))
    print(f"{text:>14}  enumeration {brute:.9f} (+{tail:.1e})   kernel {det:.9f}")

# deep in the frozen sea every site is occupied, far above it none are
deep, high = LatticePoint(0, -21), LatticePoint(0, 21)
print(f"K at (0, -21/2): {kern(deep, deep):.12f}    K at (0, 21/2): {kern(high, high):.3e}")
