"""Exact radii, closure under collisions, and who feeds whom.

Sums and differences of radii never get deeper than the deepest input, so
the whole evolution lives on the grid j * 3**-L fixed by the initial data.
"""

from itertools import product

from wavelattice.lattice import add, canonical, decompose, enumerate_interactions, sub, upsilon

xi = 3
a, b = canonical(xi, 1, 2), canonical(xi, 5, 2)  # 1/9 and 5/9
print(f"{a.value} + {b.value} = {add(a, b).value} at level {add(a, b).eta}")
print(f"{b.value} - {a.value} = {sub(b, a).value} at level {sub(b, a).eta}")

m = 14
mu, nu = decompose(xi, m)
print(f"\n{m} = {xi}*{mu} - {nu}; upsilon gives back {upsilon(xi, mu, nu)}")

# which level triples (eta_a, eta_b, eta_sum) actually occur?
pts = [canonical(xi, upsilon(xi, mu, nu), eta)
       for eta in range(4) for mu in range(1, 8) for nu in (1, 2)]
seen = sorted({(p.eta, q.eta, add(p, q).eta) for p, q in product(pts, pts)})
print("\nrealised level triples:", seen)

support = [canonical(xi, k, 0) for k in range(1, 5)] + [canonical(xi, 1, 1), canonical(xi, 2, 1)]
target = canonical(xi, 1, 0)
print(f"\nresonances feeding radius {target.value} from support "
      f"{[str(r.value) for r in support]}:")
for t in enumerate_interactions(support, target):
    print(f"  {t.kind.value:5s} a={t.a.value} b={t.b.value}")
