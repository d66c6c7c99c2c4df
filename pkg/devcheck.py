"""Dev scratch: validate potential numerics against closed forms."""
import math
import time
import numpy as np

from asymcone.geometry import Point3, half_cosine_integral
from asymcone.potentials import (
    ExplicitKs, GeometricKs, LatticeSpec, RescaleParams, IntervalUnion,
    phi_lattice, phi_rescaled, phi_segment, phi_union, segment_mass,
    total_block_mass, fiber_diameter, segment_factor_bulk, lattice_factor_bulk,
)

ok = True
def check(name, got, want, tol):
    global ok
    err = abs(got - want)
    flag = "OK " if err <= tol else "FAIL"
    if err > tol: ok = False
    print(f"{flag} {name}: got={got!r} want={want!r} err={err:.3g} tol={tol:g}")

# cos integral vs gamma closed form: 2*int_0^{pi/2} cos^-1/2 = 2 * B(1/4,1/2)/2...
from scipy.special import gamma as G
closed = 2.0 * (math.sqrt(math.pi) * G(0.25) / G(0.75) / 2.0)
check("half_cosine_integral", half_cosine_integral(), closed, 1e-10)

# segment potential arctan oracle: alpha=2,P=1,S=0,T=inf,z=(-1,0,0) -> pi/2
z = Point3.of(-1.0)
r = phi_segment(0.0, math.inf, 1.0, 2.0, z, 1e-10)
check("phi_segment axis pi/2", r.value, math.pi/2, 1e-9)
print("   err bound:", r.error)

# finite T: arctan(T) - arctan(S)
r = phi_segment(0.5, 3.0, 1.0, 2.0, z, 1e-10)
check("phi_segment finite", r.value, math.atan(3.0)-math.atan(0.5), 1e-9)

# union: {(0,1),(2,3)} -> atan1 + atan3 - atan2
u = IntervalUnion(((0.0,1.0),(2.0,3.0)))
r = phi_union(u, 1.0, 2.0, z, 1e-10)
check("phi_union", r.value, math.atan(1.0)+math.atan(3.0)-math.atan(2.0), 1e-9)

# off-axis point vs brute quad
from scipy.integrate import quad
for (zr, rho, s, t, p, al) in [(0.7, 0.3, 0.0, math.inf, 1.0, 2.0),
                               (2.0, 1e-3, 0.0, math.inf, 1.0, 2.0),
                               (2.0, 1e-4, 0.5, 5.0, 1.0, 2.0),
                               (-3.0, 2.0, 0.0, math.inf, 0.5, 1.5),
                               (5.0, 0.01, 0.0, math.inf, 2.0, 3.0)]:
    zz = Point3.of(zr, rho)
    got = phi_segment(s, t, p, al, zz, 1e-9)
    f = lambda x: 1.0/math.hypot(p*x**al - zr, rho)
    xs = (max(zr,0)/p)**(1/al)
    pieces = sorted(set([s, min(max(xs, s), t if t!=math.inf else xs+10), (t if t != math.inf else 1000.0)]))
    want = 0.0
    for a,b in zip(pieces, pieces[1:]):
        want += quad(f, a, b, limit=500, points=[xs] if a < xs < b else None)[0]
    if t == math.inf:
        want += quad(lambda v: (1000.0/v**2)*f(1000.0/v), 0, 1, limit=500)[0]
    check(f"phi_segment brute zr={zr} rho={rho}", got.value, want, max(5e-8, got.error*2))

# on-curve -> inf
r = phi_segment(0.0, 2.0, 1.0, 2.0, Point3.of(1.0), 1e-8)
print("on-curve inf:", r.value, r.is_infinite)

# segment mass
check("segment_mass pi/2", segment_mass(0.0, math.inf, 1.0, 2.0), math.pi/2, 1e-11)
check("segment_mass finite", segment_mass(1.0, 4.0, 1.0, 2.0), math.atan(4)-math.atan(1), 1e-11)
check("segment_mass alpha=1.5", segment_mass(0.0, math.inf, 2.0, 1.5),
      quad(lambda x: 1/(1+2*x**1.5), 0, np.inf, limit=400)[0], 1e-9)

# lattice sum: full lattice k>=0, alpha=2 at (-1,0,0): 1/2 + pi/2 coth(pi)
spec_full = LatticeSpec(2.0, ExplicitKs((0.0, math.inf)))
want = 0.5 + (math.pi/2)/math.tanh(math.pi)
t0=time.time()
r = phi_lattice(spec_full, Point3.of(-1.0), 1e-9)
print("   lattice time", time.time()-t0)
check("lattice coth", r.value, want, 1e-8)
print("   err bound:", r.error)

# brute force direct comparison on a blocked lattice
spec = LatticeSpec(2.0, GeometricKs(1, 10.0))
zz = Point3.of(0.0, 1.0)
rp = RescaleParams(1e-6, 1.0)
t0=time.time()
r = phi_rescaled(spec, rp, zz, 1e-8)
print("   phi_rescaled time", time.time()-t0)
# direct: sum over k in blocks [1,10),[100,1000),[1e4,1e5),[1e6,1e7) cut at 1e6 centers total
N = rp.scale(2.0); c = rp.center_scale(2.0)
ks = np.concatenate([np.arange(1,10), np.arange(100,1000), np.arange(10**4,10**5), np.arange(10**6,2*10**6)])
direct = float(np.sum(1.0/np.hypot(c*ks**2 - 0.0, 1.0))) / N
# add analytic continuation of remaining tail crudely: k in [2e6,1e7) and [1e8,...)
ks2 = np.arange(2*10**6, 10**7)
direct += float(np.sum(1.0/(c*ks2**2))) / N
print("   comparison direct vs certified:", direct, r.value, "err bound", r.error)
check("phi_rescaled ~ direct", r.value, direct, 2e-6)

# scaling identity: phi for a*Lambda at zeta = a^-1 phi at a^-1 zeta
# phi_rescaled with (a,P) vs identity check Phi_a(z) = (1/N) Phi_{NaLambda}(z)
rng = np.random.default_rng(42)
worst = 0.0
for _ in range(20):
    a = 10.0**rng.uniform(-4, 2)
    zp = Point3.of(*rng.uniform(-3, 3, 3))
    # scaling: Phi_{aL}(z) = a^-1 Phi_L(z/a). Test with finite block lattice via phi_lattice
    spec2 = LatticeSpec(2.0, ExplicitKs((1.0, 50.0, 200.0, 1000.0)))
    lhs_c = phi_lattice_scaled = None
    # emulate a*Lambda via rescale params: N a Lambda with N=1... use direct approach:
    # Phi_{aLambda}(z) = sum 1/|z - a k^2 e1| ; compute by lattice machinery with c=a
    from asymcone.potentials import _axis_point_sum
    v1, e1 = _axis_point_sum(spec2, a, zp.zr, zp.cnorm, 1e-10)
    z2 = Point3.of(zp.zr/a, zp.zc[0]/a, zp.zc[1]/a)
    v2, e2 = _axis_point_sum(spec2, 1.0, z2.zr, z2.cnorm, 1e-10)
    rel = abs(v1 - v2/a)/max(v1,1e-300)
    worst = max(worst, rel)
print("scaling identity worst rel:", worst); ok = ok and worst < 1e-9

# total block mass: alpha=2 geometric K ratio 10, a=1e-4 P=1
rp2 = RescaleParams(1e-4, 1.0)
tm = total_block_mass(spec, rp2, 1e-10)
# direct: sum_n segment_mass(S_n, T_n)
direct, nn = 0.0, 0
while True:
    s_, t_ = rp2.s_t(spec, nn)
    if math.isinf(s_) or s_ > 1e8: break
    direct += segment_mass(s_, min(t_, 1e14), 1.0, 2.0)
    if math.isinf(t_): break
    nn += 1
check("total_block_mass", tm.value, direct, max(1e-8, 3*tm.error))
print("   err bound:", tm.error)

# fiber diameter consistency
fd = fiber_diameter(spec, rp2, Point3.of(0.3, 0.2, 0.1), 1e-8)
ph = phi_rescaled(spec, rp2, Point3.of(0.3, 0.2, 0.1), 1e-10)
ident = fd.value**2 * rp2.scale(2.0)**2 * ph.value
check("fiber identity", ident, math.pi**2, 1e-5)

# bulk segment vs certified
rng = np.random.default_rng(7)
zrs = rng.uniform(-3, 6, 300)
rhos = 10.0**rng.uniform(-6, 0.8, 300)
for (s,t,p,al) in [(0.0, math.inf, 1.0, 2.0), (2.0, math.inf, 0.5, 2.0), (0.0, 1.0, 1.0, 2.0), (1.0, 3.0, 2.0, 1.5), (8.0**1.5, math.inf, 8.0**-1.5, 2.0)]:
    t0 = time.time()
    bulk = segment_factor_bulk(s, t, p, al, zrs, rhos)
    tb = time.time()-t0
    worst = 0.0; worst_at = None
    for i in range(zrs.size):
        cert = phi_segment(s, t, p, al, Point3.of(zrs[i], rhos[i]), 1e-10)
        rel = abs(bulk[i]-cert.value)/max(abs(cert.value), 1e-300)
        if rel > worst: worst, worst_at = rel, (zrs[i], rhos[i])
    print(f"bulk seg S={s} T={t} P={p} al={al}: worst rel {worst:.2e} at {worst_at}, time {tb*1e3:.1f}ms/300pts")
    ok = ok and worst < 5e-5

# bulk lattice vs certified
t0=time.time()
bl = lattice_factor_bulk(spec, rp2, zrs, rhos)
tb=time.time()-t0
worst = 0.0
for i in range(0, zrs.size, 7):
    cert = phi_rescaled(spec, rp2, Point3.of(zrs[i], rhos[i]), 1e-10)
    rel = abs(bl[i]-cert.value)/cert.value
    worst = max(worst, rel)
print(f"bulk lattice worst rel {worst:.2e}, time {tb*1e3:.1f}ms/300pts")
ok = ok and worst < 5e-5

print("ALL OK" if ok else "SOME FAILURES")
