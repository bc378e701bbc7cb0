import numpy as np, math, time, sys
from eightflow import curvegeom as cg, flowcore as fc, seeds, diagnostics as dg, renorm

n = int(sys.argv[1]) if len(sys.argv) > 1 else 400
x_floor = float(sys.argv[2]) if len(sys.argv) > 2 else 5e-4
diag_every = int(sys.argv[3]) if len(sys.argv) > 3 else 4000
arc = seeds.lemniscate_arc(1.0, n)
ctl = fc.StepControl(h_max=arc.arclength/(n-1), x_floor=x_floor, max_steps=1_500_000)
st = fc.FlowState.from_arc(arc)
J = (math.pi/4, 3*math.pi/4)
t0 = time.time()
rows = []
def hook(s):
    th = fc.estimate_vanishing_time(s)
    kh = s.kappa_h if s.kappa_h >= 0 else float(np.abs(fc.vertex_curvatures(s.arc)).max()*s.h_min)
    r = dg.diag_record(s, th, J)
    rows.append(r)
    print('%8d Th-t=%.3e X=%.5f a=%.4f Yk=%.4f A/XY=%.4f gF=%.4f gFt=%.4f bow=%.4f '
          'mig=(%.3f,%.3f) beta=%.3f ell=%.3f sup=%.2e int=%.2e zc=%d n=%d kh=%.3f'
          % (s.step_index, th-s.t, r.X, r.alpha, r.Y*r.kappa_right/(math.pi/2),
             r.A/(r.X*r.Y), r.gr_gap_F, r.gr_gap_Ftheta, r.bowtie_dist,
             r.migration_x, r.migration_y, r.beta, r.ell,
             r.support_residual, r.integral_residual, r.node_zero_count, s.arc.n, kh), flush=True)
res = fc.evolve(st, ctl, hooks=[hook], diag_interval=diag_every)
print('STOP:', res.stop_reason, 'steps:', res.steps, 'wall %.1f s' % (time.time()-t0), 'remeshes:', len(res.events))
