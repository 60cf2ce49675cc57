"""Generate standard problem #4 reference curves with magnum.np.

Independent of this package: magnum.np has its own demag tensor, exchange
stencil and an adaptive RKF45 integrator.  The output files are what
``grace validate`` compares against.

    python scripts/make_sp4_reference.py --nx 200 --ny 50 --nz 1 -o src/grace/data

Requires ``pip install magnumnp`` (not a dependency of the package).
"""
import argparse
import time
from pathlib import Path

import numpy as np
import torch
from magnumnp import (DemagField, ExchangeField, ExternalField, LLGSolver,
                      Mesh, State, constants)

FIELDS = {1: (-24.6e-3, 4.3e-3, 0.0), 2: (-35.5e-3, -6.3e-3, 0.0)}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--nx", type=int, default=200)
    ap.add_argument("--ny", type=int, default=50)
    ap.add_argument("--nz", type=int, default=1)
    ap.add_argument("--fields", default="1,2")
    ap.add_argument("--sample", type=float, default=1e-12, help="output spacing (s)")
    ap.add_argument("-o", "--out", default=".")
    args = ap.parse_args()

    # same gyromagnetic constant as the engine's default
    constants.gamma = 2.211e5
    n = (args.nx, args.ny, args.nz)
    dx = (500e-9 / n[0], 125e-9 / n[1], 3e-9 / n[2])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    mesh = Mesh(n, dx)
    state = State(mesh)
    state.material = {"Ms": 8e5, "A": 1.3e-11, "alpha": 1.0}
    demag = DemagField()
    exchange = ExchangeField()

    state.m = state.Constant([0.0, 0.0, 0.0])
    state.m[1:-1, :, :, 0] = 1.0
    state.m[(-1, 0), :, :, 1] = 1.0
    t0 = time.time()
    LLGSolver([demag, exchange]).relax(state, maxiter=2000, dm_tol=1e1)
    m0 = state.m.clone()
    print("relaxed in %.0f s, <m> = %s" % (time.time() - t0, m0.mean(dim=(0, 1, 2)).tolist()))

    for which in [int(s) for s in args.fields.split(",")]:
        state.m = m0.clone()
        state.t = 0.0
        state.material["alpha"] = 0.02
        b = FIELDS[which]
        external = ExternalField([b[0] / constants.mu_0, b[1] / constants.mu_0, b[2] / constants.mu_0])
        llg = LLGSolver([demag, exchange, external])
        rows = []
        t = 0.0
        nsteps = int(round(1e-9 / args.sample))
        for i in range(nsteps + 1):
            if i:
                llg.step(state, args.sample)
            avg = state.m.mean(dim=(0, 1, 2)).tolist()
            rows.append([i * args.sample * 1e9] + avg)
        path = out / ("sp4_field%d_reference.dat" % which)
        header = (
            "muMAG standard problem #4, field %d = (%g, %g, %g) T\n"
            "generated by magnum.np %s (RKF45, gamma=%g), grid %dx%dx%d, cells %.3g x %.3g x %.3g nm\n"
            "t_ns mx my mz"
            % (which, *b, __import__("magnumnp").__version__, constants.gamma, *n,
               dx[0] * 1e9, dx[1] * 1e9, dx[2] * 1e9)
        )
        np.savetxt(path, np.array(rows), fmt="%.9f", header=header)
        print("field %d done at %.0f s" % (which, time.time() - t0))


if __name__ == "__main__":
    torch.set_num_threads(1)
    main()
