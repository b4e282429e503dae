"""Criterion-1 evaluation harness: TL coupler chain -> fit -> Hamiltonian."""
import time

import numpy as np

from qznet.distributed import (
    SeriesCapacitor, ShuntBranch, TLine, TwoPortChain, sweep_chain,
)
from qznet.qham import JunctionSpec, TransmonSpec, hamiltonian_params
from qznet.vfit import FitConfig, fit_with_report

TAB_F = np.array([4.965470e9, 9.931947e9, 14.896434e9, 19.8619404e9])
TAB_G1 = np.array([-55.113e6, -77.924e6, -95.422e6, -110.154e6])
TAB_G2 = np.array([54.367e6, -76.869e6, 94.130e6, -108.662e6])
TAB_G12 = 0.652e6

CHAIN = TwoPortChain((
    ShuntBranch(c=70e-15),
    SeriesCapacitor(6.5e-15),
    TLine(l_per_m=0.438e-6, c_per_m=0.159e-9, length=12e-3),
    SeriesCapacitor(6.5e-15),
    ShuntBranch(c=72e-15),
))


def evaluate(pairs, relaxed=True, weight="uniform", n_samples=2001,
             verbose=True):
    t0 = time.time()
    freqs = np.linspace(1e9, 22.5e9, n_samples)
    data = sweep_chain(CHAIN, freqs)
    cfg = FitConfig(band=(1e9, 22.5e9), n_pole_pairs=pairs,
                    relaxed=relaxed, weight_mode=weight)
    model, report = fit_with_report(data, cfg)
    st = report["stages"]
    spec = TransmonSpec(
        junctions=(
            JunctionSpec("P1", freq_target=4e9),
            JunctionSpec("P2", freq_target=4e9),
        ),
    )
    hp = hamiltonian_params(model, spec)
    fitted = np.sort(hp.omega_r) / (2 * np.pi)
    # match table freqs to nearest fitted
    idx = [int(np.argmin(np.abs(fitted - f))) for f in TAB_F]
    ferr = np.abs(fitted[idx] - TAB_F) / TAB_F
    g1 = hp.g_qr[0, :] / (2 * np.pi)
    g2 = hp.g_qr[1, :] / (2 * np.pi)
    order = np.argsort(hp.omega_r)
    g1o, g2o = g1[order][idx], g2[order][idx]
    g1e = np.abs(np.abs(g1o) - np.abs(TAB_G1)) / np.abs(TAB_G1)
    g2e = np.abs(np.abs(g2o) - np.abs(TAB_G2)) / np.abs(TAB_G2)
    sign_ok = np.all(np.sign(g1o * g2o) == np.sign(TAB_G1 * TAB_G2))
    g12 = hp.g_qq[0, 1] / (2 * np.pi)
    g12e = abs(abs(g12) - TAB_G12) / TAB_G12
    dt = time.time() - t0
    if verbose:
        print(f"pairs={pairs} relaxed={relaxed} weight={weight}")
        print(f"  modes (GHz): {[f'{f/1e9:.4f}' for f in fitted]}")
        print(f"  dc dropped: {st['lossless']['dropped']}")
        print(f"  refine rel_rms: {st['refine']['rel_rms']:.3e}")
        print(f"  ferr max: {ferr.max():.2e}  (tol 1e-3)")
        print(f"  g1 err max: {g1e.max():.3%}  g2 err max: {g2e.max():.3%}  (tol 2%)")
        print(f"  signs ok: {sign_ok}")
        print(f"  g12 = {g12/1e6:.4f} MHz  err {g12e:.2%}  (tol 5%)")
        print(f"  time {dt:.1f}s")
    return dict(fitted=fitted, ferr=ferr.max(), g1e=g1e.max(), g2e=g2e.max(),
                signs=bool(sign_ok), g12=g12, g12e=g12e, report=report, dt=dt)


if __name__ == "__main__":
    for pairs in (4, 5, 6):
        evaluate(pairs)
        print()
