"""Full sweep on the linear benchmark, small enough to finish in well
under a minute.

Runs the grid described by configs/linear_small.json (16 noise levels x
2 covariance policies x 3 replications), then renders the scatter and
degeneracy figures next to the CSVs. The same config works from the
command line:

    capf sweep --config demos/configs/linear_small.json
    capf figures --out out/linear_small
"""

from pathlib import Path

import numpy as np

from capf import emit_figures, load_config, run_sweep


def main():
    config = load_config(Path(__file__).parent / "configs" / "linear_small.json")
    print(f"sweeping {len(config.eps_values)} noise levels -> {config.out_dir}")
    result = run_sweep(config)
    print(f"{len(result.records)} runs, {len(result.errors)} failed")

    # ends of the grid, medians over replications
    for policy in config.cov_policies:
        rows = [r for r in result.records if r.cov_policy == policy]
        lo = min(r.eps for r in rows)
        hi = max(r.eps for r in rows)
        for eps in (lo, hi):
            at = [r for r in rows if r.eps == eps]
            logz = np.median([r.logz for r in at])
            err = np.median([r.mse for r in at])
            deg = sum(r.degenerate for r in at)
            print(
                f"  {policy:>14} eps={eps:4.2f}: median logZ {logz:10.2f}, "
                f"median MSE {err:8.5f}, degenerate {deg}/{len(at)}"
            )

    written = emit_figures(result, config.out_dir)
    print("figures:")
    for path in written:
        print(f"  {path}")


if __name__ == "__main__":
    main()
