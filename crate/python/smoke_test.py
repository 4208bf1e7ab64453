"""Smoke test for the clustercache_py extension.

Build it with
    cargo build -p clustercache-py --release --features extension-module
    cp target/release/libclustercache_py.so python/clustercache_py.so
then run this script from the repository root.
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import clustercache_py as cc


def main():
    assert abs(cc.a_beta(4.0) - math.pi / 4) < 1e-9
    assert abs(cc.l_func_limited(1.0, 5.0, 4.0) - 0.876062) < 1e-6
    assert cc.power_delta(5, 1.0) == -9.25
    assert abs(cc.min_backhaul_rate(0.1, 0.6, 1e6, 1.0) - 2.4e6) < 1e-3

    engine = cc.EffCapEngine(cc.RadioParams(pathloss_exponent=4.0), intervals=8192)
    e = engine.eff_cap_user(0.1, 50.0, 5e-6)
    mean, se = cc.mc_eff_cap(0.1, 50.0, 5e-6, 20000, 3)
    print(f"E analytic {e:.4f}, Monte Carlo {mean:.4f} +- {se:.4f}")
    assert abs(e - mean) <= max(0.02 * e, 4 * se)

    value, gain, p_hit = engine.cluster_eff_cap(5, 1.0, 5, 5e-6, 0.1, 0.6)
    print(f"cluster E {value:.4f}, gain {gain:.4f}, hit ratio {p_hit:.3f}")
    assert gain >= 0.0 and abs(p_hit - 1.0) < 1e-12

    inst = cc.ClusterInstance(seed=11, rrhs=5, contents=3)
    best, _ = inst.exhaustive_optimum()
    for name in ("nested", "suboptimal", "orthogonal", "full_reuse"):
        a = getattr(inst, name)()
        print(f"{name:>11}: {a}")
        assert a.welfare <= best + 1e-9
    shapley = inst.shapley()
    assert len(shapley) == 3 and all(len(row) == 5 for row in shapley)

    try:
        cc.RadioParams(pathloss_exponent=1.5)
    except ValueError as err:
        print(f"rejected bad exponent: {err}")
    else:
        raise AssertionError("expected ValueError")

    print("smoke test passed")


if __name__ == "__main__":
    main()
