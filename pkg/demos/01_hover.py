"""Hover at 5 cm: the baseline closed-loop experiment.

Runs the hover5 preset (12 s at 480 Hz with the calibrated sensor
noise model), prints the tracking and estimation metrics for one seed,
then repeats over five seeds to show the spread.  The lateral error is
dominated by optical-flow noise scaled by height; the altitude error
by time-of-flight quantization.
"""

import statistics

from flapsim import metrics
from flapsim.config import preset
from flapsim.harness import run_experiment


def main():
    log, rep = run_experiment(preset("hover5", seed=1))
    print(f"hover5, seed 1: {len(log)} ticks "
          f"({rep.duration_s:.1f} s at 480 Hz)")
    print(f"  lateral tracking RMS   {rep.tracking_lateral_cm:6.3f} cm")
    print(f"  altitude tracking RMS  {rep.tracking_altitude_cm:6.3f} cm")
    print(f"  attitude estimation    {rep.est_attitude_deg:6.3f} deg")
    print(f"  velocity estimation    {rep.est_velocity_cms:6.3f} cm/s")
    print(f"  dead-reckoning drift   {rep.drift_cm:6.3f} cm")

    print("\nacceptance thresholds for this preset:")
    for row in metrics.evaluate_acceptance(
            preset("hover5").acceptance, log, rep):
        mark = "PASS" if row["ok"] else "FAIL"
        print(f"  [{mark}] {row['name']}: {row['value']:.3f} "
              f"(limit {row['limit']})")

    print("\nseed spread (lateral RMS, cm):")
    vals = []
    for seed in range(5):
        _, r = run_experiment(preset("hover5", seed=seed))
        vals.append(r.tracking_lateral_cm)
        print(f"  seed {seed}: {r.tracking_lateral_cm:.3f}")
    print(f"  mean {statistics.mean(vals):.3f}, "
          f"stdev {statistics.stdev(vals):.3f}")

    # the same flight 5 cm higher: flow velocity error scales with
    # height, so lateral tracking must degrade
    _, r10 = run_experiment(preset("hover10", seed=1))
    print(f"\nhover10, seed 1: lateral RMS {r10.tracking_lateral_cm:.3f} cm "
          f"(height doubles, flow noise scales up)")


if __name__ == "__main__":
    main()
