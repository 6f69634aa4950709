"""The 30-second scripted mission: takeoff, obstacle, flower landing.

The course terrain has a curved 6-cm obstacle mid-field (cosine-squared
dome at x = 0.35 m) and a 5-cm flower disk on a 4-cm stem at
x = 0.80 m.  The script climbs to 5 cm, marches forward in 5-cm
increments with *zero* altitude commands, and lands on the flower.
Terrain-relative altitude control does all the vertical work: the
time-of-flight sensor sees the ground rise under the vehicle and the
altitude loop follows it.
"""

from flapsim import metrics
from flapsim.config import preset
from flapsim.harness import run_experiment


def main():
    log, rep = run_experiment(preset("mission30s", seed=1))

    # reconstruct the phase timeline from the log
    i = metrics._i
    t_cross0 = t_cross1 = t_land = None
    for k, r in enumerate(log.rows):
        if t_cross0 is None and r[i("px")] >= 0.20:
            t_cross0 = r[i("t")]
        if t_cross1 is None and r[i("px")] >= 0.50:
            t_cross1 = r[i("t")]
        if t_land is None and r[i("landed")] and r[i("t")] > 5.0:
            t_land = r[i("t")]

    print("mission30s, seed 1")
    print(f"  obstacle crossing      t = {t_cross0:.1f} .. {t_cross1:.1f} s")
    print(f"  touchdown              t = {t_land:.1f} s")
    print(f"  course length          {rep.path_length_m:.2f} m")

    err = metrics.touchdown_error_cm(log, 0.80, 0.0)
    hmax = metrics.height_error_over_region_cm(log, 0.20, 0.50)
    print(f"  landing error          {err:.2f} cm from flower center")
    print(f"  height error on bump   {hmax:.2f} cm "
          "(max, terrain-relative)")

    final = log.rows[-1]
    print(f"  rest position          x = {final[i('px')]:.3f} m, "
          f"z = {final[i('pz')]:.3f} m "
          f"(flower top = {0.04:.2f} m stem)")

    print("\ntouchdown over 10 seeds (cm from flower center):")
    for seed in range(10):
        lg, _ = run_experiment(preset("mission30s", seed=seed))
        landed = bool(lg.rows[-1][i("landed")])
        e = metrics.touchdown_error_cm(lg, 0.80, 0.0) if landed else None
        print(f"  seed {seed}: "
              + (f"{e:.2f}" if e is not None else "did not land"))


if __name__ == "__main__":
    main()
