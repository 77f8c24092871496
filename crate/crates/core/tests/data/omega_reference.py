"""Regenerates omega_reference.csv with 50-digit arithmetic."""
from mpmath import mp, mpf, exp, sqrt

mp.dps = 50
C = mpf("0.5")
EPS = [mpf(s) for s in ("1", "0.75", "0.5", "0.25", "0.125")]
VOL = [mpf(s) for s in ("0.015625", "0.0625", "0.25", "1", "4")]
TS = [mpf(s) for s in ("0", "0.05", "0.25", "0.5", "1")]

with open("omega_reference.csv", "w") as f:
    f.write("epsilon,volume,t,c,omega\n")
    for e in EPS:
        for v in VOL:
            for t in TS:
                rate = e ** mpf("-3.2") + v ** mpf("-0.25") / e
                w = exp(-C * rate * t) * min(e**5, e ** mpf("1.5") * sqrt(v))
                f.write(f"{e},{v},{t},{C},{mp.nstr(w, 30, min_fixed=0, max_fixed=0)}\n")
