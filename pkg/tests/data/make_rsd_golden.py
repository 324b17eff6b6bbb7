"""Regenerate the robust-soliton golden vector with 50-digit arithmetic.

Independent of the package: Luby's construction written out directly,
spike at ceil(k/S).  Run from this directory.
"""

import mpmath as mp

mp.mp.dps = 50
k, c, delta = 100, mp.mpf("0.1"), mp.mpf(1)
s = c * mp.log(k / delta) * mp.sqrt(k)
spike = int(mp.ceil(k / s))
rho = [mp.mpf(1) / k] + [mp.mpf(1) / (i * (i - 1)) for i in range(2, k + 1)]
tau = [mp.mpf(0)] * k
for i in range(1, spike):
    tau[i - 1] = s / (i * k)
tau[spike - 1] = s * mp.log(s / delta) / k
z = mp.fsum(rho) + mp.fsum(tau)
with open("rsd_k100_c0.1_delta1.txt", "w") as fh:
    fh.write(f"# robust soliton k=100 c=0.1 delta=1; S={mp.nstr(s, 20)} spike={spike}\n")
    for i in range(1, k + 1):
        fh.write(f"{i} {mp.nstr((rho[i - 1] + tau[i - 1]) / z, 25)}\n")
