"""High-precision likelihood-ratio statistics for the published 2x2 tables."""
import mpmath as mp

mp.mp.dps = 40


def g_stat(a, b, c, d):
    n = mp.mpf(a + b + c + d)
    rows = [a + b, c + d]
    cols = [a + c, b + d]
    cells = [[a, b], [c, d]]
    g = mp.mpf(0)
    for i in range(2):
        for j in range(2):
            o = cells[i][j]
            if o:
                e = mp.mpf(rows[i]) * cols[j] / n
                g += o * mp.log(o / e)
    return 2 * g


for t in [(11, 11, 6, 7), (15, 9, 9, 15), (14, 10, 10, 13)]:
    g = g_stat(*t)
    p = mp.erfc(mp.sqrt(g / 2))
    print(t, mp.nstr(g, 20), mp.nstr(p, 20))
