"""Independent reference solutions shared by the tests."""
import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import minimize_scalar

G = 9.812


def gaussian_setup():
    """Smooth periodic data on [0, 1): Gaussian surface bump over a cosine bottom, uniform discharge."""
    b = lambda x: 0.2 * (1.0 + np.cos(6.0 * np.pi * np.asarray(x)))
    db = lambda x: -1.2 * np.pi * np.sin(6.0 * np.pi * np.asarray(x))
    level = lambda x: 0.5 + 0.3 * np.exp(-((np.asarray(x) - 0.5) / 0.05) ** 2)
    h0 = lambda x: level(x) - b(x)
    m0 = lambda x: 0.2 + 0 * np.asarray(x)
    return b, db, h0, m0


def spectral_reference(db_fn, h0, m0, times, N=512, g=G):
    """Pseudo-spectral method of lines on [0, 1), integrated with DOP853.

    Returns (x, h, m) with h and m of shape (N, len(times)).
    """
    x = np.arange(N) / N
    k = 2j * np.pi * np.fft.fftfreq(N, d=1.0 / N)
    dbx = db_fn(x)

    def ddx(f):
        return np.real(np.fft.ifft(k * np.fft.fft(f)))

    def rhs(_, y):
        h, m = y[:N], y[N:]
        return np.concatenate([-ddx(m), -ddx(m * m / h + 0.5 * g * h * h) - g * h * dbx])

    y0 = np.concatenate([h0(x), m0(x)])
    sol = solve_ivp(rhs, (0.0, max(times)), y0, method="DOP853", t_eval=sorted(times),
                    rtol=1e-13, atol=1e-14)
    return x, sol.y[:N], sol.y[N:]


def cell_integral(fn, recon, dx):
    """Adaptive quadrature of fn over a cell of width dx, split at the reconstruction's kinks."""
    half = 0.5 * dx
    pts = sorted({-half, half, *(p for p in (recon.shore, recon.aux.get("x1"),
                                              -recon.aux["x1"] if "x1" in recon.aux else None)
                                 if p is not None and -half < p < half)})
    total = 0.0
    for a, b in zip(pts, pts[1:]):
        total += quad(lambda x: float(fn(x)), a, b, epsabs=1e-15, epsrel=1e-14, limit=400)[0]
    return total


def sampled_parabola_min(hbar, hL, hR):
    """Dense sampling refined by bounded Brent minimisation near the sampled minimum."""
    f = lambda t: hL * (1 - t) + hR * t + (6 * hbar - 3 * hL - 3 * hR) * t * (1 - t)
    s = np.linspace(0.0, 1.0, 2001)
    vals = f(s)
    k = int(np.argmin(vals))
    lo, hi = s[max(k - 1, 0)], s[min(k + 1, s.size - 1)]
    r = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return min(float(vals[k]), float(r.fun))
