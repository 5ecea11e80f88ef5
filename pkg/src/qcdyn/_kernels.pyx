# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled batch integrators. Point-outer loops keep each trajectory in
registers, which is what makes 1e10+ point-steps feasible; operation
order matches _kernels_py so both backends agree to rounding."""

from libc.math cimport cos, exp, sin

BACKEND = "compiled"


def leapfrog_quartic(double[::1] x, double[::1] p, double dt, long n_steps):
    cdef Py_ssize_t i, n = x.shape[0]
    cdef long s
    cdef double xi, pi, f, half = 0.5 * dt
    if n_steps <= 0:
        return
    with nogil:
        for i in range(n):
            xi = x[i]
            pi = p[i]
            f = -(2.0 * xi + 4.0 * xi * xi * xi)
            for s in range(n_steps):
                pi += half * f
                xi += dt * pi
                f = -(2.0 * xi + 4.0 * xi * xi * xi)
                pi += half * f
            x[i] = xi
            p[i] = pi


def leapfrog_harmonic(double[::1] x, double[::1] p, double dt, long n_steps,
                      double omega, double mass):
    cdef Py_ssize_t i, n = x.shape[0]
    cdef long s
    cdef double xi, pi, f, half = 0.5 * dt
    cdef double k = mass * omega * omega
    cdef double dtm = dt / mass
    if n_steps <= 0:
        return
    with nogil:
        for i in range(n):
            xi = x[i]
            pi = p[i]
            f = -k * xi
            for s in range(n_steps):
                pi += half * f
                xi += dtm * pi
                f = -k * xi
                pi += half * f
            x[i] = xi
            p[i] = pi


def leapfrog_toda(double[::1] x1, double[::1] x2, double[::1] p1,
                  double[::1] p2, double dt, long n_steps):
    cdef Py_ssize_t i, n = x1.shape[0]
    cdef long s
    cdef double a, b, q1, q2, e1, e2, e3, f1, f2, half = 0.5 * dt
    if n_steps <= 0:
        return
    with nogil:
        for i in range(n):
            a = x1[i]
            b = x2[i]
            q1 = p1[i]
            q2 = p2[i]
            e1 = exp(-a)
            e2 = exp(-(b - a))
            e3 = exp(b)
            f1 = e1 - e2
            f2 = e2 - e3
            for s in range(n_steps):
                q1 += half * f1
                q2 += half * f2
                a += dt * (2.0 * q1 + q2)
                b += dt * (2.0 * q2 + q1)
                e1 = exp(-a)
                e2 = exp(-(b - a))
                e3 = exp(b)
                f1 = e1 - e2
                f2 = e2 - e3
                q1 += half * f1
                q2 += half * f2
            x1[i] = a
            x2[i] = b
            p1[i] = q1
            p2[i] = q2


cdef double _W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
cdef double _W0 = 1.0 - 2.0 * _W1


cdef inline void _strang(double* ar, double* ai, double* br, double* bi,
                         double gamma, double h) nogil:
    cdef double hh = 0.5 * h
    cdef double na, nb, ph, cp, sp, c, s, tr, ti, ur, ui
    # interaction half
    na = ar[0] * ar[0] + ai[0] * ai[0]
    nb = br[0] * br[0] + bi[0] * bi[0]
    ph = -gamma * na * hh
    cp = cos(ph)
    sp = sin(ph)
    tr = ar[0] * cp - ai[0] * sp
    ti = ar[0] * sp + ai[0] * cp
    ar[0] = tr
    ai[0] = ti
    ph = -gamma * nb * hh
    cp = cos(ph)
    sp = sin(ph)
    tr = br[0] * cp - bi[0] * sp
    ti = br[0] * sp + bi[0] * cp
    br[0] = tr
    bi[0] = ti
    # hop full: a' = c a + i s b, b' = c b + i s a
    c = cos(0.5 * h)
    s = sin(0.5 * h)
    tr = c * ar[0] - s * bi[0]
    ti = c * ai[0] + s * br[0]
    ur = c * br[0] - s * ai[0]
    ui = c * bi[0] + s * ar[0]
    ar[0] = tr
    ai[0] = ti
    br[0] = ur
    bi[0] = ui
    # interaction half
    na = ar[0] * ar[0] + ai[0] * ai[0]
    nb = br[0] * br[0] + bi[0] * bi[0]
    ph = -gamma * na * hh
    cp = cos(ph)
    sp = sin(ph)
    tr = ar[0] * cp - ai[0] * sp
    ti = ar[0] * sp + ai[0] * cp
    ar[0] = tr
    ai[0] = ti
    ph = -gamma * nb * hh
    cp = cos(ph)
    sp = sin(ph)
    tr = br[0] * cp - bi[0] * sp
    ti = br[0] * sp + bi[0] * cp
    br[0] = tr
    bi[0] = ti


def dimer_splitstep(double complex[::1] a, double complex[::1] b,
                    double gamma, double dt, long n_steps):
    cdef Py_ssize_t i, n = a.shape[0]
    cdef long s
    cdef double ar, ai, br, bi
    if n_steps <= 0:
        return
    with nogil:
        for i in range(n):
            ar = a[i].real
            ai = a[i].imag
            br = b[i].real
            bi = b[i].imag
            for s in range(n_steps):
                _strang(&ar, &ai, &br, &bi, gamma, _W1 * dt)
                _strang(&ar, &ai, &br, &bi, gamma, _W0 * dt)
                _strang(&ar, &ai, &br, &bi, gamma, _W1 * dt)
            a[i] = ar + 1j * ai
            b[i] = br + 1j * bi
