"""Constitutive laws and the deformation-gradient update.

Stress state is stored per particle as the in-plane block of the Cauchy or
Kirchhoff tensor; out-of-plane stretch is 1 (uniaxial strain in 1D, plane
strain in 2D), so J equals the determinant of the stored block.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass
class Material:
    """Neohookean (G, lam) or 1D linear elastic (E); rho is reference density."""

    kind: str = "neohookean"
    G: float = 1.0
    lam: float = 0.0
    E: float = 1.0
    rho: float = 1.0
    viscosity: bool = False
    visc_c1: float = 0.2
    visc_c2: float = 2.0

    @classmethod
    def neohookean(cls, G=None, lam=None, E=None, nu=None, rho=1.0, **kw):
        if G is None or lam is None:
            if E is None or nu is None:
                raise ConfigError("neohookean needs (G, lam) or (E, nu)")
            G = E / (2.0 * (1.0 + nu))
            lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)) if nu != 0.0 else 0.0
        if G <= 0 or lam < 0 or rho <= 0:
            raise ConfigError("need G > 0, lam >= 0, rho > 0")
        return cls(kind="neohookean", G=G, lam=lam, rho=rho, **kw)

    @classmethod
    def linear1d(cls, E, rho, **kw):
        if E <= 0 or rho <= 0:
            raise ConfigError("need E > 0, rho > 0")
        return cls(kind="linear1d", E=E, rho=rho, **kw)

    def wave_speed(self):
        """Small-strain longitudinal speed governing the Courant condition."""
        if self.kind == "linear1d":
            return np.sqrt(self.E / self.rho)
        return np.sqrt((self.lam + 2.0 * self.G) / self.rho)

    def youngs_modulus(self):
        if self.kind == "linear1d":
            return self.E
        return self.G * (3.0 * self.lam + 2.0 * self.G) / (self.lam + self.G)

    def cauchy(self, F):
        """Cauchy stress blocks (N, d, d) and J (N,) from deformation gradients."""
        if self.kind == "linear1d":
            J = F[:, 0, 0]
            if np.any(J <= 0.0):
                raise FloatingPointError("element inversion: det(F) <= 0")
            sig = np.zeros_like(F)
            sig[:, 0, 0] = self.E * (J - 1.0)
            return sig, J
        return neohookean_stress(F, self.G, self.lam)


def neohookean_stress(F, G, lam):
    """sigma = lam/2 (J - 1/J) I + G/J (F F^T - I); returns (sigma, J)."""
    F = np.asarray(F, dtype=float)
    squeeze = F.ndim == 2
    if squeeze:
        F = F[None]
    d = F.shape[1]
    J = F[:, 0, 0] if d == 1 else F[:, 0, 0] * F[:, 1, 1] - F[:, 0, 1] * F[:, 1, 0]
    if np.any(J <= 0.0):
        raise FloatingPointError("element inversion: det(F) <= 0")
    b = np.einsum("pij,pkj->pik", F, F)  # F F^T
    eye = np.eye(d)
    sig = (0.5 * lam * (J - 1.0 / J))[:, None, None] * eye + (G / J)[:, None, None] * (b - eye)
    return (sig[0], J[0]) if squeeze else (sig, J)


def expm(A):
    """Matrix exponential of (N, d, d) blocks, closed form for d <= 2."""
    A = np.asarray(A, dtype=float)
    squeeze = A.ndim == 2
    if squeeze:
        A = A[None]
    d = A.shape[1]
    if d == 1:
        out = np.exp(A)
        return out[0] if squeeze else out
    # exp(A) = e^theta (c(delta) I + s(delta) (A - theta I)) with
    # theta = tr/2, delta = (a-d)^2/4 + bc, c = cosh(sqrt(delta)), s = sinh(sqrt(delta))/sqrt(delta)
    theta = 0.5 * (A[:, 0, 0] + A[:, 1, 1])
    delta = 0.25 * (A[:, 0, 0] - A[:, 1, 1]) ** 2 + A[:, 0, 1] * A[:, 1, 0]
    c = np.empty_like(theta)
    s = np.empty_like(theta)
    small = np.abs(delta) < 1e-8
    pos = (~small) & (delta > 0)
    neg = (~small) & (delta < 0)
    rt = np.sqrt(np.abs(delta))
    c[pos] = np.cosh(rt[pos])
    s[pos] = np.sinh(rt[pos]) / rt[pos]
    c[neg] = np.cos(rt[neg])
    s[neg] = np.sin(rt[neg]) / rt[neg]
    dl = delta[small]
    c[small] = 1.0 + dl / 2.0 + dl * dl / 24.0
    s[small] = 1.0 + dl / 6.0 + dl * dl / 120.0
    eye = np.eye(2)
    out = np.exp(theta)[:, None, None] * (
        c[:, None, None] * eye + s[:, None, None] * (A - theta[:, None, None] * eye)
    )
    return out[0] if squeeze else out


def update_deformation(F, velocity_gradient, dt):
    """F_new = exp(grad(V) dt) F (true matrix exponential of the increment)."""
    if dt <= 0:
        raise ConfigError("dt must be positive")
    dF = expm(np.asarray(velocity_gradient) * dt)
    return np.einsum("...ij,...jk->...ik", dF, F)


def artificial_viscosity(sig, J, D, material, dx):
    """von Neumann-Richtmyer pressure on compressing particles, in place.

    q = rho |tr D| dx (c1 c + c2 dx |tr D|), subtracted from the mean stress
    when tr D < 0.
    """
    trD = np.trace(D, axis1=1, axis2=2)
    comp = trD < 0.0
    if not comp.any():
        return sig
    rho = material.rho / J
    a = np.abs(trD)
    q = rho * dx * a * (material.visc_c1 * material.wave_speed() + material.visc_c2 * dx * a)
    d = sig.shape[1]
    for i in range(d):
        sig[comp, i, i] -= q[comp]
    return sig
