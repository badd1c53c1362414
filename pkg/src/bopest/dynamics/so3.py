"""Rotation-group utilities: hat/vee isomorphism and SO(3) projection."""

from __future__ import annotations

import numpy as np

SKEW_ATOL = 1e-9


def hat(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix of a 3-vector: hat(a) @ b == cross(a, b)."""
    v = np.asarray(v, dtype=float)
    if v.shape != (3,):
        raise ValueError("hat expects a 3-vector")
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def vee(S: np.ndarray, atol: float = SKEW_ATOL) -> np.ndarray:
    """Inverse of hat. Rejects matrices that are not skew-symmetric."""
    S = np.asarray(S, dtype=float)
    if S.shape != (3, 3):
        raise ValueError("vee expects a 3x3 matrix")
    if np.linalg.norm(S + S.T) >= atol:
        raise ValueError("vee requires a skew-symmetric matrix")
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def skew_part(S: np.ndarray) -> np.ndarray:
    """Skew-symmetric part (S - S^T)/2; use before vee on noisy matrices."""
    S = np.asarray(S, dtype=float)
    return 0.5 * (S - S.T)


def project_rotation(R: np.ndarray) -> np.ndarray:
    """Nearest (Frobenius) rotation matrix via SVD, det forced to +1."""
    U, _, Vt = np.linalg.svd(np.asarray(R, dtype=float))
    D = np.diag([1.0, 1.0, np.sign(np.linalg.det(U @ Vt))])
    return U @ D @ Vt


def orthonormality_error(R: np.ndarray) -> float:
    """Frobenius distance of R^T R from the identity."""
    R = np.asarray(R, dtype=float)
    return float(np.linalg.norm(R.T @ R - np.eye(3)))
