"""A single linear branch: noise does not move the leading eigenvalue.

For f(x) = Lambda x the noiseless operator is diagonal in the monomial basis
with eigenvalues sign(Lambda)/Lambda**(m+1), the cumulants follow the Euler
product, and Gaussian smearing only redistributes mass.  Every sigma
correction therefore vanishes and the eigenvalue stays at 1/|Lambda|.

    python3 demos/linear_map.py
"""
from weaknoise import linear_map, perturbative_expansion
from weaknoise.direct import leading_eigenvalue, nystrom_eigenvalue, quadrature_matrix
from weaknoise.spectral import MatrixSizes, euler_z_cumulants


def main():
    for slope in (2.0, -3.0, 10.0):
        spec = linear_map(slope)
        _, _, Q, e = perturbative_expansion(spec, 8, MatrixSizes.uniform(40))
        euler = euler_z_cumulants(slope, 4)
        print(f"Lambda = {slope:g}")
        print("  Q_1..Q_4 from traces :", " ".join(f"{q: .6e}" for q in Q.Q[1:5, 0]))
        print("  Euler product        :", " ".join(f"{q: .6e}" for q in euler[1:5]))
        print(f"  nu_0 = {e.nu_coeff(0):.15f}, largest |nu_k|, k >= 1: {abs(e.nu[1:]).max():.1e}")
        for s in (0.05, 0.2):
            quad = leading_eigenvalue(quadrature_matrix(spec, s, 12))
            print(f"  sigma={s}: quadrature {quad:.13f}, Nystrom {nystrom_eigenvalue(spec, s):.13f}")


if __name__ == "__main__":
    main()
