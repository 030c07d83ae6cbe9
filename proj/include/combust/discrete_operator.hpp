#pragma once

#include <algorithm>
#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "combust/spectral.hpp"

namespace combust {

/// Finite-difference discretization of L U = B U'' + P U' + Q U on a uniform grid of [-X, X]
/// with homogeneous Dirichlet conditions. Unknowns are interleaved (u_i, z_i) over interior nodes.
/// Interior stencils are fourth order, the first and last interior nodes use second order.
class DiscreteOperator {
public:
    DiscreteOperator(const SpectralProblem& sp, double X, double h) : sp_(sp) {
        n_ = static_cast<int>(std::lround(2 * X / h)) - 1;
        h_ = 2 * X / (n_ + 1);
        x0_ = -X;
        std::vector<Eigen::Triplet<double>> t;
        const Mat2 B = sp.B();
        for (int i = 0; i < n_; ++i) {
            const double x = grid(i);
            const Coefficients c = sp.coefficients(x);
            const Mat2 P = -sp.A(c);
            const Mat2 Q = sp.C(c) - sp.dA(c);
            const bool wide = i >= 1 && i <= n_ - 2;
            // weights for offsets -2..2
            double w2[5], w1[5];
            if (wide) {
                const double a2[5] = {-1.0 / 12, 4.0 / 3, -5.0 / 2, 4.0 / 3, -1.0 / 12};
                const double a1[5] = {1.0 / 12, -2.0 / 3, 0.0, 2.0 / 3, -1.0 / 12};
                for (int k = 0; k < 5; ++k) w2[k] = a2[k] / (h_ * h_), w1[k] = a1[k] / h_;
            } else {
                const double a2[5] = {0, 1, -2, 1, 0};
                const double a1[5] = {0, -0.5, 0, 0.5, 0};
                for (int k = 0; k < 5; ++k) w2[k] = a2[k] / (h_ * h_), w1[k] = a1[k] / h_;
            }
            for (int off = -2; off <= 2; ++off) {
                const int j = i + off;
                if (j < 0 || j >= n_) continue;
                for (int r = 0; r < 2; ++r)
                    for (int cc = 0; cc < 2; ++cc) {
                        double v = B(r, cc) * w2[off + 2] + P(r, cc) * w1[off + 2];
                        if (off == 0) v += Q(r, cc);
                        if (v != 0.0) t.emplace_back(2 * i + r, 2 * j + cc, v);
                    }
            }
        }
        L_.resize(2 * n_, 2 * n_);
        L_.setFromTriplets(t.begin(), t.end());
    }

    double grid(int i) const { return x0_ + (i + 1) * h_; }
    int nodes() const { return n_; }
    double h() const { return h_; }
    const Eigen::SparseMatrix<double>& matrix() const { return L_; }

    /// All eigenvalues of the dense matrix.
    Eigen::VectorXcd dense_eigenvalues() const {
        Eigen::MatrixXd D = Eigen::MatrixXd(L_);
        Eigen::EigenSolver<Eigen::MatrixXd> es(D, false);
        return es.eigenvalues();
    }

    /// Shift-invert iteration from sigma; returns the converged eigenvalue.
    cd inverse_iteration(cd sigma, int iters = 60, double tol = 1e-13) const {
        using SpC = Eigen::SparseMatrix<cd>;
        SpC M = L_.cast<cd>();
        SpC I(M.rows(), M.cols());
        I.setIdentity();
        M = M - sigma * I;
        Eigen::SparseLU<SpC> lu;
        lu.compute(M);
        if (lu.info() != Eigen::Success) throw NumericalError("inverse_iteration: factorization failed");
        Eigen::VectorXcd v = Eigen::VectorXcd::Ones(M.rows());
        v.normalize();
        cd lam = sigma, prev = sigma;
        for (int it = 0; it < iters; ++it) {
            Eigen::VectorXcd w = lu.solve(v);
            const cd nu = v.dot(w);  // Rayleigh estimate of 1/(lambda - sigma)
            lam = sigma + 1.0 / nu;
            v = w.normalized();
            if (it > 2 && std::abs(lam - prev) < tol * std::max(1.0, std::abs(lam))) break;
            prev = lam;
        }
        return lam;
    }

private:
    const SpectralProblem& sp_;
    int n_ = 0;
    double h_ = 0, x0_ = 0;
    Eigen::SparseMatrix<double> L_;
};

struct DiscreteSpectrumReport {
    std::vector<cd> coarse_unstable;   // dense eigenvalues with Re > threshold, coarse grid
    std::vector<cd> refined;           // polished on the fine grid
};

/// Unstable discrete eigenvalues of the truncated operator: dense eigensolve on a coarse grid,
/// then shift-invert polishing on a fine grid.
inline DiscreteSpectrumReport discrete_unstable_eigenvalues(const SpectralProblem& sp, double X = 20.0,
                                                            double h_coarse = 0.1, double h_fine = 0.01,
                                                            double threshold = 0.05) {
    DiscreteSpectrumReport rep;
    const DiscreteOperator coarse(sp, X, h_coarse);
    const Eigen::VectorXcd ev = coarse.dense_eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (ev[i].real() > threshold && ev[i].imag() >= 0) rep.coarse_unstable.push_back(ev[i]);
    std::sort(rep.coarse_unstable.begin(), rep.coarse_unstable.end(),
              [](cd a, cd b) { return a.real() > b.real(); });
    const DiscreteOperator fine(sp, X, h_fine);
    for (cd l : rep.coarse_unstable) rep.refined.push_back(fine.inverse_iteration(l));
    return rep;
}

}  // namespace combust
