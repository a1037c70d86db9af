#ifndef CTDVS_CONTROLMATH_HPP
#define CTDVS_CONTROLMATH_HPP

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace ctdvs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised when a controller synthesis step cannot produce a usable result.
struct SynthesisError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// e^{A t} by scaling and squaring around a truncated series core.
/// Intended for the small dense matrices of this simulator.
inline Matrix matrix_exponential(const Matrix& a, double t = 1.0)
{
    if (a.rows() != a.cols())
        throw SynthesisError("matrix exponential needs a square matrix");
    if (!(t >= 0.0))
        throw SynthesisError("matrix exponential needs t >= 0");
    const Eigen::Index n = a.rows();
    Matrix m = a * t;
    const double norm = m.cwiseAbs().rowwise().sum().maxCoeff(); // infinity norm
    int squarings = 0;
    if (norm > 0.5) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
        m /= std::pow(2.0, squarings);
    }
    Matrix result = Matrix::Identity(n, n);
    Matrix term = Matrix::Identity(n, n);
    for (int k = 1; k <= 40; ++k) {
        term = (term * m) / static_cast<double>(k);
        result += term;
        if (term.cwiseAbs().maxCoeff() < 1e-18 * std::max(1.0, result.cwiseAbs().maxCoeff()))
            break;
    }
    for (int k = 0; k < squarings; ++k)
        result = result * result;
    return result;
}

/// Zero-order-hold discretization of dx/dt = A x + B u at step h, through
/// the exponential of the augmented matrix [[A, B], [0, 0]].
inline std::pair<Matrix, Matrix> zoh_discretize(const Matrix& a, const Matrix& b, double h)
{
    if (!(h > 0.0))
        throw SynthesisError("discretization step must be positive");
    if (a.rows() != a.cols() || b.rows() != a.rows())
        throw SynthesisError("dimension mismatch in zoh_discretize");
    const Eigen::Index n = a.rows();
    const Eigen::Index m = b.cols();
    Matrix aug = Matrix::Zero(n + m, n + m);
    aug.topLeftCorner(n, n) = a;
    aug.topRightCorner(n, m) = b;
    const Matrix e = matrix_exponential(aug, h);
    return {e.topLeftCorner(n, n), e.topRightCorner(n, m)};
}

/// Discrete process-noise covariance of dx/dt = A x + G w, w white with
/// intensity v, over one step h (Van Loan construction):
///   Q_d = integral_0^h e^{A tau} G v G' e^{A' tau} dtau.
inline Matrix discretize_noise(const Matrix& a, const Matrix& g, double v_intensity, double h)
{
    if (!(v_intensity >= 0.0))
        throw SynthesisError("noise intensity must be nonnegative");
    if (!(h > 0.0))
        throw SynthesisError("discretization step must be positive");
    const Eigen::Index n = a.rows();
    Matrix aug = Matrix::Zero(2 * n, 2 * n);
    aug.topLeftCorner(n, n) = -a;
    aug.topRightCorner(n, n) = g * v_intensity * g.transpose();
    aug.bottomRightCorner(n, n) = a.transpose();
    const Matrix e = matrix_exponential(aug, h);
    const Matrix f22 = e.bottomRightCorner(n, n); // = e^{A' h}
    Matrix qd = f22.transpose() * e.topRightCorner(n, n);
    // Symmetrize away roundoff.
    return 0.5 * (qd + qd.transpose());
}

inline double spectral_radius(const Matrix& m)
{
    return m.eigenvalues().cwiseAbs().maxCoeff();
}

/// Residual of the discrete algebraic Riccati equation at P.
inline double dare_residual(const Matrix& phi, const Matrix& gamma, const Matrix& q,
                            const Matrix& r, const Matrix& p)
{
    const Matrix s = r + gamma.transpose() * p * gamma;
    const Matrix res = phi.transpose() * p * phi - p -
                       phi.transpose() * p * gamma * s.ldlt().solve(gamma.transpose() * p * phi) +
                       q;
    return res.cwiseAbs().maxCoeff();
}

/// Stabilizing solution of the DARE
///   P = phi' P phi - phi' P gamma (r + gamma' P gamma)^-1 gamma' P phi + q
/// by the structure-preserving doubling iteration. The result is verified
/// by residual substitution, not trusted from convergence alone.
inline Matrix solve_dare(const Matrix& phi, const Matrix& gamma, const Matrix& q, const Matrix& r)
{
    const Eigen::Index n = phi.rows();
    if (phi.cols() != n || gamma.rows() != n || q.rows() != n || q.cols() != n ||
        r.rows() != gamma.cols() || r.cols() != gamma.cols())
        throw SynthesisError("dimension mismatch in solve_dare");

    Matrix ak = phi;
    Matrix gk = gamma * r.ldlt().solve(gamma.transpose());
    Matrix hk = q;
    const Matrix eye = Matrix::Identity(n, n);
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
        const Matrix w = eye + gk * hk;
        const Eigen::PartialPivLU<Matrix> lu(w);
        const Matrix wa = lu.solve(ak);
        const Matrix wg = lu.solve(gk);
        const Matrix h_next = hk + ak.transpose() * hk * wa;
        const Matrix g_next = gk + ak * wg * ak.transpose();
        const Matrix a_next = ak * wa;
        const double delta = (h_next - hk).cwiseAbs().maxCoeff();
        ak = a_next;
        gk = g_next;
        hk = 0.5 * (h_next + h_next.transpose());
        if (delta < 1e-14 * std::max(1.0, hk.cwiseAbs().maxCoeff())) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw SynthesisError("DARE iteration did not converge");
    const double res = dare_residual(phi, gamma, q, r, hk);
    if (!(res < 1e-8 * std::max(1.0, hk.cwiseAbs().maxCoeff())))
        throw SynthesisError("DARE residual too large: " + std::to_string(res));
    return hk;
}

/// State-feedback gain minimizing the discrete quadratic cost with stage
/// weights (q, r): u = -K x.
inline Matrix lqr_gain(const Matrix& phi, const Matrix& gamma, const Matrix& q, const Matrix& r)
{
    const Matrix p = solve_dare(phi, gamma, q, r);
    const Matrix s = r + gamma.transpose() * p * gamma;
    return s.ldlt().solve(gamma.transpose() * p * phi);
}

/// Steady-state Kalman measurement-update gain for x+ = phi x + w,
/// y = c x + v, with cov(w) = q_d and var(v) = r_meas. The estimator error
/// dynamics are (I - L c) phi.
inline Matrix kalman_gain(const Matrix& phi, const Matrix& c_out, const Matrix& q_d,
                          double r_meas)
{
    if (!(r_meas > 0.0))
        throw SynthesisError("measurement noise variance must be positive");
    Matrix r(1, 1);
    r(0, 0) = r_meas;
    const Matrix p = solve_dare(phi.transpose(), c_out.transpose(), q_d, r);
    const Matrix s = c_out * p * c_out.transpose() + r;
    return p * c_out.transpose() * s.inverse();
}

/// Discretized plant description used by the estimator and the co-simulation.
struct DiscretePlant {
    Matrix phi;
    Matrix gamma;
    Matrix c_out; // 1 x n
    Matrix q_d;
    double r_meas = 0.0;
    double step_s = 0.0;
};

} // namespace ctdvs

#endif
