#pragma once

#include <Eigen/Dense>
#include <random>

namespace mr {

/* All stochastic sampling in the library (property checks, shipped problem
 * generators) draws from explicitly seeded engines so that runs are
 * reproducible bit-for-bit. */

inline std::mt19937_64 make_rng(std::uint64_t seed)
{
    return std::mt19937_64(seed);
}

inline Eigen::VectorXd gaussian_vector(Eigen::Index n, std::mt19937_64& rng)
{
    std::normal_distribution<double> dist(0.0, 1.0);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = dist(rng);
    return v;
}

inline Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols,
                                       std::mt19937_64& rng)
{
    std::normal_distribution<double> dist(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
    return m;
}

/* Haar-ish orthogonal factor from the QR of a Gaussian matrix. */
inline Eigen::MatrixXd random_orthogonal(Eigen::Index n, std::mt19937_64& rng)
{
    Eigen::MatrixXd g = gaussian_matrix(n, n, rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    // fix signs so the factor is a deterministic function of g
    Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < n; ++i)
        if (r(i, i) < 0) q.col(i) = -q.col(i);
    return q;
}

/* Symmetric PD matrix with spectrum drawn uniformly from
 * [lambda_min, lambda_max]. */
inline Eigen::MatrixXd random_spd(Eigen::Index n, std::mt19937_64& rng,
                                  double lambda_min, double lambda_max)
{
    Eigen::MatrixXd v = random_orthogonal(n, rng);
    std::uniform_real_distribution<double> dist(lambda_min, lambda_max);
    Eigen::VectorXd lambda(n);
    for (Eigen::Index i = 0; i < n; ++i) lambda(i) = dist(rng);
    return v * lambda.asDiagonal() * v.transpose();
}

inline Eigen::MatrixXd random_skew(Eigen::Index n, std::mt19937_64& rng)
{
    Eigen::MatrixXd g = gaussian_matrix(n, n, rng);
    return 0.5 * (g - g.transpose());
}

} // namespace mr
