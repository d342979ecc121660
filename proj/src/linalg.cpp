#include "linalg.hpp"

#include <Eigen/Dense>

#include "cfx/error.hpp"

namespace cfx::linalg {

std::vector<double> ridge_solve(const std::vector<double>& x, std::size_t rows,
                                std::size_t cols, const std::vector<double>& y,
                                double l2) {
    using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const Matrix> design(x.data(), static_cast<Eigen::Index>(rows),
                                    static_cast<Eigen::Index>(cols));
    Eigen::Map<const Eigen::VectorXd> target(y.data(), static_cast<Eigen::Index>(rows));

    Eigen::MatrixXd gram = design.transpose() * design;
    gram.diagonal().array() += l2;
    Eigen::VectorXd rhs = design.transpose() * target;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    Eigen::VectorXd w = ldlt.solve(rhs);

    // LDLT does not flag rank deficiency reliably; check the residual instead
    double rhs_norm = rhs.norm();
    double resid = (gram * w - rhs).norm();
    if (!w.allFinite() || resid > 1e-6 * std::max(1.0, rhs_norm))
        throw Error("singular normal equations; use a positive l2");

    return std::vector<double>(w.data(), w.data() + w.size());
}

}  // namespace cfx::linalg
