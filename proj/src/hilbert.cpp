#include "qdsdc/hilbert.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace qdsdc {

std::string_view to_string(BasisLabel label) {
    switch (label) {
        case BasisLabel::G: return "G";
        case BasisLabel::XH: return "X_H";
        case BasisLabel::XV: return "X_V";
        case BasisLabel::B: return "B";
    }
    return "?";
}

Operator dyad(BasisLabel a, BasisLabel b) {
    Operator op = Operator::Zero();
    op(index(a), index(b)) = 1.0;
    return op;
}

Operator lindblad_dissipator(const Operator& sigma, const DensityMatrix& rho) {
    const Operator sigma_dag = sigma.adjoint();
    const Operator number = sigma_dag * sigma;
    return 2.0 * sigma * rho * sigma_dag - number * rho - rho * number;
}

Operator pure_dephasing_term(double gamma_pure, const DensityMatrix& rho) {
    Operator out = rho;
    out.diagonal().setZero();
    return -0.5 * gamma_pure * out;
}

double hermiticity_deviation(const Operator& op) {
    return (op - op.adjoint()).cwiseAbs().maxCoeff();
}

bool all_finite(const Operator& op) {
    for (int i = 0; i < kDim; ++i) {
        for (int j = 0; j < kDim; ++j) {
            if (!std::isfinite(op(i, j).real()) || !std::isfinite(op(i, j).imag())) {
                return false;
            }
        }
    }
    return true;
}

PhysicalityReport assert_physical(const DensityMatrix& rho, const PhysicalityTolerances& tol) {
    PhysicalityReport report;
    report.finite = all_finite(rho);
    if (!report.finite) {
        report.violations.emplace_back("non-finite entries");
        report.trace_deviation = std::numeric_limits<double>::infinity();
        report.hermiticity_deviation = std::numeric_limits<double>::infinity();
        report.min_eigenvalue = -std::numeric_limits<double>::infinity();
        return report;
    }

    report.trace_deviation = std::abs(rho.trace() - Complex(1.0, 0.0));
    report.hermiticity_deviation = hermiticity_deviation(rho);
    const Operator hermitian_part = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<Operator> solver(hermitian_part, Eigen::EigenvaluesOnly);
    report.min_eigenvalue = solver.eigenvalues().minCoeff();

    auto fmt = [](const char* what, double value, double limit) {
        std::ostringstream os;
        os << what << " " << value << " exceeds " << limit;
        return os.str();
    };
    if (report.trace_deviation > tol.trace) {
        report.violations.push_back(fmt("trace deviation", report.trace_deviation, tol.trace));
    }
    if (report.hermiticity_deviation > tol.hermiticity) {
        report.violations.push_back(
            fmt("hermiticity deviation", report.hermiticity_deviation, tol.hermiticity));
    }
    if (report.min_eigenvalue < -tol.positivity) {
        std::ostringstream os;
        os << "minimum eigenvalue " << report.min_eigenvalue << " below " << -tol.positivity;
        report.violations.push_back(os.str());
    }
    return report;
}

std::string PhysicalityReport::summary() const {
    std::ostringstream os;
    os << "trace_dev=" << trace_deviation << " herm_dev=" << hermiticity_deviation
       << " min_eig=" << min_eigenvalue;
    for (const auto& v : violations) os << "; " << v;
    return os.str();
}

}  // namespace qdsdc
