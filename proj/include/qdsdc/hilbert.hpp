#pragma once

#include <array>
#include <complex>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace qdsdc {

using Complex = std::complex<double>;

/// Dense 4x4 operator on span{G, X_H, X_V, B}.
using Operator = Eigen::Matrix4cd;

/// A density matrix is an Operator that is Hermitian, unit trace and positive.
using DensityMatrix = Operator;

inline constexpr int kDim = 4;

/// Basis ordering is fixed everywhere: serialization, indexing and tests.
enum class BasisLabel : int { G = 0, XH = 1, XV = 2, B = 3 };

inline constexpr std::array<BasisLabel, kDim> kAllLabels{BasisLabel::G, BasisLabel::XH,
                                                         BasisLabel::XV, BasisLabel::B};

constexpr int index(BasisLabel label) { return static_cast<int>(label); }

/// Number of electron-hole pairs in a configuration (0, 1, 1, 2).
constexpr int excitation_number(BasisLabel label) {
    switch (label) {
        case BasisLabel::G: return 0;
        case BasisLabel::B: return 2;
        default: return 1;
    }
}

std::string_view to_string(BasisLabel label);

/// |a><b|
Operator dyad(BasisLabel a, BasisLabel b);

inline Operator adjoint(const Operator& op) { return op.adjoint(); }

/// 2 s rho s^+ - s^+ s rho - rho s^+ s.
///
/// The factor 2 sits inside the bracket and there is no global 1/2, so a
/// population drained through a single channel with rate gamma decays at
/// 2*gamma. Every rate downstream inherits this convention.
Operator lindblad_dissipator(const Operator& sigma, const DensityMatrix& rho);

/// -(gamma_pure/2) * rho with its diagonal removed. gamma_pure in ps^-1.
Operator pure_dephasing_term(double gamma_pure, const DensityMatrix& rho);

struct PhysicalityTolerances {
    double trace = 1e-8;
    double hermiticity = 1e-10;
    double positivity = 1e-8;
};

struct PhysicalityReport {
    double trace_deviation = 0.0;      // |tr(rho) - 1|
    double hermiticity_deviation = 0.0;  // max |rho - rho^+| entrywise
    double min_eigenvalue = 0.0;       // of the Hermitian part
    bool finite = true;
    std::vector<std::string> violations;

    bool ok() const { return violations.empty(); }
    std::string summary() const;
};

PhysicalityReport assert_physical(const DensityMatrix& rho,
                                  const PhysicalityTolerances& tol = {});

/// max_ij |a_ij - conj(a_ji)|
double hermiticity_deviation(const Operator& op);

bool all_finite(const Operator& op);

}  // namespace qdsdc
